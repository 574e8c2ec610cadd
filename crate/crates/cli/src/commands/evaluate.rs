use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use geoind_core::evaluation::{cloaking_matrix, evaluate, pl_matrix, KernelMode, NamedPrior, Prior, RegionWorld};
use geoind_core::mechanism::DOUBLE_PRECISION_DELTA_THETA;
use geoind_core::MechanismMatrix;

use crate::args::{load_world, Format, OutputArgs, PrivacyArgs};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Mode {
    #[default]
    Quadrature,
    MonteCarlo,
}

/// How to build the planar Laplace region kernel.
#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[arg(long, value_enum, default_value_t)]
    pub mode: Mode,
    /// Draws per region in Monte-Carlo mode.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Required in Monte-Carlo mode.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DOUBLE_PRECISION_DELTA_THETA)]
    pub delta_theta: f64,
}

impl KernelArgs {
    pub fn mode(&self) -> CliResult<KernelMode> {
        Ok(match self.mode {
            Mode::Quadrature => KernelMode::Quadrature,
            Mode::MonteCarlo => KernelMode::MonteCarlo {
                samples: self.samples,
                seed: self
                    .seed
                    .ok_or_else(|| CliError::domain("--seed is required with --mode monte-carlo"))?,
            },
        })
    }
}

/// Build a named mechanism on `world`.
pub fn build_mechanism(
    name: &str,
    world: &RegionWorld,
    privacy: &PrivacyArgs,
    kernel: &KernelArgs,
) -> CliResult<MechanismMatrix> {
    match name {
        "cloaking" => Ok(cloaking_matrix(world)?),
        "identity" => Ok(MechanismMatrix::identity(world.n_regions())),
        "planar-laplace" => {
            let pl = pl_matrix(world, privacy.epsilon()?, kernel.delta_theta, kernel.mode()?)?;
            eprintln!(
                "planar-laplace: eps' = {} per km (q = {:e})",
                pl.calibration.eps_prime, pl.calibration.q
            );
            Ok(pl.matrix)
        }
        other => Err(CliError::domain(format!(
            "unknown mechanism {other:?}; use cloaking, identity, planar-laplace or NAME=PATH"
        ))),
    }
}

fn split_named(spec: &str) -> Option<(&str, &Path)> {
    spec.split_once('=').map(|(n, p)| (n, Path::new(p)))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// `NAME`, `NAME=PATH` or `PATH` (named after the file stem).
pub fn load_prior(spec: &str, world: &RegionWorld) -> CliResult<(String, Prior)> {
    if let Some(p) = NamedPrior::parse(spec) {
        return Ok((spec.to_string(), p.build(world)?));
    }
    let (name, path) = match split_named(spec) {
        Some((n, p)) => (n.to_string(), p),
        None => {
            let p = Path::new(spec);
            let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or(spec);
            (stem.to_string(), p)
        }
    };
    if !path.exists() {
        return Err(CliError::domain(format!(
            "unknown prior {spec:?}; use uniform, corner-block, center-block, ring or a JSON file"
        )));
    }
    let prior: Prior = read_json(path)?;
    if prior.len() != world.n_regions() {
        return Err(CliError::domain(format!(
            "prior {name} has {} weights, world has {} regions",
            prior.len(),
            world.n_regions()
        )));
    }
    Ok((name, prior))
}

/// Compare mechanisms by location privacy and service-quality loss.
#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// World JSON (`rows`, `cols`, `side_km`, `zones`); default 9×9 × 100 m.
    #[arg(long)]
    pub world: Option<PathBuf>,
    /// Prior: a built-in name, NAME=PATH or PATH. Repeatable.
    #[arg(long = "prior", default_values = ["uniform", "corner-block", "center-block", "ring"])]
    pub priors: Vec<String>,
    /// Mechanism: cloaking, identity, planar-laplace or NAME=PATH to a
    /// matrix (.json or .csv). Repeatable.
    #[arg(long = "mechanism", default_values = ["cloaking", "planar-laplace"])]
    pub mechanisms: Vec<String>,
    #[command(flatten)]
    pub privacy: PrivacyArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Also write one line per (prior, mechanism) with LP and SQL.
    #[arg(long)]
    pub long: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

pub fn run(a: &EvaluateArgs) -> CliResult<()> {
    let world = load_world(a.world.as_ref())?;
    let priors = a
        .priors
        .iter()
        .map(|s| load_prior(s, &world))
        .collect::<CliResult<Vec<_>>>()?;
    let mut mechanisms = Vec::new();
    for spec in &a.mechanisms {
        let m = match split_named(spec) {
            Some((name, path)) => (name.to_string(), MechanismMatrix::load(path)?),
            None => (spec.clone(), build_mechanism(spec, &world, &a.privacy, &a.kernel)?),
        };
        mechanisms.push(m);
    }
    let table = evaluate(&world, &priors, &mechanisms)?;
    let mut w = a.out.open()?;
    match a.out.format {
        Format::Csv => table.write_wide_csv(&mut w)?,
        Format::Json => writeln!(w, "{}", serde_json::to_string_pretty(&table)?)?,
    }
    w.flush()?;
    if let Some(p) = &a.long {
        let mut lw = crate::args::open_path(Some(p))?;
        table.write_long_csv(&mut lw)?;
        lw.flush()?;
    }
    Ok(())
}
