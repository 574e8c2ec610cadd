use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use geoind_core::evaluation::check_geoind_with;
use geoind_core::MechanismMatrix;

use crate::args::{load_world, Format, OutputArgs, PrivacyArgs};
use crate::error::{CliError, CliResult};

/// Check a region kernel for ε-geo-indistinguishability.
#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Matrix file (.json or .csv), one row per region of the world.
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub world: Option<PathBuf>,
    #[command(flatten)]
    pub privacy: PrivacyArgs,
    /// Relative slack on the bound.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Exit with status 2 when the check fails.
    #[arg(long)]
    pub strict: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

pub fn run(a: &VerifyArgs) -> CliResult<()> {
    let world = load_world(a.world.as_ref())?;
    let k = MechanismMatrix::load(&a.matrix)?;
    if k.n_rows() != world.n_regions() {
        return Err(CliError::domain(format!(
            "matrix has {} rows, world has {} regions",
            k.n_rows(),
            world.n_regions()
        )));
    }
    let eps = a.privacy.epsilon()?;
    let r = check_geoind_with(&k, |i, j| world.distance(i, j), eps, a.tol);
    let mut w = a.out.open()?;
    match a.out.format {
        Format::Json => writeln!(w, "{}", serde_json::to_string_pretty(&r)?)?,
        Format::Csv => {
            writeln!(w, "eps,eps_hat,passes,violations,worst_x,worst_x_prime,worst_z,worst_ratio")?;
            let worst = r
                .worst
                .map(|v| format!("{},{},{},{}", v.x, v.x_prime, v.z, v.ratio))
                .unwrap_or_else(|| ",,,".into());
            writeln!(w, "{},{},{},{},{worst}", r.eps, r.eps_hat, r.passes, r.violations)?;
        }
    }
    w.flush()?;
    eprintln!("{} (eps_hat = {})", if r.passes { "PASS" } else { "FAIL" }, r.eps_hat);
    if a.strict && !r.passes {
        return Err(CliError::domain(format!(
            "kernel is not {}-geo-indistinguishable (eps_hat = {})",
            r.eps, r.eps_hat
        )));
    }
    Ok(())
}
