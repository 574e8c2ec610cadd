use std::io::Write;

use clap::Args;
use geoind_core::mechanism::{calibrate_eps_prime, Calibration, DOUBLE_PRECISION_DELTA_THETA};
use geoind_core::{Epsilon, Error};
use serde::Serialize;

use crate::args::{Format, OutputArgs, PrivacyArgs};
use crate::error::{CliError, CliResult};

/// Precisions swept by `--sweep`: 16, 9 and 7 significant digits.
pub const SWEEP_PRECISIONS: [(&str, f64); 3] = [
    ("double", DOUBLE_PRECISION_DELTA_THETA),
    ("intermediate", 1e-9),
    ("single", 1e-7),
];

/// Compute the sampling level ε′ that absorbs discretization.
#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub privacy: PrivacyArgs,
    /// Grid step, km.
    #[arg(long, default_value_t = 0.003)]
    pub u: f64,
    /// Radius within which the guarantee must hold, km.
    #[arg(long, default_value_t = 100.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = DOUBLE_PRECISION_DELTA_THETA)]
    pub delta_theta: f64,
    /// Emit ε′ against ε for three machine precisions instead.
    #[arg(long)]
    pub sweep: bool,
    #[arg(long, default_value_t = 1.0, requires = "sweep")]
    pub eps_from: f64,
    #[arg(long, default_value_t = 20.0, requires = "sweep")]
    pub eps_to: f64,
    #[arg(long, default_value_t = 96, requires = "sweep")]
    pub steps: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Serialize)]
struct Report {
    eps: f64,
    eps_prime: f64,
    gap: f64,
    q: f64,
    u: f64,
    r_max: f64,
    delta_theta: f64,
    min_supported_eps: Option<f64>,
}

impl From<Calibration> for Report {
    fn from(c: Calibration) -> Self {
        Report {
            eps: c.eps,
            eps_prime: c.eps_prime,
            gap: c.eps - c.eps_prime,
            q: c.q,
            u: c.u,
            r_max: c.r_max,
            delta_theta: c.delta_theta,
            min_supported_eps: Calibration::min_supported_eps(c.u, c.q),
        }
    }
}

#[derive(Serialize)]
struct SweepRow {
    precision: &'static str,
    delta_theta: f64,
    q: f64,
    eps: f64,
    eps_prime: Option<f64>,
}

pub fn run(a: &CalibrateArgs) -> CliResult<()> {
    if a.sweep {
        return sweep(a);
    }
    let eps = a.privacy.epsilon()?;
    let c = calibrate_eps_prime(eps, a.u, a.r_max, a.delta_theta)?;
    let r = Report::from(c);
    let mut w = a.out.open()?;
    match a.out.format {
        Format::Json => writeln!(w, "{}", serde_json::to_string_pretty(&r)?)?,
        Format::Csv => {
            writeln!(w, "eps,eps_prime,gap,q,u,r_max,delta_theta,min_supported_eps")?;
            writeln!(
                w,
                "{},{},{:e},{},{},{},{:e},{}",
                r.eps,
                r.eps_prime,
                r.gap,
                r.q,
                r.u,
                r.r_max,
                r.delta_theta,
                r.min_supported_eps.map(|v| v.to_string()).unwrap_or_default()
            )?
        }
    }
    w.flush()?;
    Ok(())
}

fn sweep(a: &CalibrateArgs) -> CliResult<()> {
    if a.steps < 2 || !(a.eps_from > 0.0 && a.eps_to > a.eps_from) {
        return Err(CliError::domain("need 0 < --eps-from < --eps-to and --steps >= 2"));
    }
    let mut rows = Vec::new();
    for (name, dt) in SWEEP_PRECISIONS {
        for k in 0..a.steps {
            let e = a.eps_from + (a.eps_to - a.eps_from) * k as f64 / (a.steps - 1) as f64;
            let q = a.u / (a.r_max * dt);
            let eps_prime = match calibrate_eps_prime(Epsilon::new(e)?, a.u, a.r_max, dt) {
                Ok(c) => Some(c.eps_prime),
                Err(Error::Infeasible { .. }) => None,
                Err(err) => return Err(err.into()),
            };
            rows.push(SweepRow {
                precision: name,
                delta_theta: dt,
                q,
                eps: e,
                eps_prime,
            });
        }
    }
    let mut w = a.out.open()?;
    match a.out.format {
        Format::Json => writeln!(w, "{}", serde_json::to_string_pretty(&rows)?)?,
        Format::Csv => {
            writeln!(w, "precision,delta_theta,q,eps,eps_prime")?;
            for r in &rows {
                writeln!(
                    w,
                    "{},{:e},{:.6e},{:.6},{}",
                    r.precision,
                    r.delta_theta,
                    r.q,
                    r.eps,
                    r.eps_prime.map(|v| format!("{v:.6}")).unwrap_or_default()
                )?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
