//! Argument groups shared by several subcommands.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use geoind_core::evaluation::RegionWorld;
use geoind_core::Epsilon;

use crate::error::{CliError, CliResult};

/// Privacy level. Exactly one of `--eps`, `--eps-per-m` or
/// `--level`/`--radius` is expected.
#[derive(Debug, Clone, Default, Args)]
pub struct PrivacyArgs {
    /// ε in km⁻¹.
    #[arg(long, allow_negative_numbers = true)]
    pub eps: Option<f64>,
    /// ε in m⁻¹, converted to km⁻¹.
    #[arg(long, allow_negative_numbers = true)]
    pub eps_per_m: Option<f64>,
    /// Privacy level ℓ; ε = ℓ / radius.
    #[arg(long, requires = "radius", allow_negative_numbers = true)]
    pub level: Option<f64>,
    /// Radius r in km for `--level`.
    #[arg(long, requires = "level", allow_negative_numbers = true)]
    pub radius: Option<f64>,
}

impl PrivacyArgs {
    /// The ε in km⁻¹. Echoes the value in both units on stderr.
    pub fn epsilon(&self) -> CliResult<Epsilon> {
        let given = [self.eps.is_some(), self.eps_per_m.is_some(), self.level.is_some()];
        let eps = match (given.iter().filter(|g| **g).count(), self.eps, self.eps_per_m, self.level) {
            (1, Some(e), _, _) => Epsilon::new(e)?,
            (1, _, Some(e), _) => Epsilon::new(e * 1000.0)?,
            (1, _, _, Some(l)) => Epsilon::from_level(l, self.radius.unwrap_or(f64::NAN))?,
            (0, ..) => return Err(CliError::domain("a privacy level is required: --eps, --eps-per-m or --level/--radius")),
            _ => return Err(CliError::domain("give only one of --eps, --eps-per-m, --level")),
        };
        eprintln!("eps = {} per km ({} per m)", eps.value(), eps.value() / 1000.0);
        Ok(eps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// Write here instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

impl OutputArgs {
    pub fn open(&self) -> CliResult<Box<dyn Write>> {
        open_path(self.output.as_ref())
    }
}

pub fn open_path(path: Option<&PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Grid world from a JSON file, or the 9×9 world of 100 m regions.
pub fn load_world(path: Option<&PathBuf>) -> CliResult<RegionWorld> {
    match path {
        None => Ok(RegionWorld::default_world()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
        }
    }
}

/// Parse `LAT,LON`.
pub fn parse_latlon(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected LAT,LON")?;
    let lat = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let lon = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((lat, lon))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_forms_agree() {
        let km = PrivacyArgs {
            eps: Some(16.2),
            ..Default::default()
        };
        let m = PrivacyArgs {
            eps_per_m: Some(0.0162),
            ..Default::default()
        };
        assert!((km.epsilon().unwrap().value() - m.epsilon().unwrap().value()).abs() < 1e-12);
        let l = PrivacyArgs {
            level: Some(4f64.ln()),
            radius: Some(0.2),
            ..Default::default()
        };
        assert!((l.epsilon().unwrap().value() - 6.931471805599453).abs() < 1e-12);
    }

    #[test]
    fn missing_or_doubled_privacy_is_rejected() {
        assert!(matches!(PrivacyArgs::default().epsilon(), Err(CliError::Domain(_))));
        let both = PrivacyArgs {
            eps: Some(1.0),
            eps_per_m: Some(0.001),
            ..Default::default()
        };
        assert!(matches!(both.epsilon(), Err(CliError::Domain(_))));
    }

    #[test]
    fn latlon_parses() {
        assert_eq!(parse_latlon("48.85, 2.33"), Ok((48.85, 2.33)));
        assert!(parse_latlon("48.85").is_err());
    }
}
