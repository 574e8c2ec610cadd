use std::io::Write;

use clap::{Args, ValueEnum};
use geoind_core::mechanism::draw_polar;
use geoind_core::RngStream;

use crate::args::{Format, OutputArgs, PrivacyArgs};
use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Coords {
    /// `r_km,theta_rad`
    #[default]
    Polar,
    /// `x_km,y_km` displacement
    Cartesian,
}

/// Draw planar Laplace noise around the origin.
#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub privacy: PrivacyArgs,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t)]
    pub coords: Coords,
    #[command(flatten)]
    pub out: OutputArgs,
}

pub fn run(a: &SampleArgs) -> CliResult<()> {
    let eps = a.privacy.epsilon()?;
    let mut rng = RngStream::new(a.seed);
    let mut w = a.out.open()?;
    let (k0, k1) = match a.coords {
        Coords::Polar => ("r_km", "theta_rad"),
        Coords::Cartesian => ("x_km", "y_km"),
    };
    match a.out.format {
        Format::Csv => writeln!(w, "{k0},{k1}")?,
        Format::Json => write!(w, "[")?,
    }
    for i in 0..a.count {
        let s = draw_polar(eps, &mut rng);
        let (v0, v1) = match a.coords {
            Coords::Polar => (s.r, s.theta),
            Coords::Cartesian => (s.r * s.theta.cos(), s.r * s.theta.sin()),
        };
        match a.out.format {
            Format::Csv => writeln!(w, "{v0},{v1}")?,
            Format::Json => {
                let sep = if i == 0 { "" } else { "," };
                write!(w, "{sep}\n  {{\"{k0}\": {v0}, \"{k1}\": {v1}}}")?
            }
        }
    }
    if a.out.format == Format::Json {
        writeln!(w, "\n]")?;
    }
    w.flush()?;
    Ok(())
}
