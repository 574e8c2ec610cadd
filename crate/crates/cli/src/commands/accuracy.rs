use std::io::Write;

use clap::{Args, ValueEnum};
use geoind_core::accuracy::{
    aor_aoi_ratio, aor_radius, bandwidth_overhead, bandwidth_table, usefulness_radius, AccuracySpec, BandwidthModel,
    PoiCount, DEFAULT_POI_SIZE_KB,
};
use geoind_core::Epsilon;

use crate::args::{Format, OutputArgs, PrivacyArgs};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum City {
    Paris,
    BuenosAires,
}

impl City {
    fn model(self) -> BandwidthModel {
        match self {
            City::Paris => BandwidthModel::paris(),
            City::BuenosAires => BandwidthModel::buenos_aires(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            City::Paris => "paris",
            City::BuenosAires => "buenos-aires",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Curve {
    /// Distance α reached with probability δ, per level.
    Usefulness,
    /// AOR/AOI area ratio against confidence, per level.
    Ratio,
}

/// Retrieval radius and bandwidth overhead.
#[derive(Debug, Args)]
pub struct AccuracyArgs {
    #[command(flatten)]
    pub privacy: PrivacyArgs,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    /// Area-of-interest radius, km.
    #[arg(long, default_value_t = 0.3)]
    pub rad_i: f64,
    #[arg(long, value_enum, default_value = "paris")]
    pub city: City,
    /// POIs per km²; overrides the city.
    #[arg(long)]
    pub density: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_POI_SIZE_KB)]
    pub poi_size_kb: f64,
    /// Use density × area as is instead of rounding it.
    #[arg(long)]
    pub exact_count: bool,
    /// Emit the bandwidth table for both cities.
    #[arg(long, conflicts_with = "curve")]
    pub table: bool,
    #[arg(long, value_enum)]
    pub curve: Option<Curve>,
    /// Levels for `--table`/`--curve`; `ln4` means ln 4.
    #[arg(long, value_delimiter = ',', value_parser = parse_level, default_value = "ln6,ln4,ln2")]
    pub levels: Vec<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

fn parse_level(s: &str) -> Result<f64, String> {
    match s.strip_prefix("ln") {
        Some(x) => x.parse::<f64>().map(f64::ln).map_err(|e| e.to_string()),
        None => s.parse::<f64>().map_err(|e| e.to_string()),
    }
}

const HEADER: &str = "city,level,radius,eps,confidence,rad_i,rad_r_km,ratio,pois_in_aoi,overhead_kb";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_default()
}

pub fn run(a: &AccuracyArgs) -> CliResult<()> {
    let count = if a.exact_count { PoiCount::Exact } else { PoiCount::Nearest };
    let model = |city: City| -> CliResult<BandwidthModel> {
        let base = city.model();
        let m = BandwidthModel::new(a.density.unwrap_or(base.poi_density), a.poi_size_kb)?;
        Ok(m.with_count(count))
    };
    let radius = a.privacy.radius.unwrap_or(0.2);
    if a.table {
        return table(a, radius, &[model(City::Paris)?, model(City::BuenosAires)?]);
    }
    if let Some(curve) = a.curve {
        return curves(a, curve, radius);
    }

    let eps = a.privacy.epsilon()?;
    let acc = AccuracySpec::new(a.confidence, a.rad_i)?;
    let m = model(a.city)?;
    let mut w = a.out.open()?;
    let rad_r = aor_radius(eps, &acc)?;
    let ratio = aor_aoi_ratio(eps, &acc)?;
    let overhead = bandwidth_overhead(eps, &acc, &m)?;
    let city = if a.density.is_some() { "custom" } else { a.city.name() };
    match a.out.format {
        Format::Json => writeln!(
            w,
            "{}",
            serde_json::to_string_pretty(&serde_json::json!({
                "city": city,
                "level": a.privacy.level,
                "radius": a.privacy.radius,
                "eps": eps.value(),
                "confidence": acc.confidence,
                "rad_i": acc.rad_i,
                "rad_r_km": rad_r,
                "ratio": ratio,
                "pois_in_aoi": m.pois_in_disc(acc.rad_i),
                "overhead_kb": overhead,
            }))?
        )?,
        Format::Csv => {
            writeln!(w, "{HEADER}")?;
            writeln!(
                w,
                "{city},{},{},{:.6},{},{},{rad_r:.6},{ratio:.6},{},{overhead:.6}",
                fmt_opt(a.privacy.level),
                fmt_opt(a.privacy.radius),
                eps.value(),
                acc.confidence,
                acc.rad_i,
                m.pois_in_disc(acc.rad_i),
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

fn table(a: &AccuracyArgs, radius: f64, models: &[BandwidthModel; 2]) -> CliResult<()> {
    let confidences = [0.9, 0.95, 0.99];
    let mut rows = Vec::new();
    for (city, m) in [City::Paris, City::BuenosAires].into_iter().zip(models) {
        for cell in bandwidth_table(&a.levels, radius, &confidences, a.rad_i, m)? {
            rows.push((city.name(), cell));
        }
    }
    let mut w = a.out.open()?;
    match a.out.format {
        Format::Json => {
            let v: Vec<_> = rows
                .iter()
                .map(|(city, c)| serde_json::json!({ "city": city, "cell": c }))
                .collect();
            writeln!(w, "{}", serde_json::to_string_pretty(&v)?)?;
        }
        Format::Csv => {
            writeln!(w, "{HEADER}")?;
            for (city, c) in &rows {
                writeln!(
                    w,
                    "{city},{:.6},{:.6},{:.6},{},{},{:.6},{:.6},{},{:.6}",
                    c.level,
                    c.radius,
                    c.level / c.radius,
                    c.confidence,
                    c.rad_i,
                    c.rad_r,
                    c.ratio,
                    c.pois_in_aoi,
                    c.overhead_kb
                )?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn curves(a: &AccuracyArgs, curve: Curve, radius: f64) -> CliResult<()> {
    if a.out.format == Format::Json {
        return Err(CliError::domain("curves are emitted as CSV only"));
    }
    let mut w = a.out.open()?;
    let grid: Vec<f64> = (1..=99).map(|k| k as f64 / 100.0).collect();
    match curve {
        Curve::Usefulness => {
            writeln!(w, "level,radius,eps,delta,alpha_km")?;
            for &l in &a.levels {
                let eps = Epsilon::from_level(l, radius)?;
                for &d in &grid {
                    writeln!(w, "{l:.6},{radius},{:.6},{d:.2},{:.6}", eps.value(), usefulness_radius(eps, d)?)?;
                }
            }
        }
        Curve::Ratio => {
            writeln!(w, "level,radius,eps,confidence,rad_i,rad_r_km,ratio")?;
            for &l in &a.levels {
                let eps = Epsilon::from_level(l, radius)?;
                for &c in &grid {
                    let acc = AccuracySpec::new(c, a.rad_i)?;
                    writeln!(
                        w,
                        "{l:.6},{radius},{:.6},{c:.2},{},{:.6},{:.6}",
                        eps.value(),
                        a.rad_i,
                        aor_radius(eps, &acc)?,
                        aor_aoi_ratio(eps, &acc)?
                    )?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_accept_log_shorthand() {
        assert_eq!(parse_level("ln4"), Ok(4f64.ln()));
        assert_eq!(parse_level("1.5"), Ok(1.5));
        assert!(parse_level("lnx").is_err());
    }
}
