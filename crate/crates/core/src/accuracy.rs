//! Usefulness, retrieval-radius sizing and bandwidth overhead.
//!
//! A location service that retrieves points of interest within `rad_R` of
//! the reported location is `(c, rad_I)`-accurate when the user's area of
//! interest `B(x, rad_I)` is contained in the area of retrieval
//! `B(z, rad_R)` with probability at least `c`. For the Planar Laplace
//! mechanism this holds with `rad_R = rad_I + C_ε^{-1}(c)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{gamma_cdf_inv, Epsilon, Probability};

/// Average size of one POI record in KB.
pub const DEFAULT_POI_SIZE_KB: f64 = 0.84;
/// Restaurants per km² in Paris.
pub const PARIS_DENSITY: f64 = 137.0;
/// Restaurants per km² in Buenos Aires.
pub const BUENOS_AIRES_DENSITY: f64 = 22.0;

/// Confidence `c` that the area of interest (radius `rad_I`) is covered.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracySpec {
    pub confidence: f64,
    pub rad_i: f64,
}

impl AccuracySpec {
    pub fn new(confidence: f64, rad_i: f64) -> Result<Self> {
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(Error::domain(format!("confidence must lie in (0, 1), got {confidence}")));
        }
        if !(rad_i > 0.0 && rad_i.is_finite()) {
            return Err(Error::domain(format!("rad_I must be > 0, got {rad_i}")));
        }
        Ok(AccuracySpec { confidence, rad_i })
    }

    pub fn validate(&self) -> Result<()> {
        AccuracySpec::new(self.confidence, self.rad_i).map(|_| ())
    }
}

/// How the expected POI count in the area of interest is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoiCount {
    /// Round density × area to the nearest integer.
    #[default]
    Nearest,
    /// Use density × area as is.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthModel {
    pub poi_density: f64,
    pub poi_size_kb: f64,
    #[serde(default)]
    pub count: PoiCount,
}

impl BandwidthModel {
    pub fn new(poi_density: f64, poi_size_kb: f64) -> Result<Self> {
        if !(poi_density >= 0.0 && poi_size_kb >= 0.0) {
            return Err(Error::domain("density and POI size must be >= 0"));
        }
        Ok(BandwidthModel {
            poi_density,
            poi_size_kb,
            count: PoiCount::Nearest,
        })
    }

    pub fn paris() -> Self {
        BandwidthModel::new(PARIS_DENSITY, DEFAULT_POI_SIZE_KB).unwrap()
    }

    pub fn buenos_aires() -> Self {
        BandwidthModel::new(BUENOS_AIRES_DENSITY, DEFAULT_POI_SIZE_KB).unwrap()
    }

    pub fn with_count(mut self, count: PoiCount) -> Self {
        self.count = count;
        self
    }

    /// Expected number of POIs in a disc of radius `rad_i`.
    pub fn pois_in_disc(&self, rad_i: f64) -> f64 {
        let n = self.poi_density * PI * rad_i * rad_i;
        match self.count {
            PoiCount::Nearest => n.round(),
            PoiCount::Exact => n,
        }
    }
}

/// Tight α such that PL_ε is (α, δ)-useful: `C_ε^{-1}(δ)`.
pub fn usefulness_radius(eps: Epsilon, delta: f64) -> Result<f64> {
    gamma_cdf_inv(eps, Probability::new(delta)?)
}

/// Retrieval radius `rad_I + C_ε^{-1}(c)`. Depends on (ε, c, rad_I) only,
/// never on the reported location.
pub fn aor_radius(eps: Epsilon, acc: &AccuracySpec) -> Result<f64> {
    acc.validate()?;
    Ok(acc.rad_i + usefulness_radius(eps, acc.confidence)?)
}

/// Area ratio `(rad_R / rad_I)²`.
pub fn aor_aoi_ratio(eps: Epsilon, acc: &AccuracySpec) -> Result<f64> {
    let r = aor_radius(eps, acc)? / acc.rad_i;
    Ok(r * r)
}

/// Extra KB per query: `n_AOI × (ratio − 1) × poi_size`.
pub fn bandwidth_overhead(eps: Epsilon, acc: &AccuracySpec, model: &BandwidthModel) -> Result<f64> {
    let n = model.pois_in_disc(acc.rad_i);
    Ok(n * (aor_aoi_ratio(eps, acc)? - 1.0) * model.poi_size_kb)
}

/// Largest ε meeting confidence `c` when the noise may displace the point by
/// at most `slack`: solves `C_ε(slack) = c`. Since `C_ε(r)` depends only on
/// `εr`, this is `C_1^{-1}(c) / slack`.
pub fn eps_for_noise_budget(confidence: f64, slack: f64) -> Result<Epsilon> {
    if !(slack > 0.0) {
        return Err(Error::domain(format!("slack must be > 0, got {slack}")));
    }
    let x = usefulness_radius(Epsilon::new(1.0)?, confidence)?;
    Epsilon::new(x / slack)
}

/// The two readings of "the ε matching a retrieval radius" for a fixed
/// `(c, rad_I, rad_R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCalibration {
    /// Solves `C_ε(rad_R − rad_I) = c` (the sizing rule above).
    pub difference_form: f64,
    /// Solves `C_ε(rad_R) = c`.
    pub full_radius_form: f64,
}

pub fn accuracy_calibrations(confidence: f64, rad_i: f64, rad_r: f64) -> Result<AccuracyCalibration> {
    if !(rad_r > rad_i) {
        return Err(Error::domain("rad_R must exceed rad_I"));
    }
    Ok(AccuracyCalibration {
        difference_form: eps_for_noise_budget(confidence, rad_r - rad_i)?.value(),
        full_radius_form: eps_for_noise_budget(confidence, rad_r)?.value(),
    })
}

/// One cell of the bandwidth table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthCell {
    pub level: f64,
    pub radius: f64,
    pub confidence: f64,
    pub rad_i: f64,
    pub rad_r: f64,
    pub ratio: f64,
    pub pois_in_aoi: f64,
    pub overhead_kb: f64,
}

/// Bandwidth overhead for every (level, confidence) pair at fixed radius.
pub fn bandwidth_table(
    levels: &[f64],
    radius: f64,
    confidences: &[f64],
    rad_i: f64,
    model: &BandwidthModel,
) -> Result<Vec<BandwidthCell>> {
    let mut out = Vec::with_capacity(levels.len() * confidences.len());
    for &level in levels {
        let eps = Epsilon::from_level(level, radius)?;
        for &c in confidences {
            let acc = AccuracySpec::new(c, rad_i)?;
            out.push(BandwidthCell {
                level,
                radius,
                confidence: c,
                rad_i,
                rad_r: aor_radius(eps, &acc)?,
                ratio: aor_aoi_ratio(eps, &acc)?,
                pois_in_aoi: model.pois_in_disc(rad_i),
                overhead_kb: bandwidth_overhead(eps, &acc, model)?,
            });
        }
    }
    Ok(out)
}
