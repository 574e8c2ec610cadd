//! Bayesian evaluation of location-privacy mechanisms on a grid of regions.

mod bayes;
mod characterization;
mod geoind;
mod mechanisms;
mod metrics;
mod report;
mod world;

pub use bayes::{bayes_posterior, mult_distance, mult_distance_exhaustive};
pub use characterization::{
    check_characterization_hiding, check_characterization_informed, hill_climb_hiding, random_prior, random_subset,
    CharacterizationReport,
};
pub use geoind::{check_geoind, check_geoind_points, check_geoind_with, spot_check_subsets, GeoIndReport, Witness};
pub use mechanisms::{centroid_grid, cloaking_matrix, pl_matrix, region_cells, KernelMode, PlMatrix};
pub use metrics::{expected_error, lp, optimal_remap, sql, LpReport};
pub use report::{evaluate, EvaluationRow, EvaluationTable};
pub use world::{NamedPrior, Prior, RegionWorld, ZonePartition, PRIOR_SUM_TOL};
