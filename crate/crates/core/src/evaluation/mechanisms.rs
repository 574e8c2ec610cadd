//! Region-level mechanism matrices for the grid world.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{GridSpec, Location};
use crate::kernel::{laplace_cell_kernel, Cell, MechanismMatrix};
use crate::mechanism::{calibrate_eps_prime, Calibration, PlanarLaplace, PrecisionParams, PrivacyParams, RngStream};
use crate::numerics::Epsilon;

use super::world::RegionWorld;

/// Reports the central region of the zone containing the true region.
pub fn cloaking_matrix(world: &RegionWorld) -> Result<MechanismMatrix> {
    let targets = (0..world.n_regions())
        .map(|i| world.zone_center(i))
        .collect::<Result<Vec<_>>>()?;
    MechanismMatrix::deterministic(&targets, world.n_regions())
}

/// How the planar Laplace region kernel is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum KernelMode {
    /// Deterministic integration of the noise density over each region,
    /// at the calibrated ε′.
    Quadrature,
    /// Run the full mechanism `samples` times from every centroid.
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlMatrix {
    pub matrix: MechanismMatrix,
    pub calibration: Calibration,
}

/// Lattice of region centroids.
pub fn centroid_grid(world: &RegionWorld) -> GridSpec {
    let s = world.side_km();
    GridSpec::new(s, s, Location::new(0.5 * s, 0.5 * s)).expect("side is positive")
}

/// Region squares; border regions extend to infinity since the mechanism
/// remaps every point outside the world to the closest centroid.
pub fn region_cells(world: &RegionWorld) -> Vec<Cell> {
    let s = world.side_km();
    let (rows, cols) = (world.rows(), world.cols());
    (0..world.n_regions())
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            let lo = |k: usize| if k == 0 { f64::NEG_INFINITY } else { k as f64 * s };
            let hi = |k: usize, n: usize| if k + 1 == n { f64::INFINITY } else { (k + 1) as f64 * s };
            Cell {
                x0: lo(c),
                x1: hi(c, cols),
                y0: lo(r),
                y1: hi(r, rows),
            }
        })
        .collect()
}

/// Planar Laplace on the region centroids, truncated to the world's
/// bounding square and reported as a region.
pub fn pl_matrix(world: &RegionWorld, eps: Epsilon, delta_theta: f64, mode: KernelMode) -> Result<PlMatrix> {
    let grid = centroid_grid(world);
    let calibration = calibrate_eps_prime(eps, grid.u, world.diameter(), delta_theta)?;
    let matrix = match mode {
        KernelMode::Quadrature => {
            let e = Epsilon::new(calibration.eps_prime)?;
            laplace_cell_kernel(e, world.centroids(), &region_cells(world))?
        }
        KernelMode::MonteCarlo { samples, seed } => {
            let pl = PlanarLaplace::new(
                PrivacyParams::new(eps),
                PrecisionParams {
                    delta_r: None,
                    delta_theta,
                    grid,
                },
                world.bounds(),
            )?;
            let base = RngStream::new(seed);
            let n = world.n_regions();
            let rows = (0..n)
                .into_par_iter()
                .map(|x| {
                    let mut rng = base.fork(x as u64);
                    let mut counts = vec![0usize; n];
                    for _ in 0..samples {
                        let z = pl.sample(world.centroid(x), &mut rng)?;
                        counts[world.region_of(z)] += 1;
                    }
                    Ok(counts.into_iter().map(|c| c as f64 / samples as f64).collect())
                })
                .collect::<Result<Vec<Vec<f64>>>>()?;
            MechanismMatrix::new(rows)?
        }
    };
    Ok(PlMatrix { matrix, calibration })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::DOUBLE_PRECISION_DELTA_THETA;

    #[test]
    fn cloaking_maps_corner_to_zone_center() {
        let w = RegionWorld::default_world();
        let k = cloaking_matrix(&w).unwrap();
        assert_eq!(w.label(k.rows()[0].iter().position(|&p| p == 1.0).unwrap()), 11);
        for i in 0..81 {
            let ones = k.rows()[i].iter().filter(|&&p| p == 1.0).count();
            assert_eq!(ones, 1);
            let c = w.zone_center(i).unwrap();
            assert_eq!(k.get(c, c), 1.0);
        }
    }

    #[test]
    fn cloaking_needs_zones() {
        let w = RegionWorld::new(3, 3, 0.1, None).unwrap();
        assert!(cloaking_matrix(&w).is_err());
    }

    #[test]
    fn region_cells_tile_the_plane() {
        let w = RegionWorld::new(3, 4, 0.2, None).unwrap();
        let cells = region_cells(&w);
        for (i, c) in cells.iter().enumerate() {
            let p = w.centroid(i);
            assert!(c.x0 < p.x && p.x < c.x1 && c.y0 < p.y && p.y < c.y1);
        }
        assert_eq!(cells[0].x0, f64::NEG_INFINITY);
        assert_eq!(cells[11].y1, f64::INFINITY);
    }

    #[test]
    fn huge_eps_approximates_identity() {
        let w = RegionWorld::new(3, 3, 0.1, None).unwrap();
        let pl = pl_matrix(
            &w,
            Epsilon::new(2000.0).unwrap(),
            DOUBLE_PRECISION_DELTA_THETA,
            KernelMode::Quadrature,
        )
        .unwrap();
        for i in 0..9 {
            assert!(pl.matrix.get(i, i) > 0.99, "{}", pl.matrix.get(i, i));
        }
    }

    #[test]
    fn monte_carlo_is_seeded_and_close_to_quadrature() {
        let w = RegionWorld::new(3, 3, 0.1, None).unwrap();
        let e = Epsilon::new(10.0).unwrap();
        let mode = KernelMode::MonteCarlo {
            samples: 20_000,
            seed: 9,
        };
        let a = pl_matrix(&w, e, DOUBLE_PRECISION_DELTA_THETA, mode).unwrap();
        let b = pl_matrix(&w, e, DOUBLE_PRECISION_DELTA_THETA, mode).unwrap();
        assert_eq!(a.matrix, b.matrix);
        let q = pl_matrix(&w, e, DOUBLE_PRECISION_DELTA_THETA, KernelMode::Quadrature).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let p = q.matrix.get(i, j);
                let sigma = (p * (1.0 - p) / 20_000.0).sqrt();
                assert!((a.matrix.get(i, j) - p).abs() <= 5.0 * sigma + 1e-12);
            }
        }
    }
}
