//! Row-stochastic mechanism matrices and their construction by quadrature.
//!
//! Row `i` of a [`MechanismMatrix`] is the output distribution for the
//! i-th true location; column `j` is the j-th reportable location.
//!
//! The quadrature integrates the planar Laplacian over the preimage of each
//! reported point under the remapping step. For rectangular admissible
//! regions on a rectangular lattice these preimages are axis-aligned
//! rectangles, unbounded along the border of the region. Each rectangle is
//! integrated in polar coordinates around the centre:
//!
//! ```text
//! P(cell) = (1/2π) ∫ [S(r_in(θ)) − S(r_out(θ))] dθ,   S(r) = (1 + εr)e^{−εr}
//! ```
//!
//! with adaptive Gauss–Kronrod on the angular pieces between corner
//! directions, where the integrand is smooth.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AdmissibleRegion, GridSpec, Location};
use crate::numerics::Epsilon;

/// Row sums must equal one within this tolerance.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixFile", into = "MatrixFile")]
pub struct MechanismMatrix {
    rows: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    rows: Vec<Vec<f64>>,
}

impl TryFrom<MatrixFile> for MechanismMatrix {
    type Error = Error;
    fn try_from(f: MatrixFile) -> Result<Self> {
        MechanismMatrix::new(f.rows)
    }
}

impl From<MechanismMatrix> for MatrixFile {
    fn from(m: MechanismMatrix) -> Self {
        MatrixFile { rows: m.rows }
    }
}

impl MechanismMatrix {
    /// Validates shape, non-negativity and row-stochasticity.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::invalid("matrix", "no rows"));
        };
        let m = first.len();
        if m == 0 {
            return Err(Error::invalid("matrix", "no columns"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::invalid("matrix", format!("row {i} has {} entries, expected {m}", row.len())));
            }
            if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::invalid("matrix", format!("row {i} has invalid entry {v}")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::invalid("matrix", format!("row {i} sums to {s}")));
            }
        }
        Ok(MechanismMatrix { rows })
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        MechanismMatrix { rows }
    }

    /// Every row equal to `row` (an uninformative mechanism).
    pub fn constant_rows(n: usize, row: Vec<f64>) -> Result<Self> {
        MechanismMatrix::new(vec![row; n])
    }

    /// Deterministic mechanism sending `i` to `targets[i]`.
    pub fn deterministic(targets: &[usize], n_cols: usize) -> Result<Self> {
        let rows = targets
            .iter()
            .map(|&t| {
                if t >= n_cols {
                    return Err(Error::invalid("matrix", format!("target {t} out of range")));
                }
                let mut r = vec![0.0; n_cols];
                r[t] = 1.0;
                Ok(r)
            })
            .collect::<Result<Vec<_>>>()?;
        MechanismMatrix::new(rows)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    /// `K(i)(Z)` for a set of reported indices.
    pub fn prob_of_set(&self, i: usize, set: &[usize]) -> f64 {
        set.iter().map(|&j| self.rows[i][j]).sum()
    }

    /// `K ∘ φ`: row `i` becomes row `φ(i)`.
    pub fn precompose(&self, phi: &[usize]) -> Result<Self> {
        if phi.len() != self.n_rows() || phi.iter().any(|&p| p >= self.n_rows()) {
            return Err(Error::invalid("hiding function", "must map rows to rows"));
        }
        Ok(MechanismMatrix {
            rows: phi.iter().map(|&p| self.rows[p].clone()).collect(),
        })
    }

    /// Post-process the output with a deterministic remap of columns.
    pub fn remap_outputs(&self, remap: &[usize]) -> Result<Self> {
        let m = self.n_cols();
        if remap.len() != m || remap.iter().any(|&r| r >= m) {
            return Err(Error::invalid("remap", "must map columns to columns"));
        }
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut out = vec![0.0; m];
                for (j, &p) in row.iter().enumerate() {
                    out[remap[j]] += p;
                }
                out
            })
            .collect();
        Ok(MechanismMatrix { rows })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// CSV with header `row,0,1,…`; each line is a true index followed by
    /// the reporting probabilities.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = std::iter::once("row".to_string())
            .chain((0..self.n_cols()).map(|j| j.to_string()))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for (i, row) in self.rows.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{i},{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn from_csv(s: &str) -> Result<Self> {
        let mut lines = s.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty matrix csv".into()))?;
        if !header.starts_with("row") {
            return Err(Error::Parse("matrix csv must start with a `row,...` header".into()));
        }
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let mut fields = line.split(',');
            fields.next();
            let row = fields
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("matrix csv line {}: {e}", n + 2)))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        MechanismMatrix::new(rows)
    }

    /// Load from `.json` or `.csv` (by extension).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Self::from_csv(&text),
            _ => Self::from_json(&text),
        }
    }
}

/// Axis-aligned rectangle, possibly unbounded on any side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Cell {
    fn ray_interval(&self, c: Location, dx: f64, dy: f64) -> Option<(f64, f64)> {
        let (ax0, ax1) = slab(self.x0 - c.x, self.x1 - c.x, dx)?;
        let (ay0, ay1) = slab(self.y0 - c.y, self.y1 - c.y, dy)?;
        let t0 = ax0.max(ay0).max(0.0);
        let t1 = ax1.min(ay1);
        (t1 > t0).then_some((t0, t1))
    }
}

/// Parameter interval of `t·d ∈ [lo, hi]`.
fn slab(lo: f64, hi: f64, d: f64) -> Option<(f64, f64)> {
    if d == 0.0 {
        return (lo <= 0.0 && 0.0 <= hi).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let (a, b) = (lo / d, hi / d);
    Some((a.min(b), a.max(b)))
}

// Gauss–Kronrod 7/15 nodes and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for k in 0..7 {
        let dx = h * XGK[k];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel: f64, abs: f64, depth: u32) -> f64 {
    let (v, err) = gk15(f, a, b);
    if err <= (rel * v.abs()).max(abs) || depth == 0 {
        return v;
    }
    let m = 0.5 * (a + b);
    adaptive(f, a, m, rel, abs, depth - 1) + adaptive(f, m, b, rel, abs, depth - 1)
}

/// Probability mass of the planar Laplacian centred at `center` over `cell`.
pub fn laplace_cell_probability(eps: Epsilon, center: Location, cell: &Cell) -> f64 {
    let e = eps.value();
    let integrand = |theta: f64| -> f64 {
        let (s, c) = theta.sin_cos();
        match cell.ray_interval(center, c, s) {
            None => 0.0,
            Some((r0, r1)) => {
                // S(r0) − S(r1) = e^{−εr0}[(1 + εr0) − (1 + εr1)e^{−ε(r1−r0)}]
                let x0 = e * r0;
                if r1.is_infinite() {
                    (1.0 + x0) * (-x0).exp()
                } else {
                    let x1 = e * r1;
                    (-x0).exp() * ((1.0 + x0) - (1.0 + x1) * (-(x1 - x0)).exp())
                }
            }
        }
    };

    let mut breaks = vec![0.0, 0.5 * PI, PI, 1.5 * PI, 2.0 * PI];
    for &x in &[cell.x0, cell.x1] {
        for &y in &[cell.y0, cell.y1] {
            if x.is_finite() && y.is_finite() {
                let a = (y - center.y).atan2(x - center.x);
                breaks.push(if a < 0.0 { a + 2.0 * PI } else { a });
            }
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    // A crude first pass sets an absolute floor so that pieces where the
    // integrand decays like e^{-1/x} do not force needless subdivision.
    let crude: f64 = breaks.windows(2).map(|w| gk15(&integrand, w[0], w[1]).0.abs()).sum();
    let floor = (1e-15 * crude).max(1e-300);
    let total: f64 = breaks
        .windows(2)
        .map(|w| adaptive(&integrand, w[0], w[1], 1e-13, floor, 40))
        .sum();
    total / (2.0 * PI)
}

/// Preimages of the remapping `closest(·, A ∩ G)` for a rectangle `A`,
/// listed with their lattice points in [`AdmissibleRegion::grid_points`]
/// order.
pub fn rect_lattice_cells(region: &AdmissibleRegion, grid: &GridSpec) -> Result<(Vec<Location>, Vec<Cell>)> {
    if !matches!(region, AdmissibleRegion::Rect { .. }) {
        return Err(Error::invalid("region", "quadrature kernels need a rectangular region"));
    }
    let points = region.grid_points(grid);
    if points.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let (xmin, xmax, ymin, ymax) = points.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), p| (a.min(p.x), b.max(p.x), c.min(p.y), d.max(p.y)),
    );
    let tol = 1e-9 * grid.u;
    let cells = points
        .iter()
        .map(|p| Cell {
            x0: if p.x <= xmin + tol { f64::NEG_INFINITY } else { p.x - 0.5 * grid.u },
            x1: if p.x >= xmax - tol { f64::INFINITY } else { p.x + 0.5 * grid.u },
            y0: if p.y <= ymin + tol { f64::NEG_INFINITY } else { p.y - 0.5 * grid.v },
            y1: if p.y >= ymax - tol { f64::INFINITY } else { p.y + 0.5 * grid.v },
        })
        .collect();
    Ok((points, cells))
}

/// Kernel `K(center_i)(cell_j)` of the idealised (infinite precision)
/// mechanism. Rows are computed in parallel; each entry is independent of
/// the schedule.
pub fn laplace_cell_kernel(eps: Epsilon, centers: &[Location], cells: &[Cell]) -> Result<MechanismMatrix> {
    let rows: Vec<Vec<f64>> = centers
        .par_iter()
        .map(|&c| cells.iter().map(|cell| laplace_cell_probability(eps, c, cell)).collect())
        .collect();
    MechanismMatrix::new(rows)
}
