//! Quadrature representations: Hermite functions on grids, `P(X)`, `P(P)`,
//! joint `P(X_A, X_B)` densities, and algebraic quadrature moments.
//!
//! Units follow `X = (a + a†)/√2`, `P = (a − a†)/(i√2)`, so the vacuum has
//! variance 1/2 in both quadratures and `⟨x|n⟩` is the Hermite function
//! `ψ_n(x)`.

use std::io::{BufRead, Write};
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{ModeState, TwoModeSource};

/// Densities at either end of a grid must not exceed this.
pub const BOUNDARY_DENSITY_LIMIT: f64 = 1e-10;

/// Rounding-level negativity that is silently clamped to zero.
pub const NEGATIVITY_FLOOR: f64 = -1e-12;

const MAX_TABLE_DIM: usize = 512;
const RESCALE: f64 = 1e100;

/// Writes `ψ_n(x)` for `n = 0..out.len()` using the upward recurrence
/// `ψ_{n+1} = √(2/(n+1)) x ψ_n − √(n/(n+1)) ψ_{n−1}`.
///
/// The Gaussian factor is carried as a separate exponent and the running
/// values are rescaled when they grow large, so the recurrence neither
/// starts from a subnormal nor overflows far outside the classical region.
pub fn hermite_functions(x: f64, out: &mut [f64]) {
    let dim = out.len();
    if dim == 0 {
        return;
    }
    let mut log_scale = -0.5 * x * x;
    let mut scale = log_scale.exp();
    let apply = |v: f64, scale: f64, log_scale: f64| {
        if log_scale > -700.0 {
            v * scale
        } else if v == 0.0 {
            0.0
        } else {
            v.signum() * (v.abs().ln() + log_scale).exp()
        }
    };
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25);
    out[0] = apply(cur, scale, log_scale);
    for n in 0..dim - 1 {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_scale += RESCALE.ln();
            scale = log_scale.exp();
        }
        out[n + 1] = apply(cur, scale, log_scale);
    }
}

/// Uniform axis `x_min..=x_max` with `points` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, points: usize) -> Result<Self> {
        if !(x_min < x_max) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidInput(format!("grid bounds must satisfy x_min < x_max, got [{x_min}, {x_max}]")));
        }
        if points < 2 {
            return Err(Error::InvalidInput(format!("grid needs at least 2 points, got {points}")));
        }
        Ok(Self { x_min, x_max, points })
    }

    pub fn symmetric(half_width: f64, points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, points)
    }

    /// `±(√2·|α|_max + 6)` with 401 points.
    pub fn default_for(alpha_max: f64) -> Self {
        Self::symmetric(std::f64::consts::SQRT_2 * alpha_max.abs() + 6.0, 401).expect("valid default grid")
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        // exactly antisymmetric about the midpoint, so symmetric grids hit 0
        let mid = 0.5 * (self.x_min + self.x_max);
        let half = 0.5 * (self.x_max - self.x_min);
        let last = (self.points - 1) as f64;
        mid + half * ((2.0 * i as f64 - last) / last)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.node(i)).collect()
    }

    /// Trapezoid weights.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.points).map(|i| if i == 0 || i + 1 == self.points { 0.5 * h } else { h }).collect()
    }
}

/// `ψ_n(x_j)` for every node `j` (rows) and number state `n` (columns).
#[derive(Debug, Clone)]
pub struct HermiteTable {
    grid: GridSpec,
    values: Array2<f64>,
}

impl HermiteTable {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }
}

pub fn hermite_table(grid: &GridSpec, dim: usize) -> Result<HermiteTable> {
    if dim == 0 || dim > MAX_TABLE_DIM {
        return Err(Error::InvalidInput(format!("hermite table dimension must be in 1..={MAX_TABLE_DIM}, got {dim}")));
    }
    let mut values = Array2::zeros((grid.points, dim));
    for (j, mut row) in values.axis_iter_mut(Axis(0)).enumerate() {
        hermite_functions(grid.node(j), row.as_slice_mut().expect("row-major"));
    }
    Ok(HermiteTable { grid: *grid, values })
}

fn check_density(value: f64) -> Result<f64> {
    if value < NEGATIVITY_FLOOR || !value.is_finite() {
        return Err(Error::InvalidInput(format!("density value {value:e} is negative beyond rounding")));
    }
    Ok(value.max(0.0))
}

/// Density on a 1D quadrature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionGrid1D {
    pub grid: GridSpec,
    pub density: Vec<f64>,
}

impl DistributionGrid1D {
    pub fn from_density(grid: GridSpec, density: Vec<f64>) -> Result<Self> {
        if density.len() != grid.points {
            return Err(Error::DimensionMismatch { expected: grid.points, found: density.len() });
        }
        let density = density.into_iter().map(check_density).collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, density })
    }

    fn weighted_sum(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.grid.weights().iter().zip(&self.density).enumerate().map(|(i, (w, p))| w * p * f(self.grid.node(i))).sum()
    }

    pub fn integral(&self) -> f64 {
        self.weighted_sum(|_| 1.0)
    }

    pub fn mean(&self) -> f64 {
        self.weighted_sum(|x| x) / self.integral()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.weighted_sum(|x| (x - m) * (x - m)) / self.integral()
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.density.iter().zip(&other.density).fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }

    pub fn boundary_density(&self) -> f64 {
        self.density[0].max(self.density[self.density.len() - 1])
    }

    /// Same density with `x → −x`.
    pub fn reflected(&self) -> Self {
        let mut density = self.density.clone();
        density.reverse();
        Self { grid: GridSpec { x_min: -self.grid.x_max, x_max: -self.grid.x_min, points: self.grid.points }, density }
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "x,p")?;
        for (i, p) in self.density.iter().enumerate() {
            writeln!(w, "{:e},{:e}", self.grid.node(i), p)?;
        }
        Ok(())
    }
}

/// Density on a product grid; rows index `x_a`, columns `x_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionGrid2D {
    pub grid_a: GridSpec,
    pub grid_b: GridSpec,
    pub density: Array2<f64>,
}

impl DistributionGrid2D {
    pub fn from_density(grid_a: GridSpec, grid_b: GridSpec, density: Array2<f64>) -> Result<Self> {
        if density.dim() != (grid_a.points, grid_b.points) {
            return Err(Error::DimensionMismatch { expected: grid_a.points * grid_b.points, found: density.len() });
        }
        let mut density = density;
        for v in density.iter_mut() {
            *v = check_density(*v)?;
        }
        Ok(Self { grid_a, grid_b, density })
    }

    pub fn integral(&self) -> f64 {
        let wa = Array1::from(self.grid_a.weights());
        let wb = Array1::from(self.grid_b.weights());
        wa.dot(&self.density.dot(&wb))
    }

    pub fn marginal_a(&self) -> DistributionGrid1D {
        let wb = Array1::from(self.grid_b.weights());
        DistributionGrid1D { grid: self.grid_a, density: self.density.dot(&wb).to_vec() }
    }

    pub fn marginal_b(&self) -> DistributionGrid1D {
        let wa = Array1::from(self.grid_a.weights());
        DistributionGrid1D { grid: self.grid_b, density: wa.dot(&self.density).to_vec() }
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.density.iter().zip(other.density.iter()).fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }

    /// `∫∫ |p − q|` by the trapezoid rule.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        let wa = Array1::from(self.grid_a.weights());
        let wb = Array1::from(self.grid_b.weights());
        let diff = (&self.density - &other.density).mapv(f64::abs);
        wa.dot(&diff.dot(&wb))
    }

    pub fn boundary_density(&self) -> f64 {
        let (ra, rb) = self.density.dim();
        let rows = [0, ra - 1].into_iter().flat_map(|i| self.density.row(i).to_vec());
        let cols = [0, rb - 1].into_iter().flat_map(|j| self.density.column(j).to_vec());
        rows.chain(cols).fold(0.0, f64::max)
    }

    /// CSV with header `x_a,x_b,p`, row-major over `x_a`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "x_a,x_b,p")?;
        for (i, row) in self.density.axis_iter(Axis(0)).enumerate() {
            let xa = self.grid_a.node(i);
            for (j, p) in row.iter().enumerate() {
                writeln!(w, "{:e},{:e},{:e}", xa, self.grid_b.node(j), p)?;
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Reads a grid written by [`write_csv`](Self::write_csv); axes are
    /// recovered from the distinct node values.
    pub fn read_csv(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != "x_a,x_b,p" {
            return Err(Error::InvalidInput(format!("unexpected csv header {header:?}")));
        }
        let mut rows: Vec<(f64, f64, f64)> = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad csv field in {line:?}"))))
                .collect::<Result<_>>()?;
            if fields.len() != 3 {
                return Err(Error::InvalidInput(format!("expected 3 fields in {line:?}")));
            }
            rows.push((fields[0], fields[1], fields[2]));
        }
        let nb = rows.iter().take_while(|r| r.0 == rows[0].0).count();
        if nb < 2 || !rows.len().is_multiple_of(nb) {
            return Err(Error::InvalidInput("csv does not describe a rectangular grid".into()));
        }
        let na = rows.len() / nb;
        let grid_a = GridSpec::new(rows[0].0, rows[rows.len() - 1].0, na)?;
        let grid_b = GridSpec::new(rows[0].1, rows[nb - 1].1, nb)?;
        let density = Array2::from_shape_vec((na, nb), rows.iter().map(|r| r.2).collect())
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        Self::from_density(grid_a, grid_b, density)
    }
}

fn wavefunction_on_grid(amps: &Array1<Complex64>, table: &HermiteTable) -> Vec<Complex64> {
    let re = amps.mapv(|c| c.re);
    let im = amps.mapv(|c| c.im);
    let vr = table.values.dot(&re);
    let vi = table.values.dot(&im);
    vr.iter().zip(vi.iter()).map(|(&r, &i)| Complex64::new(r, i)).collect()
}

/// `P(x) = |Σ_n c_n ψ_n(x)|²`, normalized by the state norm.
pub fn dist_x(state: &ModeState, grid: &GridSpec) -> Result<DistributionGrid1D> {
    let table = hermite_table(grid, state.dim())?;
    dist_x_with_table(state, &table)
}

pub fn dist_x_with_table(state: &ModeState, table: &HermiteTable) -> Result<DistributionGrid1D> {
    if table.dim() != state.dim() {
        return Err(Error::DimensionMismatch { expected: table.dim(), found: state.dim() });
    }
    let norm = state.norm_sqr();
    let density = wavefunction_on_grid(state.amplitudes(), table).iter().map(|v| v.norm_sqr() / norm).collect();
    let dist = DistributionGrid1D::from_density(table.grid, density)?;
    let boundary = dist.boundary_density();
    if boundary > BOUNDARY_DENSITY_LIMIT {
        return Err(Error::GridTooSmall { boundary_density: boundary });
    }
    Ok(dist)
}

/// Rotates a state by a quarter period of the free oscillator,
/// `c_n ← (−i)ⁿ c_n`, which maps `P` statistics onto `X` statistics.
pub fn quarter_rotation(state: &ModeState) -> ModeState {
    const ROT: [Complex64; 4] =
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, -1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, 1.0)];
    state.map_amplitudes(|n, c| ROT[n % 4] * c)
}

/// Density of the `P` quadrature.
pub fn dist_p(state: &ModeState, grid: &GridSpec) -> Result<DistributionGrid1D> {
    dist_x(&quarter_rotation(state), grid)
}

/// `P(x_a, x_b)` for a pure state or a weighted ensemble, computed as
/// `T_a · C · T_bᵀ` per component.
pub fn dist_joint(source: &impl TwoModeSource, grid_a: &GridSpec, grid_b: &GridSpec) -> Result<DistributionGrid2D> {
    let components = source.weighted_states();
    let (dim_a, dim_b) = components[0].1.dims();
    let ta = hermite_table(grid_a, dim_a)?;
    let tb = hermite_table(grid_b, dim_b)?;
    dist_joint_with_tables(source, &ta, &tb)
}

pub fn dist_joint_with_tables(
    source: &impl TwoModeSource,
    table_a: &HermiteTable,
    table_b: &HermiteTable,
) -> Result<DistributionGrid2D> {
    let mut density = Array2::<f64>::zeros((table_a.grid.points, table_b.grid.points));
    let tb_t = table_b.values.t();
    for (weight, state) in source.weighted_states() {
        let (dim_a, dim_b) = state.dims();
        if dim_a != table_a.dim() {
            return Err(Error::DimensionMismatch { expected: table_a.dim(), found: dim_a });
        }
        if dim_b != table_b.dim() {
            return Err(Error::DimensionMismatch { expected: table_b.dim(), found: dim_b });
        }
        let amps = state.amplitudes();
        let re = amps.mapv(|c| c.re);
        let im = amps.mapv(|c| c.im);
        let wr = table_a.values.dot(&re).dot(&tb_t);
        let wi = table_a.values.dot(&im).dot(&tb_t);
        let scale = weight / state.norm_sqr();
        ndarray::Zip::from(&mut density).and(&wr).and(&wi).for_each(|d, &r, &i| *d += scale * (r * r + i * i));
    }
    let dist = DistributionGrid2D::from_density(table_a.grid, table_b.grid, density)?;
    let boundary = dist.boundary_density();
    if boundary > BOUNDARY_DENSITY_LIMIT {
        return Err(Error::GridTooSmall { boundary_density: boundary });
    }
    Ok(dist)
}

/// First and second quadrature moments from ladder-operator matrix elements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureMoments {
    pub mean_x: f64,
    pub mean_p: f64,
    pub variance_x: f64,
    pub variance_p: f64,
}

/// `⟨a⟩`, `⟨a²⟩`, `⟨a†a⟩` for a (not necessarily normalized) state.
fn ladder_expectations(state: &ModeState) -> (Complex64, Complex64, f64) {
    let c = state.amplitudes();
    let norm = state.norm_sqr();
    let dim = c.len();
    let mut a1 = Complex64::new(0.0, 0.0);
    let mut a2 = Complex64::new(0.0, 0.0);
    let mut n = 0.0;
    for k in 0..dim {
        let kf = k as f64;
        n += kf * c[k].norm_sqr();
        if k + 1 < dim {
            a1 += c[k].conj() * c[k + 1] * (kf + 1.0).sqrt();
        }
        if k + 2 < dim {
            a2 += c[k].conj() * c[k + 2] * ((kf + 1.0) * (kf + 2.0)).sqrt();
        }
    }
    (a1 / norm, a2 / norm, n / norm)
}

pub fn moments(state: &ModeState) -> QuadratureMoments {
    let (a1, a2, n) = ladder_expectations(state);
    let mean_x = std::f64::consts::SQRT_2 * a1.re;
    let mean_p = std::f64::consts::SQRT_2 * a1.im;
    // ⟨X²⟩ = n + 1/2 + Re⟨a²⟩,  ⟨P²⟩ = n + 1/2 − Re⟨a²⟩
    let variance_x = (n + a2.re) + 0.5 - mean_x * mean_x;
    let variance_p = (n - a2.re) + 0.5 - mean_p * mean_p;
    QuadratureMoments { mean_x, mean_p, variance_x, variance_p }
}

pub fn mean_x(state: &ModeState) -> f64 {
    moments(state).mean_x
}

pub fn mean_p(state: &ModeState) -> f64 {
    moments(state).mean_p
}

pub fn variance_x(state: &ModeState) -> f64 {
    moments(state).variance_x
}

pub fn variance_p(state: &ModeState) -> f64 {
    moments(state).variance_p
}
