//! Sign-binned "spin" measurements `S = sign(X)`.
//!
//! The half-line projectors are represented in the truncated number basis
//! through `W_{mn} = ∫₀^∞ ψ_m ψ_n dx`, so sign statistics and collapse need
//! no spatial grid. By parity, `∫_{−∞}^0 ψ_m ψ_n = (−1)^{m+n} W_{mn}`.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{ModeState, TwoModeSource, TwoModeState};
use crate::gauss::adaptive_panels;
use crate::quadrature::{hermite_functions, DistributionGrid1D, DistributionGrid2D, GridSpec};

/// Outcome probabilities below this cannot be conditioned on.
pub const MIN_OUTCOME_PROBABILITY: f64 = 1e-14;

const PANEL_ORDER: usize = 24;
const PANEL_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Joint sign statistics of two dichotomic outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignCorrelation {
    pub e_value: f64,
    pub p_pp: f64,
    pub p_pm: f64,
    pub p_mp: f64,
    pub p_mm: f64,
}

impl SignCorrelation {
    pub fn from_quadrants(p_pp: f64, p_pm: f64, p_mp: f64, p_mm: f64) -> Self {
        Self { e_value: p_pp + p_mm - p_pm - p_mp, p_pp, p_pm, p_mp, p_mm }
    }

    pub fn total(&self) -> f64 {
        self.p_pp + self.p_pm + self.p_mp + self.p_mm
    }

    /// Mixes correlations with the given weights.
    pub fn weighted(parts: &[(f64, SignCorrelation)]) -> Self {
        let sum = |f: fn(&SignCorrelation) -> f64| parts.iter().map(|(w, c)| w * f(c)).sum::<f64>();
        Self::from_quadrants(sum(|c| c.p_pp), sum(|c| c.p_pm), sum(|c| c.p_mp), sum(|c| c.p_mm))
    }

    /// Draws `shots` joint outcomes from the quadrant probabilities and
    /// returns the empirical statistics.
    pub fn sample<R: Rng + ?Sized>(&self, shots: u64, rng: &mut R) -> Self {
        if shots == 0 {
            return Self::from_quadrants(0.0, 0.0, 0.0, 0.0);
        }
        let probs = [self.p_pp, self.p_pm, self.p_mp, self.p_mm].map(|p| p.max(0.0));
        let total: f64 = probs.iter().sum();
        let mut counts = [0u64; 4];
        let mut left = shots;
        let mut mass_left = total;
        for k in 0..3 {
            if left == 0 || mass_left <= 0.0 {
                break;
            }
            let p = (probs[k] / mass_left).clamp(0.0, 1.0);
            counts[k] = Binomial::new(left, p).expect("valid binomial").sample(rng);
            left -= counts[k];
            mass_left -= probs[k];
        }
        counts[3] = left;
        let n = shots as f64;
        Self::from_quadrants(counts[0] as f64 / n, counts[1] as f64 / n, counts[2] as f64 / n, counts[3] as f64 / n)
    }
}

/// `W_{mn} = ∫₀^∞ ψ_m(x) ψ_n(x) dx` for `m, n < dim`, by adaptive
/// Gauss-Legendre panels on `[0, √(2·dim) + 8]`.
pub fn halfline_overlap(dim: usize) -> Array2<f64> {
    let upper = (2.0 * dim as f64).sqrt() + 8.0;
    let mut w = adaptive_panels(0.0, upper, 1.0, PANEL_ORDER, PANEL_TOL, |xs, ws| {
        let mut psi = Array2::<f64>::zeros((xs.len(), dim));
        for (k, mut row) in psi.axis_iter_mut(Axis(0)).enumerate() {
            hermite_functions(xs[k], row.as_slice_mut().expect("row-major"));
        }
        let weighted = &psi * &Array1::from(ws.to_vec()).insert_axis(Axis(1));
        psi.t().dot(&weighted)
    });
    // symmetrize rounding
    let wt = w.t().to_owned();
    w = (&w + &wt) * 0.5;
    w
}

/// Half-line projectors and the sign operator in the truncated basis.
#[derive(Debug, Clone)]
pub struct SignProjectors {
    plus: Array2<f64>,
    minus: Array2<f64>,
    sign: Array2<f64>,
}

impl SignProjectors {
    pub fn new(dim: usize) -> Self {
        let plus = halfline_overlap(dim);
        let minus =
            Array2::from_shape_fn((dim, dim), |(m, n)| if (m + n) % 2 == 0 { plus[[m, n]] } else { -plus[[m, n]] });
        let sign = &plus - &minus;
        Self { plus, minus, sign }
    }

    pub fn dim(&self) -> usize {
        self.plus.nrows()
    }

    pub fn plus(&self) -> &Array2<f64> {
        &self.plus
    }

    pub fn minus(&self) -> &Array2<f64> {
        &self.minus
    }

    /// `Π₊ − Π₋`.
    pub fn sign_operator(&self) -> &Array2<f64> {
        &self.sign
    }

    pub fn projector(&self, sign: Sign) -> &Array2<f64> {
        match sign {
            Sign::Plus => &self.plus,
            Sign::Minus => &self.minus,
        }
    }
}

/// Shared projectors for `dim`, built once and cached.
pub fn sign_projectors(dim: usize) -> Arc<SignProjectors> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<SignProjectors>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(p) = cache.read().expect("projector cache poisoned").get(&dim) {
        return Arc::clone(p);
    }
    let mut guard = cache.write().expect("projector cache poisoned");
    Arc::clone(guard.entry(dim).or_insert_with(|| Arc::new(SignProjectors::new(dim))))
}

fn split(amps: &Array1<Complex64>) -> (Array1<f64>, Array1<f64>) {
    (amps.mapv(|c| c.re), amps.mapv(|c| c.im))
}

/// `⟨c|M|c⟩` for real symmetric `M`.
fn quadratic_form(m: &Array2<f64>, re: &Array1<f64>, im: &Array1<f64>) -> f64 {
    re.dot(&m.dot(re)) + im.dot(&m.dot(im))
}

/// `(P(S = +1), P(S = −1))`.
pub fn sign_probabilities(state: &ModeState) -> (f64, f64) {
    let proj = sign_projectors(state.dim());
    let (re, im) = split(state.amplitudes());
    let norm = state.norm_sqr();
    (quadratic_form(&proj.plus, &re, &im) / norm, quadratic_form(&proj.minus, &re, &im) / norm)
}

/// `⟨S⟩ = ⟨Π₊ − Π₋⟩`.
pub fn sign_expectation(state: &ModeState) -> f64 {
    let proj = sign_projectors(state.dim());
    let (re, im) = split(state.amplitudes());
    quadratic_form(&proj.sign, &re, &im) / state.norm_sqr()
}

/// Quadrature weights for `∫` over one half-line on a tabulated axis.
///
/// The trapezoid weight of a node at exactly zero is split evenly, and when
/// zero is an interior node the leading Euler-Maclaurin term
/// `∓(h²/12) f'(0)` is folded in with a central difference.
pub fn half_line_weights(grid: &GridSpec, sign: Sign) -> Array1<f64> {
    let h = grid.spacing();
    let mut w = Array1::from(grid.weights());
    let mut zero = None;
    for (i, wi) in w.iter_mut().enumerate() {
        let x = grid.node(i);
        let keep = match sign {
            Sign::Plus => x > 0.0,
            Sign::Minus => x < 0.0,
        };
        if x == 0.0 {
            *wi *= 0.5;
            zero = Some(i);
        } else if !keep {
            *wi = 0.0;
        }
    }
    if let Some(i) = zero.filter(|&i| i > 0 && i + 1 < grid.points) {
        let c = sign.value() * h / 24.0;
        w[i + 1] += c;
        w[i - 1] -= c;
    }
    w
}

/// `⟨S⟩` from a tabulated density, normalized by its integral.
pub fn grid_sign_expectation(dist: &DistributionGrid1D) -> f64 {
    let density = Array1::from(dist.density.clone());
    let plus = half_line_weights(&dist.grid, Sign::Plus).dot(&density);
    let minus = half_line_weights(&dist.grid, Sign::Minus).dot(&density);
    (plus - minus) / (plus + minus)
}

/// Quadrant statistics from a tabulated joint density.
pub fn grid_sign_correlation(dist: &DistributionGrid2D) -> SignCorrelation {
    let q = |sa: Sign, sb: Sign| {
        half_line_weights(&dist.grid_a, sa).dot(&dist.density.dot(&half_line_weights(&dist.grid_b, sb)))
    };
    let c = SignCorrelation::from_quadrants(
        q(Sign::Plus, Sign::Plus),
        q(Sign::Plus, Sign::Minus),
        q(Sign::Minus, Sign::Plus),
        q(Sign::Minus, Sign::Minus),
    );
    let total = c.total();
    SignCorrelation::from_quadrants(c.p_pp / total, c.p_pm / total, c.p_mp / total, c.p_mm / total)
}

fn pure_sign_correlation(state: &TwoModeState) -> SignCorrelation {
    let (dim_a, dim_b) = state.dims();
    let pa = sign_projectors(dim_a);
    let pb = sign_projectors(dim_b);
    let amps = state.amplitudes();
    let re = amps.mapv(|c| c.re);
    let im = amps.mapv(|c| c.im);
    let norm = state.norm_sqr();
    let q = |sa: Sign, sb: Sign| {
        let ma = pa.projector(sa);
        let mb = pb.projector(sb);
        let fr = ma.dot(&re).dot(mb);
        let fi = ma.dot(&im).dot(mb);
        ((&re * &fr).sum() + (&im * &fi).sum()) / norm
    };
    SignCorrelation::from_quadrants(
        q(Sign::Plus, Sign::Plus),
        q(Sign::Plus, Sign::Minus),
        q(Sign::Minus, Sign::Plus),
        q(Sign::Minus, Sign::Minus),
    )
}

/// `⟨S_A S_B⟩` and quadrant probabilities via `Π_± ⊗ Π_±`; ensembles are
/// weight-averaged.
pub fn joint_sign_correlation(source: &impl TwoModeSource) -> SignCorrelation {
    let parts: Vec<(f64, SignCorrelation)> =
        source.weighted_states().into_iter().map(|(w, s)| (w, pure_sign_correlation(s))).collect();
    SignCorrelation::weighted(&parts)
}

/// Lüders update on one mode: returns `⟨Π_s⟩` and `Π_s ψ / ‖Π_s ψ‖`.
pub fn project_sign(state: &TwoModeState, mode: Mode, sign: Sign) -> Result<(f64, TwoModeState)> {
    let (dim_a, dim_b) = state.dims();
    let amps = state.amplitudes();
    let projected = match mode {
        Mode::A => {
            let proj = sign_projectors(dim_a);
            let p = proj.projector(sign);
            let re = p.dot(&amps.mapv(|c| c.re));
            let im = p.dot(&amps.mapv(|c| c.im));
            ndarray::Zip::from(&re).and(&im).map_collect(|&r, &i| Complex64::new(r, i))
        }
        Mode::B => {
            let proj = sign_projectors(dim_b);
            let p = proj.projector(sign);
            let re = amps.mapv(|c| c.re).dot(p);
            let im = amps.mapv(|c| c.im).dot(p);
            ndarray::Zip::from(&re).and(&im).map_collect(|&r, &i| Complex64::new(r, i))
        }
    };
    let probability = amps.iter().zip(projected.iter()).map(|(a, b)| (a.conj() * b).re).sum::<f64>() / state.norm_sqr();
    if !(probability >= MIN_OUTCOME_PROBABILITY) {
        return Err(Error::ZeroProbability(probability));
    }
    let mut post = TwoModeState::from_amplitudes(projected)?;
    post.normalize();
    Ok((probability, post))
}

/// Single-mode version of [`project_sign`].
pub fn project_sign_mode(state: &ModeState, sign: Sign) -> Result<(f64, ModeState)> {
    let proj = sign_projectors(state.dim());
    let p = proj.projector(sign);
    let (re, im) = split(state.amplitudes());
    let pr = p.dot(&re);
    let pi = p.dot(&im);
    let probability = (re.dot(&pr) + im.dot(&pi)) / state.norm_sqr();
    if !(probability >= MIN_OUTCOME_PROBABILITY) {
        return Err(Error::ZeroProbability(probability));
    }
    let amps = pr.iter().zip(pi.iter()).map(|(&r, &i)| Complex64::new(r, i)).collect();
    Ok((probability, ModeState::from_amplitudes(amps)?.normalized()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve_two_mode, EvolutionSchedule, RationalPhase};
    use crate::fock::recommended_dim;
    use crate::quadrature::{dist_joint, dist_x};

    fn real(a: f64) -> Complex64 {
        Complex64::new(a, 0.0)
    }

    fn erfc(x: f64) -> f64 {
        libm::erfc(x)
    }

    /// Closed form from the oscillator equation:
    /// `2(m − n) W_{mn} = ψ_n(0)ψ_m'(0) − ψ_m(0)ψ_n'(0)`.
    fn wronskian_overlap(m: usize, n: usize) -> f64 {
        let dim = m.max(n) + 2;
        let mut psi = vec![0.0; dim];
        hermite_functions(0.0, &mut psi);
        let d = |k: usize| {
            let down = if k > 0 { (k as f64 / 2.0).sqrt() * psi[k - 1] } else { 0.0 };
            down - ((k as f64 + 1.0) / 2.0).sqrt() * psi[k + 1]
        };
        (psi[n] * d(m) - psi[m] * d(n)) / (2.0 * (m as f64 - n as f64))
    }

    #[test]
    fn overlap_matches_closed_forms() {
        let dim = 70;
        let w = halfline_overlap(dim);
        assert!((w[[0, 0]] - 0.5).abs() < 1e-14);
        assert!((w[[0, 1]] - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
        for m in 0..dim {
            for n in 0..dim {
                let expected = if (m + n) % 2 == 0 {
                    if m == n {
                        0.5
                    } else {
                        0.0
                    }
                } else {
                    wronskian_overlap(m, n)
                };
                assert!((w[[m, n]] - expected).abs() < 1e-10, "({m},{n}): {} vs {expected}", w[[m, n]]);
            }
        }
    }

    #[test]
    fn projectors_are_complete() {
        let p = sign_projectors(59);
        let sum = p.plus() + p.minus();
        for ((m, n), v) in sum.indexed_iter() {
            let expected = if m == n { 1.0 } else { 0.0 };
            assert!((v - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn coherent_sign_expectation_tail() {
        let s = ModeState::coherent(real(3.0), recommended_dim(3.0)).unwrap();
        // X ~ Normal(3√2, 1/2), so P(X < 0) = Φ(−6) = erfc(6/√2)/2
        let expected = 1.0 - erfc(6.0 / std::f64::consts::SQRT_2);
        assert!((sign_expectation(&s) - expected).abs() < 1e-12);
        assert!((1.0 - expected - 1.97e-9).abs() < 1e-11);
    }

    #[test]
    fn symmetric_states_have_zero_sign() {
        assert!(sign_expectation(&ModeState::vacuum(20).unwrap()).abs() < 1e-12);
        let cat = ModeState::cat_state(2.0, recommended_dim(2.0)).unwrap();
        assert!(sign_expectation(&cat).abs() < (-8.0f64).exp());
        let (p, m) = sign_probabilities(&cat);
        assert!((p + m - 1.0).abs() < 1e-10);
    }

    #[test]
    fn grid_and_projector_signs_agree() {
        let s =
            ModeState::superposition(&[(real(1.0), real(1.2)), (real(-0.6), Complex64::new(-0.8, 0.4))], 40).unwrap();
        let grid = GridSpec::symmetric(9.0, 801).unwrap();
        let g = grid_sign_expectation(&dist_x(&s, &grid).unwrap());
        assert!((g - sign_expectation(&s)).abs() < 1e-7);
    }

    #[test]
    fn bell_state_is_anticorrelated() {
        let dim = recommended_dim(3.0);
        let bell = TwoModeState::bell_state(3.0, 3.0, dim, dim).unwrap();
        let c = joint_sign_correlation(&bell);
        assert!((c.e_value + 1.0).abs() < 1e-8);
        assert!((c.total() - 1.0).abs() < 1e-8);
        let rotated = evolve_two_mode(&bell, EvolutionSchedule::a_only(RationalPhase::quarter_pi(1)));
        let c = joint_sign_correlation(&rotated);
        assert!((c.e_value + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
        let grid = GridSpec::default_for(3.0);
        let from_grid = grid_sign_correlation(&dist_joint(&rotated, &grid, &grid).unwrap());
        assert!((from_grid.e_value - c.e_value).abs() < 1e-7);
    }

    #[test]
    fn product_state_correlation() {
        let dim = recommended_dim(3.0);
        let a = ModeState::coherent(real(3.0), dim).unwrap();
        let b = ModeState::coherent(real(2.5), dim).unwrap();
        let c = joint_sign_correlation(&TwoModeState::tensor(&a, &b));
        assert!((c.e_value - sign_expectation(&a) * sign_expectation(&b)).abs() < 1e-12);
        assert!(c.e_value > 1.0 - 1e-6);
    }

    #[test]
    fn collapse_on_bell_state() {
        let dim = recommended_dim(3.0);
        let bell = TwoModeState::bell_state(3.0, 3.0, dim, dim).unwrap();
        let (p_minus, post) = project_sign(&bell, Mode::B, Sign::Minus).unwrap();
        let (p_plus, _) = project_sign(&bell, Mode::B, Sign::Plus).unwrap();
        assert!((p_minus + p_plus - 1.0).abs() < 1e-10);
        let c = joint_sign_correlation(&post);
        // B is now on the −β hill, A on +α
        assert!((c.p_pm - 1.0).abs() < 1e-6);
        // The truncated projector is idempotent only up to the part of the
        // cut wavefunction that falls outside the basis: the repeated outcome
        // is certain to 1e-9, the state moves by a few 1e-6 in norm.
        let (p_again, twice) = project_sign(&post, Mode::B, Sign::Minus).unwrap();
        assert!(1.0 - p_again < 1e-9);
        let diff: f64 = post.amplitudes().iter().zip(twice.amplitudes().iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
        assert!(diff.sqrt() <= 1e-5, "idempotence defect {}", diff.sqrt());
        assert!(1.0 - post.fidelity(&twice).unwrap() < 1e-9);
    }

    #[test]
    fn vanishing_outcome_is_rejected() {
        let s = ModeState::coherent(real(3.0), recommended_dim(3.0)).unwrap();
        let tiny = project_sign_mode(&s, Sign::Minus);
        assert!(tiny.is_ok());
        let v = TwoModeState::tensor(&s, &s);
        let dim = v.dims().0;
        let zero = TwoModeState::from_amplitudes(Array2::from_elem((dim, dim), real(0.0))).unwrap();
        assert!(project_sign(&zero, Mode::A, Sign::Plus).is_err());
    }

    #[test]
    fn sampling_is_seeded() {
        use rand::SeedableRng;
        let c = SignCorrelation::from_quadrants(0.1, 0.4, 0.4, 0.1);
        let mut r1 = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut r2 = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let a = c.sample(100_000, &mut r1);
        assert_eq!(a, c.sample(100_000, &mut r2));
        assert!((a.total() - 1.0).abs() < 1e-12);
        assert!((a.e_value - c.e_value).abs() < 0.02);
    }
}
