//! Truncated number-basis states for one and two bosonic modes.
//!
//! Every constructor checks that the last five number states of each mode
//! carry less than [`TAIL_TOLERANCE`] probability, so truncation error stays
//! far below the tolerances used downstream.

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Maximum probability allowed in the top five number states.
pub const TAIL_TOLERANCE: f64 = 1e-12;

/// Number of top basis states inspected by the tail check.
const TAIL_WINDOW: usize = 5;

const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
const C_ONE: Complex64 = Complex64::new(1.0, 0.0);
const C_I: Complex64 = Complex64::new(0.0, 1.0);

/// Truncation size for coherent amplitudes up to `alpha_max`:
/// `ceil(|α|² + 10|α| + 20)`.
pub fn recommended_dim(alpha_max: f64) -> usize {
    let a = alpha_max.abs();
    (a * a + 10.0 * a + 20.0).ceil() as usize
}

fn tail_mass(probs: impl DoubleEndedIterator<Item = f64> + ExactSizeIterator) -> f64 {
    probs.rev().take(TAIL_WINDOW).sum()
}

/// Unnormalized-free coherent-state coefficients `e^{-|α|²/2} αⁿ/√n!`,
/// accumulated in the log domain.
fn coherent_coefficients(alpha: Complex64, dim: usize) -> Vec<Complex64> {
    let r = alpha.norm();
    let mut amps = vec![C_ZERO; dim];
    if dim == 0 {
        return amps;
    }
    if r == 0.0 {
        amps[0] = C_ONE;
        return amps;
    }
    let theta = alpha.arg();
    let ln_r = r.ln();
    let mut ln_fact = 0.0;
    for (n, c) in amps.iter_mut().enumerate() {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        let ln_mag = -0.5 * r * r + n as f64 * ln_r - 0.5 * ln_fact;
        *c = Complex64::from_polar(ln_mag.exp(), n as f64 * theta);
    }
    amps
}

/// Pure state of one truncated mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeState {
    amps: Array1<Complex64>,
}

impl ModeState {
    /// Wraps raw amplitudes without normalizing or tail-checking them.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidInput("state dimension must be positive".into()));
        }
        Ok(Self { amps: Array1::from(amps) })
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        Self::coherent(C_ZERO, dim)
    }

    /// Coherent state `|α⟩`.
    pub fn coherent(alpha: Complex64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("state dimension must be positive".into()));
        }
        let amps = coherent_coefficients(alpha, dim);
        let kept: f64 = amps.iter().take(dim.saturating_sub(TAIL_WINDOW)).map(|c| c.norm_sqr()).sum();
        let tail = (1.0 - kept).max(0.0);
        if tail >= TAIL_TOLERANCE {
            return Err(Error::TruncationTooSmall { dim, tail_mass: tail });
        }
        let mut state = Self { amps: Array1::from(amps) };
        state.normalize();
        Ok(state)
    }

    /// The cat state `(|α⟩ + i|−α⟩)/√2`, renormalized exactly.
    pub fn cat_state(alpha: f64, dim: usize) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidInput(format!("cat amplitude must be positive, got {alpha}")));
        }
        Self::superposition(&[(C_ONE, Complex64::new(alpha, 0.0)), (C_I, Complex64::new(-alpha, 0.0))], dim)
    }

    /// Normalized `Σ_k c_k |γ_k⟩`.
    pub fn superposition(terms: &[(Complex64, Complex64)], dim: usize) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidInput("superposition needs at least one term".into()));
        }
        let mut amps = Array1::from_elem(dim, C_ZERO);
        for &(coef, gamma) in terms {
            let c = Self::coherent(gamma, dim)?;
            amps.scaled_add(coef, &c.amps);
        }
        let mut state = Self { amps };
        if state.norm_sqr() < 1e-300 {
            return Err(Error::InvalidInput("superposition has zero norm".into()));
        }
        state.normalize();
        Ok(state)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &Array1<Complex64> {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.amps.mapv_inplace(|c| c / n);
        }
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &ModeState) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(self.amps.iter().zip(other.amps.iter()).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &ModeState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn number_distribution(&self) -> Vec<f64> {
        self.amps.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.amps.iter().enumerate().map(|(n, c)| n as f64 * c.norm_sqr()).sum::<f64>() / self.norm_sqr()
    }

    /// Probability in the top five number states.
    pub fn tail_mass(&self) -> f64 {
        tail_mass(self.number_distribution().into_iter()) / self.norm_sqr()
    }

    pub(crate) fn map_amplitudes(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        let amps = self.amps.iter().enumerate().map(|(n, &c)| f(n, c)).collect::<Vec<_>>();
        Self { amps: Array1::from(amps) }
    }
}

/// Pure state of two truncated modes, `amps[[m, n]]` multiplying `|m⟩_A|n⟩_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    amps: Array2<Complex64>,
}

impl TwoModeState {
    pub fn from_amplitudes(amps: Array2<Complex64>) -> Result<Self> {
        if amps.nrows() == 0 || amps.ncols() == 0 {
            return Err(Error::InvalidInput("state dimensions must be positive".into()));
        }
        Ok(Self { amps })
    }

    pub fn tensor(a: &ModeState, b: &ModeState) -> Self {
        let amps = Array2::from_shape_fn((a.dim(), b.dim()), |(m, n)| a.amps[m] * b.amps[n]);
        Self { amps }
    }

    /// Normalized `Σ_k c_k |α_k⟩|β_k⟩`.
    pub fn product_superposition(
        terms: &[(Complex64, Complex64, Complex64)],
        dim_a: usize,
        dim_b: usize,
    ) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidInput("superposition needs at least one term".into()));
        }
        let mut amps = Array2::from_elem((dim_a, dim_b), C_ZERO);
        for &(coef, alpha, beta) in terms {
            let a = ModeState::coherent(alpha, dim_a)?;
            let b = ModeState::coherent(beta, dim_b)?;
            amps.scaled_add(coef, &Self::tensor(&a, &b).amps);
        }
        let mut state = Self { amps };
        if state.norm_sqr() < 1e-300 {
            return Err(Error::InvalidInput("superposition has zero norm".into()));
        }
        state.normalize();
        Ok(state)
    }

    /// The entangled state `N(|α⟩|−β⟩ − |−α⟩|β⟩)` with
    /// `N = [2(1 − e^{−2|α|²−2|β|²})]^{−1/2}`.
    pub fn bell_state(alpha: f64, beta: f64, dim_a: usize, dim_b: usize) -> Result<Self> {
        let mut state = Self::bell_state_unnormalized(alpha, beta, dim_a, dim_b)?;
        state.scale(bell_normalization(alpha, beta));
        Ok(state)
    }

    /// `|α⟩|−β⟩ − |−α⟩|β⟩` without the prefactor.
    pub fn bell_state_unnormalized(alpha: f64, beta: f64, dim_a: usize, dim_b: usize) -> Result<Self> {
        if alpha == 0.0 && beta == 0.0 {
            return Err(Error::InvalidInput("bell state needs a nonzero amplitude".into()));
        }
        if alpha != beta {
            log::warn!("bell state built with unequal amplitudes alpha={alpha}, beta={beta}");
        }
        let a = ModeState::coherent(Complex64::new(alpha, 0.0), dim_a)?;
        let b = ModeState::coherent(Complex64::new(beta, 0.0), dim_b)?;
        // |−γ⟩ has coefficients (−1)ⁿ cₙ, so only odd m+n survive.
        let amps = Array2::from_shape_fn((dim_a, dim_b), |(m, n)| {
            let sign = match (m % 2, n % 2) {
                (0, 1) => -2.0,
                (1, 0) => 2.0,
                _ => 0.0,
            };
            a.amps[m] * b.amps[n] * sign
        });
        Ok(Self { amps })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.amps.dim()
    }

    pub fn amplitudes(&self) -> &Array2<Complex64> {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.scale(1.0 / n);
        }
    }

    fn scale(&mut self, factor: f64) {
        self.amps.mapv_inplace(|c| c * factor);
    }

    pub fn inner(&self, other: &TwoModeState) -> Result<Complex64> {
        if self.dims() != other.dims() {
            let (a, b) = self.dims();
            let (c, d) = other.dims();
            let (expected, found) = if a != c { (a, c) } else { (b, d) };
            return Err(Error::DimensionMismatch { expected, found });
        }
        Ok(self.amps.iter().zip(other.amps.iter()).map(|(x, y)| x.conj() * y).sum())
    }

    pub fn fidelity(&self, other: &TwoModeState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Photon-number distribution of mode A.
    pub fn marginal_a(&self) -> Vec<f64> {
        self.amps.map(|c| c.norm_sqr()).sum_axis(Axis(1)).to_vec()
    }

    /// Photon-number distribution of mode B.
    pub fn marginal_b(&self) -> Vec<f64> {
        self.amps.map(|c| c.norm_sqr()).sum_axis(Axis(0)).to_vec()
    }

    /// Tail masses of the two single-mode marginals.
    pub fn tail_masses(&self) -> (f64, f64) {
        let total = self.norm_sqr();
        (tail_mass(self.marginal_a().into_iter()) / total, tail_mass(self.marginal_b().into_iter()) / total)
    }

    /// Exchanges the roles of modes A and B.
    pub fn swap_modes(&self) -> Self {
        Self { amps: self.amps.t().to_owned() }
    }

    pub(crate) fn map_amplitudes(&self, f: impl Fn(usize, usize, Complex64) -> Complex64) -> Self {
        let amps = Array2::from_shape_fn(self.amps.dim(), |(m, n)| f(m, n, self.amps[[m, n]]));
        Self { amps }
    }
}

/// `N = (1/√2)(1 − exp(−2|α|² − 2|β|²))^{−1/2}`.
pub fn bell_normalization(alpha: f64, beta: f64) -> f64 {
    let e = (-2.0 * alpha * alpha - 2.0 * beta * beta).exp();
    std::f64::consts::FRAC_1_SQRT_2 / (1.0 - e).sqrt()
}

/// Convex mixture of pure two-mode states.
#[derive(Debug, Clone)]
pub struct WeightedEnsemble {
    components: Vec<(f64, TwoModeState)>,
}

impl WeightedEnsemble {
    pub fn new(components: Vec<(f64, TwoModeState)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput("ensemble needs at least one component".into()));
        }
        if components.iter().any(|(w, _)| !(*w >= 0.0)) {
            return Err(Error::InvalidInput("ensemble weights must be nonnegative".into()));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("ensemble weights sum to {total}, not 1")));
        }
        let dims = components[0].1.dims();
        if let Some((_, s)) = components.iter().find(|(_, s)| s.dims() != dims) {
            return Err(Error::DimensionMismatch { expected: dims.0 * dims.1, found: s.dims().0 * s.dims().1 });
        }
        Ok(Self { components })
    }

    pub fn pure(state: TwoModeState) -> Self {
        Self { components: vec![(1.0, state)] }
    }

    /// The 50/50 mixture of `|α⟩|−β⟩` and `|−α⟩|β⟩`.
    pub fn mixture(alpha: f64, beta: f64, dim_a: usize, dim_b: usize) -> Result<Self> {
        if alpha != beta {
            log::warn!("mixture built with unequal amplitudes alpha={alpha}, beta={beta}");
        }
        let product = |a: f64, b: f64| -> Result<TwoModeState> {
            let ma = ModeState::coherent(Complex64::new(a, 0.0), dim_a)?;
            let mb = ModeState::coherent(Complex64::new(b, 0.0), dim_b)?;
            Ok(TwoModeState::tensor(&ma, &mb))
        };
        Self::new(vec![(0.5, product(alpha, -beta)?), (0.5, product(-alpha, beta)?)])
    }

    pub fn components(&self) -> &[(f64, TwoModeState)] {
        &self.components
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|(w, _)| *w).collect()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.components[0].1.dims()
    }

    pub fn map_states(&self, f: impl Fn(&TwoModeState) -> TwoModeState) -> Self {
        Self { components: self.components.iter().map(|(w, s)| (*w, f(s))).collect() }
    }
}

/// Anything that can be read out as a weighted list of pure two-mode states.
pub trait TwoModeSource: Sync {
    fn weighted_states(&self) -> Vec<(f64, &TwoModeState)>;
}

impl TwoModeSource for TwoModeState {
    fn weighted_states(&self) -> Vec<(f64, &TwoModeState)> {
        vec![(1.0, self)]
    }
}

impl TwoModeSource for WeightedEnsemble {
    fn weighted_states(&self) -> Vec<(f64, &TwoModeState)> {
        self.components.iter().map(|(w, s)| (*w, s)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn vacuum_is_first_basis_state() {
        let v = ModeState::coherent(c(0.0), 8).unwrap();
        assert_eq!(v.amplitudes()[0], C_ONE);
        assert!(v.amplitudes().iter().skip(1).all(|a| *a == C_ZERO));
    }

    #[test]
    fn coherent_mean_photon_number() {
        let s = ModeState::coherent(c(2.0), 40).unwrap();
        assert!((s.mean_photon_number() - 4.0).abs() < 1e-10);
    }

    #[test]
    fn overlap_of_opposite_coherent_states() {
        let dim = recommended_dim(3.0);
        let a = ModeState::coherent(c(3.0), dim).unwrap();
        let b = ModeState::coherent(c(-3.0), dim).unwrap();
        let closed = (-18.0f64).exp();
        // direct summation of e^{-9}·9ⁿ(−1)ⁿ/n!
        let mut direct = 0.0;
        let mut term = (-9.0f64).exp();
        for n in 0..200 {
            if n > 0 {
                term *= 9.0 / n as f64;
            }
            direct += if n % 2 == 0 { term } else { -term };
        }
        assert!((direct - closed).abs() < 1e-12);
        assert!((a.inner(&b).unwrap().norm() - closed).abs() < 1e-12);
        assert!((closed - 1.523e-8).abs() < 1e-11);
    }

    #[test]
    fn undersized_truncation_is_rejected() {
        let err = ModeState::coherent(c(3.0), 15).unwrap_err();
        assert!(matches!(err, Error::TruncationTooSmall { dim: 15, .. }));
        assert!(ModeState::cat_state(4.0, 30).is_err());
        assert!(TwoModeState::bell_state(3.0, 3.0, 59, 20).is_err());
    }

    #[test]
    fn large_dimension_does_not_overflow() {
        let s = ModeState::coherent(c(12.0), 400).unwrap();
        assert!(s.amplitudes().iter().all(|a| a.re.is_finite() && a.im.is_finite()));
        assert!((s.mean_photon_number() - 144.0).abs() < 1e-8);
    }

    #[test]
    fn cat_state_populates_both_parities() {
        let dim = 40;
        let cat = ModeState::cat_state(2.0, dim).unwrap();
        assert!((cat.norm_sqr() - 1.0).abs() < 1e-10);
        let coh = ModeState::coherent(c(2.0), dim).unwrap();
        for (p_cat, p_coh) in cat.number_distribution().iter().zip(coh.number_distribution()) {
            assert!((p_cat - p_coh).abs() < 1e-14);
        }
    }

    #[test]
    fn bell_state_normalization_formula() {
        let dim = recommended_dim(3.0);
        let raw = TwoModeState::bell_state_unnormalized(3.0, 3.0, dim, dim).unwrap();
        let n = bell_normalization(3.0, 3.0);
        assert!((raw.norm_sqr().sqrt() - 1.0 / n).abs() < 1e-10);
        let bell = TwoModeState::bell_state(3.0, 3.0, dim, dim).unwrap();
        assert!((bell.norm_sqr() - 1.0).abs() < 1e-10);
        // a smaller amplitude where the exponential correction is visible
        let raw = TwoModeState::bell_state_unnormalized(0.4, 0.4, 30, 30).unwrap();
        assert!((raw.norm_sqr().sqrt() - 1.0 / bell_normalization(0.4, 0.4)).abs() < 1e-10);
    }

    #[test]
    fn bell_state_swap_antisymmetry() {
        let s = TwoModeState::bell_state(2.0, 2.0, 40, 40).unwrap();
        let swapped = s.swap_modes();
        let minus = s.map_amplitudes(|_, _, a| -a);
        assert!(swapped.amplitudes().iter().zip(minus.amplitudes().iter()).all(|(x, y)| (x - y).norm() < 1e-15));
    }

    #[test]
    fn bell_marginal_matches_reduced_state() {
        let (alpha, beta) = (3.0, 3.0);
        let dim = recommended_dim(3.0);
        let bell = TwoModeState::bell_state(alpha, beta, dim, dim).unwrap();
        let coh = ModeState::coherent(c(alpha), dim).unwrap().number_distribution();
        let eb = (-2.0 * beta * beta).exp();
        let denom = 1.0 - (-2.0 * alpha * alpha - 2.0 * beta * beta).exp();
        let mut max_vs_mixture: f64 = 0.0;
        for (m, p) in bell.marginal_a().iter().enumerate() {
            // reduced state: even m pairs with odd n in B, odd m with even n
            let factor = if m % 2 == 0 { 1.0 - eb } else { 1.0 + eb };
            let expected = coh[m] * factor / denom;
            assert!((p - expected).abs() < 1e-14, "m={m}");
            max_vs_mixture = max_vs_mixture.max((p - coh[m]).abs());
        }
        assert!(max_vs_mixture < 3e-9);
    }

    #[test]
    fn mixture_has_equal_normalized_components() {
        let mix = WeightedEnsemble::mixture(3.0, 3.0, 59, 59).unwrap();
        assert_eq!(mix.weights(), vec![0.5, 0.5]);
        for (_, s) in mix.components() {
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ensemble_rejects_bad_weights() {
        let s = TwoModeState::tensor(&ModeState::vacuum(8).unwrap(), &ModeState::vacuum(8).unwrap());
        assert!(WeightedEnsemble::new(vec![(0.7, s.clone()), (0.4, s.clone())]).is_err());
        assert!(WeightedEnsemble::new(vec![(-0.5, s.clone()), (1.5, s)]).is_err());
    }

    #[test]
    fn tensor_and_inner_basics() {
        let v = ModeState::vacuum(8).unwrap();
        let t = TwoModeState::tensor(&v, &v);
        assert_eq!(t.amplitudes()[[0, 0]], C_ONE);
        let a = ModeState::coherent(c(2.0), 40).unwrap();
        assert!((a.inner(&a).unwrap() - C_ONE).norm() < 1e-10);
        let short = ModeState::vacuum(9).unwrap();
        assert!(matches!(v.inner(&short), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn sizing_rule() {
        assert_eq!(recommended_dim(3.0), 59);
        assert_eq!(recommended_dim(0.0), 20);
        for a in [0.5, 1.0, 2.0, 3.0, 3.5, 4.0] {
            let s = ModeState::coherent(c(a), recommended_dim(a)).unwrap();
            assert!(s.tail_mass() < TAIL_TOLERANCE);
        }
    }
}
