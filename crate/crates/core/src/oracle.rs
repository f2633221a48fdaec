//! Closed-form reference results for finite superpositions of coherent
//! states, independent of the number-basis engine.
//!
//! Everything follows from `⟨x|γ⟩ = π^{−1/4} exp(−x²/2 + √2γx − γ²/2 − |γ|²/2)`
//! and `⟨γ|δ⟩ = exp(−|γ|²/2 − |δ|²/2 + γ*δ)`. Half-line integrals use
//! `erfc` from `libm`, a port of the FreeBSD/musl implementation with
//! sub-ulp error.

use num_complex::Complex64;

use crate::dynamics::RationalPhase;
use crate::error::{Error, Result};
use crate::measurement::SignCorrelation;
use crate::quadrature::{DistributionGrid1D, DistributionGrid2D, GridSpec, QuadratureMoments};

pub const MAX_TERMS: usize = 8;

fn quarter_root_pi_inv() -> f64 {
    std::f64::consts::PI.powf(-0.25)
}

/// `⟨x|γ⟩`.
pub fn coherent_wavefunction(gamma: Complex64, x: f64) -> Complex64 {
    let sqrt2 = std::f64::consts::SQRT_2;
    let exponent = -0.5 * x * x + sqrt2 * gamma * x - 0.5 * gamma * gamma - 0.5 * gamma.norm_sqr();
    exponent.exp() * quarter_root_pi_inv()
}

/// `⟨γ|δ⟩`.
pub fn coherent_overlap(gamma: Complex64, delta: Complex64) -> Complex64 {
    (-0.5 * gamma.norm_sqr() - 0.5 * delta.norm_sqr() + gamma.conj() * delta).exp()
}

/// `⟨γ|Π₊|δ⟩` for real `γ, δ`.
fn halfline_element(gamma: f64, delta: f64, sign: f64) -> f64 {
    let mu = (gamma + delta) / std::f64::consts::SQRT_2;
    let gauss = (-0.5 * (gamma - delta) * (gamma - delta)).exp();
    gauss * 0.5 * libm::erfc(-sign * mu)
}

fn real_amplitude(gamma: Complex64) -> Result<f64> {
    if gamma.im != 0.0 {
        return Err(Error::InvalidInput(format!("sign statistics need real amplitudes, got {gamma}")));
    }
    Ok(gamma.re)
}

/// Odd-number phase of `e^{−iΩt n⁴}` when it depends on parity only
/// (`q` divides 8).
fn parity_phase(tau: RationalPhase) -> Result<Complex64> {
    if 8 % tau.denominator() != 0 {
        return Err(Error::InvalidPhase(format!("closed-form evolution needs q | 8, got {tau}")));
    }
    Ok(Complex64::from_polar(1.0, -tau.radians()))
}

/// `e^{−iΩt n⁴}|γ⟩ = ½(1+ω)|γ⟩ + ½(1−ω)|−γ⟩` with `ω` the odd phase.
fn parity_split(tau: RationalPhase) -> Result<(Complex64, Complex64)> {
    let w = parity_phase(tau)?;
    let one = Complex64::new(1.0, 0.0);
    Ok(((one + w) * 0.5, (one - w) * 0.5))
}

/// `Σ_k c_k |γ_k⟩` on one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentSuperposition {
    terms: Vec<(Complex64, Complex64)>,
}

impl CoherentSuperposition {
    pub fn new(terms: Vec<(Complex64, Complex64)>) -> Result<Self> {
        if terms.is_empty() || terms.len() > MAX_TERMS {
            return Err(Error::InvalidInput(format!("superposition needs 1..={MAX_TERMS} terms, got {}", terms.len())));
        }
        let s = Self { terms };
        let n = s.norm_sqr();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidInput(format!("superposition norm {n} is not positive")));
        }
        Ok(s)
    }

    pub fn coherent(alpha: Complex64) -> Self {
        Self { terms: vec![(Complex64::new(1.0, 0.0), alpha)] }
    }

    /// `(|α⟩ + i|−α⟩)/√2`.
    pub fn cat(alpha: f64) -> Self {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            terms: vec![
                (Complex64::new(c, 0.0), Complex64::new(alpha, 0.0)),
                (Complex64::new(0.0, c), Complex64::new(-alpha, 0.0)),
            ],
        }
    }

    pub fn terms(&self) -> &[(Complex64, Complex64)] {
        &self.terms
    }

    pub fn norm_sqr(&self) -> f64 {
        let mut s = Complex64::new(0.0, 0.0);
        for &(cj, gj) in &self.terms {
            for &(ck, gk) in &self.terms {
                s += cj.conj() * ck * coherent_overlap(gj, gk);
            }
        }
        s.re
    }

    pub fn wavefunction(&self, x: f64) -> Complex64 {
        let psi: Complex64 = self.terms.iter().map(|&(c, g)| c * coherent_wavefunction(g, x)).sum();
        psi / self.norm_sqr().sqrt()
    }

    /// `e^{−iπ/2 n̂}` maps `|γ⟩ → |−iγ⟩`, turning `P` into `X`.
    pub fn quarter_rotated(&self) -> Self {
        let rot = Complex64::new(0.0, -1.0);
        Self { terms: self.terms.iter().map(|&(c, g)| (c, rot * g)).collect() }
    }

    /// Closed-form evolution by `Ωt = (p/q)π` for `q | 8`.
    pub fn evolved(&self, tau: RationalPhase) -> Result<Self> {
        let (same, flip) = parity_split(tau)?;
        let mut out: Vec<(Complex64, Complex64)> = Vec::new();
        let mut push = |c: Complex64, g: Complex64| match out.iter_mut().find(|(_, h)| *h == g) {
            Some(entry) => entry.0 += c,
            None => out.push((c, g)),
        };
        for &(c, g) in &self.terms {
            push(c * same, g);
            push(c * flip, -g);
        }
        Self::new(out)
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for &(cj, gj) in &self.terms {
            for &(ck, gk) in &other.terms {
                s += cj.conj() * ck * coherent_overlap(gj, gk);
            }
        }
        s / (self.norm_sqr() * other.norm_sqr()).sqrt()
    }

    fn sum_pairs(&self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for &(cj, gj) in &self.terms {
            for &(ck, gk) in &self.terms {
                s += cj.conj() * ck * coherent_overlap(gj, gk) * f(gj, gk);
            }
        }
        s / self.norm_sqr()
    }
}

pub fn oracle_moments(cs: &CoherentSuperposition) -> QuadratureMoments {
    let a1 = cs.sum_pairs(|_, gk| gk);
    let a2 = cs.sum_pairs(|_, gk| gk * gk);
    let n = cs.sum_pairs(|gj, gk| gj.conj() * gk).re;
    let mean_x = std::f64::consts::SQRT_2 * a1.re;
    let mean_p = std::f64::consts::SQRT_2 * a1.im;
    QuadratureMoments {
        mean_x,
        mean_p,
        variance_x: n + a2.re + 0.5 - mean_x * mean_x,
        variance_p: n - a2.re + 0.5 - mean_p * mean_p,
    }
}

pub fn oracle_dist_x(cs: &CoherentSuperposition, grid: &GridSpec) -> Result<DistributionGrid1D> {
    let density = grid.nodes().iter().map(|&x| cs.wavefunction(x).norm_sqr()).collect();
    DistributionGrid1D::from_density(*grid, density)
}

pub fn oracle_dist_p(cs: &CoherentSuperposition, grid: &GridSpec) -> Result<DistributionGrid1D> {
    oracle_dist_x(&cs.quarter_rotated(), grid)
}

/// `Δ²P = 1/2 − 2α²e^{−4α²}` for the cat `(|α⟩ + i|−α⟩)/√2`.
pub fn oracle_variance_p(alpha: f64) -> f64 {
    0.5 - cat_variance_deficit(alpha)
}

/// `1/2 − Δ²P = 2α²e^{−4α²}`, kept separate so that it stays resolvable
/// when it falls below the rounding of `1/2`.
pub fn cat_variance_deficit(alpha: f64) -> f64 {
    2.0 * alpha * alpha * (-4.0 * alpha * alpha).exp()
}

/// `⟨S⟩` for real amplitudes.
pub fn oracle_sign_expectation(cs: &CoherentSuperposition) -> Result<f64> {
    let mut s = Complex64::new(0.0, 0.0);
    for &(cj, gj) in &cs.terms {
        for &(ck, gk) in &cs.terms {
            let (a, b) = (real_amplitude(gj)?, real_amplitude(gk)?);
            s += cj.conj() * ck * (halfline_element(a, b, 1.0) - halfline_element(a, b, -1.0));
        }
    }
    Ok(s.re / cs.norm_sqr())
}

/// `Σ_k c_k |α_k⟩|β_k⟩` on two modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSuperposition {
    terms: Vec<(Complex64, Complex64, Complex64)>,
}

impl ProductSuperposition {
    pub fn new(terms: Vec<(Complex64, Complex64, Complex64)>) -> Result<Self> {
        if terms.is_empty() || terms.len() > MAX_TERMS {
            return Err(Error::InvalidInput(format!("superposition needs 1..={MAX_TERMS} terms, got {}", terms.len())));
        }
        let s = Self { terms };
        let n = s.norm_sqr();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidInput(format!("superposition norm {n} is not positive")));
        }
        Ok(s)
    }

    /// `|α⟩|−β⟩ − |−α⟩|β⟩`, left unnormalized so its norm can be compared
    /// with `1/N`.
    pub fn bell(alpha: f64, beta: f64) -> Self {
        let (a, b) = (Complex64::new(alpha, 0.0), Complex64::new(beta, 0.0));
        let one = Complex64::new(1.0, 0.0);
        Self { terms: vec![(one, a, -b), (-one, -a, b)] }
    }

    pub fn terms(&self) -> &[(Complex64, Complex64, Complex64)] {
        &self.terms
    }

    pub fn norm_sqr(&self) -> f64 {
        let mut s = Complex64::new(0.0, 0.0);
        for &(cj, aj, bj) in &self.terms {
            for &(ck, ak, bk) in &self.terms {
                s += cj.conj() * ck * coherent_overlap(aj, ak) * coherent_overlap(bj, bk);
            }
        }
        s.re
    }

    pub fn wavefunction(&self, xa: f64, xb: f64) -> Complex64 {
        let psi: Complex64 =
            self.terms.iter().map(|&(c, a, b)| c * coherent_wavefunction(a, xa) * coherent_wavefunction(b, xb)).sum();
        psi / self.norm_sqr().sqrt()
    }

    /// Closed-form local evolution by `(τ_a, τ_b)`, each with `q | 8`.
    pub fn evolved(&self, tau_a: RationalPhase, tau_b: RationalPhase) -> Result<Self> {
        let (sa, fa) = parity_split(tau_a)?;
        let (sb, fb) = parity_split(tau_b)?;
        let mut out: Vec<(Complex64, Complex64, Complex64)> = Vec::new();
        let mut push = |c: Complex64, a: Complex64, b: Complex64| match out.iter_mut().find(|t| t.1 == a && t.2 == b) {
            Some(entry) => entry.0 += c,
            None => out.push((c, a, b)),
        };
        for &(c, a, b) in &self.terms {
            push(c * sa * sb, a, b);
            push(c * sa * fb, a, -b);
            push(c * fa * sb, -a, b);
            push(c * fa * fb, -a, -b);
        }
        Self::new(out)
    }
}

pub fn oracle_dist_joint(
    ps: &ProductSuperposition,
    grid_a: &GridSpec,
    grid_b: &GridSpec,
) -> Result<DistributionGrid2D> {
    let xa = grid_a.nodes();
    let xb = grid_b.nodes();
    let density =
        ndarray::Array2::from_shape_fn((xa.len(), xb.len()), |(i, j)| ps.wavefunction(xa[i], xb[j]).norm_sqr());
    DistributionGrid2D::from_density(*grid_a, *grid_b, density)
}

/// Quadrant probabilities from pairwise Gaussian half-plane integrals;
/// amplitudes must be real.
pub fn oracle_sign_correlation(ps: &ProductSuperposition) -> Result<SignCorrelation> {
    let norm = ps.norm_sqr();
    let quadrant = |sa: f64, sb: f64| -> Result<f64> {
        let mut s = Complex64::new(0.0, 0.0);
        for &(cj, aj, bj) in &ps.terms {
            for &(ck, ak, bk) in &ps.terms {
                let ea = halfline_element(real_amplitude(aj)?, real_amplitude(ak)?, sa);
                let eb = halfline_element(real_amplitude(bj)?, real_amplitude(bk)?, sb);
                s += cj.conj() * ck * ea * eb;
            }
        }
        Ok(s.re / norm)
    };
    Ok(SignCorrelation::from_quadrants(
        quadrant(1.0, 1.0)?,
        quadrant(1.0, -1.0)?,
        quadrant(-1.0, 1.0)?,
        quadrant(-1.0, -1.0)?,
    ))
}
