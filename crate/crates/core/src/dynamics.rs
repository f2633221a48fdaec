//! Evolution under `H = Ω n⁴`, diagonal in the number basis.
//!
//! Durations are `Ωt = (p/q)π` with small `q`, so every phase
//! `e^{−i(p/q)π n⁴}` is reduced with integer arithmetic before any
//! trigonometry: `n⁴ mod 2q` is exact for all `n`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{ModeState, TwoModeState, WeightedEnsemble};

/// Largest denominator accepted for a phase.
pub const MAX_DENOMINATOR: u32 = 64;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `Ωt` as an exact rational multiple of π, in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct RationalPhase {
    num: i64,
    den: u32,
}

impl RationalPhase {
    pub const ZERO: RationalPhase = RationalPhase { num: 0, den: 1 };

    pub fn new(num: i64, den: u32) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidPhase("denominator must be positive".into()));
        }
        let g = gcd(num.unsigned_abs(), den as u64).max(1);
        let num = num / g as i64;
        let den = (den as u64 / g) as u32;
        if den > MAX_DENOMINATOR {
            return Err(Error::InvalidPhase(format!("denominator {den} exceeds {MAX_DENOMINATOR}")));
        }
        Ok(Self { num, den })
    }

    /// `k·π/4`.
    pub fn quarter_pi(k: i64) -> Self {
        Self::new(k, 4).expect("denominator 4 is always valid")
    }

    pub fn numerator(&self) -> i64 {
        self.num
    }

    pub fn denominator(&self) -> u32 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    /// Value of `Ωt` in radians.
    pub fn radians(&self) -> f64 {
        std::f64::consts::PI * self.num as f64 / self.den as f64
    }

    pub fn checked_add(self, other: Self) -> Result<Self> {
        let den = self.den as i64 * other.den as i64;
        let num = self.num * other.den as i64 + other.num * self.den as i64;
        let den = u32::try_from(den).map_err(|_| Error::InvalidPhase("denominator overflow".into()))?;
        Self::new(num, den)
    }

    pub fn checked_sub(self, other: Self) -> Result<Self> {
        self.checked_add(Self { num: -other.num, den: other.den })
    }
}

impl fmt::Display for RationalPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.num, self.den) {
            (0, _) => write!(f, "0"),
            (n, 1) => write!(f, "{n} pi"),
            (n, d) => write!(f, "{n}/{d} pi"),
        }
    }
}

impl FromStr for RationalPhase {
    type Err = Error;

    /// Parses `"p/q pi"`, `"p pi"`, `"pi"`, `"-pi/4"` style strings, or `"0"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidPhase(format!("cannot parse {s:?}; expected \"p/q pi\""));
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
        if compact == "0" {
            return Ok(Self::ZERO);
        }
        let (sign, body) = match compact.strip_prefix('-') {
            Some(rest) => (-1, rest),
            None => (1, compact.strip_prefix('+').unwrap_or(&compact)),
        };
        let parse_int = |t: &str| -> Result<i64> { t.parse::<i64>().map_err(|_| bad()) };
        let parse_den = |t: &str| -> Result<u32> { t.parse::<u32>().map_err(|_| bad()) };
        // "p/q pi" | "p pi" | "pi" | "pi/q" | "p pi/q"
        let (num, den) = if let Some(coef) = body.strip_suffix("pi") {
            match coef.split_once('/') {
                Some((p, q)) => (parse_int(p)?, parse_den(q)?),
                None if coef.is_empty() => (1, 1),
                None => (parse_int(coef.strip_suffix('*').unwrap_or(coef))?, 1),
            }
        } else if let Some((head, q)) = body.split_once("pi/") {
            let p = if head.is_empty() { 1 } else { parse_int(head.strip_suffix('*').unwrap_or(head))? };
            (p, parse_den(q)?)
        } else {
            return Err(bad());
        };
        Self::new(sign * num, den)
    }
}

impl TryFrom<String> for RationalPhase {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<RationalPhase> for String {
    fn from(p: RationalPhase) -> String {
        p.to_string()
    }
}

/// Local evolution durations `(t_a, t_b)` in units of `Ω⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EvolutionSchedule {
    pub tau_a: RationalPhase,
    pub tau_b: RationalPhase,
}

impl EvolutionSchedule {
    pub fn new(tau_a: RationalPhase, tau_b: RationalPhase) -> Self {
        Self { tau_a, tau_b }
    }

    pub fn a_only(tau: RationalPhase) -> Self {
        Self::new(tau, RationalPhase::ZERO)
    }

    pub fn b_only(tau: RationalPhase) -> Self {
        Self::new(RationalPhase::ZERO, tau)
    }
}

impl fmt::Display for EvolutionSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.tau_a, self.tau_b)
    }
}

/// `e^{−i(p/q)π n⁴}` with the exponent reduced modulo `2q` exactly.
pub fn kerr_phase(n: u64, tau: RationalPhase) -> Complex64 {
    let modulus = 2 * tau.den as u64;
    let r = n % modulus;
    let n4 = r * r % modulus * r % modulus * r % modulus;
    let k = ((tau.num.rem_euclid(modulus as i64) as u64) * n4) % modulus;
    if k == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let angle = std::f64::consts::PI * k as f64 / tau.den as f64;
    Complex64::new(angle.cos(), -angle.sin())
}

/// Phases `kerr_phase(n, tau)` for `n = 0..dim`.
pub fn kerr_phases(dim: usize, tau: RationalPhase) -> Vec<Complex64> {
    (0..dim as u64).map(|n| kerr_phase(n, tau)).collect()
}

pub fn evolve_mode(state: &ModeState, tau: RationalPhase) -> ModeState {
    if tau.is_zero() {
        return state.clone();
    }
    let phases = kerr_phases(state.dim(), tau);
    state.map_amplitudes(|n, c| phases[n] * c)
}

pub fn evolve_two_mode(state: &TwoModeState, schedule: EvolutionSchedule) -> TwoModeState {
    let (dim_a, dim_b) = state.dims();
    let pa = kerr_phases(dim_a, schedule.tau_a);
    let pb = kerr_phases(dim_b, schedule.tau_b);
    // A first, then B, so split and joint schedules agree bit for bit
    state.map_amplitudes(|m, n, c| pb[n] * (pa[m] * c))
}

pub fn evolve_ensemble(ensemble: &WeightedEnsemble, schedule: EvolutionSchedule) -> WeightedEnsemble {
    ensemble.map_states(|s| evolve_two_mode(s, schedule))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::recommended_dim;

    #[test]
    fn zero_duration_is_identity() {
        for n in 0..300 {
            assert_eq!(kerr_phase(n, RationalPhase::ZERO), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn even_fourth_power_at_quarter_pi() {
        assert_eq!(kerr_phase(2, RationalPhase::quarter_pi(1)), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn odd_numbers_at_quarter_pi_brute_force() {
        let tau = RationalPhase::quarter_pi(1);
        let expected = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
        for n in (1u64..=200).step_by(2) {
            // big-integer style check: n⁴ fits in u128, reduce after
            let n4 = (n as u128).pow(4);
            assert_eq!(n4 % 8, 1);
            assert!((kerr_phase(n, tau) - expected).norm() < 1e-15, "n={n}");
        }
    }

    #[test]
    fn phase_matches_direct_reduction() {
        for (p, q) in [(1, 4), (1, 2), (3, 4), (-5, 7), (13, 64), (2, 3)] {
            let tau = RationalPhase::new(p, q).unwrap();
            for n in 0u64..500 {
                let n4 = (n as i128).pow(4) * tau.numerator() as i128;
                let k = n4.rem_euclid(2 * tau.denominator() as i128);
                let angle = std::f64::consts::PI * k as f64 / tau.denominator() as f64;
                let expected = Complex64::from_polar(1.0, -angle);
                assert!((kerr_phase(n, tau) - expected).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn full_period_is_identity() {
        let dim = 120;
        let s = ModeState::cat_state(3.0, dim).unwrap();
        let evolved = evolve_mode(&s, RationalPhase::new(2, 1).unwrap());
        assert_eq!(evolved, s);
    }

    #[test]
    fn phase_arithmetic_and_parsing() {
        let t2 = RationalPhase::quarter_pi(1);
        let t3: RationalPhase = "1/2 pi".parse().unwrap();
        assert_eq!(t2.checked_add(t2).unwrap(), t3);
        assert_eq!(t3.checked_sub(t2).unwrap(), t2);
        assert_eq!("3/4pi".parse::<RationalPhase>().unwrap(), RationalPhase::quarter_pi(3));
        assert_eq!("pi/4".parse::<RationalPhase>().unwrap(), t2);
        assert_eq!("-1/4 pi".parse::<RationalPhase>().unwrap(), RationalPhase::quarter_pi(-1));
        assert_eq!("pi".parse::<RationalPhase>().unwrap(), RationalPhase::new(1, 1).unwrap());
        assert_eq!("0".parse::<RationalPhase>().unwrap(), RationalPhase::ZERO);
        assert_eq!("2/8 pi".parse::<RationalPhase>().unwrap(), t2);
        assert!("0.785".parse::<RationalPhase>().is_err());
        assert!("1/128 pi".parse::<RationalPhase>().is_err());
        assert!(RationalPhase::new(1, 0).is_err());
        assert_eq!(RationalPhase::quarter_pi(3).to_string(), "3/4 pi");
        let round: RationalPhase = RationalPhase::quarter_pi(-3).to_string().parse().unwrap();
        assert_eq!(round, RationalPhase::quarter_pi(-3));
    }

    #[test]
    fn two_mode_evolution_factorizes() {
        let dim = recommended_dim(2.0);
        let s = TwoModeState::bell_state(2.0, 2.0, dim, dim).unwrap();
        let (a, b) = (RationalPhase::quarter_pi(1), RationalPhase::new(1, 3).unwrap());
        let joint = evolve_two_mode(&s, EvolutionSchedule::new(a, b));
        let stepped = evolve_two_mode(&evolve_two_mode(&s, EvolutionSchedule::a_only(a)), EvolutionSchedule::b_only(b));
        assert_eq!(joint, stepped);
    }

    #[test]
    fn ensemble_evolution_keeps_weights() {
        let mix = WeightedEnsemble::mixture(2.0, 2.0, 40, 40).unwrap();
        let out = evolve_ensemble(&mix, EvolutionSchedule::a_only(RationalPhase::quarter_pi(1)));
        assert_eq!(out.weights(), mix.weights());
    }

    #[test]
    fn evolution_preserves_norm() {
        let s = ModeState::cat_state(3.0, 80).unwrap();
        for k in -8..8 {
            let e = evolve_mode(&s, RationalPhase::new(k, 7).unwrap());
            assert!((e.norm_sqr() - s.norm_sqr()).abs() < 1e-14);
        }
    }
}
