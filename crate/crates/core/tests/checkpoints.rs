use std::f64::consts::{FRAC_1_SQRT_2, PI};

use catbell::dynamics::{evolve_mode, evolve_two_mode, EvolutionSchedule, RationalPhase};
use catbell::fock::{recommended_dim, ModeState, TwoModeState};
use catbell::oracle::{cat_variance_deficit, oracle_variance_p};
use catbell::quadrature::variance_p;
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn target(alpha: f64, phase: f64, same: Complex64, flip: Complex64, dim: usize) -> ModeState {
    let g = Complex64::from_polar(1.0, phase);
    ModeState::superposition(&[(g * same, c(alpha, 0.0)), (g * flip, c(-alpha, 0.0))], dim).unwrap()
}

fn evolved(alpha: f64, k: i64) -> ModeState {
    let dim = recommended_dim(alpha);
    evolve_mode(&ModeState::coherent(c(alpha, 0.0), dim).unwrap(), RationalPhase::quarter_pi(k))
}

#[test]
fn quarter_period_state() {
    for alpha in [2.0, 3.0] {
        let s = PI / 8.0;
        let t = target(alpha, -s, c(s.cos(), 0.0), c(0.0, s.sin()), recommended_dim(alpha));
        let f = evolved(alpha, 1).fidelity(&t).unwrap();
        assert!(1.0 - f < 1e-9, "alpha={alpha}: {f}");
        // the prefactor is reproduced as well, not just the ray
        let overlap = t.inner(&evolved(alpha, 1)).unwrap();
        assert!((overlap - 1.0).norm() < 1e-9);
    }
}

#[test]
fn half_period_is_the_cat() {
    for alpha in [2.0, 3.0] {
        let dim = recommended_dim(alpha);
        let t = target(alpha, -PI / 4.0, c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2), dim);
        assert!(1.0 - evolved(alpha, 2).fidelity(&t).unwrap() < 1e-9);
        let cat = ModeState::cat_state(alpha, dim).unwrap();
        assert!(1.0 - evolved(alpha, 2).fidelity(&cat).unwrap() < 1e-9);
    }
}

#[test]
fn three_quarter_period_state() {
    for alpha in [2.0, 3.0] {
        let s = 3.0 * PI / 8.0;
        let t = target(alpha, PI / 8.0, c(s.cos(), 0.0), c(0.0, s.sin()), recommended_dim(alpha));
        let got = evolved(alpha, 3);
        assert!(1.0 - got.fidelity(&t).unwrap() < 1e-9);
        // the global phase comes out as e^{-3iπ/8}, not e^{iπ/8}
        let phase = t.inner(&got).unwrap().arg();
        assert!((phase + PI / 2.0).abs() < 1e-9, "{phase}");
    }
}

#[test]
fn bell_state_returns_to_itself() {
    for alpha in [2.0, 3.0] {
        let dim = recommended_dim(alpha);
        let bell = TwoModeState::bell_state(alpha, alpha, dim, dim).unwrap();
        for k in 1..=3 {
            let q = RationalPhase::quarter_pi(k);
            let e = evolve_two_mode(&bell, EvolutionSchedule::new(q, q));
            assert!(1.0 - e.fidelity(&bell).unwrap() < 1e-9);
        }
        let e =
            evolve_two_mode(&bell, EvolutionSchedule::new(RationalPhase::quarter_pi(1), RationalPhase::quarter_pi(1)));
        let phase = bell.inner(&e).unwrap();
        assert!((phase - Complex64::from_polar(1.0, -PI / 4.0)).norm() < 1e-9);
    }
}

#[test]
fn cat_p_variance_over_alpha() {
    for alpha in [0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0] {
        let cat = ModeState::cat_state(alpha, recommended_dim(alpha)).unwrap();
        let v = variance_p(&cat);
        assert!((v - oracle_variance_p(alpha)).abs() < 1e-9, "alpha={alpha}");
        assert!(v <= 0.5 + 1e-12);
        assert!(cat_variance_deficit(alpha) > 0.0);
    }
}
