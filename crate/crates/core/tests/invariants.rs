use catbell::dynamics::{evolve_mode, evolve_two_mode, EvolutionSchedule, RationalPhase};
use catbell::fock::{bell_normalization, recommended_dim, ModeState, TwoModeState, TAIL_TOLERANCE};
use catbell::measurement::{
    grid_sign_correlation, halfline_overlap, joint_sign_correlation, project_sign, sign_projectors, Mode, Sign,
};
use catbell::protocols::{self, Setup, Source};
use catbell::quadrature::{dist_joint, dist_p, dist_x, quarter_rotation, GridSpec};
use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;

fn phase() -> impl Strategy<Value = RationalPhase> {
    (-200i64..200, 1u32..=64).prop_map(|(p, q)| RationalPhase::new(p, q).unwrap())
}

fn random_state(alpha: f64, theta: f64) -> ModeState {
    let a = Complex64::from_polar(alpha, theta);
    let terms = [(Complex64::new(1.0, 0.0), a), (Complex64::new(0.3, -0.4), -a * 0.5)];
    ModeState::superposition(&terms, recommended_dim(alpha)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn constructors_meet_norm_and_tail(r in 0.0..4.0f64, t in 0.0..std::f64::consts::TAU) {
        let s = ModeState::coherent(Complex64::from_polar(r, t), recommended_dim(r)).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
        prop_assert!(s.tail_mass() < TAIL_TOLERANCE);
    }

    #[test]
    fn bell_norm_formula(a in 0.3..4.0f64, b in 0.3..4.0f64) {
        let s = TwoModeState::bell_state_unnormalized(a, b, recommended_dim(a), recommended_dim(b)).unwrap();
        prop_assert!((s.norm_sqr().sqrt() - 1.0 / bell_normalization(a, b)).abs() < 1e-10);
    }

    #[test]
    fn evolution_is_unitary(r in 0.0..3.5f64, t in 0.0..6.3f64, tau in phase()) {
        let s = random_state(r, t);
        prop_assert!((evolve_mode(&s, tau).norm_sqr() - s.norm_sqr()).abs() < 1e-14);
    }

    #[test]
    fn two_pi_is_exact_identity(r in 0.0..3.5f64, t in 0.0..6.3f64, k in -5i64..5) {
        let s = random_state(r, t);
        let full = RationalPhase::new(2 * k, 1).unwrap();
        prop_assert_eq!(evolve_mode(&s, full), s);
    }

    #[test]
    fn evolution_factorizes(a in 0.5..3.0f64, ta in phase(), tb in phase()) {
        let d = recommended_dim(a);
        let bell = TwoModeState::bell_state(a, a, d, d).unwrap();
        let joint = evolve_two_mode(&bell, EvolutionSchedule::new(ta, tb));
        let split = evolve_two_mode(&evolve_two_mode(&bell, EvolutionSchedule::a_only(ta)), EvolutionSchedule::b_only(tb));
        prop_assert_eq!(joint, split);
    }

    #[test]
    fn densities_normalized(r in 0.0..3.5f64, t in 0.0..6.3f64, tau in phase()) {
        let s = evolve_mode(&random_state(r, t), tau);
        let g = GridSpec::default_for(3.5);
        prop_assert!((dist_x(&s, &g).unwrap().integral() - 1.0).abs() < 1e-6);
        prop_assert!((dist_p(&s, &g).unwrap().integral() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn double_rotation_reflects(r in 0.0..3.5f64, t in 0.0..6.3f64) {
        let s = random_state(r, t);
        let g = GridSpec::default_for(3.5);
        let twice = dist_x(&quarter_rotation(&quarter_rotation(&s)), &g).unwrap();
        prop_assert!(twice.sup_distance(&dist_x(&s, &g).unwrap().reflected()) < 1e-10);
    }

    #[test]
    fn phases_round_trip(tau in phase()) {
        let back: RationalPhase = tau.to_string().parse().unwrap();
        prop_assert_eq!(back, tau);
    }

    #[test]
    fn mixtures_never_violate(a in 1.0..3.5f64) {
        let setup = Setup::symmetric(a).unwrap();
        prop_assert!(!protocols::lg_bell_three(&setup, Source::Mixture).unwrap().violated);
        prop_assert!(!protocols::bell_four(&setup, Source::Mixture).unwrap().violated);
    }

    #[test]
    fn relabelling_modes(a in 2.0..3.5f64, b in 2.0..3.5f64) {
        let setup = Setup::new(a, b, None).unwrap();
        for source in [Source::Bell, Source::Mixture] {
            let r = protocols::lg_bell_three(&setup, source).unwrap();
            let s = protocols::lg_bell_three(&setup.swapped(), source).unwrap();
            for (x, y) in r.term_values().iter().zip(s.term_values()) {
                prop_assert!((x - y).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn projector_completeness_and_parity() {
    for dim in [20, 44, 59, 80] {
        let p = sign_projectors(dim);
        let sum = p.plus() + p.minus();
        let dev = (&sum - &Array2::<f64>::eye(dim)).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(dev < 1e-10, "dim {dim}: {dev:e}");
        let w = halfline_overlap(dim);
        for m in 0..dim {
            for n in 0..dim {
                if (m + n) % 2 == 0 {
                    let want = if m == n { 0.5 } else { 0.0 };
                    assert!((w[[m, n]] - want).abs() < 1e-10);
                }
                assert!((w[[m, n]] - w[[n, m]]).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn grid_and_projector_signs_agree_on_protocol_states() {
    let setup = Setup::symmetric(3.0).unwrap();
    let grid = GridSpec::symmetric(10.5, 801).unwrap();
    for source in [Source::Bell, Source::Mixture] {
        let ens = protocols::prepare(&setup, source).unwrap();
        for (ka, kb) in [(1, 0), (2, 1), (3, 2), (3, 0)] {
            let sched = EvolutionSchedule::new(RationalPhase::quarter_pi(ka), RationalPhase::quarter_pi(kb));
            let e = catbell::dynamics::evolve_ensemble(&ens, sched);
            let g = grid_sign_correlation(&dist_joint(&e, &grid, &grid).unwrap()).e_value;
            assert!((g - joint_sign_correlation(&e).e_value).abs() < 1e-7, "{source} {sched}");
        }
    }
}

#[test]
fn collapse_does_not_signal() {
    let d = recommended_dim(3.0);
    let bell = TwoModeState::bell_state(3.0, 3.0, d, d).unwrap();
    let q = RationalPhase::quarter_pi(1);
    let state = evolve_two_mode(&bell, EvolutionSchedule::new(q, q));
    let before = state.marginal_a();
    let mut after = vec![0.0; d];
    for s in Sign::BOTH {
        let (p, post) = project_sign(&state, Mode::B, s).unwrap();
        for (acc, v) in after.iter_mut().zip(post.marginal_a()) {
            *acc += p * v;
        }
    }
    let dev = before.iter().zip(&after).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(dev < 1e-8, "{dev:e}");
}

#[test]
fn violations_approach_their_limits() {
    let mut worst = [0.0f64; 2];
    for alpha in [1.0, 1.5, 2.0, 2.5, 3.0] {
        let setup = Setup::symmetric(alpha).unwrap();
        let scale = (-2.0 * alpha * alpha).exp();
        let lgb = protocols::lg_bell_three(&setup, Source::Bell).unwrap();
        let b4 = protocols::bell_four(&setup, Source::Bell).unwrap();
        worst[0] = worst[0].max((lgb.lhs - 2f64.sqrt()).abs() / scale);
        worst[1] = worst[1].max((b4.lhs - 2.0 * 2f64.sqrt()).abs() / scale);
    }
    println!("fitted C: lgbell {:.3}, bell4 {:.3}", worst[0], worst[1]);
    assert!(worst[0] < 2.0 && worst[1] < 4.0);
}

#[test]
fn bell_and_mixture_agree_at_preparation() {
    let setup = Setup::symmetric(3.0).unwrap();
    let (ga, gb) = setup.default_grid();
    let b = dist_joint(&protocols::prepare(&setup, Source::Bell).unwrap(), &ga, &gb).unwrap();
    let m = dist_joint(&protocols::prepare(&setup, Source::Mixture).unwrap(), &ga, &gb).unwrap();
    assert!(b.sup_distance(&m) <= 5e-8);
}
