//! End-to-end experiments: the EPR variance paradox, the three-time
//! Leggett-Garg test, the bipartite Leggett-Garg-Bell test, the four-term
//! macroscopic Bell test, the snapshot sequences of the joint quadrature
//! distribution, and the delayed-collapse comparison.
//!
//! Measurement times are `Ωt₁ = 0`, `Ωt₂ = π/4`, `Ωt₃ = π/2`, `Ωt₄ = 3π/4`.
//! All correlations are exact expectation values; [`ProtocolResult::sampled`]
//! replaces them by finite-shot estimates.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve_ensemble, evolve_mode, evolve_two_mode, EvolutionSchedule, RationalPhase};
use crate::error::{Error, Result};
use crate::fock::{recommended_dim, ModeState, TwoModeState, WeightedEnsemble};
use crate::measurement::{
    joint_sign_correlation, project_sign, project_sign_mode, sign_probabilities, Mode, Sign, SignCorrelation,
};
use crate::oracle::{cat_variance_deficit, oracle_sign_correlation, oracle_sign_expectation, oracle_variance_p};
use crate::oracle::{CoherentSuperposition, ProductSuperposition};
use crate::quadrature::{dist_joint, dist_joint_with_tables, hermite_table, variance_p, DistributionGrid2D, GridSpec};

/// Tolerance on `lhs > bound` before a violation is flagged.
pub const VIOLATION_MARGIN: f64 = 1e-9;

/// Amplitude below which the two hills are not macroscopically distinct.
pub const RECOMMENDED_MIN_ALPHA: f64 = 2.0;

/// `Ωtᵢ = (i−1)π/4` for `i = 1..=4`.
pub fn measurement_time(i: u8) -> RationalPhase {
    assert!((1..=4).contains(&i), "measurement times are t1..t4");
    RationalPhase::quarter_pi(i as i64 - 1)
}

fn cmp_phase(a: RationalPhase, b: RationalPhase) -> Ordering {
    let l = a.numerator() as i128 * b.denominator() as i128;
    let r = b.numerator() as i128 * a.denominator() as i128;
    l.cmp(&r)
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Amplitudes and truncation sizes shared by the two-mode protocols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub alpha: f64,
    pub beta: f64,
    pub dim_a: usize,
    pub dim_b: usize,
}

impl Setup {
    /// `dim` applies to both modes; if absent each mode is sized by
    /// [`recommended_dim`].
    pub fn new(alpha: f64, beta: f64, dim: Option<usize>) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        let (dim_a, dim_b) = match dim {
            Some(0) => return Err(Error::InvalidInput("dim must be positive".into())),
            Some(d) => (d, d),
            None => (recommended_dim(alpha), recommended_dim(beta)),
        };
        Ok(Self { alpha, beta, dim_a, dim_b })
    }

    pub fn symmetric(alpha: f64) -> Result<Self> {
        Self::new(alpha, alpha, None)
    }

    /// Same physics with the two modes relabelled.
    pub fn swapped(&self) -> Self {
        Self { alpha: self.beta, beta: self.alpha, dim_a: self.dim_b, dim_b: self.dim_a }
    }

    pub fn corrections_estimate(&self) -> f64 {
        let m = self.alpha.min(self.beta);
        (-2.0 * m * m).exp()
    }

    pub fn default_grid(&self) -> (GridSpec, GridSpec) {
        (GridSpec::default_for(self.alpha), GridSpec::default_for(self.beta))
    }

    /// Grids reaching past the classical turning point of the highest
    /// retained number state. Sign-projected states ring out to that edge,
    /// so the hill-sized default grid is too narrow for them.
    pub fn collapse_grid(&self) -> (GridSpec, GridSpec) {
        let grid = |alpha: f64, dim: usize| {
            let d = GridSpec::default_for(alpha);
            let half = d.x_max.max((2.0 * dim as f64).sqrt() + 4.0);
            GridSpec::symmetric(half, d.points).expect("positive width")
        };
        (grid(self.alpha, self.dim_a), grid(self.beta, self.dim_b))
    }
}

/// Initial two-mode state of the bipartite protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// `N(|α⟩|−β⟩ − |−α⟩|β⟩)`.
    Bell,
    /// 50/50 mixture of `|α⟩|−β⟩` and `|−α⟩|β⟩`.
    Mixture,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Bell => "bell",
            Source::Mixture => "mixture",
        })
    }
}

pub fn prepare(setup: &Setup, source: Source) -> Result<WeightedEnsemble> {
    match source {
        Source::Bell => {
            Ok(WeightedEnsemble::pure(TwoModeState::bell_state(setup.alpha, setup.beta, setup.dim_a, setup.dim_b)?))
        }
        Source::Mixture => WeightedEnsemble::mixture(setup.alpha, setup.beta, setup.dim_a, setup.dim_b),
    }
}

/// Oracle counterpart of [`prepare`]: weighted coherent-product superpositions.
fn prepare_oracle(setup: &Setup, source: Source) -> Vec<(f64, ProductSuperposition)> {
    let (a, b) = (setup.alpha, setup.beta);
    match source {
        Source::Bell => vec![(1.0, ProductSuperposition::bell(a, b))],
        Source::Mixture => [(a, -b), (-a, b)]
            .into_iter()
            .map(|(x, y)| (0.5, ProductSuperposition::new(vec![(real(1.0), real(x), real(y))]).expect("single term")))
            .collect(),
    }
}

fn oracle_correlation(parts: &[(f64, ProductSuperposition)], schedule: EvolutionSchedule) -> Option<f64> {
    let mut e = 0.0;
    for (w, ps) in parts {
        let evolved = ps.evolved(schedule.tau_a, schedule.tau_b).ok()?;
        e += w * oracle_sign_correlation(&evolved).ok()?.e_value;
    }
    Some(e)
}

/// How the intermediate sign measurement of the three-time test acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CollapseModel {
    /// The state is replaced by `|±α⟩` according to the observed sign.
    Branch,
    /// Lüders projection onto the observed half-line.
    Projective,
}

/// One correlation entering an inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    /// Sign with which the term enters the left-hand side.
    pub coefficient: f64,
    pub schedule: Option<EvolutionSchedule>,
    pub value: f64,
    pub quadrants: SignCorrelation,
}

impl Term {
    fn new(name: &str, coefficient: f64, schedule: Option<EvolutionSchedule>, quadrants: SignCorrelation) -> Self {
        Self { name: name.to_string(), coefficient, schedule, value: quadrants.e_value, quadrants }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub shots: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolResult {
    pub protocol: String,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub dims: Vec<usize>,
    pub source: Option<Source>,
    pub collapse_model: Option<CollapseModel>,
    pub terms: Vec<Term>,
    /// Whether the left-hand side is `|Σ cᵢEᵢ|` rather than `Σ cᵢEᵢ`.
    pub absolute: bool,
    pub lhs: f64,
    pub bound: f64,
    pub violated: bool,
    pub corrections_estimate: f64,
    pub sampling: Option<Sampling>,
    pub diagnostics: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl ProtocolResult {
    fn evaluate_lhs(terms: &[Term], absolute: bool) -> f64 {
        let s: f64 = terms.iter().map(|t| t.coefficient * t.value).sum();
        if absolute {
            s.abs()
        } else {
            s
        }
    }

    fn finish(&mut self) {
        self.lhs = Self::evaluate_lhs(&self.terms, self.absolute);
        self.violated = self.lhs > self.bound + VIOLATION_MARGIN;
    }

    pub fn term(&self, name: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.name == name)
    }

    pub fn term_values(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.value).collect()
    }

    /// Replaces every term by a `shots`-sample estimate drawn from its
    /// quadrant probabilities. Terms are drawn in order from one seeded
    /// stream.
    pub fn sampled(&self, shots: u64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        for t in &mut out.terms {
            t.quadrants = t.quadrants.sample(shots, &mut rng);
            t.value = t.quadrants.e_value;
        }
        out.sampling = Some(Sampling { shots, seed });
        out.finish();
        out
    }
}

/// Outcome of the EPR variance test on the cat `(|α⟩ + i|−α⟩)/√2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EprResult {
    pub alpha: f64,
    pub dim: usize,
    /// Number-basis value of `Δ²P`.
    pub variance_p: f64,
    /// Closed-form value `1/2 − 2α²e^{−4α²}`.
    pub oracle_variance_p: f64,
    /// `1/2 − Δ²P` in closed form; resolvable even where `variance_p`
    /// rounds to `1/2`.
    pub margin: f64,
    pub bound: f64,
    pub paradox: bool,
}

pub fn epr_paradox(alpha: f64, dim: Option<usize>) -> Result<EprResult> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
    }
    let dim = dim.unwrap_or_else(|| recommended_dim(alpha));
    let cat = ModeState::cat_state(alpha, dim)?;
    let margin = cat_variance_deficit(alpha);
    Ok(EprResult {
        alpha,
        dim,
        variance_p: variance_p(&cat),
        oracle_variance_p: oracle_variance_p(alpha),
        margin,
        bound: 0.5,
        paradox: margin > 0.0,
    })
}

fn sign_quadrants_known_first(state: &ModeState) -> SignCorrelation {
    let (p, m) = sign_probabilities(state);
    SignCorrelation::from_quadrants(p, m, 0.0, 0.0)
}

fn second_measurement(
    alpha: f64,
    dim: usize,
    at_t2: &ModeState,
    model: CollapseModel,
    step: RationalPhase,
) -> Result<SignCorrelation> {
    let (p_plus, p_minus) = sign_probabilities(at_t2);
    let mut q = [0.0; 4];
    for (k, sign) in Sign::BOTH.into_iter().enumerate() {
        let (p, branch) = match model {
            CollapseModel::Branch => {
                let p = if sign == Sign::Plus { p_plus } else { p_minus };
                (p, ModeState::coherent(real(sign.value() * alpha), dim)?)
            }
            CollapseModel::Projective => match project_sign_mode(at_t2, sign) {
                Ok(r) => r,
                Err(Error::ZeroProbability(_)) => continue,
                Err(e) => return Err(e),
            },
        };
        let (qp, qm) = sign_probabilities(&evolve_mode(&branch, step));
        q[2 * k] = p * qp;
        q[2 * k + 1] = p * qm;
    }
    Ok(SignCorrelation::from_quadrants(q[0], q[1], q[2], q[3]))
}

/// Three-time test on a single mode started in `|α⟩`:
/// `⟨S₁S₂⟩ + ⟨S₂S₃⟩ − ⟨S₁S₃⟩ ≤ 1`, with `S₁ = +1` known.
pub fn lg_three_time(alpha: f64, dim: Option<usize>, model: CollapseModel) -> Result<ProtocolResult> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidInput(format!("alpha must be finite and nonnegative, got {alpha}")));
    }
    let dim = dim.unwrap_or_else(|| recommended_dim(alpha));
    let (t2, t3) = (measurement_time(2), measurement_time(3));
    let start = ModeState::coherent(real(alpha), dim)?;
    let at_t2 = evolve_mode(&start, t2);
    let at_t3 = evolve_mode(&start, t3);
    let step = t3.checked_sub(t2)?;

    let s12 = sign_quadrants_known_first(&at_t2);
    let s13 = sign_quadrants_known_first(&at_t3);
    let s23 = second_measurement(alpha, dim, &at_t2, model, step)?;
    let other = match model {
        CollapseModel::Branch => CollapseModel::Projective,
        CollapseModel::Projective => CollapseModel::Branch,
    };
    let s23_other = second_measurement(alpha, dim, &at_t2, other, step)?;

    let mut diagnostics = BTreeMap::new();
    let other_lhs = s12.e_value + s23_other.e_value - s13.e_value;
    diagnostics.insert(format!("{}_model_lhs", format!("{other:?}").to_lowercase()), other_lhs);
    let coherent = CoherentSuperposition::coherent(real(alpha));
    let oracle_dev = [(t2, s12.e_value), (t3, s13.e_value)]
        .into_iter()
        .filter_map(|(t, e)| Some((oracle_sign_expectation(&coherent.evolved(t).ok()?).ok()? - e).abs()))
        .fold(0.0, f64::max);
    diagnostics.insert("oracle_max_deviation".into(), oracle_dev);

    let mut warnings = Vec::new();
    if alpha < RECOMMENDED_MIN_ALPHA {
        warnings.push(format!(
            "alpha = {alpha} is below {RECOMMENDED_MIN_ALPHA}: the two hills overlap and the sign is not a macroscopic pointer"
        ));
    }
    let mut r = ProtocolResult {
        protocol: "lg".into(),
        alpha,
        beta: None,
        dims: vec![dim],
        source: None,
        collapse_model: Some(model),
        terms: vec![
            Term::new("S1S2", 1.0, Some(EvolutionSchedule::a_only(t2)), s12),
            Term::new("S2S3", 1.0, Some(EvolutionSchedule::a_only(t3)), s23),
            Term::new("S1S3", -1.0, Some(EvolutionSchedule::a_only(t3)), s13),
        ],
        absolute: false,
        lhs: 0.0,
        bound: 1.0,
        violated: false,
        corrections_estimate: (-2.0 * alpha * alpha).exp(),
        sampling: None,
        diagnostics,
        warnings,
    };
    r.finish();
    Ok(r)
}

/// Name, coefficient, A time index, B time index.
type TermSpec = (&'static str, f64, u8, u8);

fn bipartite(
    protocol: &str,
    setup: &Setup,
    source: Source,
    specs: &[TermSpec],
    shift: RationalPhase,
    bound: f64,
    absolute: bool,
) -> Result<ProtocolResult> {
    let ensemble = prepare(setup, source)?;
    let oracle = prepare_oracle(setup, source);
    let rows: Vec<Result<(Term, Option<f64>)>> = specs
        .par_iter()
        .map(|&(name, coefficient, ta, tb)| {
            let schedule = EvolutionSchedule::new(
                measurement_time(ta).checked_add(shift)?,
                measurement_time(tb).checked_add(shift)?,
            );
            let corr = joint_sign_correlation(&evolve_ensemble(&ensemble, schedule));
            let dev = oracle_correlation(&oracle, schedule).map(|e| (e - corr.e_value).abs());
            Ok((Term::new(name, coefficient, Some(schedule), corr), dev))
        })
        .collect();
    let mut terms = Vec::with_capacity(rows.len());
    let mut oracle_dev: Option<f64> = None;
    for row in rows {
        let (t, dev) = row?;
        if let Some(d) = dev {
            oracle_dev = Some(oracle_dev.map_or(d, |m| m.max(d)));
        }
        terms.push(t);
    }

    let mut diagnostics = BTreeMap::new();
    if let Some(d) = oracle_dev {
        diagnostics.insert("oracle_max_deviation".into(), d);
    }
    let mut warnings = Vec::new();
    if setup.alpha.min(setup.beta) < RECOMMENDED_MIN_ALPHA {
        warnings.push(format!(
            "min(alpha, beta) = {} is below {RECOMMENDED_MIN_ALPHA}: hill overlap corrections are not negligible",
            setup.alpha.min(setup.beta)
        ));
    }
    if setup.alpha != setup.beta {
        warnings.push("alpha and beta differ; the predictions assume equal amplitudes".into());
    }
    let mut r = ProtocolResult {
        protocol: protocol.into(),
        alpha: setup.alpha,
        beta: Some(setup.beta),
        dims: vec![setup.dim_a, setup.dim_b],
        source: Some(source),
        collapse_model: None,
        terms,
        absolute,
        lhs: 0.0,
        bound,
        violated: false,
        corrections_estimate: setup.corrections_estimate(),
        sampling: None,
        diagnostics,
        warnings,
    };
    r.finish();
    Ok(r)
}

const LG_BELL_TERMS: [TermSpec; 3] = [("S1B_S2A", -1.0, 2, 1), ("S2B_S3A", -1.0, 3, 2), ("S1B_S3A", 1.0, 3, 1)];

// Time assignments follow the inequality as written: the second term pairs
// t2 at A with t3 at B.
const BELL_FOUR_TERMS: [TermSpec; 4] =
    [("S1B_S2A", 1.0, 2, 1), ("S2A_S3B", 1.0, 2, 3), ("S3B_S4A", 1.0, 4, 3), ("S1B_S4A", -1.0, 4, 1)];

/// `−⟨S₁ᴮS₂ᴬ⟩ − ⟨S₂ᴮS₃ᴬ⟩ + ⟨S₁ᴮS₃ᴬ⟩ ≤ 1`.
pub fn lg_bell_three(setup: &Setup, source: Source) -> Result<ProtocolResult> {
    bipartite("lgbell", setup, source, &LG_BELL_TERMS, RationalPhase::ZERO, 1.0, false)
}

/// `|⟨S₁ᴮS₂ᴬ⟩ + ⟨S₂ᴬS₃ᴮ⟩ + ⟨S₃ᴮS₄ᴬ⟩ − ⟨S₁ᴮS₄ᴬ⟩| ≤ 2`.
pub fn bell_four(setup: &Setup, source: Source) -> Result<ProtocolResult> {
    bell_four_shifted(setup, source, RationalPhase::ZERO)
}

/// [`bell_four`] with every measurement time delayed by `shift`.
pub fn bell_four_shifted(setup: &Setup, source: Source, shift: RationalPhase) -> Result<ProtocolResult> {
    bipartite("bell4", setup, source, &BELL_FOUR_TERMS, shift, 2.0, true)
}

/// `⟨S_A S_B⟩` after local evolution by `schedule`.
pub fn pair_correlation(setup: &Setup, source: Source, schedule: EvolutionSchedule) -> Result<SignCorrelation> {
    Ok(joint_sign_correlation(&evolve_ensemble(&prepare(setup, source)?, schedule)))
}

/// Snapshot sequences of `P(X_A, X_B)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Sequence {
    /// B stops at `t₁` while A advances to `t₃`.
    Top,
    /// B stops at `t₂` while A advances to `t₃`.
    Lower,
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sequence::Top => "top",
            Sequence::Lower => "lower",
        })
    }
}

pub fn sequence_schedules(sequence: Sequence) -> Vec<EvolutionSchedule> {
    let (t1, t2, t3) = (measurement_time(1), measurement_time(2), measurement_time(3));
    match sequence {
        Sequence::Top => {
            vec![EvolutionSchedule::new(t1, t1), EvolutionSchedule::new(t2, t1), EvolutionSchedule::new(t3, t1)]
        }
        Sequence::Lower => {
            vec![EvolutionSchedule::new(t1, t1), EvolutionSchedule::new(t2, t2), EvolutionSchedule::new(t3, t2)]
        }
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub sequence: Sequence,
    pub schedule: EvolutionSchedule,
    pub grid: DistributionGrid2D,
}

#[derive(Debug, Clone)]
pub struct SnapshotSet {
    pub source: Source,
    pub setup: Setup,
    pub snapshots: Vec<Snapshot>,
}

impl SnapshotSet {
    pub fn sequence(&self, sequence: Sequence) -> impl Iterator<Item = &Snapshot> {
        self.snapshots.iter().filter(move |s| s.sequence == sequence)
    }

    pub fn final_grid(&self, sequence: Sequence) -> &DistributionGrid2D {
        &self.sequence(sequence).last().expect("sequences are nonempty").grid
    }
}

pub fn figure_sequences(setup: &Setup, source: Source, grid_a: &GridSpec, grid_b: &GridSpec) -> Result<SnapshotSet> {
    let ensemble = prepare(setup, source)?;
    let table_a = hermite_table(grid_a, setup.dim_a)?;
    let table_b = hermite_table(grid_b, setup.dim_b)?;
    let jobs: Vec<(Sequence, EvolutionSchedule)> = [Sequence::Top, Sequence::Lower]
        .into_iter()
        .flat_map(|q| sequence_schedules(q).into_iter().map(move |s| (q, s)))
        .collect();
    let snapshots = jobs
        .into_par_iter()
        .map(|(sequence, schedule)| {
            let grid = dist_joint_with_tables(&evolve_ensemble(&ensemble, schedule), &table_a, &table_b)?;
            Ok(Snapshot { sequence, schedule, grid })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SnapshotSet { source, setup: *setup, snapshots })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayedCollapseReport {
    pub measure_time: RationalPhase,
    pub delay: RationalPhase,
    /// A's local time when the delayed projection is applied.
    pub collapse_time_a: RationalPhase,
    /// A's local time at which the distributions are compared.
    pub final_time_a: RationalPhase,
    /// Probabilities of `S_B = +1, −1`.
    pub outcome_probabilities: [f64; 2],
    /// Immediate versus delayed collapse.
    pub sup_norm_difference: f64,
    /// Delayed collapse versus no collapse at all.
    pub uncollapsed_difference: f64,
    pub corrections_estimate: f64,
}

/// Time at which [`delayed_collapse_check`] applies the projection by
/// default: `π/4` after `t₃`.
pub fn default_delay(measure_time: RationalPhase) -> Result<RationalPhase> {
    measurement_time(3).checked_sub(measure_time)?.checked_add(RationalPhase::quarter_pi(1))
}

fn collapse_b(state: &TwoModeState) -> Result<Vec<(f64, TwoModeState)>> {
    let mut parts = Vec::with_capacity(2);
    for sign in Sign::BOTH {
        match project_sign(state, Mode::B, sign) {
            Ok(p) => parts.push(p),
            Err(Error::ZeroProbability(_)) => {}
            Err(e) => return Err(e),
        }
    }
    // completeness holds to ~1e-10 in the truncated basis; renormalize so
    // the ensemble weights sum to one
    let total: f64 = parts.iter().map(|(p, _)| p).sum();
    Ok(parts.into_iter().map(|(p, s)| (p / total, s)).collect())
}

/// Compares B's sign collapse applied right at `measure_time` with the
/// same collapse applied after A has evolved a further `delay` (B frozen
/// in between), both followed by A's evolution to
/// `max(t₃, measure_time + delay)`.
pub fn delayed_collapse_check(
    setup: &Setup,
    measure_time: RationalPhase,
    delay: RationalPhase,
    grid_a: &GridSpec,
    grid_b: &GridSpec,
) -> Result<DelayedCollapseReport> {
    if cmp_phase(measure_time, RationalPhase::ZERO) == Ordering::Less
        || cmp_phase(delay, RationalPhase::ZERO) == Ordering::Less
    {
        return Err(Error::InvalidInput("measure time and delay must be nonnegative".into()));
    }
    let bell = TwoModeState::bell_state(setup.alpha, setup.beta, setup.dim_a, setup.dim_b)?;
    let base = evolve_two_mode(&bell, EvolutionSchedule::new(measure_time, measure_time));
    let collapse_time = measure_time.checked_add(delay)?;
    let final_time = match cmp_phase(collapse_time, measurement_time(3)) {
        Ordering::Greater => collapse_time,
        _ => measurement_time(3),
    };
    let after_collapse = final_time.checked_sub(collapse_time)?;
    let whole = final_time.checked_sub(measure_time)?;

    let immediate_parts = collapse_b(&base)?;
    let outcome_probabilities =
        [Sign::Plus, Sign::Minus].map(|s| project_sign(&base, Mode::B, s).map(|(p, _)| p).unwrap_or(0.0));
    let immediate = WeightedEnsemble::new(
        immediate_parts.into_iter().map(|(w, s)| (w, evolve_two_mode(&s, EvolutionSchedule::a_only(whole)))).collect(),
    )?;
    let mid = evolve_two_mode(&base, EvolutionSchedule::a_only(delay));
    let delayed = WeightedEnsemble::new(
        collapse_b(&mid)?
            .into_iter()
            .map(|(w, s)| (w, evolve_two_mode(&s, EvolutionSchedule::a_only(after_collapse))))
            .collect(),
    )?;
    let uncollapsed = evolve_two_mode(&base, EvolutionSchedule::a_only(whole));

    let p_immediate = dist_joint(&immediate, grid_a, grid_b)?;
    let p_delayed = dist_joint(&delayed, grid_a, grid_b)?;
    let p_uncollapsed = dist_joint(&uncollapsed, grid_a, grid_b)?;
    Ok(DelayedCollapseReport {
        measure_time,
        delay,
        collapse_time_a: collapse_time,
        final_time_a: final_time,
        outcome_probabilities,
        sup_norm_difference: p_immediate.sup_distance(&p_delayed),
        uncollapsed_difference: p_uncollapsed.sup_distance(&p_delayed),
        corrections_estimate: (-setup.alpha.min(setup.beta).powi(2)).exp(),
    })
}

/// Parses `t1`..`t4` or an explicit `p/q pi` phase.
pub fn parse_time(s: &str) -> Result<RationalPhase> {
    match s.trim() {
        "t1" => Ok(measurement_time(1)),
        "t2" => Ok(measurement_time(2)),
        "t3" => Ok(measurement_time(3)),
        "t4" => Ok(measurement_time(4)),
        other => RationalPhase::from_str(other),
    }
}
