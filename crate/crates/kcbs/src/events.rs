//! Measurement events, conditioning, correlations, and the KCBS parameter.
//!
//! Three nested event definitions decide which trials enter the statistics:
//!
//! - E1: exactly one of the three detectors clicked;
//! - E2: at least one detector clicked;
//! - E3: every triggered trial.
//!
//! Conditioning an outcome distribution on an event renormalizes it over the
//! event's outcome set and records the event probability (the post-selection
//! probability). The correlation of a context is
//!
//!   ⟨A_i A_{i+1}⟩ = 1 + 4P(−1,−1) − 2P(A_i=−1) − 2P(A_{i+1}=−1),
//!
//! algebraically equal to the four-term signed sum Σ_{a,b} ab·P(a,b); both
//! forms are evaluated and must agree, which catches normalization bugs at
//! the source. β is the sum over the five contexts, classically bounded by
//! −3 and quantum-mechanically by 5 − 4√5.

use crate::click::OutcomeDistribution;
use crate::error::{Error, Result};
use crate::network::{all_contexts, MeasurementContext};
use crate::numeric::compensated_sum;
use crate::states::OpticalState;

/// Quantum bound 5 − 4√5 ≈ −3.944271910, reached by an ideal single photon.
pub const BETA_QUANTUM: f64 = 5.0 - 4.0 * 2.236_067_977_499_79;

/// Classical (non-contextual) bound.
pub const BETA_CLASSICAL_BOUND: f64 = -3.0;

/// Limit of the E1-conditioned coherent-state β as n̄ → 0. The closed form
/// is 0/0 at n̄ = 0 (conditioning is undefined there and reported as an
/// error), but the limit exists and equals the quantum bound: an
/// infinitesimal coherent state conditioned on exactly one click looks like
/// a single photon.
pub const BETA_E1_SMALL_INTENSITY_LIMIT: f64 = BETA_QUANTUM;

/// Agreement required between the two correlation forms.
pub const CORRELATION_FORM_TOL: f64 = 1e-12;

/// Event identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventId {
    E1,
    E2,
    E3,
}

impl EventId {
    pub fn label(self) -> &'static str {
        match self {
            EventId::E1 => "E1",
            EventId::E2 => "E2",
            EventId::E3 => "E3",
        }
    }

    pub fn definition(self) -> EventDefinition {
        EventDefinition::of(self)
    }

    /// Parses "e1"/"E1" style labels.
    pub fn parse(s: &str) -> Option<EventId> {
        match s.to_ascii_lowercase().as_str() {
            "e1" => Some(EventId::E1),
            "e2" => Some(EventId::E2),
            "e3" => Some(EventId::E3),
            _ => None,
        }
    }
}

impl std::fmt::Display for EventId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// An event as a subset of the eight outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventDefinition {
    pub id: EventId,
    /// members[outcome index] per the click-bit indexing.
    members: [bool; 8],
}

impl EventDefinition {
    /// Exactly one click: outcomes (−1,+1,1), (+1,−1,1), (+1,+1,0).
    pub fn e1() -> Self {
        let mut members = [false; 8];
        members[4] = true; // signal i only
        members[2] = true; // signal i+1 only
        members[1] = true; // ancilla only
        EventDefinition {
            id: EventId::E1,
            members,
        }
    }

    /// At least one click: everything except (+1,+1,1).
    pub fn e2() -> Self {
        let mut members = [true; 8];
        members[0] = false;
        EventDefinition {
            id: EventId::E2,
            members,
        }
    }

    /// All triggered trials.
    pub fn e3() -> Self {
        EventDefinition {
            id: EventId::E3,
            members: [true; 8],
        }
    }

    pub fn of(id: EventId) -> Self {
        match id {
            EventId::E1 => Self::e1(),
            EventId::E2 => Self::e2(),
            EventId::E3 => Self::e3(),
        }
    }

    pub fn contains(&self, outcome_index: usize) -> bool {
        self.members[outcome_index]
    }

    /// True when every member of `self` is a member of `other`.
    pub fn subset_of(&self, other: &EventDefinition) -> bool {
        (0..8).all(|k| !self.members[k] || other.members[k])
    }
}

/// Restrict `dist` to the event and renormalize. The returned distribution
/// records the event probability for post-selection reporting. Conditioning
/// on an event of zero probability (vacuum input under E1 or E2) is an
/// error.
pub fn condition(dist: &OutcomeDistribution, ev: EventDefinition) -> Result<OutcomeDistribution> {
    let p_ev = compensated_sum((0..8).filter(|&k| ev.members[k]).map(|k| dist.p[k]));
    if p_ev <= 0.0 {
        return Err(Error::UndefinedConditioning {
            event: ev.id.label(),
        });
    }
    let mut p = [0.0_f64; 8];
    for (k, slot) in p.iter_mut().enumerate() {
        if ev.members[k] {
            *slot = dist.p[k] / p_ev;
        }
    }
    Ok(OutcomeDistribution {
        p,
        context_index: dist.context_index,
        eta: dist.eta,
        state: dist.state.clone(),
        conditioned_on: Some((ev.id.label(), p_ev)),
    })
}

/// ⟨A_i A_{i+1}⟩ from probabilities: used by both the distribution-level
/// [`correlation`] and the counts-level analysis, so there is exactly one
/// formula in the crate.
pub fn correlation_from_probs(p_minus_i: f64, p_minus_next: f64, p_joint_minus: f64) -> f64 {
    1.0 + 4.0 * p_joint_minus - 2.0 * p_minus_i - 2.0 * p_minus_next
}

/// ⟨A_i A_{i+1}⟩ of a (normalized) outcome distribution.
///
/// Panics if the moment form and the joint-probability form disagree beyond
/// [`CORRELATION_FORM_TOL`]; they are algebraically identical for a
/// normalized distribution, so a disagreement is a bug upstream.
pub fn correlation(dist: &OutcomeDistribution) -> f64 {
    let pa = dist.p_minus_i();
    let pb = dist.p_minus_next();
    let pj = dist.p_joint_minus();
    let from_probs = correlation_from_probs(pa, pb, pj);
    let p_pp = dist.p[0] + dist.p[1];
    let p_pm = dist.p[2] + dist.p[3];
    let p_mp = dist.p[4] + dist.p[5];
    let p_mm = dist.p[6] + dist.p[7];
    let signed_sum = p_pp - p_pm - p_mp + p_mm;
    assert!(
        (from_probs - signed_sum).abs() <= CORRELATION_FORM_TOL,
        "correlation forms disagree: {from_probs} vs {signed_sum} (distribution not normalized?)"
    );
    from_probs
}

/// Click correlation g = P(−1,−1)/(P(A_i=−1)·P(A_{i+1}=−1)); 1 for
/// independent clicks, 0 for perfect antibunching. Undefined when either
/// marginal is 0.
pub fn g_correlation(dist: &OutcomeDistribution) -> Result<f64> {
    let pa = dist.p_minus_i();
    let pb = dist.p_minus_next();
    if pa <= 0.0 || pb <= 0.0 {
        return Err(Error::ZeroMarginal);
    }
    Ok(dist.p_joint_minus() / (pa * pb))
}

/// Non-contextual bound corrected for imperfect repeatability of the shared
/// observable: −3 − ε with
///
///   ε = 2[P(A₁′=−1|A₁=+1)·P(A₁=+1) + P(A₁′=+1|A₁=−1)·P(A₁=−1)].
///
/// Arguments follow the repeatability-table layout: P(A₁=−1), the flip
/// probability given −1, P(A₁=+1), the flip probability given +1.
pub fn corrected_bound(
    p_a1_minus: f64,
    p_flip_given_minus: f64,
    p_a1_plus: f64,
    p_flip_given_plus: f64,
) -> f64 {
    let eps = 2.0 * (p_flip_given_plus * p_a1_plus + p_flip_given_minus * p_a1_minus);
    -3.0 - eps
}

/// Minimum heralding efficiency at which an ideal single-photon source still
/// violates `bound`: solves 5 − 4√5·η_H = bound, i.e. (5 − bound)/(4√5).
/// For bound −3 this is 2/√5 ≈ 0.894427; for the repeatability-corrected
/// bound −3.0074 it is ≈ 0.895255.
pub fn eta_h_threshold(bound: f64) -> f64 {
    (5.0 - bound) / (4.0 * 5.0_f64.sqrt())
}

/// Per-series spread information attached to a report by the analysis layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportUncertainty {
    /// Standard error of β over series.
    pub beta_stderr: f64,
    /// Standard error of each per-context correlation over series.
    pub correlation_stderr: [f64; 5],
    /// Number of series the spread was estimated from.
    pub series: usize,
}

/// Full result of a five-context KCBS evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct KcbsReport {
    /// ⟨A_i A_{i+1}⟩ for i = 1..5 (index 0 holds context 1).
    pub correlations: [f64; 5],
    /// β = Σ correlations.
    pub beta: f64,
    /// Post-selection probability of the conditioning event per context.
    pub p_event: [f64; 5],
    /// Unweighted mean of `p_event` (the per-context values coincide for the
    /// ideal geometry).
    pub p_event_pooled: f64,
    /// Ideal non-contextual bound (−3).
    pub bound: f64,
    /// Repeatability-corrected bound, when flip probabilities were supplied.
    pub corrected_bound: Option<f64>,
    /// Click correlation g per context; `None` where a marginal vanished.
    pub g: [Option<f64>; 5],
    /// Per-series spread, when the input had repeated series.
    pub uncertainty: Option<ReportUncertainty>,
}

impl KcbsReport {
    /// Assembles a report and enforces its invariants: β is the sum of the
    /// correlations and every correlation lies in [−1, 1] (tiny floating
    /// slack allowed).
    pub fn from_parts(
        correlations: [f64; 5],
        p_event: [f64; 5],
        g: [Option<f64>; 5],
        uncertainty: Option<ReportUncertainty>,
    ) -> KcbsReport {
        for (i, c) in correlations.iter().enumerate() {
            assert!(
                (-1.0 - 1e-9..=1.0 + 1e-9).contains(c),
                "correlation {c} for context {} outside [-1, 1]",
                i + 1
            );
        }
        let beta = correlations.iter().sum();
        let p_event_pooled = p_event.iter().sum::<f64>() / 5.0;
        KcbsReport {
            correlations,
            beta,
            p_event,
            p_event_pooled,
            bound: BETA_CLASSICAL_BOUND,
            corrected_bound: None,
            g,
            uncertainty,
        }
    }

    /// Attach a repeatability-corrected bound.
    pub fn with_corrected_bound(mut self, bound: f64) -> KcbsReport {
        self.corrected_bound = Some(bound);
        self
    }

    /// The bound comparisons should use: the corrected one when present.
    pub fn effective_bound(&self) -> f64 {
        self.corrected_bound.unwrap_or(self.bound)
    }

    /// True when β violates the effective bound.
    pub fn violates_bound(&self) -> bool {
        self.beta < self.effective_bound()
    }
}

/// Evaluate β for `state` under event `ev` at detection efficiency `eta`,
/// using the exact click model in each of the five ideal contexts.
///
/// The post-selection probability is context-independent for the ideal
/// geometry; this is asserted on the computed values rather than assumed.
pub fn kcbs_beta(state: &OpticalState, ev: EventDefinition, eta: f64) -> Result<KcbsReport> {
    kcbs_beta_with_contexts(state, &all_contexts(), ev, eta)
}

/// [`kcbs_beta`] over explicit (possibly perturbed) contexts. The
/// context-independence assertion on P(event) applies only when all five
/// contexts carry the ideal split fractions.
pub fn kcbs_beta_with_contexts(
    state: &OpticalState,
    contexts: &[MeasurementContext; 5],
    ev: EventDefinition,
    eta: f64,
) -> Result<KcbsReport> {
    let mut correlations = [0.0_f64; 5];
    let mut p_event = [0.0_f64; 5];
    let mut g = [None; 5];
    for (slot, ctx) in contexts.iter().enumerate() {
        let dist = crate::click::joint_distribution_auto(state, ctx, eta)?;
        let conditioned = condition(&dist, ev)?;
        correlations[slot] = correlation(&conditioned);
        p_event[slot] = conditioned
            .conditioned_on
            .expect("condition records the event probability")
            .1;
        g[slot] = g_correlation(&conditioned).ok();
    }
    if contexts.iter().all(MeasurementContext::is_ideal) {
        let max = p_event.iter().cloned().fold(f64::MIN, f64::max);
        let min = p_event.iter().cloned().fold(f64::MAX, f64::min);
        assert!(
            max - min < 1e-9,
            "P({}) varies across ideal contexts: spread {}",
            ev.id,
            max - min
        );
    }
    Ok(KcbsReport::from_parts(correlations, p_event, g, None))
}

/// Closed-form β and post-selection probability for a coherent input of mean
/// photon number `nbar` under each event (unit detection efficiency; for
/// efficiency η evaluate at η·n̄, since a threshold detector sees only the
/// thinned intensity).
///
/// With a = e^{−n̄/√5} (signal-mode no-click amplitude) and
/// b = e^{−(1−2/√5)n̄} (ancilla no-click):
///
/// - E1: P = a²(1−b) + 2ab(1−a), β = 5[a² − 2ab + a²b]/P;
/// - E2: P = 1 − e^{−n̄},        β = 5 − 20·a(1−a)/P;
/// - E3: P = 1,                  β = 5(1 − 2a)².
///
/// The E1 numerator is evaluated in the cancellation-free form
/// (v − 2u) + u²(2 − v) with u = 1−a, v = 1−b, which stays accurate down to
/// n̄ ~ 1e-12 where the naive form loses every significant digit.
pub fn coherent_beta_closed_form(nbar: f64, ev: EventDefinition) -> Result<(f64, f64)> {
    if nbar < 0.0 || !nbar.is_finite() {
        return Err(Error::InvalidState(format!(
            "coherent mean photon number {nbar} must be finite and >= 0"
        )));
    }
    let s5 = 5.0_f64.sqrt();
    let u = -(-nbar / s5).exp_m1(); // 1 - a
    let v = -(-(1.0 - 2.0 / s5) * nbar).exp_m1(); // 1 - b
    let a = 1.0 - u;
    let b = 1.0 - v;
    match ev.id {
        EventId::E3 => Ok((5.0 * (1.0 - 2.0 * a) * (1.0 - 2.0 * a), 1.0)),
        EventId::E2 => {
            let p = -(-nbar).exp_m1();
            if p <= 0.0 {
                return Err(Error::UndefinedConditioning { event: "E2" });
            }
            Ok((5.0 - 20.0 * a * u / p, p))
        }
        EventId::E1 => {
            let p = a * a * v + 2.0 * a * b * u;
            if p <= 0.0 {
                return Err(Error::UndefinedConditioning { event: "E1" });
            }
            let numerator = (v - 2.0 * u) + u * u * (2.0 - v);
            Ok((5.0 * numerator / p, p))
        }
    }
}
