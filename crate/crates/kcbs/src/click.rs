//! Exact joint click statistics of the three threshold detectors.
//!
//! A threshold detector distinguishes only vacuum from at-least-one photon.
//! With detection efficiency η, a mode carrying k photons clicks with
//! probability 1 − (1−η)^k; a coherent mode of intensity u clicks with
//! probability 1 − e^{−ηu}.
//!
//! Outcomes are triples (a_i, a_{i+1}, a_anc) ∈ {±1}×{±1}×{0,1}: a signal
//! value of −1 means the corresponding detector clicked, and a_anc = 0 means
//! the ancilla detector clicked. The eight outcomes are indexed by the click
//! bits, `index = ci·4 + cj·2 + canc`.
//!
//! Coherent inputs split into three independent coherent modes, so their
//! joint distribution factorizes over detectors. Everything else (Fock,
//! thermal, mixtures) is propagated in the photon-number basis: draw n from
//! the input's number distribution, place the n photons multinomially on the
//! three modes, and apply the threshold rule per mode. A thermal input split
//! three ways is classically correlated between outputs, which the
//! number-basis route captures and a naive independent-mode treatment would
//! not; [`verify_coherent_factorization`] cross-checks the two routes where
//! they must agree.

use crate::error::{Error, Result};
use crate::network::MeasurementContext;
use crate::numeric::compensated_sum;
use crate::states::{
    auto_n_max, photon_number_distribution, OpticalState, PhotonNumberDistribution, TAIL_BOUND,
};

/// Normalization slack allowed for a full outcome distribution.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Outcome index from click flags (signal i, signal i+1, ancilla).
pub fn outcome_index(click_i: bool, click_next: bool, click_anc: bool) -> usize {
    (click_i as usize) << 2 | (click_next as usize) << 1 | (click_anc as usize)
}

/// One outcome in measurement-value form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    /// A_i value; −1 iff its detector clicked.
    pub a_i: i8,
    /// A_{i+1} value; −1 iff its detector clicked.
    pub a_next: i8,
    /// Ancilla flag; 0 iff the ancilla detector clicked.
    pub a_anc: u8,
}

impl Outcome {
    /// Outcome for a distribution-array index in 0..8.
    pub fn from_index(index: usize) -> Outcome {
        assert!(index < 8, "outcome index {index} out of range");
        Outcome {
            a_i: if index & 4 != 0 { -1 } else { 1 },
            a_next: if index & 2 != 0 { -1 } else { 1 },
            a_anc: if index & 1 != 0 { 0 } else { 1 },
        }
    }

    /// Inverse of [`Outcome::from_index`].
    pub fn index(&self) -> usize {
        outcome_index(self.a_i == -1, self.a_next == -1, self.a_anc == 0)
    }

    /// Number of detectors that clicked in this outcome.
    pub fn click_count(&self) -> u32 {
        (self.a_i == -1) as u32 + (self.a_next == -1) as u32 + (self.a_anc == 0) as u32
    }
}

/// Probabilities over the eight click outcomes of one context, with the
/// metadata needed to interpret them.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    /// p[outcome index]; see [`outcome_index`].
    pub p: [f64; 8],
    /// Context the distribution belongs to.
    pub context_index: usize,
    /// Detection efficiency the distribution was computed at.
    pub eta: f64,
    /// Human-readable input-state descriptor.
    pub state: String,
    /// Set by event conditioning: (event label, probability of the event
    /// under the pre-conditioning distribution).
    pub conditioned_on: Option<(&'static str, f64)>,
}

impl OutcomeDistribution {
    /// Marginal P(A_i = −1), summed over the other detectors.
    pub fn p_minus_i(&self) -> f64 {
        self.p[4] + self.p[5] + self.p[6] + self.p[7]
    }

    /// Marginal P(A_{i+1} = −1).
    pub fn p_minus_next(&self) -> f64 {
        self.p[2] + self.p[3] + self.p[6] + self.p[7]
    }

    /// Joint P(A_i = −1, A_{i+1} = −1), summed over the ancilla.
    pub fn p_joint_minus(&self) -> f64 {
        self.p[6] + self.p[7]
    }

    /// Marginal probability that the ancilla detector clicked (a_anc = 0).
    pub fn p_anc_click(&self) -> f64 {
        self.p[1] + self.p[3] + self.p[5] + self.p[7]
    }

    /// Sum of all eight probabilities.
    pub fn total(&self) -> f64 {
        compensated_sum(self.p.iter().copied())
    }

    /// Errors unless the entries are nonnegative and sum to 1 within
    /// [`NORMALIZATION_TOL`].
    pub fn check_normalization(&self) -> Result<()> {
        if self.p.iter().any(|&x| x < 0.0) {
            return Err(Error::InvalidState(
                "outcome distribution has a negative entry".into(),
            ));
        }
        let total = self.total();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidState(format!(
                "outcome distribution sums to {total}"
            )));
        }
        Ok(())
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eta) {
        Ok(())
    } else {
        Err(Error::Range {
            name: "eta",
            value: eta,
            min: 0.0,
            max: 1.0,
        })
    }
}

/// Joint outcome distribution for a Fock input |n⟩: photons are placed
/// multinomially on the three modes, then each mode clicks independently
/// given its occupation. Exact in linear arithmetic.
fn fock_outcomes(n: usize, fractions: [f64; 3], eta: f64) -> [f64; 8] {
    let [f1, f2, f3] = fractions;
    let mut out = [0.0_f64; 8];
    // no_click[k] = (1-eta)^k
    let mut no_click = vec![1.0_f64; n + 1];
    for k in 1..=n {
        no_click[k] = no_click[k - 1] * (1.0 - eta);
    }
    // Multinomial as a binomial chain: k1 ~ B(n, f1), k2 | k1 ~ B(n-k1, f2/(1-f1)).
    let mut p1 = (1.0 - f1).powi(n as i32);
    for k1 in 0..=n {
        if k1 > 0 {
            p1 *= (f1 / (1.0 - f1)) * ((n - k1 + 1) as f64) / (k1 as f64);
        }
        let rem = n - k1;
        let denom = 1.0 - f1;
        let cond = if denom > 0.0 {
            (f2 / denom).min(1.0)
        } else {
            0.0
        };
        let mut p2 = (1.0 - cond).powi(rem as i32);
        for k2 in 0..=rem {
            if k2 > 0 {
                p2 *= (cond / (1.0 - cond)) * ((rem - k2 + 1) as f64) / (k2 as f64);
            }
            let k3 = rem - k2;
            let w = p1 * p2;
            if w == 0.0 {
                continue;
            }
            let q = [no_click[k1], no_click[k2], no_click[k3]];
            for (idx, slot) in out.iter_mut().enumerate() {
                let c = [(idx & 4) != 0, (idx & 2) != 0, (idx & 1) != 0];
                let mut pr = w;
                for m in 0..3 {
                    pr *= if c[m] { 1.0 - q[m] } else { q[m] };
                }
                *slot += pr;
            }
            let _ = f3; // k3 is forced; f3 enters through 1 - f1 - f2
        }
    }
    out
}

/// Joint outcome distribution of an input with a given photon-number
/// distribution: the number-basis route, usable for any state whose click
/// statistics depend only on photon number (true for every threshold-detector
/// observable in this crate). The caller owns truncation policy; the result
/// sums to 1 − `pnd.tail_mass`.
pub fn joint_distribution_pnd(
    pnd: &PhotonNumberDistribution,
    ctx: &MeasurementContext,
    eta: f64,
) -> Result<OutcomeDistribution> {
    check_eta(eta)?;
    let mut totals = [0.0_f64; 8];
    for (n, &pn) in pnd.probs.iter().enumerate() {
        if pn == 0.0 {
            continue;
        }
        let dist = fock_outcomes(n, ctx.split_fractions, eta);
        for (slot, value) in dist.iter().enumerate() {
            totals[slot] += pn * value;
        }
    }
    Ok(OutcomeDistribution {
        p: totals,
        context_index: ctx.index,
        eta,
        state: format!("pnd(n_max={})", pnd.n_max),
        conditioned_on: None,
    })
}

/// Joint outcome distribution of `state` in `ctx` at efficiency `eta`.
///
/// Coherent inputs use the factorized product form (exact, independent of
/// `n_max`); all other variants are expanded in the number basis up to
/// `n_max` and a tail mass above the truncation bound is an error carrying
/// that mass.
pub fn joint_distribution(
    state: &OpticalState,
    ctx: &MeasurementContext,
    eta: f64,
    n_max: usize,
) -> Result<OutcomeDistribution> {
    check_eta(eta)?;
    state.validate()?;
    if let OpticalState::Coherent { alpha } = state {
        let nbar = alpha.norm_sqr();
        let click: Vec<f64> = ctx
            .split_fractions
            .iter()
            .map(|f| -(-eta * f * nbar).exp_m1())
            .collect();
        let mut p = [0.0_f64; 8];
        for (idx, slot) in p.iter_mut().enumerate() {
            let c = [(idx & 4) != 0, (idx & 2) != 0, (idx & 1) != 0];
            let mut pr = 1.0;
            for m in 0..3 {
                pr *= if c[m] { click[m] } else { 1.0 - click[m] };
            }
            *slot = pr;
        }
        let dist = OutcomeDistribution {
            p,
            context_index: ctx.index,
            eta,
            state: state.describe(),
            conditioned_on: None,
        };
        dist.check_normalization()?;
        return Ok(dist);
    }
    let pnd = photon_number_distribution(state, n_max)?;
    if pnd.tail_mass > TAIL_BOUND {
        return Err(Error::Truncation {
            tail: pnd.tail_mass,
            bound: TAIL_BOUND,
        });
    }
    let mut dist = joint_distribution_pnd(&pnd, ctx, eta)?;
    dist.state = state.describe();
    dist.check_normalization()?;
    Ok(dist)
}

/// [`joint_distribution`] with the truncation cutoff picked automatically.
pub fn joint_distribution_auto(
    state: &OpticalState,
    ctx: &MeasurementContext,
    eta: f64,
) -> Result<OutcomeDistribution> {
    joint_distribution(state, ctx, eta, auto_n_max(state))
}

/// Cross-check that the factorized coherent-state route agrees with the
/// number-basis route: returns true iff every outcome probability matches
/// within 1e-8.
pub fn verify_coherent_factorization(
    nbar: f64,
    ctx: &MeasurementContext,
    eta: f64,
) -> Result<bool> {
    let state = OpticalState::coherent(nbar)?;
    let product = joint_distribution(&state, ctx, eta, 0)?;
    let pnd = photon_number_distribution(&state, auto_n_max(&state))?;
    let expanded = joint_distribution_pnd(&pnd, ctx, eta)?;
    let max_diff = product
        .p
        .iter()
        .zip(expanded.p.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    Ok(max_diff < 1e-8)
}
