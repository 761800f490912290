//! Input optical states, their photon-number distributions, and loss.
//!
//! Four families cover everything the toolkit needs: coherent states |α⟩,
//! Fock states |n⟩, single-mode thermal states, and finite classical mixtures
//! of the other three. Every downstream click statistic depends on a state
//! only through its photon-number distribution, so that distribution, plus a
//! binomial loss channel that commutes with the network, is the whole
//! contract of this module.
//!
//! The coherent amplitude is stored as a complex number for completeness, but
//! only |α|² ever enters a computed quantity; threshold detectors are blind
//! to the phase.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Relative slack accepted for mixture weights at construction; weights are
/// rescaled to sum to exactly 1 afterwards.
pub const MIXTURE_WEIGHT_TOL: f64 = 1e-9;

/// Photon-number tail mass that may be silently dropped by the adaptive
/// truncation rule. Anything larger is a hard error.
pub const TAIL_BOUND: f64 = 1e-12;

/// Cap on the adaptive truncation cutoff. A Poisson or geometric distribution
/// at the intensities this toolkit works with (n̄ ≤ a few) is far below
/// [`TAIL_BOUND`] well before 200 photons.
pub const N_MAX_CAP: usize = 200;

/// A single-mode optical input state.
///
/// Construct through [`OpticalState::coherent`], [`OpticalState::fock`],
/// [`OpticalState::thermal`] or [`OpticalState::mixture`]; the mixture
/// constructor flattens nested mixtures and normalizes weights, which the
/// rest of the crate relies on.
#[derive(Debug, Clone, PartialEq)]
pub enum OpticalState {
    /// Coherent state |α⟩ with Poissonian photon statistics, mean |α|².
    Coherent { alpha: Complex64 },
    /// Number state |n⟩.
    Fock { n: u32 },
    /// Thermal state with mean photon number n̄ (geometric statistics).
    Thermal { nbar: f64 },
    /// Classical mixture; weights are nonnegative, sum to 1, and components
    /// are never themselves mixtures.
    Mixture { parts: Vec<(f64, OpticalState)> },
}

impl OpticalState {
    /// Coherent state of mean photon number `nbar` (real positive amplitude).
    pub fn coherent(nbar: f64) -> Result<Self> {
        if nbar < 0.0 || !nbar.is_finite() {
            return Err(Error::InvalidState(format!(
                "coherent mean photon number {nbar} must be finite and >= 0"
            )));
        }
        Ok(OpticalState::Coherent {
            alpha: Complex64::new(nbar.sqrt(), 0.0),
        })
    }

    /// Coherent state with an explicit complex amplitude.
    pub fn coherent_amplitude(alpha: Complex64) -> Result<Self> {
        if !alpha.re.is_finite() || !alpha.im.is_finite() {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        Ok(OpticalState::Coherent { alpha })
    }

    /// Number state |n⟩.
    pub fn fock(n: u32) -> Self {
        OpticalState::Fock { n }
    }

    /// Thermal state of mean photon number `nbar`.
    pub fn thermal(nbar: f64) -> Result<Self> {
        if nbar < 0.0 || !nbar.is_finite() {
            return Err(Error::InvalidState(format!(
                "thermal mean photon number {nbar} must be finite and >= 0"
            )));
        }
        Ok(OpticalState::Thermal { nbar })
    }

    /// Classical mixture of `parts`. Nested mixtures are flattened, weights
    /// must be nonnegative and sum to 1 within [`MIXTURE_WEIGHT_TOL`]; after
    /// validation they are rescaled to sum to 1 exactly. A single surviving
    /// component collapses to that component.
    pub fn mixture(parts: Vec<(f64, OpticalState)>) -> Result<Self> {
        let mut flat: Vec<(f64, OpticalState)> = Vec::with_capacity(parts.len());
        let mut stack: Vec<(f64, OpticalState)> = parts.into_iter().rev().collect();
        while let Some((w, s)) = stack.pop() {
            if w < 0.0 || !w.is_finite() {
                return Err(Error::InvalidState(format!(
                    "mixture weight {w} must be finite and >= 0"
                )));
            }
            match s {
                OpticalState::Mixture { parts } => {
                    for (wi, si) in parts.into_iter().rev() {
                        stack.push((w * wi, si));
                    }
                }
                other => flat.push((w, other)),
            }
        }
        if flat.is_empty() {
            return Err(Error::InvalidState("mixture has no components".into()));
        }
        let total = compensated_sum(flat.iter().map(|(w, _)| *w));
        if (total - 1.0).abs() > MIXTURE_WEIGHT_TOL {
            return Err(Error::InvalidState(format!(
                "mixture weights sum to {total}, expected 1 within {MIXTURE_WEIGHT_TOL:e}"
            )));
        }
        for (w, _) in &mut flat {
            *w /= total;
        }
        if flat.len() == 1 {
            return Ok(flat.pop().expect("one component").1);
        }
        Ok(OpticalState::Mixture { parts: flat })
    }

    /// Mean photon number of the state.
    pub fn mean_photon_number(&self) -> f64 {
        match self {
            OpticalState::Coherent { alpha } => alpha.norm_sqr(),
            OpticalState::Fock { n } => f64::from(*n),
            OpticalState::Thermal { nbar } => *nbar,
            OpticalState::Mixture { parts } => {
                compensated_sum(parts.iter().map(|(w, s)| w * s.mean_photon_number()))
            }
        }
    }

    /// Checks the invariants the named constructors establish. Useful when a
    /// state was built by pattern construction or deserialized.
    pub fn validate(&self) -> Result<()> {
        match self {
            OpticalState::Coherent { alpha } => {
                if alpha.re.is_finite() && alpha.im.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidState("non-finite amplitude".into()))
                }
            }
            OpticalState::Fock { .. } => Ok(()),
            OpticalState::Thermal { nbar } => {
                if *nbar >= 0.0 && nbar.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidState(format!(
                        "thermal mean photon number {nbar} must be finite and >= 0"
                    )))
                }
            }
            OpticalState::Mixture { parts } => {
                if parts.is_empty() {
                    return Err(Error::InvalidState("mixture has no components".into()));
                }
                for (w, s) in parts {
                    if *w < 0.0 || !w.is_finite() {
                        return Err(Error::InvalidState(format!(
                            "mixture weight {w} must be finite and >= 0"
                        )));
                    }
                    if matches!(s, OpticalState::Mixture { .. }) {
                        return Err(Error::InvalidState(
                            "mixture contains a nested mixture; use OpticalState::mixture".into(),
                        ));
                    }
                    s.validate()?;
                }
                let total = compensated_sum(parts.iter().map(|(w, _)| *w));
                if (total - 1.0).abs() > MIXTURE_WEIGHT_TOL {
                    return Err(Error::InvalidState(format!(
                        "mixture weights sum to {total}, expected 1"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Short human-readable descriptor, used in distribution metadata.
    pub fn describe(&self) -> String {
        match self {
            OpticalState::Coherent { alpha } => format!("coherent(nbar={})", alpha.norm_sqr()),
            OpticalState::Fock { n } => format!("fock({n})"),
            OpticalState::Thermal { nbar } => format!("thermal(nbar={nbar})"),
            OpticalState::Mixture { parts } => {
                let inner: Vec<String> = parts
                    .iter()
                    .map(|(w, s)| format!("{w:.6}*{}", s.describe()))
                    .collect();
                format!("mixture[{}]", inner.join(" + "))
            }
        }
    }
}

/// Truncated photon-number distribution of a state.
///
/// `probs[n]` is the probability of exactly `n` photons for `n <= n_max`;
/// `tail_mass` is the probability beyond the cutoff, so the entries and the
/// tail always account for all of the probability (within 1e-10).
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonNumberDistribution {
    pub probs: Vec<f64>,
    pub n_max: usize,
    pub tail_mass: f64,
}

impl PhotonNumberDistribution {
    /// Mean of the truncated part (exact when `tail_mass` is negligible).
    pub fn mean(&self) -> f64 {
        compensated_sum(self.probs.iter().enumerate().map(|(n, p)| n as f64 * p))
    }

    /// Binomial thinning: each photon independently survives with
    /// probability `eta`. This is what a beam splitter of transmission `eta`
    /// does to photon statistics.
    pub fn thin(&self, eta: f64) -> Result<PhotonNumberDistribution> {
        check_eta(eta)?;
        let mut probs = vec![0.0_f64; self.probs.len()];
        for (n, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            // Binomial(n, eta) row, built by the stable multiplicative
            // recurrence along k.
            let mut term = p * (1.0 - eta).powi(n as i32);
            if eta == 1.0 {
                probs[n] += p;
                continue;
            }
            let ratio = eta / (1.0 - eta);
            probs[0] += term;
            for (k, slot) in probs.iter_mut().enumerate().take(n + 1).skip(1) {
                term *= ratio * ((n - k + 1) as f64) / (k as f64);
                *slot += term;
            }
        }
        Ok(PhotonNumberDistribution {
            probs,
            n_max: self.n_max,
            tail_mass: self.tail_mass,
        })
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

/// Exact photon-number distribution of `state`, truncated at `n_max`.
///
/// Coherent states give Poisson(|α|²), Fock states a point mass, thermal
/// states the geometric law n̄ⁿ/(1+n̄)ⁿ⁺¹, mixtures the weighted sum.
/// `tail_mass` is 1 minus the retained sum; no error is raised here, so the
/// caller decides how much tail is acceptable (see [`auto_n_max`]).
pub fn photon_number_distribution(
    state: &OpticalState,
    n_max: usize,
) -> Result<PhotonNumberDistribution> {
    state.validate()?;
    let mut probs = vec![0.0_f64; n_max + 1];
    accumulate_pnd(state, 1.0, &mut probs);
    let tail_mass = (1.0 - compensated_sum(probs.iter().copied())).max(0.0);
    Ok(PhotonNumberDistribution {
        probs,
        n_max,
        tail_mass,
    })
}

fn accumulate_pnd(state: &OpticalState, weight: f64, probs: &mut [f64]) {
    match state {
        OpticalState::Coherent { alpha } => {
            let nbar = alpha.norm_sqr();
            // Poisson terms by recurrence; exact at n = 0 and stable upward.
            let mut term = (-nbar).exp();
            for (n, slot) in probs.iter_mut().enumerate() {
                if n > 0 {
                    term *= nbar / n as f64;
                }
                *slot += weight * term;
            }
        }
        OpticalState::Fock { n } => {
            if (*n as usize) < probs.len() {
                probs[*n as usize] += weight;
            }
        }
        OpticalState::Thermal { nbar } => {
            let q = nbar / (1.0 + nbar);
            let mut term = 1.0 / (1.0 + nbar);
            for (n, slot) in probs.iter_mut().enumerate() {
                if n > 0 {
                    term *= q;
                }
                *slot += weight * term;
            }
        }
        OpticalState::Mixture { parts } => {
            for (w, s) in parts {
                accumulate_pnd(s, weight * w, probs);
            }
        }
    }
}

/// Smallest truncation cutoff with tail mass below [`TAIL_BOUND`], capped at
/// [`N_MAX_CAP`]. For a Fock state this is its photon number; for the other
/// families the tail shrinks at least geometrically, so a linear scan of the
/// closed-form tails is cheap.
pub fn auto_n_max(state: &OpticalState) -> usize {
    fn single(state: &OpticalState) -> usize {
        match state {
            OpticalState::Fock { n } => (*n as usize).min(N_MAX_CAP),
            OpticalState::Coherent { alpha } => {
                let nbar = alpha.norm_sqr();
                let mut term = (-nbar).exp();
                let mut cum = term;
                for n in 1..=N_MAX_CAP {
                    term *= nbar / n as f64;
                    cum += term;
                    if 1.0 - cum < TAIL_BOUND {
                        return n;
                    }
                }
                N_MAX_CAP
            }
            OpticalState::Thermal { nbar } => {
                if *nbar == 0.0 {
                    return 0;
                }
                let q = nbar / (1.0 + nbar);
                // Tail after n is q^{n+1}.
                let n = (TAIL_BOUND.ln() / q.ln() - 1.0).ceil().max(0.0) as usize;
                n.min(N_MAX_CAP)
            }
            OpticalState::Mixture { .. } => unreachable!("mixtures handled by caller"),
        }
    }
    match state {
        OpticalState::Mixture { parts } => parts
            .iter()
            .map(|(_, s)| single(s))
            .max()
            .unwrap_or(N_MAX_CAP),
        other => single(other),
    }
}

/// Pure loss of transmission `eta`, applied in the state picture.
///
/// Coherent states stay coherent with amplitude √η·α, thermal states stay
/// thermal with mean ηn̄, a Fock state becomes the binomial mixture of lower
/// number states, and mixtures transform memberwise.
pub fn apply_loss(state: &OpticalState, eta: f64) -> Result<OpticalState> {
    check_eta(eta)?;
    state.validate()?;
    Ok(match state {
        OpticalState::Coherent { alpha } => OpticalState::Coherent {
            alpha: alpha * eta.sqrt(),
        },
        OpticalState::Thermal { nbar } => OpticalState::Thermal { nbar: eta * nbar },
        OpticalState::Fock { n } => {
            let n = *n;
            if n == 0 || eta == 1.0 {
                return Ok(OpticalState::Fock { n });
            }
            let mut parts = Vec::with_capacity(n as usize + 1);
            let mut term = (1.0 - eta).powi(n as i32);
            for k in 0..=n {
                if k > 0 {
                    term *= (eta / (1.0 - eta)) * ((n - k + 1) as f64) / (k as f64);
                }
                parts.push((term, OpticalState::Fock { n: k }));
            }
            OpticalState::mixture(parts)?
        }
        OpticalState::Mixture { parts } => {
            let mut out = Vec::with_capacity(parts.len());
            for (w, s) in parts {
                out.push((*w, apply_loss(s, eta)?));
            }
            OpticalState::mixture(out)?
        }
    })
}
