//! Trigger-by-trigger Monte Carlo of the detection network.
//!
//! Each trigger sends one copy of the input state through a context's
//! three-way split and records which physical detectors clicked. Counts are
//! accumulated exactly the way the experiment's counters do: per-detector
//! singles C1..C3, pairwise coincidences C12/C13/C23, the triple C123, and
//! the number of triggers NT. Event reconstruction from these counters is
//! the analysis module's job; this module only produces them.
//!
//! Randomness is counter-based so results are reproducible and
//! order-independent: one ChaCha8 generator seeded with the run seed, the
//! stream id encoding (series, context), and the word position reset to
//! `trial * 512` at the start of every trigger. A trigger consumes at most
//! 201 draws (one photon-number draw plus one routing draw per photon,
//! capped by the number-basis truncation), so 512 words of headroom keep
//! trials from overlapping. Any (context, series) cell therefore yields
//! bit-identical counts no matter which other cells are simulated, in what
//! order, or on how many threads.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::{all_contexts, MeasurementContext};
use crate::states::{auto_n_max, photon_number_distribution, OpticalState, TAIL_BOUND};

/// Triggers per series used by default, matching the per-setting trigger
/// budget of the dataset shipped with this crate.
pub const DEFAULT_TRIGGERS: u64 = 2_591_146;

/// Words of ChaCha8 output reserved per trigger.
const WORDS_PER_TRIAL: u128 = 512;

/// Full description of a simulation run.
#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub state: OpticalState,
    /// Detection efficiency applied identically to all three detectors.
    pub eta: f64,
    /// Contexts to simulate, typically all five.
    pub contexts: Vec<MeasurementContext>,
    pub triggers_per_series: u64,
    /// Number of repeated series per context (for scatter-based errors).
    pub series: u32,
    pub seed: u64,
    /// Route coherent inputs through the photon-number sampler instead of
    /// the per-mode Bernoulli shortcut. Statistics are unchanged; the flag
    /// exists to cross-check the two samplers against each other.
    pub force_number_basis: bool,
}

impl TrialConfig {
    /// Config with the standard five contexts, one series of
    /// [`DEFAULT_TRIGGERS`] triggers, and a fixed seed.
    pub fn new(state: OpticalState, eta: f64) -> Self {
        TrialConfig {
            state,
            eta,
            contexts: all_contexts().to_vec(),
            triggers_per_series: DEFAULT_TRIGGERS,
            series: 1,
            seed: 1,
            force_number_basis: false,
        }
    }

    fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::Range {
                name: "eta",
                value: self.eta,
                min: 0.0,
                max: 1.0,
            });
        }
        if self.triggers_per_series == 0 {
            return Err(Error::InvalidState(
                "triggers_per_series must be positive".into(),
            ));
        }
        if self.series == 0 {
            return Err(Error::InvalidState("series count must be positive".into()));
        }
        if self.contexts.is_empty() {
            return Err(Error::InvalidState("no contexts to simulate".into()));
        }
        self.state.validate()
    }
}

/// Raw counter readings of one (context, series) cell. Subscripts name
/// physical detectors: C12 is the D1·D2 coincidence within one trigger.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountsSeries {
    /// Context index in 1..=5.
    pub context: usize,
    /// Series number, 1-based.
    pub series: u32,
    pub c1: u64,
    pub c2: u64,
    pub c3: u64,
    pub c12: u64,
    pub c13: u64,
    pub c23: u64,
    pub c123: u64,
    pub n_t: u64,
}

impl CountsSeries {
    /// Monotonicity every physical counter bank obeys: the triple is
    /// bounded by each pair, each pair by both of its singles, each single
    /// by the trigger count.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InconsistentCounts(msg));
        for (name, pair, a, b) in [
            ("C12", self.c12, self.c1, self.c2),
            ("C13", self.c13, self.c1, self.c3),
            ("C23", self.c23, self.c2, self.c3),
        ] {
            if pair > a.min(b) {
                return fail(format!(
                    "{name}={pair} exceeds one of its singles ({a}, {b})"
                ));
            }
            if self.c123 > pair {
                return fail(format!("C123={} exceeds {name}={pair}", self.c123));
            }
        }
        for (name, single) in [("C1", self.c1), ("C2", self.c2), ("C3", self.c3)] {
            if single > self.n_t {
                return fail(format!("{name}={single} exceeds NT={}", self.n_t));
            }
        }
        Ok(())
    }
}

/// How one trigger is sampled.
enum Route {
    /// Independent per-role click probabilities (coherent input only).
    Product([f64; 3]),
    /// Draw a photon number from `cdf`, then route each photon with the
    /// thresholds `t`: below t[0] the photon is lost, then role 0, 1, 2.
    Number { cdf: Vec<f64>, t: [f64; 3] },
}

fn build_route(config: &TrialConfig, ctx: &MeasurementContext) -> Result<Route> {
    let [f0, f1, _] = ctx.split_fractions;
    if let OpticalState::Coherent { alpha } = &config.state {
        if !config.force_number_basis {
            let nbar = alpha.norm_sqr();
            let p = ctx
                .split_fractions
                .map(|f| -(-config.eta * f * nbar).exp_m1());
            return Ok(Route::Product(p));
        }
    }
    let pnd = photon_number_distribution(&config.state, auto_n_max(&config.state))?;
    if pnd.tail_mass > TAIL_BOUND {
        return Err(Error::Truncation {
            tail: pnd.tail_mass,
            bound: TAIL_BOUND,
        });
    }
    let mut cdf = Vec::with_capacity(pnd.probs.len());
    let mut acc = 0.0;
    for p in &pnd.probs {
        acc += p;
        cdf.push(acc);
    }
    let eta = config.eta;
    Ok(Route::Number {
        cdf,
        t: [1.0 - eta, 1.0 - eta + eta * f0, 1.0 - eta + eta * (f0 + f1)],
    })
}

/// Per-role click pattern of a single trigger, as an outcome index
/// (see [`crate::click::outcome_index`]).
fn run_trial(route: &Route, rng: &mut ChaCha8Rng) -> usize {
    match route {
        Route::Product(p) => {
            let mut idx = 0usize;
            for (role, &pm) in p.iter().enumerate() {
                if rng.gen::<f64>() < pm {
                    idx |= 4 >> role;
                }
            }
            idx
        }
        Route::Number { cdf, t } => {
            let u = rng.gen::<f64>();
            // Smallest n with CDF(n) > u; the truncated tail (mass below
            // TAIL_BOUND) falls on the last retained occupation.
            let n = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            let mut idx = 0usize;
            for _ in 0..n {
                let v = rng.gen::<f64>();
                if v < t[0] {
                    continue; // photon lost
                }
                let role = if v < t[1] {
                    0
                } else if v < t[2] {
                    1
                } else {
                    2
                };
                idx |= 4 >> role;
            }
            idx
        }
    }
}

fn rng_for(seed: u64, series_number: u32, context_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((series_number as u64 - 1) << 3) | (context_index as u64 - 1));
    rng
}

/// Simulate one (context, series) cell and tally the per-role click
/// patterns. Index semantics match the click model, so these tallies can be
/// compared bin-by-bin against an exact [`crate::click::OutcomeDistribution`].
pub fn sample_outcomes(
    config: &TrialConfig,
    ctx: &MeasurementContext,
    series_number: u32,
) -> Result<[u64; 8]> {
    config.check()?;
    if series_number == 0 || series_number > config.series {
        return Err(Error::InvalidState(format!(
            "series number {series_number} outside 1..={}",
            config.series
        )));
    }
    let route = build_route(config, ctx)?;
    let mut rng = rng_for(config.seed, series_number, ctx.index);
    let mut tally = [0u64; 8];
    for trial in 0..config.triggers_per_series {
        rng.set_word_pos(trial as u128 * WORDS_PER_TRIAL);
        tally[run_trial(&route, &mut rng)] += 1;
    }
    Ok(tally)
}

fn tally_to_counts(
    tally: &[u64; 8],
    ctx: &MeasurementContext,
    series_number: u32,
    n_t: u64,
) -> CountsSeries {
    // Role bits to physical-detector bits via the context wiring.
    let mut phys = [0u64; 8];
    for (idx, &t) in tally.iter().enumerate() {
        if t == 0 {
            continue;
        }
        let mut bits = [false; 3];
        if idx & 4 != 0 {
            bits[ctx.detector_roles.a_i.index()] = true;
        }
        if idx & 2 != 0 {
            bits[ctx.detector_roles.a_next.index()] = true;
        }
        if idx & 1 != 0 {
            bits[ctx.detector_roles.anc.index()] = true;
        }
        let p = (bits[0] as usize) << 2 | (bits[1] as usize) << 1 | (bits[2] as usize);
        phys[p] += t;
    }
    let on = |mask: usize| {
        phys.iter()
            .enumerate()
            .filter(|(i, _)| i & mask == mask)
            .map(|(_, &v)| v)
            .sum::<u64>()
    };
    CountsSeries {
        context: ctx.index,
        series: series_number,
        c1: on(4),
        c2: on(2),
        c3: on(1),
        c12: on(6),
        c13: on(5),
        c23: on(3),
        c123: on(7),
        n_t,
    }
}

/// Run the full simulation: every context in `config.contexts`, every
/// series, context-major order. Each returned row passes
/// [`CountsSeries::validate`] by construction.
pub fn simulate_counts(config: &TrialConfig) -> Result<Vec<CountsSeries>> {
    config.check()?;
    let mut rows = Vec::with_capacity(config.contexts.len() * config.series as usize);
    for ctx in &config.contexts {
        for s in 1..=config.series {
            let tally = sample_outcomes(config, ctx, s)?;
            rows.push(tally_to_counts(&tally, ctx, s, config.triggers_per_series));
        }
    }
    Ok(rows)
}

/// Second-order coherence at zero delay from raw counters:
/// g²(0) = C_ab·N_T / (C_a·C_b).
pub fn estimate_g2(c_a: u64, c_b: u64, c_ab: u64, n_t: u64) -> Result<f64> {
    if n_t == 0 {
        return Err(Error::InconsistentCounts(
            "g2 estimate over zero triggers".into(),
        ));
    }
    if c_a == 0 || c_b == 0 {
        return Err(Error::ZeroMarginal);
    }
    Ok(c_ab as f64 * n_t as f64 / (c_a as f64 * c_b as f64))
}

/// Fraction of triggers producing any click at a given detector, summed
/// over detectors: the heralding-efficiency estimator ΣC_i/N_T used for
/// heralded single-photon sources (multi-photon terms are negligible
/// there).
pub fn estimate_heralding_efficiency(counts: &CountsSeries) -> Result<f64> {
    if counts.n_t == 0 {
        return Err(Error::InconsistentCounts(
            "efficiency estimate over zero triggers".into(),
        ));
    }
    Ok((counts.c1 + counts.c2 + counts.c3) as f64 / counts.n_t as f64)
}

/// Detected mean photon number of a coherent input reconstructed from the
/// three singles rates: each mode is Poissonian, so
/// n̄_det = Σ_i ln 1/(1 − C_i/N_T). A saturated counter (rate 1) has no
/// finite inverse and is reported as an error.
pub fn estimate_nbar(counts: &CountsSeries) -> Result<f64> {
    if counts.n_t == 0 {
        return Err(Error::InconsistentCounts(
            "intensity estimate over zero triggers".into(),
        ));
    }
    let mut total = 0.0;
    for c in [counts.c1, counts.c2, counts.c3] {
        let rate = c as f64 / counts.n_t as f64;
        if rate >= 1.0 {
            return Err(Error::Saturation { rate });
        }
        total += -(-rate).ln_1p(); // ln(1/(1-rate))
    }
    Ok(total)
}

/// Counter-table header shared by the simulator output and the analysis
/// input.
pub const COUNTS_CSV_HEADER: &str = "context,series,C1,C2,C3,C12,C13,C23,C123,NT";

/// Counts table in CSV form.
pub fn counts_csv_string(rows: &[CountsSeries]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(COUNTS_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.context, r.series, r.c1, r.c2, r.c3, r.c12, r.c13, r.c23, r.c123, r.n_t
        ));
    }
    out
}

/// Write a counts table to `path` in CSV form.
pub fn write_counts_csv(path: &Path, rows: &[CountsSeries]) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(counts_csv_string(rows).as_bytes())
        .map_err(io_err)?;
    Ok(())
}
