//! Count-table ingestion and event-class analysis.
//!
//! Raw counter banks record singles C1..C3, pairwise coincidences
//! C12/C13/C23, the triple C123, and the trigger total NT per context and
//! series. Event classes are reconstructed by inclusion–exclusion:
//!
//!   N_E2 = ΣC_i − ΣC_ij + C123          (at least one click)
//!   N_E1 = ΣC_i − 2ΣC_ij + 3·C123       (exactly one click)
//!   exactly-one at D = C_D − C_Dx − C_Dy + C_Dxy
//!
//! so nothing beyond the standard counter outputs is needed. Conditional
//! probabilities divide the appropriate role counts (via each context's
//! detector wiring) by the event total, and β follows from the five
//! correlations. Uncertainties are scatter-based: the standard error of the
//! per-series β over repeated series, which needs at least two series.

use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};
use crate::events::{correlation_from_probs, EventId, KcbsReport, ReportUncertainty};
use crate::montecarlo::{CountsSeries, COUNTS_CSV_HEADER};
use crate::network::context;
use crate::numeric::format_sig9;

/// Fraction (N_E2 − N_E1)/N_E2 above which fair-sampling analysis of a
/// heralded source is refused: the assumption that multi-click triggers are
/// negligible has visibly failed.
pub const FAIR_SAMPLING_CONTAMINATION_LIMIT: f64 = 0.10;

/// Parse a counts table from a CSV file.
pub fn parse_counts_csv(path: &Path) -> Result<Vec<CountsSeries>> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_counts_reader(std::io::BufReader::new(file))
}

/// Parse a counts table from any reader. The first line must be the exact
/// [`COUNTS_CSV_HEADER`]; every data row is validated and problems are
/// reported with their 1-based line number.
pub fn parse_counts_reader<R: BufRead>(reader: R) -> Result<Vec<CountsSeries>> {
    let bad = |line: usize, message: String| Error::CountsTable { line, message };
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| bad(line_no, e.to_string()))?;
        let text = line.trim_end_matches('\r').trim();
        if !saw_header {
            if text != COUNTS_CSV_HEADER {
                return Err(bad(
                    1,
                    format!("expected header `{COUNTS_CSV_HEADER}`, got `{text}`"),
                ));
            }
            saw_header = true;
            continue;
        }
        if text.is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() != 10 {
            return Err(bad(
                line_no,
                format!("expected 10 fields, got {}", fields.len()),
            ));
        }
        let int = |pos: usize, name: &str| -> Result<u64> {
            fields[pos].trim().parse::<u64>().map_err(|_| {
                bad(
                    line_no,
                    format!("field `{name}`: invalid integer `{}`", fields[pos].trim()),
                )
            })
        };
        let ctx = int(0, "context")? as usize;
        if !(1..=5).contains(&ctx) {
            return Err(bad(line_no, format!("context {ctx} outside 1..=5")));
        }
        let series = int(1, "series")?;
        if series == 0 || series > u32::MAX as u64 {
            return Err(bad(
                line_no,
                format!("series {series} outside 1..={}", u32::MAX),
            ));
        }
        let row = CountsSeries {
            context: ctx,
            series: series as u32,
            c1: int(2, "C1")?,
            c2: int(3, "C2")?,
            c3: int(4, "C3")?,
            c12: int(5, "C12")?,
            c13: int(6, "C13")?,
            c23: int(7, "C23")?,
            c123: int(8, "C123")?,
            n_t: int(9, "NT")?,
        };
        row.validate().map_err(|e| {
            let message = match e {
                Error::InconsistentCounts(m) => m,
                other => other.to_string(),
            };
            bad(line_no, message)
        })?;
        rows.push(row);
    }
    if !saw_header {
        return Err(bad(
            1,
            format!("empty input, expected header `{COUNTS_CSV_HEADER}`"),
        ));
    }
    Ok(rows)
}

/// Reindex a table recorded with detectors 1 and 3 numbered the opposite
/// way: swaps C1↔C3 and C12↔C23 (C2, C13, C123 and NT are symmetric).
/// An involution; applying it twice returns the input.
pub fn swap_detectors_1_3(rows: &[CountsSeries]) -> Vec<CountsSeries> {
    rows.iter()
        .map(|r| CountsSeries {
            c1: r.c3,
            c3: r.c1,
            c12: r.c23,
            c23: r.c12,
            ..*r
        })
        .collect()
}

/// Event-class totals of one series, reconstructed from the counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventCounts {
    pub context: usize,
    pub series: u32,
    /// Triggers with exactly one click.
    pub n_e1: u64,
    /// Triggers with at least one click.
    pub n_e2: u64,
    /// All triggers (N_E3 = NT).
    pub n_e3: u64,
    /// Exactly-one-click triggers where the click was at D1/D2/D3.
    pub exactly_one_at: [u64; 3],
}

/// Inclusion–exclusion reconstruction. Counter banks can satisfy the
/// pairwise order constraints yet imply a negative outcome class; that is
/// reported as an inconsistency.
pub fn event_counts(row: &CountsSeries) -> Result<EventCounts> {
    row.validate()?;
    let s = [row.c1 as i128, row.c2 as i128, row.c3 as i128];
    let (p12, p13, p23) = (row.c12 as i128, row.c13 as i128, row.c23 as i128);
    let t = row.c123 as i128;
    let exactly = [
        s[0] - p12 - p13 + t,
        s[1] - p12 - p23 + t,
        s[2] - p13 - p23 + t,
    ];
    for (d, &v) in exactly.iter().enumerate() {
        if v < 0 {
            return Err(Error::InconsistentCounts(format!(
                "exactly-one count at D{} is negative ({v})",
                d + 1
            )));
        }
    }
    let n_e1 = exactly.iter().sum::<i128>();
    let n_e2 = s.iter().sum::<i128>() - (p12 + p13 + p23) + t;
    let n_t = row.n_t as i128;
    if n_e1 > n_e2 || n_e2 > n_t {
        return Err(Error::InconsistentCounts(format!(
            "event totals out of order: N_E1={n_e1}, N_E2={n_e2}, NT={n_t}"
        )));
    }
    Ok(EventCounts {
        context: row.context,
        series: row.series,
        n_e1: n_e1 as u64,
        n_e2: n_e2 as u64,
        n_e3: row.n_t,
        exactly_one_at: exactly.map(|v| v as u64),
    })
}

/// Pairwise coincidence counter for two detector indices (0-based).
fn pair_count(row: &CountsSeries, a: usize, b: usize) -> u64 {
    match (a.min(b), a.max(b)) {
        (0, 1) => row.c12,
        (0, 2) => row.c13,
        (1, 2) => row.c23,
        other => panic!("detector pair {other:?} out of range"),
    }
}

/// Correlation, conditioning probability, and g for one context's counters
/// under the requested event class.
fn context_terms(
    row: &CountsSeries,
    ev: EventId,
    fair_sampling: bool,
) -> Result<(f64, f64, Option<f64>)> {
    let ec = event_counts(row)?;
    let roles = context(row.context)?.detector_roles;
    let da = roles.a_i.index();
    let db = roles.a_next.index();
    let singles = [row.c1, row.c2, row.c3];
    let (pa, pb, pj, p_event) = match ev {
        EventId::E1 => {
            if ec.n_e1 == 0 {
                return Err(Error::UndefinedConditioning { event: "E1" });
            }
            let n = ec.n_e1 as f64;
            (
                ec.exactly_one_at[da] as f64 / n,
                ec.exactly_one_at[db] as f64 / n,
                // Two clicks cannot both be the only click.
                0.0,
                n / row.n_t as f64,
            )
        }
        EventId::E2 => {
            if ec.n_e2 == 0 {
                return Err(Error::UndefinedConditioning { event: "E2" });
            }
            let n = ec.n_e2 as f64;
            (
                singles[da] as f64 / n,
                singles[db] as f64 / n,
                pair_count(row, da, db) as f64 / n,
                n / row.n_t as f64,
            )
        }
        EventId::E3 => {
            if fair_sampling {
                // A trigger-heralded source justifies dropping no-click
                // triggers, which turns E3 into E2, but only while
                // multi-click triggers stay negligible.
                if ec.n_e2 == 0 {
                    return Err(Error::UndefinedConditioning { event: "E3" });
                }
                let contamination = (ec.n_e2 - ec.n_e1) as f64 / ec.n_e2 as f64;
                if contamination > FAIR_SAMPLING_CONTAMINATION_LIMIT {
                    return Err(Error::MultiPhotonContamination {
                        fraction: contamination,
                    });
                }
                let n = ec.n_e2 as f64;
                (
                    singles[da] as f64 / n,
                    singles[db] as f64 / n,
                    pair_count(row, da, db) as f64 / n,
                    n / row.n_t as f64,
                )
            } else {
                let n = row.n_t as f64;
                (
                    singles[da] as f64 / n,
                    singles[db] as f64 / n,
                    pair_count(row, da, db) as f64 / n,
                    1.0,
                )
            }
        }
    };
    let g = if pa > 0.0 && pb > 0.0 {
        Some(pj / (pa * pb))
    } else {
        None
    };
    Ok((correlation_from_probs(pa, pb, pj), p_event, g))
}

fn pooled_row(rows: &[&CountsSeries]) -> CountsSeries {
    let mut total = CountsSeries {
        context: rows[0].context,
        series: 0,
        c1: 0,
        c2: 0,
        c3: 0,
        c12: 0,
        c13: 0,
        c23: 0,
        c123: 0,
        n_t: 0,
    };
    for r in rows {
        total.c1 += r.c1;
        total.c2 += r.c2;
        total.c3 += r.c3;
        total.c12 += r.c12;
        total.c13 += r.c13;
        total.c23 += r.c23;
        total.c123 += r.c123;
        total.n_t += r.n_t;
    }
    total
}

/// Standard error of the mean of `values`.
fn standard_error(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

/// Full analysis of a counts table: per-context conditional probabilities
/// under the event class, the five correlations, and β.
///
/// Central values come from series-pooled counters. When every context has
/// the same two-or-more series, per-series β and correlations are computed
/// as well and their standard errors over series attached; with a single
/// series the report carries no uncertainty.
///
/// `fair_sampling` only affects E3: it drops no-click triggers (turning the
/// normalization into N_E2) on the grounds that a heralded trigger carried a
/// photon, and is refused when multi-click triggers exceed
/// [`FAIR_SAMPLING_CONTAMINATION_LIMIT`] of N_E2. The reported event
/// probability is then the fraction of triggers retained.
pub fn analyze(rows: &[CountsSeries], ev: EventId, fair_sampling: bool) -> Result<KcbsReport> {
    if rows.is_empty() {
        return Err(Error::AnalysisInput("empty counts table".into()));
    }
    let mut by_context: [Vec<&CountsSeries>; 5] = Default::default();
    for row in rows {
        if !(1..=5).contains(&row.context) {
            return Err(Error::AnalysisInput(format!(
                "context {} outside 1..=5",
                row.context
            )));
        }
        by_context[row.context - 1].push(row);
    }
    let mut series_numbers: Option<Vec<u32>> = None;
    for (i, group) in by_context.iter_mut().enumerate() {
        if group.is_empty() {
            return Err(Error::AnalysisInput(format!(
                "context {} missing from table",
                i + 1
            )));
        }
        group.sort_by_key(|r| r.series);
        let numbers: Vec<u32> = group.iter().map(|r| r.series).collect();
        if numbers.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::AnalysisInput(format!(
                "context {} has duplicate series numbers",
                i + 1
            )));
        }
        match &series_numbers {
            None => series_numbers = Some(numbers),
            Some(expected) if *expected != numbers => {
                return Err(Error::AnalysisInput(
                    "series numbering differs between contexts".into(),
                ));
            }
            Some(_) => {}
        }
    }
    let series_numbers = series_numbers.expect("five non-empty groups");

    let mut correlations = [0.0; 5];
    let mut p_event = [0.0; 5];
    let mut g = [None; 5];
    for i in 0..5 {
        let pooled = pooled_row(&by_context[i]);
        let (c, p, gi) = context_terms(&pooled, ev, fair_sampling)?;
        correlations[i] = c;
        p_event[i] = p;
        g[i] = gi;
    }

    let uncertainty = if series_numbers.len() >= 2 {
        let mut betas = Vec::with_capacity(series_numbers.len());
        let mut corr_by_ctx: [Vec<f64>; 5] = Default::default();
        for (k, _) in series_numbers.iter().enumerate() {
            let mut beta_k = 0.0;
            for i in 0..5 {
                let (c, _, _) = context_terms(by_context[i][k], ev, fair_sampling)?;
                beta_k += c;
                corr_by_ctx[i].push(c);
            }
            betas.push(beta_k);
        }
        Some(ReportUncertainty {
            beta_stderr: standard_error(&betas),
            correlation_stderr: [0, 1, 2, 3, 4].map(|i| standard_error(&corr_by_ctx[i])),
            series: series_numbers.len(),
        })
    } else {
        None
    };

    Ok(KcbsReport::from_parts(
        correlations,
        p_event,
        g,
        uncertainty,
    ))
}

/// Report as CSV with header `context,term,value,stderr`. Per-context rows
/// carry the five correlations and conditioning probabilities; `all` rows
/// carry β, the pooled event probability, and the bound in force. The
/// stderr column is empty where no scatter estimate exists.
pub fn report_csv(report: &KcbsReport) -> String {
    let mut out = String::from("context,term,value,stderr\n");
    for i in 0..5 {
        let se = report
            .uncertainty
            .as_ref()
            .map_or(String::new(), |u| format_sig9(u.correlation_stderr[i]));
        out.push_str(&format!(
            "{},correlation,{},{}\n",
            i + 1,
            format_sig9(report.correlations[i]),
            se
        ));
    }
    for i in 0..5 {
        out.push_str(&format!(
            "{},p_event,{},\n",
            i + 1,
            format_sig9(report.p_event[i])
        ));
    }
    let beta_se = report
        .uncertainty
        .as_ref()
        .map_or(String::new(), |u| format_sig9(u.beta_stderr));
    out.push_str(&format!(
        "all,beta,{},{}\n",
        format_sig9(report.beta),
        beta_se
    ));
    out.push_str(&format!(
        "all,p_event,{},\n",
        format_sig9(report.p_event_pooled)
    ));
    out.push_str(&format!(
        "all,bound,{},\n",
        format_sig9(report.effective_bound())
    ));
    out
}
