//! Parsers for the compact value syntaxes used on the command line and in
//! config files.

use kcbs::events::EventId;
use kcbs::network::{context, MeasurementContext};
use kcbs::states::OpticalState;

/// State specs are tagged records:
///   fock:N            photon-number state
///   coherent:NBAR     coherent state of mean photon number NBAR
///   thermal:NBAR      thermal state
///   mixture:W*SPEC+W*SPEC+...   weighted mixture of non-mixture parts
pub fn parse_state(spec: &str) -> Result<OpticalState, String> {
    let spec = spec.trim();
    let (tag, rest) = spec
        .split_once(':')
        .ok_or_else(|| format!("state `{spec}` is missing a `tag:` prefix"))?;
    match tag {
        "fock" => {
            let n: u32 = rest
                .trim()
                .parse()
                .map_err(|_| format!("fock photon number `{rest}` is not an integer"))?;
            Ok(OpticalState::fock(n))
        }
        "coherent" => {
            let nbar = parse_f64(rest, "coherent mean photon number")?;
            OpticalState::coherent(nbar).map_err(|e| e.to_string())
        }
        "thermal" => {
            let nbar = parse_f64(rest, "thermal mean photon number")?;
            OpticalState::thermal(nbar).map_err(|e| e.to_string())
        }
        "mixture" => {
            let mut parts = Vec::new();
            for term in rest.split('+') {
                let (w, inner) = term
                    .split_once('*')
                    .ok_or_else(|| format!("mixture term `{term}` is not WEIGHT*STATE"))?;
                let weight = parse_f64(w, "mixture weight")?;
                if inner.trim().starts_with("mixture:") {
                    return Err("mixture parts must not themselves be mixtures".into());
                }
                parts.push((weight, parse_state(inner)?));
            }
            OpticalState::mixture(parts).map_err(|e| e.to_string())
        }
        other => Err(format!(
            "unknown state tag `{other}` (expected fock, coherent, thermal, or mixture)"
        )),
    }
}

pub fn parse_f64(s: &str, what: &str) -> Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| format!("{what} `{}` is not a number", s.trim()))
}

/// Comma-separated list of reals.
pub fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>, String> {
    let values: Result<Vec<f64>, String> = s.split(',').map(|part| parse_f64(part, what)).collect();
    let values = values?;
    if values.is_empty() {
        return Err(format!("empty {what} list"));
    }
    Ok(values)
}

/// Comma-separated event labels, e.g. "e1,e3".
pub fn parse_event_list(s: &str) -> Result<Vec<EventId>, String> {
    let mut events = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        let ev = EventId::parse(part)
            .ok_or_else(|| format!("unknown event `{part}` (expected e1, e2, or e3)"))?;
        if !events.contains(&ev) {
            events.push(ev);
        }
    }
    if events.is_empty() {
        return Err("empty event list".into());
    }
    Ok(events)
}

/// One event label.
pub fn parse_event(s: &str) -> Result<EventId, String> {
    EventId::parse(s.trim())
        .ok_or_else(|| format!("unknown event `{}` (expected e1, e2, or e3)", s.trim()))
}

/// Comma-separated context indices in 1..=5.
pub fn parse_context_list(s: &str) -> Result<Vec<MeasurementContext>, String> {
    let mut contexts = Vec::new();
    for part in s.split(',') {
        let i: usize = part
            .trim()
            .parse()
            .map_err(|_| format!("context `{}` is not an integer", part.trim()))?;
        contexts.push(context(i).map_err(|e| e.to_string())?);
    }
    if contexts.is_empty() {
        return Err("empty context list".into());
    }
    Ok(contexts)
}

pub fn parse_bool(s: &str, what: &str) -> Result<bool, String> {
    match s.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => Err(format!("{what} `{other}` is not a boolean")),
    }
}
