//! Numerical utilities: compensated summation, adaptive quadrature, and the
//! stable decimal formatter used by every CSV writer in the crate.

use crate::error::{Error, Result};

/// Neumaier-compensated sum. The click-model accumulates up to a few thousand
/// terms of mixed magnitude; straight summation would still be fine at 1e-10
/// but the compensation makes normalization checks independent of term order.
pub fn compensated_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for t in terms {
        let new = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - new) + t;
        } else {
            comp += (t - new) + sum;
        }
        sum = new;
    }
    sum + comp
}

// ── Adaptive Gauss–Kronrod quadrature ───────────────────────────────────────

/// 15-point Kronrod abscissae on [0, 1] (positive half, descending), paired
/// with the embedded 7-point Gauss rule on the odd-indexed nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

/// One G7/K15 evaluation on [a, b]: returns (kronrod value, error estimate).
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut kron = WGK[7] * f(mid);
    let mut gauss = WG[3] * f(mid);
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(mid - dx) + f(mid + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    kron *= half;
    gauss *= half;
    (kron, (kron - gauss).abs())
}

/// Adaptive quadrature of `f` over [a, b] to absolute tolerance `tol`.
///
/// Bisects intervals whose G7/K15 discrepancy exceeds their share of the
/// tolerance. Returns [`Error::Numeric`] with the achieved error bound if the
/// subdivision depth limit is hit before the tolerance is met; the integrands
/// in this crate (exponential kernels against smooth densities) converge in a
/// handful of levels.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    const MAX_DEPTH: u32 = 40;
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        tol: f64,
        depth: u32,
    ) -> std::result::Result<f64, f64> {
        let (value, err) = gk15(f, a, b);
        if err <= tol || b - a < 1e-14 {
            return Ok(value);
        }
        if depth >= MAX_DEPTH {
            return Err(err);
        }
        let mid = 0.5 * (a + b);
        let left = recurse(f, a, mid, 0.5 * tol, depth + 1);
        let right = recurse(f, mid, b, 0.5 * tol, depth + 1);
        match (left, right) {
            (Ok(l), Ok(r)) => Ok(l + r),
            (Err(e), Ok(_)) | (Ok(_), Err(e)) => Err(e),
            (Err(l), Err(r)) => Err(l + r),
        }
    }
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::Range {
            name: "integration interval",
            value: b - a,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    if a == b {
        return Ok(0.0);
    }
    recurse(f, a, b, tol, 0).map_err(|achieved| Error::Numeric {
        achieved,
        requested: tol,
    })
}

// ── Stable decimal formatting ───────────────────────────────────────────────

/// Format `x` with 9 significant digits in plain decimal notation, switching
/// to exponent form outside [1e-4, 1e9) as the usual `%g` rule does. Trailing
/// fractional zeros are trimmed. The output is a pure function of the bits of
/// `x`, which keeps CSV outputs byte-stable across runs.
pub fn format_sig9(x: f64) -> String {
    format_sig(x, 9)
}

/// `format_sig9` with an explicit digit count (2..=17).
pub fn format_sig(x: f64, digits: usize) -> String {
    assert!((2..=17).contains(&digits), "digit count out of range");
    if x == 0.0 {
        return "0".to_string(); // covers -0.0 as well
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let neg = x < 0.0;
    // Round to `digits` significant digits via exponential formatting, then
    // lay the digit string out by hand to avoid double rounding.
    let s = format!("{:.*e}", digits - 1, x.abs());
    let (mantissa, exp) = s.split_once('e').expect("exponential format");
    let exp: i32 = exp.parse().expect("exponent parses");
    let digit_str: String = mantissa.chars().filter(|c| *c != '.').collect();
    debug_assert_eq!(digit_str.len(), digits);
    let body = if exp >= digits as i32 - 1 && exp < 9 {
        // Integer with possible trailing zeros, no fraction.
        let zeros = exp as usize + 1 - digits;
        format!("{}{}", digit_str, "0".repeat(zeros))
    } else if (0..9).contains(&exp) {
        let split = exp as usize + 1;
        let (int_part, frac) = digit_str.split_at(split);
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            int_part.to_string()
        } else {
            format!("{int_part}.{frac}")
        }
    } else if (-4..0).contains(&exp) {
        let frac = digit_str.trim_end_matches('0');
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), frac)
    } else {
        let (first, rest) = digit_str.split_at(1);
        let rest = rest.trim_end_matches('0');
        if rest.is_empty() {
            format!("{first}e{exp}")
        } else {
            format!("{first}.{rest}e{exp}")
        }
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}
