//! Small numeric formatting helpers shared by the export writers.

/// Format `x` with `sig` significant digits in plain decimal notation.
pub(crate) fn significant(x: f64, sig: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{:.*}", sig.saturating_sub(1), x);
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (sig as i32 - 1 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Hit rate as a percentage with three decimals, e.g. "66.849%".
pub(crate) fn percent(rate: Option<f64>) -> String {
    match rate {
        Some(r) => format!("{:.3}%", r * 100.0),
        None => "-".to_string(),
    }
}
