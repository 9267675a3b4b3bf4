//! Decimal rendering with 17 significant digits, enough for a lossless
//! round-trip of any f64 without scientific notation.

/// Formats `v` in plain decimal notation with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (16 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}
