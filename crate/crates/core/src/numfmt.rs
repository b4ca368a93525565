//! Locale-free decimal formatting with a fixed number of significant digits.

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `x` in plain decimal with 12 significant digits, trailing zeros removed.
/// Very large or small magnitudes fall back to scientific notation.
pub fn format_sig(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "NA".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-7..=15).contains(&exp) {
        return format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    }
    let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

/// `None` prints as an empty field.
pub fn format_opt(x: Option<f64>) -> String {
    x.map(format_sig).unwrap_or_default()
}
