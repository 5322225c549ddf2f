//! Number formatting for CSV outputs.

/// `x` with 12 significant digits, scientific notation.
pub fn fmt_csv(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000000e0".to_string();
    }
    format!("{:.11e}", x)
}
