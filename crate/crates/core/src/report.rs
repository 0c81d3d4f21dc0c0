//! Shared formatting for tabular output.

/// Shortest-roundtrip is not stable across platforms for fixed-width
/// columns, so floats are written with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}
