//! Fixed float formatting for artifacts.

/// Scientific notation with 17 significant digits, e.g. `1.5000000000000000e0`.
/// Round-trips exactly and does not depend on the value's history.
/// Non-finite values print as `inf`, `-inf` and `NaN`.
pub fn float17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}
