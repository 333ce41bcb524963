//! Number formatting and JSON report helpers shared by the CLI and FFI.

/// Scientific notation with 17 significant digits.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}
