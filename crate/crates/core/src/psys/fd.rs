//! Central finite differences used when a model supplies no analytic derivatives.

/// First-derivative step: cbrt(machine epsilon) scaled by the coordinate.
pub fn step1(x: f64) -> f64 {
    f64::EPSILON.cbrt() * (1.0 + x.abs())
}

/// Second-derivative step. The fourth root balances truncation against rounding
/// for the three-point stencil better than the cube root does.
pub fn step2(x: f64) -> f64 {
    f64::EPSILON.powf(0.25) * (1.0 + x.abs())
}

pub fn d1(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = step1(x);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn d2_raw(f: &impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

/// Second derivative with one Richardson refinement.
///
/// Returns the refined value and the absolute change the refinement made,
/// which serves as an error estimate.
pub fn d2(f: impl Fn(f64) -> f64, x: f64) -> (f64, f64) {
    let h = step2(x);
    let coarse = d2_raw(&f, x, h);
    let fine = d2_raw(&f, x, 0.5 * h);
    let refined = fine + (fine - coarse) / 3.0;
    (refined, (refined - fine).abs())
}

fn mixed_raw(f: &impl Fn(f64, f64) -> f64, x: f64, y: f64, hx: f64, hy: f64) -> f64 {
    (f(x + hx, y + hy) - f(x + hx, y - hy) - f(x - hx, y + hy) + f(x - hx, y - hy))
        / (4.0 * hx * hy)
}

/// Mixed partial ∂²f/∂x∂y with one Richardson refinement.
pub fn mixed(f: impl Fn(f64, f64) -> f64, x: f64, y: f64) -> (f64, f64) {
    let (hx, hy) = (step2(x), step2(y));
    let coarse = mixed_raw(&f, x, y, hx, hy);
    let fine = mixed_raw(&f, x, y, 0.5 * hx, 0.5 * hy);
    let refined = fine + (fine - coarse) / 3.0;
    (refined, (refined - fine).abs())
}
