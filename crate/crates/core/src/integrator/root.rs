//! Bracketed root refinement for event functions.

/// Result of refining a bracket [a, b] with φ(a) > 0 ≥ φ(b).
#[derive(Debug, Clone, Copy)]
pub struct Bracket {
    pub a: f64,
    pub fa: f64,
    pub b: f64,
    pub fb: f64,
}

impl Bracket {
    /// The endpoint on the φ ≤ 0 side unless the other one is strictly closer to zero
    /// and within `ytol`.
    pub fn best(&self, ytol: f64) -> (f64, f64) {
        if self.fb.abs() <= ytol || self.fa.abs() > ytol {
            (self.b, self.fb)
        } else {
            (self.a, self.fa)
        }
    }
}

/// Illinois-modified regula falsi with a bisection safeguard.
///
/// Stops when |φ| ≤ `ytol` at an endpoint or the bracket is narrower than
/// a few ulps of its location.
pub fn refine(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    ytol: f64,
) -> Bracket {
    debug_assert!(fa > 0.0 && fb <= 0.0);
    let mut br = Bracket { a, fa, b, fb };
    // Weighted copies of the endpoint values used by the Illinois update.
    let (mut wa, mut wb) = (fa, fb);
    let mut side = 0i8;
    let mut width = b - a;
    for iter in 0..200 {
        if br.fb.abs() <= ytol || br.fa.abs() <= ytol {
            break;
        }
        let scale = br.a.abs().max(br.b.abs()).max(f64::MIN_POSITIVE);
        if br.b - br.a <= 4.0 * f64::EPSILON * scale {
            break;
        }
        let mut c = br.b - wb * (br.b - br.a) / (wb - wa);
        let bisect = iter % 3 == 2 && (br.b - br.a) > 0.5 * width;
        if bisect || !(c > br.a && c < br.b) {
            c = 0.5 * (br.a + br.b);
        }
        if iter % 3 == 2 {
            width = br.b - br.a;
        }
        let fc = f(c);
        if fc > 0.0 {
            br.a = c;
            br.fa = fc;
            wa = fc;
            if side == 1 {
                wb *= 0.5;
            }
            side = 1;
        } else {
            br.b = c;
            br.fb = fc;
            wb = fc;
            if side == -1 {
                wa *= 0.5;
            }
            side = -1;
        }
    }
    br
}
