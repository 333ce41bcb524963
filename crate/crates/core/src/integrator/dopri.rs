//! Dormand–Prince 5(4) stepper for autonomous three-dimensional fields.

use crate::error::Result;

pub type Vec3 = [f64; 3];


const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(y: &Vec3, h: f64, terms: &[(f64, &Vec3)]) -> Vec3 {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..3 {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// One accepted-or-rejected trial step.
pub struct Trial {
    pub y: Vec3,
    /// Derivative at the new point (first stage of the next step).
    pub f: Vec3,
    pub err: Vec3,
}

pub fn step(rhs: &dyn Fn(&Vec3) -> Result<Vec3>, y: &Vec3, k1: &Vec3, h: f64) -> Result<Trial> {
    let k2 = rhs(&axpy(y, h, &[(A21, k1)]))?;
    let k3 = rhs(&axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = rhs(&axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = rhs(&axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = rhs(&axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
    let y_new = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = rhs(&y_new)?;
    let mut err = [0.0; 3];
    for i in 0..3 {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Ok(Trial { y: y_new, f: k7, err })
}

/// Scaled RMS error norm.
pub fn error_norm(err: &Vec3, y0: &Vec3, y1: &Vec3, rtol: f64, atol: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        let sc = atol + rtol * y0[i].abs().max(y1[i].abs());
        s += (err[i] / sc).powi(2);
    }
    (s / 3.0).sqrt()
}

/// Starting step size following Hairer, Nørsett and Wanner.
pub fn initial_step(
    rhs: &dyn Fn(&Vec3) -> Result<Vec3>,
    y: &Vec3,
    f0: &Vec3,
    rtol: f64,
    atol: f64,
    h_max: f64,
) -> Result<f64> {
    let norm = |v: &Vec3| {
        let mut s = 0.0;
        for i in 0..3 {
            s += (v[i] / (atol + rtol * y[i].abs())).powi(2);
        }
        (s / 3.0).sqrt()
    };
    let d0 = norm(y);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(h_max);
    let y1 = axpy(y, h0, &[(1.0, f0)]);
    let f1 = rhs(&y1)?;
    let mut diff = [0.0; 3];
    for i in 0..3 {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(h_max))
}

/// Cubic Hermite interpolant on a step of length `h`, evaluated at θ ∈ [0, 1].
pub fn hermite(y0: &Vec3, f0: &Vec3, y1: &Vec3, f1: &Vec3, h: f64, theta: f64) -> Vec3 {
    let t = theta;
    let mut out = [0.0; 3];
    for i in 0..3 {
        let dy = y1[i] - y0[i];
        out[i] = (1.0 - t) * y0[i]
            + t * y1[i]
            + t * (t - 1.0) * ((1.0 - 2.0 * t) * dy + (t - 1.0) * h * f0[i] + t * h * f1[i]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_fifth_order() {
        let rhs = |y: &Vec3| Ok([-y[0], -2.0 * y[1], 0.5 * y[2]]);
        let run = |n: usize| {
            let h = 1.0 / n as f64;
            let mut y = [1.0, 1.0, 1.0];
            let mut k = rhs(&y).unwrap();
            for _ in 0..n {
                let tr = step(&rhs, &y, &k, h).unwrap();
                y = tr.y;
                k = tr.f;
            }
            (y[1] - (-2.0f64).exp()).abs()
        };
        let ratio = run(10) / run(20);
        assert!(ratio > 25.0 && ratio < 40.0, "ratio {ratio}");
    }

    #[test]
    fn hermite_reproduces_cubics() {
        // y = t³ on [0, 2].
        let y0 = [0.0, 0.0, 0.0];
        let f0 = [0.0, 0.0, 0.0];
        let y1 = [8.0, 8.0, 8.0];
        let f1 = [12.0, 12.0, 12.0];
        let v = hermite(&y0, &f0, &y1, &f1, 2.0, 0.25);
        assert!((v[0] - 0.125).abs() < 1e-14);
    }
}
