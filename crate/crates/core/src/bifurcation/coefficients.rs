use serde::{Deserialize, Serialize};

use super::FoldFoldPoint;
use crate::error::{Error, Result};
use crate::psys::{HJet, Jet2, PiecewiseSystem, Region};

/// Relative agreement demanded between the two forms of B, C and K.
pub const CROSS_FORM_TOL: f64 = 1e-9;
/// |Dⁱ| below this times the size of its terms is treated as zero.
pub const D_SINGULAR_TOL: f64 = 1e-10;

/// Per-region coefficients of the time-map expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionCoefficients {
    pub alpha_bar: f64,
    pub gamma_bar: f64,
    pub d: f64,
    pub k_bar_bar: f64,
    pub k_tilde: f64,
    pub k_hat: f64,
    pub eta_bar: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub beta: f64,
    pub h0: f64,
    /// B in the (α, β, γ, η) variables; equal to `b` up to rounding.
    pub b_aux: f64,
    pub c_aux: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub eta: f64,
    /// k̄ⁱ = k̄̄ⁱ·(g + gⁱ(0)).
    pub k_bar: f64,
    /// g + gⁱ(0) at the point.
    pub ydot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationCoefficients {
    pub minus: RegionCoefficients,
    pub plus: RegionCoefficients,
    /// `None` when ᾱ⁻ = ᾱ⁺, where k, m, K and M are undefined.
    pub k: Option<f64>,
    pub m: Option<f64>,
    pub big_k: Option<f64>,
    pub big_m: Option<f64>,
    /// K from the 2(kA+B)/h form, kept for the cross-form check.
    pub big_k_notation: Option<f64>,
}

impl BifurcationCoefficients {
    pub fn region(&self, r: Region) -> &RegionCoefficients {
        match r {
            Region::Minus => &self.minus,
            Region::Plus => &self.plus,
        }
    }

    /// −M/K when both are defined.
    pub fn offset_ratio(&self) -> Option<f64> {
        match (self.big_k, self.big_m) {
            (Some(k), Some(m)) if k != 0.0 => Some(-m / k),
            _ => None,
        }
    }

    /// Flat table with keys such as `alpha_bar_minus`, `K` and `M`.
    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for r in Region::BOTH {
            let c = self.region(r);
            let sfx = r.suffix();
            for (name, v) in [
                ("alpha_bar", c.alpha_bar),
                ("gamma_bar", c.gamma_bar),
                ("D", c.d),
                ("k_bar_bar", c.k_bar_bar),
                ("k_tilde", c.k_tilde),
                ("k_hat", c.k_hat),
                ("eta_bar", c.eta_bar),
                ("A", c.a),
                ("B", c.b),
                ("C", c.c),
                ("beta", c.beta),
                ("h0", c.h0),
                ("alpha", c.alpha),
                ("gamma", c.gamma),
                ("eta", c.eta),
            ] {
                map.insert(format!("{name}_{sfx}"), serde_json::json!(v));
            }
        }
        map.insert("k".into(), serde_json::json!(self.k));
        map.insert("m".into(), serde_json::json!(self.m));
        map.insert("K".into(), serde_json::json!(self.big_k));
        map.insert("M".into(), serde_json::json!(self.big_m));
        serde_json::Value::Object(map)
    }
}

fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn cross_check(what: &'static str, first: f64, second: f64) -> Result<()> {
    if !first.is_finite() || !second.is_finite() || rel_diff(first, second) > CROSS_FORM_TOL {
        return Err(Error::Inconsistent { what, first, second });
    }
    Ok(())
}

fn region_coefficients(
    ab: (f64, f64),
    fj: &Jet2,
    gj: &Jet2,
    gi: f64,
    gi_slope: f64,
    hj: &HJet,
    region: Region,
) -> Result<RegionCoefficients> {
    let (a, b) = ab;
    let s = a + b;
    let c = b / s;
    let h0 = hj.v;
    if h0 == 0.0 || !h0.is_finite() {
        return Err(Error::Degenerate(format!("h{}(y0, z0, 0) = {h0}", region.suffix())));
    }
    let v = gj.v + gi;
    let (fx, fy, fyy) = (fj.dx, fj.dy, fj.dyy);
    let (gx, gy, gyy) = (gj.dx, gj.dy, gj.dyy);
    let (hy, hz, he, hyy, hyz, hzz) = (hj.dy, hj.dz, hj.de, hj.dyy, hj.dyz, hj.dzz);

    let d_terms = [b * gy, b * b / s * hy, b * hz];
    let d = d_terms[0] - d_terms[1] - d_terms[2];
    let d_scale = d_terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if d_scale == 0.0 || d.abs() < D_SINGULAR_TOL * d_scale {
        return Err(Error::Degenerate(format!("D{} = {d:e} vanishes", region.suffix())));
    }

    let alpha_bar = -2.0 * s * gx / d;
    let gamma_bar = -2.0 * (s * gi_slope - b * he) / d;
    let r = s / b;
    let flow_g = gx * fy + gyy * v + gy * gy;
    let k_bar_bar = s / 6.0 * flow_g
        - b / 6.0 * v * (hyy + 2.0 * r * hyz + r * r * hzz)
        - b / 6.0 * (hy * gy + hz * hy + r * hz * hz);
    let k_tilde = s / 2.0 * flow_g * c
        - b / 2.0 * (hyy + r * hyz) * v * c
        - b / 2.0 * (hy * gy + hz * hy) * c
        - b / 2.0 * (hyz + r * hzz) * v
        - b / 2.0 * hz * hz;
    let k_hat = s / 2.0 * gyy * c * c - b * (0.5 * hyy * c * c + hyz * c + 0.5 * hzz);
    let eta_bar = -2.0 / d * (4.0 * c * k_bar_bar / h0 - 2.0 * k_tilde / h0 + k_hat);

    let beta = -2.0 / h0;
    let alpha = alpha_bar / h0;
    let gamma = gamma_bar / h0;
    let eta = eta_bar / h0;

    let big_a = fx + 0.5 * fy * c * alpha_bar;
    let flow_f = fx * fy + fyy * v + fy * gy;
    let big_b = 0.5 * fy * c * eta_bar + 4.0 * c / 6.0 * flow_f / h0 - (fx * fy + fy * gy) * c / h0
        - 0.5 * fyy * c * c;
    let b_aux = 0.5 * fy * v * eta + flow_f * v * beta * beta / 6.0 + 0.5 * flow_f * c * beta + 0.5 * fyy * c * c;
    let big_c = 0.5 * fy * c * gamma_bar;
    let c_aux = 0.5 * fy * v * gamma;

    cross_check(if region == Region::Minus { "B-" } else { "B+" }, big_b, b_aux)?;
    cross_check(if region == Region::Minus { "C-" } else { "C+" }, big_c, c_aux)?;

    Ok(RegionCoefficients {
        alpha_bar,
        gamma_bar,
        d,
        k_bar_bar,
        k_tilde,
        k_hat,
        eta_bar,
        a: big_a,
        b: big_b,
        c: big_c,
        beta,
        h0,
        b_aux,
        c_aux,
        alpha,
        gamma,
        eta,
        k_bar: k_bar_bar * v,
        ydot: v,
    })
}

/// Whether ᾱ⁻ and ᾱ⁺ coincide to rounding.
pub fn alphas_coincide(am: f64, ap: f64) -> bool {
    (am - ap).abs() <= 1e-13 * am.abs().max(ap.abs()) || am == ap
}

pub fn compute_coefficients(sys: &PiecewiseSystem, p: &FoldFoldPoint) -> Result<BifurcationCoefficients> {
    let parts = sys.parts();
    let surf = sys.surface();
    let ab = (surf.a(), surf.b());
    let fj = parts.f_jet(p.x0, p.y0);
    let gj = parts.g_jet(p.x0, p.y0);
    let mut per = Vec::with_capacity(2);
    for r in Region::BOTH {
        let hj = parts.h_jet(r, p.y0, p.z0);
        per.push(region_coefficients(ab, &fj, &gj, parts.g_shift(r, 0.0), parts.g_shift_slope(r), &hj, r)?);
    }
    let (minus, plus) = (per[0], per[1]);

    let (mut k, mut m, mut big_k, mut big_m, mut big_k_notation) = (None, None, None, None, None);
    if !alphas_coincide(minus.alpha_bar, plus.alpha_bar) {
        let da = minus.alpha_bar - plus.alpha_bar;
        let kv = -(minus.eta_bar - plus.eta_bar) / da;
        let mv = -(minus.gamma_bar - plus.gamma_bar) / da;
        let kb = (kv * minus.a + minus.b_aux) * minus.beta - (kv * plus.a + plus.b_aux) * plus.beta;
        let kn = 2.0 * (kv * plus.a + plus.b) / plus.h0 - 2.0 * (kv * minus.a + minus.b) / minus.h0;
        let mb = (mv * minus.a + minus.c_aux) * minus.beta - (mv * plus.a + plus.c_aux) * plus.beta;
        let mn = 2.0 * (mv * plus.a + plus.c) / plus.h0 - 2.0 * (mv * minus.a + minus.c) / minus.h0;
        cross_check("K", kn, kb)?;
        cross_check("M", mn, mb)?;
        k = Some(kv);
        m = Some(mv);
        big_k = Some(kb);
        big_m = Some(mb);
        big_k_notation = Some(kn);
    }
    Ok(BifurcationCoefficients { minus, plus, k, m, big_k, big_m, big_k_notation })
}
