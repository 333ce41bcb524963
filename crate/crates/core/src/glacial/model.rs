use std::sync::Arc;

use crate::psys::{HJet, Jet2, PiecewiseSystem, Region, SmoothParts, SurfaceParams};

use super::GlacialParams;

/// (p₂(η), P₂(η)) = ((3η²−1)/2, (η³−η)/2).
pub fn legendre2(eta: f64) -> (f64, f64) {
    (0.5 * (3.0 * eta * eta - 1.0), 0.5 * (eta * eta * eta - eta))
}

fn nullcline_gain(p: &GlacialParams) -> f64 {
    p.c_transport * p.q / (p.b_olr + p.c_transport) * (p.alpha2 - p.alpha1) / p.b_olr
}

/// Temperature nullcline F(η), with the capital P₂ exactly as in the model.
pub fn temp_nullcline_f(p: &GlacialParams, eta: f64) -> f64 {
    let (_, big_p) = legendre2(eta);
    (p.q * (1.0 - p.alpha0) - p.a_olr) / p.b_olr
        + nullcline_gain(p) * (eta - 0.5 + p.s2 * big_p)
}

/// (F'(η), F''(η)).
pub fn temp_nullcline_derivs(p: &GlacialParams, eta: f64) -> (f64, f64) {
    let k = nullcline_gain(p);
    (k * (1.0 + p.s2 * 0.5 * (3.0 * eta * eta - 1.0)), k * p.s2 * 3.0 * eta)
}

fn region_t(p: &GlacialParams, region: Region) -> (f64, f64) {
    match region {
        Region::Minus => (p.t_minus, p.t_bar_minus),
        Region::Plus => (p.t_plus, p.t_bar_plus),
    }
}

fn region_b(p: &GlacialParams, region: Region) -> (f64, f64) {
    match region {
        Region::Minus => (p.b0, p.b0_bar),
        Region::Plus => (p.b1, p.b1_bar),
    }
}

/// Ice-line threshold Gⁱ(η) = Lc·s₂·(1−α₀)·p₂(η) + Tⁱ.
pub fn iceline_threshold_g(p: &GlacialParams, region: Region, eta: f64) -> f64 {
    p.lc * p.s2 * (1.0 - p.alpha0) * legendre2(eta).0 + region_t(p, region).0
}

/// κξ·[(bᵢ + ε·b̄ᵢ)(η−ξ) − a(1−η)].
pub fn extent_rate_h(p: &GlacialParams, region: Region, eta: f64, xi: f64, eps: f64) -> f64 {
    let (bi, bbar) = region_b(p, region);
    p.kappa_xi * ((bi + eps * bbar) * (eta - xi) - p.a * (1.0 - eta))
}

/// The glacial model as smooth parts of the normal form, with x = w, y = η, z = ξ.
#[derive(Debug, Clone)]
pub struct GlacialParts {
    pub params: GlacialParams,
}

impl GlacialParts {
    fn w_sign(&self) -> f64 {
        if self.params.flip_w_sign {
            1.0
        } else {
            -1.0
        }
    }

    fn g_gain(&self) -> f64 {
        let p = &self.params;
        p.lc * p.s2 * (1.0 - p.alpha0)
    }
}

impl SmoothParts for GlacialParts {
    fn f(&self, x: f64, y: f64) -> f64 {
        self.w_sign() * self.params.tau * (x - temp_nullcline_f(&self.params, y))
    }

    fn g(&self, x: f64, y: f64) -> f64 {
        self.params.rho * (x + self.g_gain() * legendre2(y).0)
    }

    fn g_shift(&self, region: Region, eps: f64) -> f64 {
        let (t, tbar) = region_t(&self.params, region);
        -self.params.rho * (t + eps * tbar)
    }

    fn h(&self, region: Region, y: f64, z: f64, eps: f64) -> f64 {
        extent_rate_h(&self.params, region, y, z, eps)
    }

    fn analytic_jets(&self) -> bool {
        true
    }

    fn f_jet(&self, x: f64, y: f64) -> Jet2 {
        let st = self.w_sign() * self.params.tau;
        let (d1, d2) = temp_nullcline_derivs(&self.params, y);
        Jet2 { v: self.f(x, y), dx: st, dy: -st * d1, dxx: 0.0, dxy: 0.0, dyy: -st * d2 }
    }

    fn g_jet(&self, x: f64, y: f64) -> Jet2 {
        let r = self.params.rho;
        let k = self.g_gain();
        Jet2 { v: self.g(x, y), dx: r, dy: r * k * 3.0 * y, dxx: 0.0, dxy: 0.0, dyy: r * k * 3.0 }
    }

    fn g_shift_slope(&self, region: Region) -> f64 {
        -self.params.rho * region_t(&self.params, region).1
    }

    fn h_jet(&self, region: Region, y: f64, z: f64) -> HJet {
        let p = &self.params;
        let (bi, bbar) = region_b(p, region);
        HJet {
            v: self.h(region, y, z, 0.0),
            dy: p.kappa_xi * (bi + p.a),
            dz: -p.kappa_xi * bi,
            de: p.kappa_xi * bbar * (y - z),
            dyy: 0.0,
            dyz: 0.0,
            dzz: 0.0,
        }
    }
}

/// Map the glacial model onto the normal form.
pub fn build_general_system(p: &GlacialParams) -> crate::Result<PiecewiseSystem> {
    p.validate()?;
    let surface = SurfaceParams::new(p.a, p.b)?;
    Ok(PiecewiseSystem::new(surface, Arc::new(GlacialParts { params: p.clone() })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psys::{fd, State};
    use proptest::prelude::*;

    #[test]
    fn legendre_values() {
        assert_eq!(legendre2(1.0), (1.0, 0.0));
        assert_eq!(legendre2(0.0), (-0.5, 0.0));
        let (p2, big_p2) = legendre2(1.0 / 3f64.sqrt());
        assert!(p2.abs() < 1e-15);
        // (η³−η)/2 at η = 1/√3 is −1/(3√3).
        assert!((big_p2 - (-1.0 / (3.0 * 3f64.sqrt()))).abs() < 1e-15);
    }

    #[test]
    fn nullcline_is_flat_without_albedo_contrast() {
        let p = GlacialParams { alpha2: 0.32, alpha1: 0.32, ..GlacialParams::table1() };
        let c = (p.q * (1.0 - p.alpha0) - p.a_olr) / p.b_olr;
        for eta in [-1.0, 0.0, 0.3, 0.9] {
            assert!((temp_nullcline_f(&p, eta) - c).abs() < 1e-12);
        }
    }

    #[test]
    fn nullcline_at_root_of_p2() {
        // Independent evaluation: 343·0.53 = 181.79, minus 202 gives −20.21;
        // gain = 3.04·343/4.94·0.3/1.9.
        let p = GlacialParams::table1();
        let eta = 1.0 / 3f64.sqrt();
        let gain = 3.04 * 343.0 / 4.94 * 0.3 / 1.9;
        let expected = -20.21 / 1.9 + gain * (eta - 0.5 - 0.482 * (-1.0 / (3.0 * 3f64.sqrt())));
        assert!((temp_nullcline_f(&p, eta) - expected).abs() < 1e-12);
        assert!((temp_nullcline_f(&p, eta) - (-4.967_386_636_431_774)).abs() < 1e-9);
    }

    #[test]
    fn thresholds() {
        let p = GlacialParams::section4();
        let eta = 1.0 / 3f64.sqrt();
        for r in Region::BOTH {
            let t = if r == Region::Minus { p.t_minus } else { p.t_plus };
            assert!((iceline_threshold_g(&p, r, eta) - t).abs() < 1e-12);
        }
        let d = iceline_threshold_g(&p, Region::Plus, 0.3) - iceline_threshold_g(&p, Region::Minus, 0.3);
        assert!((d - (p.t_plus - p.t_minus)).abs() < 1e-12);
        // p₂(0.948796) = (3·0.900213849616 − 1)/2 = 0.850320774424.
        let g = iceline_threshold_g(&p, Region::Minus, 0.948796) - p.t_minus;
        assert!((g - p.lc * p.s2 * (1.0 - p.alpha0) * 0.850_320_774_424).abs() < 1e-10);
    }

    #[test]
    fn extent_rates_at_reference_point() {
        let p = GlacialParams { kappa_xi: 1.0, ..GlacialParams::section4() };
        assert_eq!(extent_rate_h(&p, Region::Minus, 1.0, 1.0, 0.3), 0.0);
        assert_eq!(extent_rate_h(&p, Region::Plus, 1.0, 1.0, 0.3), 0.0);
        let hm = extent_rate_h(&p, Region::Minus, 0.948796, 0.918074, 0.0);
        let hp = extent_rate_h(&p, Region::Plus, 0.948796, 0.918074, 0.0);
        assert!((hm - (1.5 * 0.030722 - 1.05 * 0.051204)).abs() < 1e-15);
        assert!((hm + 0.007_681_2).abs() < 1e-12);
        assert!((hp - 0.099_845_8).abs() < 1e-12);
        assert!(hm * hp < 0.0);
    }

    #[test]
    fn general_system_mapping() {
        let p = GlacialParams::section4();
        let sys = build_general_system(&p).unwrap();
        let parts = sys.parts();
        let d = parts.g_shift(Region::Minus, 0.0) - parts.g_shift(Region::Plus, 0.0);
        assert!((d + p.rho * (p.t_minus - p.t_plus)).abs() < 1e-15);
        for y in [-0.5, 0.2, 0.95] {
            assert_eq!(parts.f(temp_nullcline_f(&p, y), y), 0.0);
        }
    }

    #[test]
    fn flip_flag_reverses_relaxation() {
        let p = GlacialParams { flip_w_sign: true, ..GlacialParams::section4() };
        let sys = build_general_system(&p).unwrap();
        let x = temp_nullcline_f(&p, 0.5) + 1.0;
        assert!((sys.parts().f(x, 0.5) - p.tau).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn nullcline_derivative_matches_fd(eta in -1.5f64..1.5) {
            let p = GlacialParams::table1();
            let fdv = fd::d1(|e| temp_nullcline_f(&p, e), eta);
            let (an, _) = temp_nullcline_derivs(&p, eta);
            prop_assert!((an - fdv).abs() <= 1e-8 * an.abs().max(1.0));
        }

        #[test]
        fn regions_differ_through_b_only(
            y in -2.0f64..2.0, z in -2.0f64..2.0, eps in -0.1f64..0.1,
            b0b in -1.0f64..1.0, b1b in -1.0f64..1.0,
        ) {
            let p = GlacialParams { b0_bar: b0b, b1_bar: b1b, ..GlacialParams::section4() };
            let diff = extent_rate_h(&p, Region::Plus, y, z, eps) - extent_rate_h(&p, Region::Minus, y, z, eps);
            let expected = p.kappa_xi * (p.b1 - p.b0 + eps * (p.b1_bar - p.b0_bar)) * (y - z);
            prop_assert!((diff - expected).abs() < 1e-12);
        }

        #[test]
        fn analytic_jets_match_fd(x in 0.0f64..10.0, y in -1.0f64..1.2, z in -1.0f64..1.2) {
            let p = GlacialParams { b0_bar: 0.3, b1_bar: -0.2, ..GlacialParams::section4() };
            let sys = build_general_system(&p).unwrap();
            prop_assert!(sys.derivative_discrepancy(&State::new(x, y, z)) < 1e-6);
        }
    }
}
