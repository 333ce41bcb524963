use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constants of the glacial flip-flop model.
///
/// `lc` is the coupling constant written L in the ice-line thresholds and
/// `kappa_xi` the slow-timescale multiplier of the ξ equation, kept separate
/// from the bifurcation parameter ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlacialParams {
    /// Mean insolation Q (W m⁻²).
    pub q: f64,
    /// Outgoing longwave intercept A (W m⁻²).
    pub a_olr: f64,
    /// Outgoing longwave slope B (W m⁻² °C⁻¹).
    pub b_olr: f64,
    /// Meridional transport coefficient C (W m⁻² °C⁻¹).
    pub c_transport: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub s2: f64,
    pub lc: f64,
    pub t_minus: f64,
    pub t_plus: f64,
    pub t_bar_minus: f64,
    pub t_bar_plus: f64,
    pub a: f64,
    pub b: f64,
    pub b0: f64,
    pub b1: f64,
    pub b0_bar: f64,
    pub b1_bar: f64,
    pub tau: f64,
    pub rho: f64,
    pub kappa_xi: f64,
    /// Use ẇ = +τ(w − F(η)) instead of the relaxing ẇ = −τ(w − F(η)).
    #[serde(default)]
    pub flip_w_sign: bool,
}

/// Fold-fold value of T⁺ for the section-4 presets, as found by the solver.
pub const SECTION4_T_PLUS: f64 = -10.020_161_52;

impl GlacialParams {
    /// Base constants. α0, Lc and the ξ multiplier are not part of the base
    /// set: α0 = (α1+α2)/2, Lc = Q/(B+C), and κξ takes the ξ timescale.
    pub fn table1() -> Self {
        let (q, b_olr, c_transport) = (343.0, 1.9, 3.04);
        GlacialParams {
            q,
            a_olr: 202.0,
            b_olr,
            c_transport,
            alpha0: 0.47,
            alpha1: 0.32,
            alpha2: 0.62,
            s2: -0.482,
            lc: q / (b_olr + c_transport),
            t_minus: -5.5,
            t_plus: -10.0,
            t_bar_minus: 0.0,
            t_bar_plus: 0.0,
            a: 1.45,
            b: 1.75,
            b0: 5.0,
            b1: 1.5,
            b0_bar: 0.0,
            b1_bar: 0.0,
            tau: 7.0,
            rho: 0.05,
            kappa_xi: 0.03,
            flip_w_sign: false,
        }
    }

    /// Constants of the fold-fold study with T̄⁻ = 1. ρ = 0.1 and κξ = 0.03
    /// place the fold-fold point at (5.0810511, 0.9487961, 0.9180738).
    pub fn section4() -> Self {
        GlacialParams {
            t_minus: -10.0,
            t_plus: SECTION4_T_PLUS,
            t_bar_minus: 1.0,
            t_bar_plus: 0.0,
            a: 1.05,
            b: 1.75,
            b0: 1.5,
            b1: 5.0,
            rho: 0.1,
            kappa_xi: 0.03,
            ..Self::table1()
        }
    }

    /// `section4` with T̄⁻ = 0.1, the slope that gives the reference cycle
    /// periods 0.1528 and 0.04795 at ε = 1e-3 and 1e-4.
    pub fn section4_reproduction() -> Self {
        GlacialParams { t_bar_minus: 0.1, ..Self::section4() }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "table1" => Ok(Self::table1()),
            "section4" => Ok(Self::section4()),
            "section4-reproduction" => Ok(Self::section4_reproduction()),
            other => Err(Error::Config(format!(
                "unknown glacial preset '{other}' (expected table1, section4 or section4-reproduction)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.q, self.a_olr, self.b_olr, self.c_transport, self.alpha0, self.alpha1,
            self.alpha2, self.s2, self.lc, self.t_minus, self.t_plus, self.t_bar_minus,
            self.t_bar_plus, self.a, self.b, self.b0, self.b1, self.b0_bar, self.b1_bar,
            self.tau, self.rho, self.kappa_xi,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("glacial parameters must be finite".into()));
        }
        if self.b_olr <= 0.0 || self.c_transport <= 0.0 {
            return Err(Error::Config("B and C must be positive".into()));
        }
        if self.a + self.b == 0.0 || self.b == 0.0 {
            return Err(Error::Config("surface constants need a+b != 0 and b != 0".into()));
        }
        if self.alpha1 >= self.alpha2 {
            return Err(Error::Config("albedos need alpha1 < alpha2".into()));
        }
        Ok(())
    }
}
