//! Polynomial two-zone systems with a planted fold-fold point.
//!
//! Every smooth part is a quadratic Taylor polynomial about the centre
//! (x₀, y₀, z₀) in the offsets X = x−x₀, U = y−y₀, Z = z−z₀, so its jet at the
//! centre is exactly the listed coefficients.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psys::{HJet, Jet2, ParamFamily, PiecewiseSystem, Region, SmoothParts, State, SurfaceParams};

/// p(X, U) = v + dx·X + dy·U + ½dxx·X² + dxy·XU + ½dyy·U².
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Quad2 {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

impl Quad2 {
    fn eval(&self, x: f64, u: f64) -> f64 {
        self.v + self.dx * x + self.dy * u + 0.5 * self.dxx * x * x + self.dxy * x * u + 0.5 * self.dyy * u * u
    }

    fn jet(&self, x: f64, u: f64) -> Jet2 {
        Jet2 {
            v: self.eval(x, u),
            dx: self.dx + self.dxx * x + self.dxy * u,
            dy: self.dy + self.dxy * x + self.dyy * u,
            dxx: self.dxx,
            dxy: self.dxy,
            dyy: self.dyy,
        }
    }
}

/// h(U, Z, ε) = v + dy·U + dz·Z + de·ε + ½dyy·U² + dyz·UZ + ½dzz·Z².
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadH {
    pub v: f64,
    pub dy: f64,
    pub dz: f64,
    pub de: f64,
    pub dyy: f64,
    pub dyz: f64,
    pub dzz: f64,
}

impl QuadH {
    fn eval(&self, u: f64, z: f64, eps: f64) -> f64 {
        self.v + self.dy * u + self.dz * z + self.de * eps + 0.5 * self.dyy * u * u + self.dyz * u * z + 0.5 * self.dzz * z * z
    }

    fn jet(&self, u: f64, z: f64) -> HJet {
        HJet {
            v: self.eval(u, z, 0.0),
            dy: self.dy + self.dyy * u + self.dyz * z,
            dz: self.dz + self.dyz * u + self.dzz * z,
            de: self.de,
            dyy: self.dyy,
            dyz: self.dyz,
            dzz: self.dzz,
        }
    }
}

/// gⁱ(ε) = v + de·ε.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Affine1 {
    pub v: f64,
    pub de: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub a: f64,
    pub b: f64,
    pub center: [f64; 3],
    pub f: Quad2,
    pub g: Quad2,
    pub g_minus: Affine1,
    pub g_plus: Affine1,
    pub h_minus: QuadH,
    pub h_plus: QuadH,
    /// Additive shift of g⁺; the free parameter of the fold-fold search.
    #[serde(default)]
    pub shift: f64,
}

impl SyntheticSpec {
    /// A fold-fold point at (0, 0.25, 0) with a = 0.5, b = 1.5 satisfying every
    /// hypothesis of the theorem, with the lower fixed point attracting.
    pub fn planted() -> Self {
        let (a, b) = (0.5, 1.5);
        let c = b / (a + b);
        SyntheticSpec {
            a,
            b,
            center: [0.0, 0.25, 0.0],
            f: Quad2 { dx: -0.9, dy: -0.2, dyy: -0.9, ..Default::default() },
            g: Quad2 { dx: -1.3, dy: -1.6, dyy: -1.6, ..Default::default() },
            g_minus: Affine1 { v: -c, de: -1.9 },
            g_plus: Affine1 { v: c, de: 0.7 },
            h_minus: QuadH { v: -1.0, dy: 1.0, dz: -1.1, de: -0.4, dyy: -1.9, dyz: -0.9, dzz: 1.8 },
            h_plus: QuadH { v: 1.0, dy: -1.3, dz: -0.1, de: 0.3, dyy: -1.9, dyz: -0.9, dzz: 1.8 },
            shift: 0.0,
        }
    }

    /// `planted` with g_x ≡ 0, violating ᾱ⁻ ≠ ᾱ⁺.
    pub fn without_gx() -> Self {
        let mut s = Self::planted();
        s.g.dx = 0.0;
        s
    }

    /// `planted` with h⁻(y₀,z₀,0) = +2, so h⁺ and h⁻ share a sign. The ε-slope
    /// of g⁻ is reversed as well so that KM < 0 still holds.
    pub fn same_sign_h() -> Self {
        let mut s = Self::planted();
        let c = s.b / (s.a + s.b);
        s.h_minus.v = 2.0;
        s.g_minus.v = 2.0 * c;
        s.g_minus.de = -s.g_minus.de;
        s
    }

    /// `planted` with every ε-slope negated, which flips the sign of M.
    pub fn flipped_slopes() -> Self {
        let mut s = Self::planted();
        s.g_minus.de = -s.g_minus.de;
        s.g_plus.de = -s.g_plus.de;
        s.h_minus.de = -s.h_minus.de;
        s.h_plus.de = -s.h_plus.de;
        s
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "planted" => Ok(Self::planted()),
            "no-gx" => Ok(Self::without_gx()),
            "same-sign-h" => Ok(Self::same_sign_h()),
            "flipped-slopes" => Ok(Self::flipped_slopes()),
            other => Err(Error::Config(format!(
                "unknown synthetic preset '{other}' (expected planted, no-gx, same-sign-h or flipped-slopes)"
            ))),
        }
    }

    pub fn center_state(&self) -> State {
        State::new(self.center[0], self.center[1], self.center[2])
    }

    pub fn build(&self) -> Result<PiecewiseSystem> {
        let surface = SurfaceParams::new(self.a, self.b)?;
        if self.center.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("synthetic centre must be finite".into()));
        }
        Ok(PiecewiseSystem::new(surface, Arc::new(SyntheticParts { spec: self.clone() })))
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticParts {
    pub spec: SyntheticSpec,
}

impl SyntheticParts {
    fn offsets(&self, x: f64, y: f64) -> (f64, f64) {
        (x - self.spec.center[0], y - self.spec.center[1])
    }

    fn h_quad(&self, region: Region) -> &QuadH {
        match region {
            Region::Minus => &self.spec.h_minus,
            Region::Plus => &self.spec.h_plus,
        }
    }
}

impl SmoothParts for SyntheticParts {
    fn f(&self, x: f64, y: f64) -> f64 {
        let (xx, u) = self.offsets(x, y);
        self.spec.f.eval(xx, u)
    }

    fn g(&self, x: f64, y: f64) -> f64 {
        let (xx, u) = self.offsets(x, y);
        self.spec.g.eval(xx, u)
    }

    fn g_shift(&self, region: Region, eps: f64) -> f64 {
        match region {
            Region::Minus => self.spec.g_minus.v + self.spec.g_minus.de * eps,
            Region::Plus => self.spec.g_plus.v + self.spec.shift + self.spec.g_plus.de * eps,
        }
    }

    fn h(&self, region: Region, y: f64, z: f64, eps: f64) -> f64 {
        self.h_quad(region).eval(y - self.spec.center[1], z - self.spec.center[2], eps)
    }

    fn analytic_jets(&self) -> bool {
        true
    }

    fn f_jet(&self, x: f64, y: f64) -> Jet2 {
        let (xx, u) = self.offsets(x, y);
        self.spec.f.jet(xx, u)
    }

    fn g_jet(&self, x: f64, y: f64) -> Jet2 {
        let (xx, u) = self.offsets(x, y);
        self.spec.g.jet(xx, u)
    }

    fn g_shift_slope(&self, region: Region) -> f64 {
        match region {
            Region::Minus => self.spec.g_minus.de,
            Region::Plus => self.spec.g_plus.de,
        }
    }

    fn h_jet(&self, region: Region, y: f64, z: f64) -> HJet {
        self.h_quad(region).jet(y - self.spec.center[1], z - self.spec.center[2])
    }
}

/// The synthetic system with the g⁺ shift freed.
#[derive(Debug, Clone)]
pub struct SyntheticFamily {
    pub spec: SyntheticSpec,
}

impl ParamFamily for SyntheticFamily {
    fn param_name(&self) -> &str {
        "shift"
    }

    fn param_value(&self) -> f64 {
        self.spec.shift
    }

    fn system_at(&self, value: f64) -> Result<PiecewiseSystem> {
        SyntheticSpec { shift: value, ..self.spec.clone() }.build()
    }

    /// Solves f(x, y) = 0 for x by Newton from the centre's x.
    fn seed(&self, y: f64, z: f64) -> State {
        let parts = SyntheticParts { spec: self.spec.clone() };
        let mut x = self.spec.center[0];
        for _ in 0..50 {
            let j = parts.f_jet(x, y);
            if j.dx == 0.0 {
                break;
            }
            let dx = j.v / j.dx;
            x -= dx;
            if dx.abs() < 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        State::new(x, y, z)
    }
}
