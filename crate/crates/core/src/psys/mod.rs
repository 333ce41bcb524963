//! Two-zone piecewise-smooth systems in normal form.
//!
//! ```text
//! ẋ = f(x,y)
//! ẏ = g(x,y) + gⁱ(ε)
//! ż = hⁱ(y,z,ε)          i = − if H(y,z) < 0, + if H(y,z) > 0
//! ```
//!
//! with H(y,z) = (a+b)y − a − bz. Region i's field may be evaluated anywhere
//! (virtual extension); dynamics on the surface itself follow Filippov's
//! convex-combination rule.

pub mod fd;
mod surface;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use surface::SurfaceParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Minus,
    Plus,
}

impl Region {
    pub const BOTH: [Region; 2] = [Region::Minus, Region::Plus];

    pub fn sign(self) -> f64 {
        match self {
            Region::Minus => -1.0,
            Region::Plus => 1.0,
        }
    }

    pub fn opposite(self) -> Region {
        match self {
            Region::Minus => Region::Plus,
            Region::Plus => Region::Minus,
        }
    }

    pub fn suffix(self) -> &'static str {
        match self {
            Region::Minus => "minus",
            Region::Plus => "plus",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::Minus => "-",
            Region::Plus => "+",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl State {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        State { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        State { x: v[0], y: v[1], z: v[2] }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryClass {
    CrossingUp,
    CrossingDown,
    SlidingAttracting,
    SlidingRepelling,
    TangentMinus,
    TangentPlus,
    TangentBoth,
}

/// Value and derivatives up to second order of a function of (x, y).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Jet2 {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

/// Value and derivatives of hⁱ(y, z, ε) at ε = 0. Only the first ε-derivative
/// enters the theory.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct HJet {
    pub v: f64,
    pub dy: f64,
    pub dz: f64,
    pub de: f64,
    pub dyy: f64,
    pub dyz: f64,
    pub dzz: f64,
}

/// The smooth ingredients f, g, gⁱ, hⁱ of a two-zone system.
///
/// The jet methods default to central finite differences; implementors with
/// closed-form derivatives should override them and return `true` from
/// [`SmoothParts::analytic_jets`].
pub trait SmoothParts: Send + Sync + fmt::Debug {
    fn f(&self, x: f64, y: f64) -> f64;
    fn g(&self, x: f64, y: f64) -> f64;
    fn g_shift(&self, region: Region, eps: f64) -> f64;
    fn h(&self, region: Region, y: f64, z: f64, eps: f64) -> f64;

    fn analytic_jets(&self) -> bool {
        false
    }

    fn f_jet(&self, x: f64, y: f64) -> Jet2 {
        jet2_fd(|x, y| self.f(x, y), x, y)
    }

    fn g_jet(&self, x: f64, y: f64) -> Jet2 {
        jet2_fd(|x, y| self.g(x, y), x, y)
    }

    /// d gⁱ/dε at ε = 0.
    fn g_shift_slope(&self, region: Region) -> f64 {
        fd::d1(|e| self.g_shift(region, e), 0.0)
    }

    fn h_jet(&self, region: Region, y: f64, z: f64) -> HJet {
        hjet_fd(|y, z, e| self.h(region, y, z, e), y, z)
    }
}

/// Finite-difference jet of a function of two variables.
pub fn jet2_fd(f: impl Fn(f64, f64) -> f64, x: f64, y: f64) -> Jet2 {
    Jet2 {
        v: f(x, y),
        dx: fd::d1(|x| f(x, y), x),
        dy: fd::d1(|y| f(x, y), y),
        dxx: fd::d2(|x| f(x, y), x).0,
        dxy: fd::mixed(&f, x, y).0,
        dyy: fd::d2(|y| f(x, y), y).0,
    }
}

/// Finite-difference jet of hⁱ(y, z, ε) at ε = 0.
pub fn hjet_fd(h: impl Fn(f64, f64, f64) -> f64, y: f64, z: f64) -> HJet {
    HJet {
        v: h(y, z, 0.0),
        dy: fd::d1(|y| h(y, z, 0.0), y),
        dz: fd::d1(|z| h(y, z, 0.0), z),
        de: fd::d1(|e| h(y, z, e), 0.0),
        dyy: fd::d2(|y| h(y, z, 0.0), y).0,
        dyz: fd::mixed(|y, z| h(y, z, 0.0), y, z).0,
        dzz: fd::d2(|z| h(y, z, 0.0), z).0,
    }
}

/// A system with one scalar constant left free, as needed by the fold-fold
/// search where the four defining equations fix (x, y, z) and that constant.
pub trait ParamFamily: Send + Sync {
    fn param_name(&self) -> &str;
    /// The value carried by the underlying configuration.
    fn param_value(&self) -> f64;
    fn system_at(&self, value: f64) -> Result<PiecewiseSystem>;
    /// A state on (or near) the x-nullcline above (y, z), used to complete
    /// (y, z) seed grids.
    fn seed(&self, y: f64, z: f64) -> State;
}

/// A two-zone system: switching surface plus smooth parts.
#[derive(Debug, Clone)]
pub struct PiecewiseSystem {
    surface: SurfaceParams,
    parts: Arc<dyn SmoothParts>,
}

impl PiecewiseSystem {
    pub fn new(surface: SurfaceParams, parts: Arc<dyn SmoothParts>) -> Self {
        PiecewiseSystem { surface, parts }
    }

    pub fn surface(&self) -> SurfaceParams {
        self.surface
    }

    pub fn parts(&self) -> &dyn SmoothParts {
        self.parts.as_ref()
    }

    pub fn h_of(&self, s: &State) -> f64 {
        self.surface.eval(s.y, s.z)
    }

    /// Region i's vector field at `s`, regardless of the sign of H there.
    pub fn field_eval(&self, region: Region, s: &State, eps: f64) -> Result<[f64; 3]> {
        let p = &self.parts;
        let f = p.f(s.x, s.y);
        if !f.is_finite() {
            return Err(Error::NonFinite { function: "f" });
        }
        let g = p.g(s.x, s.y);
        if !g.is_finite() {
            return Err(Error::NonFinite { function: "g" });
        }
        let gs = p.g_shift(region, eps);
        if !gs.is_finite() {
            return Err(Error::NonFinite { function: "g_shift" });
        }
        let h = p.h(region, s.y, s.z, eps);
        if !h.is_finite() {
            return Err(Error::NonFinite { function: "h" });
        }
        Ok([f, g + gs, h])
    }

    /// σⁱ = ∇H·(g+gⁱ, hⁱ).
    pub fn sigma(&self, region: Region, s: &State, eps: f64) -> Result<f64> {
        let v = self.field_eval(region, s, eps)?;
        Ok(self.surface.sigma(v[1], v[2]))
    }

    /// 1e-9·(1 + largest field component), the default tangency tolerance.
    pub fn default_tolerance(&self, s: &State, eps: f64) -> Result<f64> {
        let mut mag: f64 = 0.0;
        for r in Region::BOTH {
            for c in self.field_eval(r, s, eps)? {
                mag = mag.max(c.abs());
            }
        }
        Ok(1e-9 * (1.0 + mag))
    }

    pub fn classify_boundary(&self, s: &State, eps: f64, tol: f64) -> Result<BoundaryClass> {
        let h = self.h_of(s);
        if h.abs() > tol {
            return Err(Error::Precondition(format!(
                "state is not on the switching surface (H = {h:e}, tol = {tol:e})"
            )));
        }
        let sm = self.sigma(Region::Minus, s, eps)?;
        let sp = self.sigma(Region::Plus, s, eps)?;
        Ok(classify_sigmas(sm, sp, tol))
    }

    /// Filippov sliding field λF⁺ + (1−λ)F⁻ with λ = σ⁻/(σ⁻−σ⁺).
    pub fn sliding_velocity(&self, s: &State, eps: f64) -> Result<[f64; 3]> {
        let fm = self.field_eval(Region::Minus, s, eps)?;
        let fp = self.field_eval(Region::Plus, s, eps)?;
        let sm = self.surface.sigma(fm[1], fm[2]);
        let sp = self.surface.sigma(fp[1], fp[2]);
        let den = sm - sp;
        if den == 0.0 {
            return Err(Error::DegenerateSliding { sigma: sm });
        }
        let lam = sm / den;
        let mut v = [0.0; 3];
        for k in 0..3 {
            v[k] = lam * fp[k] + (1.0 - lam) * fm[k];
        }
        // Remove the O(machine-epsilon) normal component left by cancellation.
        let (hy, hz) = self.surface.gradient();
        let resid = hy * v[1] + hz * v[2];
        let nn = hy * hy + hz * hz;
        v[1] -= resid * hy / nn;
        v[2] -= resid * hz / nn;
        Ok(v)
    }

    /// The same system with every component multiplied by `c`; `c = −1`
    /// reverses time.
    pub fn time_scaled(&self, c: f64) -> PiecewiseSystem {
        PiecewiseSystem {
            surface: self.surface,
            parts: Arc::new(TimeScaled { inner: self.parts.clone(), c }),
        }
    }

    /// Largest relative disagreement between the supplied jets and finite
    /// differences at one point, over all components and both regions.
    pub fn derivative_discrepancy(&self, s: &State) -> f64 {
        let p = self.parts();
        let mut worst: f64 = 0.0;
        // Finite-difference rounding error scales with the function value, so
        // that magnitude enters the denominator too.
        let mut cmp = |a: f64, b: f64, value: f64| {
            let d = (a - b).abs() / a.abs().max(b.abs()).max(value.abs()).max(1.0);
            worst = worst.max(d);
        };
        for (jet, fdj) in [
            (p.f_jet(s.x, s.y), jet2_fd(|x, y| p.f(x, y), s.x, s.y)),
            (p.g_jet(s.x, s.y), jet2_fd(|x, y| p.g(x, y), s.x, s.y)),
        ] {
            for (a, b) in [
                (jet.v, fdj.v),
                (jet.dx, fdj.dx),
                (jet.dy, fdj.dy),
                (jet.dxx, fdj.dxx),
                (jet.dxy, fdj.dxy),
                (jet.dyy, fdj.dyy),
            ] {
                cmp(a, b, jet.v);
            }
        }
        for r in Region::BOTH {
            cmp(p.g_shift_slope(r), fd::d1(|e| p.g_shift(r, e), 0.0), p.g_shift(r, 0.0));
            let jet = p.h_jet(r, s.y, s.z);
            let fdj = hjet_fd(|y, z, e| p.h(r, y, z, e), s.y, s.z);
            for (a, b) in [
                (jet.v, fdj.v),
                (jet.dy, fdj.dy),
                (jet.dz, fdj.dz),
                (jet.de, fdj.de),
                (jet.dyy, fdj.dyy),
                (jet.dyz, fdj.dyz),
                (jet.dzz, fdj.dzz),
            ] {
                cmp(a, b, jet.v);
            }
        }
        worst
    }
}

pub fn classify_sigmas(sm: f64, sp: f64, tol: f64) -> BoundaryClass {
    let tm = sm.abs() <= tol;
    let tp = sp.abs() <= tol;
    match (tm, tp) {
        (true, true) => BoundaryClass::TangentBoth,
        (true, false) => BoundaryClass::TangentMinus,
        (false, true) => BoundaryClass::TangentPlus,
        (false, false) => {
            if sm > 0.0 && sp > 0.0 {
                BoundaryClass::CrossingUp
            } else if sm < 0.0 && sp < 0.0 {
                BoundaryClass::CrossingDown
            } else if sm > 0.0 {
                BoundaryClass::SlidingAttracting
            } else {
                BoundaryClass::SlidingRepelling
            }
        }
    }
}

#[derive(Debug)]
struct TimeScaled {
    inner: Arc<dyn SmoothParts>,
    c: f64,
}

fn scale_jet2(j: Jet2, c: f64) -> Jet2 {
    Jet2 {
        v: c * j.v,
        dx: c * j.dx,
        dy: c * j.dy,
        dxx: c * j.dxx,
        dxy: c * j.dxy,
        dyy: c * j.dyy,
    }
}

impl SmoothParts for TimeScaled {
    fn f(&self, x: f64, y: f64) -> f64 {
        self.c * self.inner.f(x, y)
    }
    fn g(&self, x: f64, y: f64) -> f64 {
        self.c * self.inner.g(x, y)
    }
    fn g_shift(&self, region: Region, eps: f64) -> f64 {
        self.c * self.inner.g_shift(region, eps)
    }
    fn h(&self, region: Region, y: f64, z: f64, eps: f64) -> f64 {
        self.c * self.inner.h(region, y, z, eps)
    }
    fn analytic_jets(&self) -> bool {
        self.inner.analytic_jets()
    }
    fn f_jet(&self, x: f64, y: f64) -> Jet2 {
        scale_jet2(self.inner.f_jet(x, y), self.c)
    }
    fn g_jet(&self, x: f64, y: f64) -> Jet2 {
        scale_jet2(self.inner.g_jet(x, y), self.c)
    }
    fn g_shift_slope(&self, region: Region) -> f64 {
        self.c * self.inner.g_shift_slope(region)
    }
    fn h_jet(&self, region: Region, y: f64, z: f64) -> HJet {
        let j = self.inner.h_jet(region, y, z);
        let c = self.c;
        HJet {
            v: c * j.v,
            dy: c * j.dy,
            dz: c * j.dz,
            de: c * j.de,
            dyy: c * j.dyy,
            dyz: c * j.dyz,
            dzz: c * j.dzz,
        }
    }
}
