use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The affine switching surface H(y,z) = (a+b)·y − a − b·z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSurface", into = "RawSurface")]
pub struct SurfaceParams {
    a: f64,
    b: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSurface {
    a: f64,
    b: f64,
}

impl TryFrom<RawSurface> for SurfaceParams {
    type Error = Error;
    fn try_from(r: RawSurface) -> Result<Self> {
        SurfaceParams::new(r.a, r.b)
    }
}

impl From<SurfaceParams> for RawSurface {
    fn from(p: SurfaceParams) -> Self {
        RawSurface { a: p.a, b: p.b }
    }
}

impl SurfaceParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::Config(format!("surface constants must be finite (a={a}, b={b})")));
        }
        if a + b == 0.0 {
            return Err(Error::Config("degenerate surface: a + b = 0".into()));
        }
        if b == 0.0 {
            return Err(Error::Config("degenerate surface: b = 0".into()));
        }
        Ok(SurfaceParams { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn eval(&self, y: f64, z: f64) -> f64 {
        (self.a + self.b) * y - self.a - self.b * z
    }

    /// ∇H = (∂H/∂y, ∂H/∂z).
    pub fn gradient(&self) -> (f64, f64) {
        (self.a + self.b, -self.b)
    }

    /// ζ(z): the y-coordinate of the surface above z.
    pub fn lift(&self, z: f64) -> f64 {
        (self.a + self.b * z) / (self.a + self.b)
    }

    /// ζ'(z) = b/(a+b).
    pub fn lift_slope(&self) -> f64 {
        self.b / (self.a + self.b)
    }

    /// σ = ∇H·(ẏ, ż).
    pub fn sigma(&self, ydot: f64, zdot: f64) -> f64 {
        (self.a + self.b) * ydot - self.b * zdot
    }
}
