//! The glacial flip-flop model: temperature w, ice line η, ice extent ξ.
//!
//! ```text
//! ẇ = −τ(w − F(η))
//! η̇ = ρ(w + Lc·s₂(1−α₀)p₂(η)) − ρ(Tⁱ + ε·T̄ⁱ)
//! ξ̇ = κξ·[(bᵢ + ε·b̄ᵢ)(η − ξ) − a(1 − η)]
//! ```
//!
//! The glaciating state (−) and deglaciating state (+) switch on the sign of
//! (a+b)η − a − bξ.

mod forcing;
mod model;
mod params;

use crate::error::Result;
use crate::psys::{PiecewiseSystem, State};

pub use forcing::{insolation_q, load_orbital_series, obliquity_s2, parse_orbital_series, OrbitalSample, Q0};
pub use model::{
    build_general_system, extent_rate_h, iceline_threshold_g, legendre2, temp_nullcline_derivs,
    temp_nullcline_f, GlacialParts,
};
pub use params::{GlacialParams, SECTION4_T_PLUS};

/// Which glacial constant is freed when solving for fold-fold points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeParam {
    TPlus,
    TMinus,
}

impl FreeParam {
    pub fn name(self) -> &'static str {
        match self {
            FreeParam::TPlus => "t_plus",
            FreeParam::TMinus => "t_minus",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "t_plus" => Some(FreeParam::TPlus),
            "t_minus" => Some(FreeParam::TMinus),
            _ => None,
        }
    }
}

/// The glacial model with one constant freed.
#[derive(Debug, Clone)]
pub struct GlacialFamily {
    pub params: GlacialParams,
    pub free: FreeParam,
}

impl GlacialFamily {
    pub fn new(params: GlacialParams, free: FreeParam) -> Result<Self> {
        params.validate()?;
        Ok(GlacialFamily { params, free })
    }

    pub fn params_at(&self, value: f64) -> GlacialParams {
        let mut p = self.params.clone();
        match self.free {
            FreeParam::TPlus => p.t_plus = value,
            FreeParam::TMinus => p.t_minus = value,
        }
        p
    }
}

impl crate::psys::ParamFamily for GlacialFamily {
    fn param_name(&self) -> &str {
        self.free.name()
    }

    fn param_value(&self) -> f64 {
        match self.free {
            FreeParam::TPlus => self.params.t_plus,
            FreeParam::TMinus => self.params.t_minus,
        }
    }

    fn system_at(&self, value: f64) -> Result<PiecewiseSystem> {
        build_general_system(&self.params_at(value))
    }

    fn seed(&self, y: f64, z: f64) -> State {
        State::new(temp_nullcline_f(&self.params, y), y, z)
    }
}
