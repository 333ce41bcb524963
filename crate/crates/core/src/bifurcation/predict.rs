use serde::{Deserialize, Serialize};

use super::{BifurcationCoefficients, FoldFoldPoint};
use crate::error::{Error, Result};

fn offset_ratio(c: &BifurcationCoefficients) -> Result<f64> {
    match c.offset_ratio() {
        Some(r) if r > 0.0 && r.is_finite() => Ok(r),
        Some(r) => Err(Error::Inapplicable(format!("-M/K = {r:e} is not positive"))),
        None => Err(Error::Inapplicable("K and M are undefined".into())),
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("epsilon must be positive, got {eps}")))
    }
}

/// Leading-order z-offset √ε·√(−M/K) of the two fixed points.
pub fn predict_z_offset(c: &BifurcationCoefficients, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok((eps * offset_ratio(c)?).sqrt())
}

/// Leading-order cycle period 2√(−εM/K)·(1/|h⁻0| + 1/|h⁺0|).
pub fn predict_period(c: &BifurcationCoefficients, eps: f64) -> Result<f64> {
    let w = predict_z_offset(c, eps)?;
    Ok(2.0 * w / c.minus.h0.abs() + 2.0 * w / c.plus.h0.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointPrediction {
    /// (x, z) with z below z0.
    pub lower: (f64, f64),
    pub upper: (f64, f64),
    pub z_offset: f64,
}

pub fn predict_fixed_points(c: &BifurcationCoefficients, p: &FoldFoldPoint, eps: f64) -> Result<FixedPointPrediction> {
    let w = predict_z_offset(c, eps)?;
    let r = offset_ratio(c)?;
    let (k, m) = c.k.zip(c.m).ok_or_else(|| Error::Inapplicable("k and m are undefined".into()))?;
    let x = p.x0 + eps * (k * r + m);
    Ok(FixedPointPrediction { lower: (x, p.z0 - w), upper: (x, p.z0 + w), z_offset: w })
}
