//! Fold-fold search, closed-form bifurcation coefficients, the theorem's
//! hypotheses and the leading-order cycle predictions.

mod coefficients;
mod foldfold;
mod predict;
mod theorem;

pub use coefficients::{
    alphas_coincide, compute_coefficients, BifurcationCoefficients, RegionCoefficients, CROSS_FORM_TOL,
    D_SINGULAR_TOL,
};
pub use foldfold::{
    find_foldfold, foldfold_residual, newton_foldfold, seed_grid, FoldFoldPoint, FoldFoldSearch, Seed,
    SeedFailure, DEDUP_DISTANCE, FOLDFOLD_TOL,
};
pub use predict::{predict_fixed_points, predict_period, predict_z_offset, FixedPointPrediction};
pub use theorem::{check_theorem, Condition, StableBranch, TheoremVerdict};

use crate::error::Result;
use crate::psys::PiecewiseSystem;

/// Coefficients and verdict for a point already known to satisfy the
/// fold-fold residuals.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub coefficients: BifurcationCoefficients,
    pub verdict: TheoremVerdict,
}

pub fn analyze(sys: &PiecewiseSystem, p: &FoldFoldPoint) -> Result<Analysis> {
    let coefficients = compute_coefficients(sys, p)?;
    let verdict = check_theorem(sys, p, &coefficients);
    Ok(Analysis { coefficients, verdict })
}
