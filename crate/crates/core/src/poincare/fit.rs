use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bifurcation::{BifurcationCoefficients, FoldFoldPoint};
use crate::error::{Error, Result};
use crate::integrator::{flow_to_section, IntegrateOptions, SectionOptions};
use crate::psys::{PiecewiseSystem, Region};

/// Offsets from the fold-fold point at which transit times are sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeMapGrid {
    pub dx: Vec<f64>,
    pub dz: Vec<f64>,
    pub eps: Vec<f64>,
}

impl TimeMapGrid {
    /// 5×5×3 grid at scale s: δz ∈ {0, ±s/2, ±s}, δx ∈ {0, ±s²/2, ±s²} and
    /// ε ∈ {s²/2, s², 2s²}, matching the orders at which x and ε enter.
    pub fn standard(s: f64) -> Self {
        let lv = [-1.0, -0.5, 0.0, 0.5, 1.0];
        TimeMapGrid {
            dx: lv.iter().map(|l| l * s * s).collect(),
            dz: lv.iter().map(|l| l * s).collect(),
            eps: vec![0.5 * s * s, s * s, 2.0 * s * s],
        }
    }

    /// 5×5×3 grid sized so that every correction term is a fraction `s` of
    /// the leading β(z−z0) term: z-offsets up to Z = s·|β/η|, x-offsets up
    /// to s·|β|Z/|α| and ε up to 2s·|β|Z/|γ|. The magnitudes only choose
    /// where to sample; the fitted values remain independent measurements.
    /// When γ vanishes in this region, the other region's γ sets the ε range.
    pub fn natural(c: &BifurcationCoefficients, region: Region, s: f64) -> Result<Self> {
        let q = c.region(region);
        let other = c.region(region.opposite());
        let gamma = if q.gamma != 0.0 { q.gamma } else { other.gamma };
        if q.eta == 0.0 || q.alpha == 0.0 || gamma == 0.0 {
            return Err(Error::GridDesign("alpha, eta or gamma vanishes; give the grid explicitly".into()));
        }
        let z = s * (q.beta / q.eta).abs();
        let lead = (q.beta * z).abs();
        let x = s * lead / q.alpha.abs();
        let e = s * lead / gamma.abs();
        let lv = [-1.0, -0.5, 0.0, 0.5, 1.0];
        Ok(TimeMapGrid {
            dx: lv.iter().map(|l| l * x).collect(),
            dz: lv.iter().map(|l| l * z).collect(),
            eps: vec![0.5 * e, e, 2.0 * e],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeMapFit {
    pub region: Region,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
    /// RMS residual of the fit, in time units.
    pub residual: f64,
    pub points_used: usize,
    pub points_failed: usize,
}

const COLUMNS: usize = 13;

/// Basis: the four leading terms, then nuisance terms that absorb the
/// next orders so they do not leak into the leading coefficients.
fn basis(dx: f64, dz: f64, e: f64) -> [f64; COLUMNS] {
    [
        dx,
        dz,
        e,
        dz * dz,
        dz * dz * dz,
        dz * dx,
        dz * e,
        dz.powi(4),
        dz * dz * dx,
        dz * dz * e,
        dx * dx,
        dx * e,
        e * e,
    ]
}

/// Signed transit time from (x, ζ(z), z) back to the surface under region
/// `region`'s field: the forward time, or minus the backward time when the
/// surface is reached sooner in reverse.
fn signed_transit(sys: &PiecewiseSystem, rev: &PiecewiseSystem, region: Region, x: f64, z: f64, eps: f64, opts: &SectionOptions) -> Option<f64> {
    let fwd = flow_to_section(sys, region, x, z, eps, opts).ok().map(|h| h.t);
    let bwd = flow_to_section(rev, region, x, z, eps, opts).ok().map(|h| -h.t);
    match (fwd, bwd) {
        (Some(f), Some(b)) => Some(if f <= -b { f } else { b }),
        (f, b) => f.or(b),
    }
}

/// Least-squares fit of T = α(x−x0) + β(z−z0) + γε + η(z−z0)² + … to
/// measured transit times.
pub fn fit_timemap(sys: &PiecewiseSystem, p: &FoldFoldPoint, region: Region, grid: &TimeMapGrid) -> Result<TimeMapFit> {
    let h0 = sys.parts().h(region, p.y0, p.z0, 0.0);
    let zmax = grid.dz.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(h0.abs() > 0.0) || zmax == 0.0 {
        return Err(Error::GridDesign("grid has no z extent or h vanishes at the point".into()));
    }
    let opts = SectionOptions {
        integ: IntegrateOptions { rtol: 1e-13, atol: 1e-16, event_tol: 1e-15, record_samples: false, ..Default::default() },
        t_min: 0.0,
        t_max: 50.0 * zmax / h0.abs(),
    };
    let rev = sys.time_scaled(-1.0);
    let mut pts = Vec::new();
    for &dx in &grid.dx {
        for &dz in &grid.dz {
            for &e in &grid.eps {
                pts.push((dx, dz, e));
            }
        }
    }
    let times: Vec<Option<f64>> = pts
        .par_iter()
        .map(|&(dx, dz, e)| signed_transit(sys, &rev, region, p.x0 + dx, p.z0 + dz, e, &opts))
        .collect();

    let rows: Vec<([f64; COLUMNS], f64)> =
        pts.iter().zip(&times).filter_map(|(&(dx, dz, e), t)| t.map(|t| (basis(dx, dz, e), t))).collect();
    let failed = pts.len() - rows.len();
    if rows.len() < COLUMNS {
        return Err(Error::GridDesign(format!("only {} of {} grid points produced a transit time", rows.len(), pts.len())));
    }

    // Normalize columns so the SVD sees comparable magnitudes.
    let mut scale = [0.0f64; COLUMNS];
    for (r, _) in &rows {
        for k in 0..COLUMNS {
            scale[k] = scale[k].max(r[k].abs());
        }
    }
    if scale.contains(&0.0) {
        return Err(Error::GridDesign("a basis column is identically zero on the grid".into()));
    }
    let a = DMatrix::from_fn(rows.len(), COLUMNS, |i, k| rows[i].0[k] / scale[k]);
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    if sv.min() <= 1e-12 * sv.max() {
        return Err(Error::GridDesign(format!(
            "design matrix is rank deficient (singular values {:e} to {:e})",
            sv.min(),
            sv.max()
        )));
    }
    let coef = svd.solve(&b, 0.0).map_err(|e| Error::GridDesign(e.to_string()))?;
    let resid = &a * &coef - &b;
    let c = |k: usize| coef[k] / scale[k];
    Ok(TimeMapFit {
        region,
        alpha: c(0),
        beta: c(1),
        gamma: c(2),
        eta: c(3),
        residual: (resid.norm_squared() / rows.len() as f64).sqrt(),
        points_used: rows.len(),
        points_failed: failed,
    })
}
