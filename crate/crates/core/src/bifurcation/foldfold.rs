use nalgebra::{Matrix4, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psys::{ParamFamily, PiecewiseSystem, Region, State};

/// Residual threshold (max-norm) for accepting a fold-fold point.
pub const FOLDFOLD_TOL: f64 = 1e-10;
/// Points closer than this (Euclidean, in (x, y, z, parameter)) are merged.
pub const DEDUP_DISTANCE: f64 = 1e-6;
const MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldFoldPoint {
    pub x0: f64,
    pub y0: f64,
    pub z0: f64,
    pub param_name: String,
    pub param_value: f64,
    pub residuals: [f64; 4],
}

impl FoldFoldPoint {
    pub fn state(&self) -> State {
        State::new(self.x0, self.y0, self.z0)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()))
    }

    /// Recomputes the residuals against `sys`, which must already carry the
    /// point's parameter value.
    pub fn verify(&self, sys: &PiecewiseSystem) -> Result<[f64; 4]> {
        let r = foldfold_residual(sys, self.x0, self.y0, self.z0)?;
        let worst = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if worst > FOLDFOLD_TOL {
            return Err(Error::Precondition(format!(
                "point ({}, {}, {}) is not a fold-fold point: residuals {:?}",
                self.x0, self.y0, self.z0, r
            )));
        }
        Ok(r)
    }
}

/// [H(y,z), f(x,y), σ⁻, σ⁺] at ε = 0.
pub fn foldfold_residual(sys: &PiecewiseSystem, x: f64, y: f64, z: f64) -> Result<[f64; 4]> {
    let s = State::new(x, y, z);
    Ok([
        sys.h_of(&s),
        sys.parts().f(x, y),
        sys.sigma(Region::Minus, &s, 0.0)?,
        sys.sigma(Region::Plus, &s, 0.0)?,
    ])
}

/// A starting guess in (x, y, z, parameter).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub param: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedFailure {
    pub seed: Seed,
    pub reason: String,
    /// Reciprocal condition estimate of the last Jacobian, when it was singular.
    pub rcond: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldFoldSearch {
    pub points: Vec<FoldFoldPoint>,
    pub failures: Vec<SeedFailure>,
}

/// Seeds on the x-nullcline over a rectangular (y, z) grid.
pub fn seed_grid(family: &dyn ParamFamily, y: (f64, f64), z: (f64, f64), n: usize) -> Vec<Seed> {
    let n = n.max(1);
    let lin = |(lo, hi): (f64, f64), i: usize| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let s = family.seed(lin(y, i), lin(z, j));
            out.push(Seed { x: s.x, y: s.y, z: s.z, param: family.param_value() });
        }
    }
    out
}

fn residual_at(family: &dyn ParamFamily, u: &Vector4<f64>) -> Result<Vector4<f64>> {
    let sys = family.system_at(u[3])?;
    let r = foldfold_residual(&sys, u[0], u[1], u[2])?;
    let v = Vector4::from(r);
    if v.iter().all(|c| c.is_finite()) {
        Ok(v)
    } else {
        Err(Error::NonFinite { function: "fold-fold residual" })
    }
}

fn jacobian(family: &dyn ParamFamily, u: &Vector4<f64>) -> Result<Matrix4<f64>> {
    let mut j = Matrix4::zeros();
    for k in 0..4 {
        let h = 1e-7 * (1.0 + u[k].abs());
        let mut up = *u;
        let mut dn = *u;
        up[k] += h;
        dn[k] -= h;
        let col = (residual_at(family, &up)? - residual_at(family, &dn)?) / (2.0 * h);
        j.set_column(k, &col);
    }
    Ok(j)
}

fn rcond(j: &Matrix4<f64>) -> f64 {
    let sv = j.singular_values();
    let max = sv.max();
    if max == 0.0 {
        0.0
    } else {
        sv.min() / max
    }
}

/// Damped Newton from one seed. Returns the polished root.
pub fn newton_foldfold(family: &dyn ParamFamily, seed: Seed) -> std::result::Result<FoldFoldPoint, SeedFailure> {
    let fail = |reason: String, rc: Option<f64>| SeedFailure { seed, reason, rcond: rc };
    if ![seed.x, seed.y, seed.z, seed.param].iter().all(|v| v.is_finite()) {
        return Err(fail("seed is not finite".into(), None));
    }
    let mut u = Vector4::new(seed.x, seed.y, seed.z, seed.param);
    let mut r = residual_at(family, &u).map_err(|e| fail(e.to_string(), None))?;
    let mut converged_at = None;
    for it in 0..MAX_ITER {
        let norm = r.amax();
        if norm <= FOLDFOLD_TOL && converged_at.is_none() {
            converged_at = Some(it);
        }
        // A few extra steps after convergence polish the root to rounding
        // level, which the coefficient cross-checks rely on.
        if converged_at.is_some_and(|c| it >= c + 3) {
            break;
        }
        let j = jacobian(family, &u).map_err(|e| fail(e.to_string(), None))?;
        let rc = rcond(&j);
        let Some(step) = j.lu().solve(&(-r)) else {
            if converged_at.is_some() {
                break;
            }
            return Err(fail("singular Jacobian".into(), Some(rc)));
        };
        if rc < 1e-14 && converged_at.is_none() {
            return Err(fail("singular Jacobian".into(), Some(rc)));
        }
        // Armijo backtracking on ½|r|².
        let phi0 = r.norm_squared();
        let mut lam = 1.0;
        let mut accepted = None;
        while lam >= 1e-8 {
            let trial = u + step * lam;
            if let Ok(rt) = residual_at(family, &trial) {
                if rt.norm_squared() <= (1.0 - 1e-4 * lam) * phi0 {
                    accepted = Some((trial, rt));
                    break;
                }
            }
            lam *= 0.5;
        }
        match accepted {
            Some((nu, nr)) => {
                u = nu;
                r = nr;
            }
            None if converged_at.is_some() => break,
            None => return Err(fail(format!("line search stalled at |r| = {norm:e}"), Some(rc))),
        }
    }
    if r.amax() > FOLDFOLD_TOL {
        return Err(fail(format!("no convergence in {MAX_ITER} iterations (|r| = {:e})", r.amax()), None));
    }
    Ok(FoldFoldPoint {
        x0: u[0],
        y0: u[1],
        z0: u[2],
        param_name: family.param_name().to_string(),
        param_value: u[3],
        residuals: [r[0], r[1], r[2], r[3]],
    })
}

/// Newton from every seed; distinct converged roots in seed order.
pub fn find_foldfold(family: &dyn ParamFamily, seeds: &[Seed]) -> FoldFoldSearch {
    let results: Vec<_> = seeds.par_iter().map(|s| newton_foldfold(family, *s)).collect();
    let mut points: Vec<FoldFoldPoint> = Vec::new();
    let mut failures = Vec::new();
    for res in results {
        match res {
            Ok(p) => {
                let dup = points.iter().any(|q| {
                    let d2 = (p.x0 - q.x0).powi(2)
                        + (p.y0 - q.y0).powi(2)
                        + (p.z0 - q.z0).powi(2)
                        + (p.param_value - q.param_value).powi(2);
                    d2.sqrt() < DEDUP_DISTANCE
                });
                if !dup {
                    points.push(p);
                }
            }
            Err(f) => failures.push(f),
        }
    }
    FoldFoldSearch { points, failures }
}
