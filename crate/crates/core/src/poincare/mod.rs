//! Half-maps P± on the switching surface, the return map P⁻∘P⁺ and its
//! fixed points, long-run cycle measurement, and least-squares fits of the
//! transit-time map.

mod fit;
mod measure;

pub use fit::{fit_timemap, TimeMapFit, TimeMapGrid};
pub use measure::{measure_cycle, measure_samples, CycleMeasurement, MeasureOptions};

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::bifurcation::{BifurcationCoefficients, FoldFoldPoint};
use crate::error::{Error, Result};
use crate::integrator::{flow_to_section, SectionOptions};
use crate::psys::{PiecewiseSystem, Region};

/// Image of one half-map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfMap {
    pub x: f64,
    pub z: f64,
    /// Transit time.
    pub t: f64,
}

pub fn half_map(
    sys: &PiecewiseSystem,
    region: Region,
    x: f64,
    z: f64,
    eps: f64,
    opts: &SectionOptions,
) -> Result<HalfMap> {
    let hit = flow_to_section(sys, region, x, z, eps, opts)?;
    Ok(HalfMap { x: hit.state.x, z: hit.state.z, t: hit.t })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleOptions {
    pub section: SectionOptions,
    /// Finite-difference step in z for the return-map Jacobian.
    pub fd_step_z: f64,
    /// Finite-difference step in x.
    pub fd_step_x: f64,
    /// Newton stops once the update is below this in max-norm.
    pub step_tol: f64,
    pub max_iter: usize,
}

impl CycleOptions {
    /// Steps scaled to the predicted z-offset w = √ε·√(−M/K): 1e-3·w in z
    /// and 1e-5·w in x, whose fixed-point offset is O(ε) rather than O(√ε).
    pub fn near_foldfold(c: &BifurcationCoefficients, eps: f64) -> Self {
        let w = c
            .offset_ratio()
            .filter(|r| *r > 0.0)
            .map(|r| (eps * r).sqrt())
            .unwrap_or(eps.sqrt());
        CycleOptions {
            section: SectionOptions::near_foldfold(eps, c.minus.h0, c.plus.h0),
            fd_step_z: 1e-3 * w,
            fd_step_x: 1e-5 * w,
            step_tol: 1e-13 * (1.0 + w),
            max_iter: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitCycle {
    /// (x, z) fixed point of P⁻∘P⁺ on the surface.
    pub fixed_point: (f64, f64),
    /// Its image under P⁺.
    pub partner_point: (f64, f64),
    pub period: f64,
    pub t_plus: f64,
    pub t_minus: f64,
    /// Moduli of the return-map Jacobian eigenvalues, descending.
    pub eigenvalue_moduli: [f64; 2],
    pub epsilon: f64,
    pub iterations: usize,
    /// |u − P(u)| at the returned point.
    pub closure: f64,
}

impl LimitCycle {
    pub fn is_stable(&self) -> bool {
        self.eigenvalue_moduli.iter().all(|m| *m < 1.0)
    }

    /// Half the z-distance between the two section points.
    pub fn z_half_distance(&self) -> f64 {
        0.5 * (self.partner_point.1 - self.fixed_point.1).abs()
    }
}

struct ReturnImage {
    u: Vector2<f64>,
    partner: (f64, f64),
    t_plus: f64,
    t_minus: f64,
}

fn return_map(sys: &PiecewiseSystem, u: &Vector2<f64>, eps: f64, opts: &SectionOptions) -> Result<ReturnImage> {
    let p = half_map(sys, Region::Plus, u[0], u[1], eps, opts)?;
    let m = half_map(sys, Region::Minus, p.x, p.z, eps, opts)?;
    Ok(ReturnImage { u: Vector2::new(m.x, m.z), partner: (p.x, p.z), t_plus: p.t, t_minus: m.t })
}

fn moduli(j: &Matrix2<f64>) -> [f64; 2] {
    let tr = j.trace();
    let det = j.determinant();
    let disc = tr * tr - 4.0 * det;
    let mut m = if disc >= 0.0 {
        let s = disc.sqrt();
        [(0.5 * (tr + s)).abs(), (0.5 * (tr - s)).abs()]
    } else {
        let r = det.abs().sqrt();
        [r, r]
    };
    m.sort_by(|a, b| b.total_cmp(a));
    m
}

/// Newton on u − P⁻(P⁺(u)) from `seed`.
pub fn find_cycle(
    sys: &PiecewiseSystem,
    eps: f64,
    seed: (f64, f64),
    opts: &CycleOptions,
) -> Result<LimitCycle> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {eps}")));
    }
    let steps = [opts.fd_step_x, opts.fd_step_z];
    let mut u = Vector2::new(seed.0, seed.1);
    let mut jac = Matrix2::identity();
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let g = u - return_map(sys, &u, eps, &opts.section)?.u;
        let mut dp = Matrix2::zeros();
        for k in 0..2 {
            let mut up = u;
            let mut dn = u;
            up[k] += steps[k];
            dn[k] -= steps[k];
            let col = (return_map(sys, &up, eps, &opts.section)?.u - return_map(sys, &dn, eps, &opts.section)?.u)
                / (2.0 * steps[k]);
            dp.set_column(k, &col);
        }
        jac = dp;
        let dg = Matrix2::identity() - dp;
        let step = dg
            .lu()
            .solve(&g)
            .ok_or_else(|| Error::NonConvergence("singular return-map Jacobian".into()))?;
        u -= step;
        if !u.iter().all(|v| v.is_finite()) {
            return Err(Error::NonConvergence("Newton iterate left the finite range".into()));
        }
        if step.amax() <= opts.step_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence(format!("no cycle within {} Newton iterations", opts.max_iter)));
    }
    let img = return_map(sys, &u, eps, &opts.section)?;
    if img.t_plus <= 0.0 || img.t_minus <= 0.0 {
        return Err(Error::NonConvergence("converged to a point with non-positive transit time".into()));
    }
    Ok(LimitCycle {
        fixed_point: (u[0], u[1]),
        partner_point: img.partner,
        period: img.t_plus + img.t_minus,
        t_plus: img.t_plus,
        t_minus: img.t_minus,
        eigenvalue_moduli: moduli(&jac),
        epsilon: eps,
        iterations,
        closure: (img.u - u).amax(),
    })
}

/// Whether each half-orbit of the cycle leaves the surface into its own
/// half-space: σ⁺ > 0 where P⁺ starts and σ⁻ < 0 where P⁻ starts.
pub fn departures_are_real(sys: &PiecewiseSystem, c: &LimitCycle) -> Result<bool> {
    let surf = sys.surface();
    let at = |(x, z): (f64, f64)| crate::psys::State::new(x, surf.lift(z), z);
    let sp = sys.sigma(Region::Plus, &at(c.fixed_point), c.epsilon)?;
    let sm = sys.sigma(Region::Minus, &at(c.partner_point), c.epsilon)?;
    Ok(sp > 0.0 && sm < 0.0)
}

/// Seed for the stable branch from the leading-order prediction.
pub fn predicted_seed(
    c: &BifurcationCoefficients,
    p: &FoldFoldPoint,
    eps: f64,
    branch: crate::bifurcation::StableBranch,
) -> Result<(f64, f64)> {
    let fp = crate::bifurcation::predict_fixed_points(c, p, eps)?;
    Ok(match branch {
        crate::bifurcation::StableBranch::Upper => fp.upper,
        _ => fp.lower,
    })
}

/// One row of a prediction-versus-numerics comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub epsilon: f64,
    pub period_predicted: Option<f64>,
    pub period_newton: Option<f64>,
    pub period_simulated: Option<f64>,
    pub z_offset_predicted: Option<f64>,
    pub z_offset_measured: Option<f64>,
    pub eigenvalue_moduli: Option<[f64; 2]>,
}
