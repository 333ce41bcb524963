use serde::Serialize;

use crate::bifurcation::{predict_period, predict_z_offset, Analysis, FoldFoldPoint, CROSS_FORM_TOL};
use crate::error::Result;
use crate::poincare::{find_cycle, fit_timemap, predicted_seed, CycleOptions, TimeMapGrid};
use crate::psys::{PiecewiseSystem, Region};

/// Scale of the natural time-map grid used by `verify`.
pub const FIT_GRID_SCALE: f64 = 1e-2;
/// Tolerance on the closed-form β = −2/h identity.
pub const BETA_IDENTITY_TOL: f64 = 1e-12;
/// Constant C in the z-offset tolerance C·√ε.
pub const Z_OFFSET_CONSTANT: f64 = 5.0;

/// Period tolerance for a Newton cycle at `eps`: 5% down to ε = 1e-3 and
/// 3% below it.
pub fn period_tolerance(eps: f64) -> f64 {
    if eps >= 1e-3 {
        0.05
    } else {
        0.03
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyRow {
    pub check: String,
    pub value: f64,
    pub reference: f64,
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl VerifyRow {
    fn new(check: String, value: f64, reference: f64, error: f64, tolerance: f64) -> Self {
        VerifyRow { check, value, reference, error, tolerance, pass: error.is_finite() && error <= tolerance }
    }

    fn relative(check: String, value: f64, reference: f64, tolerance: f64) -> Self {
        let scale = if reference != 0.0 { reference.abs() } else { value.abs() };
        let err = if scale == 0.0 { 0.0 } else { (value - reference).abs() / scale };
        Self::new(check, value, reference, err, tolerance)
    }

    fn failed(check: String, tolerance: f64) -> Self {
        VerifyRow { check, value: f64::NAN, reference: f64::NAN, error: f64::NAN, tolerance, pass: false }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Closed forms against time-map fits, cross-form identities, and Newton
/// cycles against the √ε predictions.
pub fn verify_point(
    sys: &PiecewiseSystem,
    p: &FoldFoldPoint,
    a: &Analysis,
    eps: &[f64],
    fit_tol: f64,
) -> Result<Vec<VerifyRow>> {
    let c = &a.coefficients;
    let mut rows = Vec::new();
    for r in Region::BOTH {
        let q = c.region(r);
        rows.push(VerifyRow::relative(format!("beta{r} = -2/h0{r}"), q.beta, -2.0 / q.h0, BETA_IDENTITY_TOL));
        rows.push(VerifyRow::relative(format!("B{r} forms"), q.b, q.b_aux, CROSS_FORM_TOL));
        rows.push(VerifyRow::relative(format!("C{r} forms"), q.c, q.c_aux, CROSS_FORM_TOL));

        let grid = TimeMapGrid::natural(c, r, FIT_GRID_SCALE).unwrap_or_else(|_| TimeMapGrid::standard(FIT_GRID_SCALE));
        let fit = match fit_timemap(sys, p, r, &grid) {
            Ok(f) => f,
            Err(_) => {
                for name in ["alpha", "beta", "gamma", "eta"] {
                    rows.push(VerifyRow::failed(format!("{name}{r} fit"), fit_tol));
                }
                continue;
            }
        };
        rows.push(VerifyRow::relative(format!("alpha{r} fit"), fit.alpha, q.alpha, fit_tol));
        rows.push(VerifyRow::relative(format!("beta{r} fit vs -2/h0{r}"), fit.beta, -2.0 / q.h0, fit_tol));
        if q.gamma == 0.0 {
            // No scale to be relative to: bound the fitted term's contribution
            // against the leading term over the grid.
            let err = fit.gamma.abs() * max_abs(&grid.eps) / (fit.beta.abs() * max_abs(&grid.dz));
            rows.push(VerifyRow::new(format!("gamma{r} fit (absolute)"), fit.gamma, 0.0, err, fit_tol));
        } else {
            rows.push(VerifyRow::relative(format!("gamma{r} fit"), fit.gamma, q.gamma, fit_tol));
        }
        rows.push(VerifyRow::relative(format!("eta{r} fit"), fit.eta, q.eta, fit_tol));
    }
    if let (Some(kb), Some(kn)) = (c.big_k, c.big_k_notation) {
        rows.push(VerifyRow::relative("K forms".into(), kn, kb, CROSS_FORM_TOL));
    }

    for &e in eps {
        let ptol = period_tolerance(e);
        let ztol = Z_OFFSET_CONSTANT * e.sqrt();
        let t_pred = predict_period(c, e)?;
        let w = predict_z_offset(c, e)?;
        let seed = predicted_seed(c, p, e, a.verdict.stable_branch)?;
        match find_cycle(sys, e, seed, &CycleOptions::near_foldfold(c, e)) {
            Ok(cyc) => {
                rows.push(VerifyRow::relative(format!("period eps={e:e}"), cyc.period, t_pred, ptol));
                rows.push(VerifyRow::relative(format!("z offset eps={e:e}"), cyc.z_half_distance(), w, ztol));
                let m = cyc.eigenvalue_moduli[0];
                rows.push(VerifyRow {
                    check: format!("attracting eps={e:e}"),
                    value: m,
                    reference: 1.0,
                    error: m,
                    tolerance: 1.0,
                    pass: m < 1.0,
                });
            }
            Err(_) => {
                rows.push(VerifyRow::failed(format!("period eps={e:e}"), ptol));
                rows.push(VerifyRow::failed(format!("z offset eps={e:e}"), ztol));
                rows.push(VerifyRow::failed(format!("attracting eps={e:e}"), 1.0));
            }
        }
    }
    Ok(rows)
}
