//! C ABI over `flipflop-core`.
//!
//! Every fallible function returns an [`FfStatus`]; on failure the message
//! is available from [`ff_last_error`] on the same thread. Objects are
//! opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use flipflop_core::bifurcation::{
    analyze, find_foldfold, foldfold_residual, predict_period, predict_z_offset, Analysis, FoldFoldPoint,
    Seed, StableBranch,
};
use flipflop_core::config::{ResolvedModel, RunConfig};
use flipflop_core::glacial::{insolation_q, obliquity_s2, FreeParam, GlacialParams};
use flipflop_core::poincare::{find_cycle, predicted_seed, CycleOptions};
use flipflop_core::psys::ParamFamily;
use flipflop_core::synthetic::SyntheticSpec;
use flipflop_core::{Error, ErrorKind, PiecewiseSystem};

/// Status codes; 1 to 4 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FfStatus {
    Ok = 0,
    /// The computation finished with a negative answer, e.g. the theorem
    /// does not apply.
    Negative = 1,
    Config = 2,
    Precondition = 3,
    Numerical = 4,
    NullPointer = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
    /// The output buffer was too small; the required count is still written.
    BufferTooSmall = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FfStableBranch {
    Lower = 0,
    Upper = 1,
    Indeterminate = 2,
}

/// A fold-fold point with its free parameter value.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FfPoint {
    pub x0: f64,
    pub y0: f64,
    pub z0: f64,
    pub param: f64,
    pub max_residual: f64,
}

/// A limit cycle of the return map.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FfCycle {
    pub x: f64,
    pub z: f64,
    pub period: f64,
    pub t_plus: f64,
    pub t_minus: f64,
    /// Eigenvalue moduli of the return-map Jacobian, descending.
    pub modulus_max: f64,
    pub modulus_min: f64,
    pub z_half_distance: f64,
    pub stable: bool,
}

/// Opaque model handle.
pub struct FfModel {
    model: ResolvedModel,
    family: Box<dyn ParamFamily>,
}

/// Opaque analysis handle: the point, its system, coefficients and verdict.
pub struct FfAnalysis {
    point: FoldFoldPoint,
    sys: PiecewiseSystem,
    analysis: Analysis,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> FfStatus {
    match e.kind() {
        ErrorKind::Negative => FfStatus::Negative,
        ErrorKind::Config => FfStatus::Config,
        ErrorKind::Precondition => FfStatus::Precondition,
        ErrorKind::Numerical => FfStatus::Numerical,
    }
}

enum Fail {
    Core(Error),
    Null(&'static str),
    Small(usize),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> FfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            FfStatus::Ok
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer passed for {what}"));
            FfStatus::NullPointer
        }
        Ok(Err(Fail::Small(need))) => {
            set_error(format!("buffer too small, {need} entries needed"));
            FfStatus::BufferTooSmall
        }
        Err(_) => {
            set_error("panic inside flipflop".into());
            FfStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Core(Error::Config(format!("{what} is not valid UTF-8"))))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

fn boxed_model(model: ResolvedModel) -> Result<*mut FfModel, Fail> {
    let family = model.family()?;
    Ok(Box::into_raw(Box::new(FfModel { model, family })))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ff_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a model from a named preset. `kind` is "glacial" or "synthetic".
/// Glacial models free T+.
///
/// # Safety
/// `kind` and `preset` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ff_model_from_preset(
    kind: *const c_char,
    preset: *const c_char,
    out: *mut *mut FfModel,
) -> FfStatus {
    guard(|| {
        let kind = str_arg(kind, "kind")?;
        let preset = str_arg(preset, "preset")?;
        let out = out_arg(out, "out")?;
        let model = match kind {
            "glacial" => ResolvedModel::Glacial { params: GlacialParams::preset(preset)?, free_parameter: FreeParam::TPlus },
            "synthetic" => ResolvedModel::Synthetic { spec: SyntheticSpec::preset(preset)? },
            other => return Err(Error::Config(format!("unknown model kind '{other}'")).into()),
        };
        *out = boxed_model(model)?;
        Ok(())
    })
}

/// Builds a model from the text of a TOML run configuration.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ff_model_from_config(toml: *const c_char, out: *mut *mut FfModel) -> FfStatus {
    guard(|| {
        let text = str_arg(toml, "toml")?;
        let out = out_arg(out, "out")?;
        let cfg = RunConfig::from_toml_str(text)?;
        *out = boxed_model(cfg.resolve_model()?)?;
        Ok(())
    })
}

/// # Safety
/// `model` must come from a constructor above and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ff_model_free(model: *mut FfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Newton search from `n_seeds` seeds laid out as (x, y, z, param)
/// quadruples. Distinct points go to `out`; `count` receives how many were
/// found even when `capacity` is too small.
///
/// # Safety
/// `seeds` must hold 4·`n_seeds` doubles and `out` room for `capacity` points.
#[no_mangle]
pub unsafe extern "C" fn ff_find_foldfold(
    model: *const FfModel,
    seeds: *const f64,
    n_seeds: usize,
    out: *mut FfPoint,
    capacity: usize,
    count: *mut usize,
) -> FfStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let count = out_arg(count, "count")?;
        if n_seeds == 0 {
            return Err(Error::Config("no seeds".into()).into());
        }
        if seeds.is_null() {
            return Err(Fail::Null("seeds"));
        }
        let raw = std::slice::from_raw_parts(seeds, 4 * n_seeds);
        let seeds: Vec<Seed> = raw.chunks_exact(4).map(|s| Seed { x: s[0], y: s[1], z: s[2], param: s[3] }).collect();
        let found = find_foldfold(m.family.as_ref(), &seeds);
        *count = found.points.len();
        if found.points.len() > capacity {
            return Err(Fail::Small(found.points.len()));
        }
        if !found.points.is_empty() && out.is_null() {
            return Err(Fail::Null("out"));
        }
        for (i, p) in found.points.iter().enumerate() {
            *out.add(i) = FfPoint { x0: p.x0, y0: p.y0, z0: p.z0, param: p.param_value, max_residual: p.max_residual() };
        }
        Ok(())
    })
}

/// Checks the residuals at `point`, then evaluates the coefficients and the
/// theorem's hypotheses. A point that is not a fold-fold point gives
/// `Precondition`.
///
/// # Safety
/// `model` and `point` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ff_analyze(model: *const FfModel, point: *const FfPoint, out: *mut *mut FfAnalysis) -> FfStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let pt = ref_arg(point, "point")?;
        let out = out_arg(out, "out")?;
        let sys = m.family.system_at(pt.param)?;
        let point = FoldFoldPoint {
            x0: pt.x0,
            y0: pt.y0,
            z0: pt.z0,
            param_name: m.family.param_name().to_string(),
            param_value: pt.param,
            residuals: foldfold_residual(&sys, pt.x0, pt.y0, pt.z0)?,
        };
        point.verify(&sys)?;
        let analysis = analyze(&sys, &point)?;
        *out = Box::into_raw(Box::new(FfAnalysis { point, sys, analysis }));
        Ok(())
    })
}

/// # Safety
/// `analysis` must come from [`ff_analyze`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ff_analysis_free(analysis: *mut FfAnalysis) {
    if !analysis.is_null() {
        drop(Box::from_raw(analysis));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ff_analysis_applicable(analysis: *const FfAnalysis, out: *mut bool) -> FfStatus {
    guard(|| {
        let a = ref_arg(analysis, "analysis")?;
        *out_arg(out, "out")? = a.analysis.verdict.applicable;
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ff_analysis_stable_branch(analysis: *const FfAnalysis, out: *mut FfStableBranch) -> FfStatus {
    guard(|| {
        let a = ref_arg(analysis, "analysis")?;
        *out_arg(out, "out")? = match a.analysis.verdict.stable_branch {
            StableBranch::Lower => FfStableBranch::Lower,
            StableBranch::Upper => FfStableBranch::Upper,
            StableBranch::Indeterminate => FfStableBranch::Indeterminate,
        };
        Ok(())
    })
}

/// Looks up a coefficient by its report key, e.g. "alpha_minus", "K" or
/// "h0_plus". Undefined coefficients give `Negative`, unknown keys `Config`.
///
/// # Safety
/// `name` must be a NUL-terminated string; pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ff_analysis_coefficient(analysis: *const FfAnalysis, name: *const c_char, out: *mut f64) -> FfStatus {
    guard(|| {
        let a = ref_arg(analysis, "analysis")?;
        let name = str_arg(name, "name")?;
        let out = out_arg(out, "out")?;
        let json = a.analysis.coefficients.to_json();
        match json.get(name) {
            None => Err(Error::Config(format!("unknown coefficient '{name}'")).into()),
            Some(v) => match v.as_f64() {
                Some(x) => {
                    *out = x;
                    Ok(())
                }
                None => Err(Error::Degenerate(format!("{name} is undefined at this point")).into()),
            },
        }
    })
}

/// The full report (point, coefficients, verdict) as JSON. Release the
/// string with [`ff_string_free`].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ff_analysis_json(analysis: *const FfAnalysis, out: *mut *mut c_char) -> FfStatus {
    guard(|| {
        let a = ref_arg(analysis, "analysis")?;
        let out = out_arg(out, "out")?;
        let v = serde_json::json!({
            "point": a.point,
            "coefficients": a.analysis.coefficients.to_json(),
            "verdict": a.analysis.verdict,
        });
        *out = CString::new(v.to_string()).unwrap_or_default().into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ff_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn require_applicable(a: &FfAnalysis) -> Result<(), Fail> {
    let v = &a.analysis.verdict;
    if v.applicable {
        return Ok(());
    }
    let mut why: Vec<String> = v.failed().iter().map(|c| format!("{c} fails")).collect();
    why.extend(v.undefined().iter().map(|c| format!("{c} undefined")));
    Err(Error::Inapplicable(why.join(", ")).into())
}

/// Leading-order period and z-offset at `eps`; `Negative` when the theorem
/// does not apply.
///
/// # Safety
/// Pointers must be valid; either output may be null.
#[no_mangle]
pub unsafe extern "C" fn ff_predict(analysis: *const FfAnalysis, eps: f64, period: *mut f64, z_offset: *mut f64) -> FfStatus {
    guard(|| {
        let a = ref_arg(analysis, "analysis")?;
        require_applicable(a)?;
        let c = &a.analysis.coefficients;
        let t = predict_period(c, eps)?;
        let w = predict_z_offset(c, eps)?;
        if let Some(p) = period.as_mut() {
            *p = t;
        }
        if let Some(z) = z_offset.as_mut() {
            *z = w;
        }
        Ok(())
    })
}

/// Newton search for the cycle on the stable branch at `eps`; `Negative`
/// when the theorem does not apply.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ff_find_cycle(analysis: *const FfAnalysis, eps: f64, out: *mut FfCycle) -> FfStatus {
    guard(|| {
        let a = ref_arg(analysis, "analysis")?;
        let out = out_arg(out, "out")?;
        require_applicable(a)?;
        let c = &a.analysis.coefficients;
        let seed = predicted_seed(c, &a.point, eps, a.analysis.verdict.stable_branch)?;
        let cyc = find_cycle(&a.sys, eps, seed, &CycleOptions::near_foldfold(c, eps))?;
        *out = FfCycle {
            x: cyc.fixed_point.0,
            z: cyc.fixed_point.1,
            period: cyc.period,
            t_plus: cyc.t_plus,
            t_minus: cyc.t_minus,
            modulus_max: cyc.eigenvalue_moduli[0],
            modulus_min: cyc.eigenvalue_moduli[1],
            z_half_distance: cyc.z_half_distance(),
            stable: cyc.is_stable(),
        };
        Ok(())
    })
}

/// Insolation Q(e); |e| ≥ 1 gives `Config`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ff_insolation_q(e: f64, out: *mut f64) -> FfStatus {
    guard(|| {
        *out_arg(out, "out")? = insolation_q(e)?;
        Ok(())
    })
}

/// Obliquity term s2(β), β in radians.
#[no_mangle]
pub extern "C" fn ff_obliquity_s2(beta: f64) -> f64 {
    obliquity_s2(beta)
}

/// Name of the model's free parameter, e.g. "t_plus". Release with
/// [`ff_string_free`].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ff_model_param_name(model: *const FfModel, out: *mut *mut c_char) -> FfStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let out = out_arg(out, "out")?;
        *out = CString::new(m.family.param_name()).unwrap_or_default().into_raw();
        Ok(())
    })
}

/// The resolved model constants as JSON. Release with [`ff_string_free`].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ff_model_json(model: *const FfModel, out: *mut *mut c_char) -> FfStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let out = out_arg(out, "out")?;
        let v = serde_json::to_string(&m.model).map_err(|e| Error::Config(e.to_string()))?;
        *out = CString::new(v).unwrap_or_default().into_raw();
        Ok(())
    })
}
