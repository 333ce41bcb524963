//! Event-detecting integration of two-zone Filippov systems.
//!
//! Inside a region the flow is integrated with Dormand–Prince 5(4). Switching
//! events are bracketed on the cubic Hermite interpolant and refined on exact
//! Runge–Kutta sub-steps. Departures from the surface use the divided
//! difference q(t) = (H(t) − H(t₀))/(t − t₀), whose limit at t₀ is σ, so the
//! trivial root at the departure point never has to be stepped over.

mod dopri;
mod export;
mod root;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psys::{PiecewiseSystem, Region, State};

use dopri::Vec3;

pub use export::{write_events_csv, write_trajectory_csv};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegrateOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    /// Absolute tolerance on H at located events.
    pub event_tol: f64,
    pub max_events: usize,
    pub max_steps: usize,
    /// Relative threshold below which σ counts as tangential when deciding
    /// between crossing and sliding.
    pub tangency_tol: f64,
    pub record_samples: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: f64::INFINITY,
            event_tol: 1e-12,
            max_events: 1_000_000,
            max_steps: 100_000_000,
            tangency_tol: 1e-12,
            record_samples: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Minus,
    Plus,
    Sliding,
}

impl From<Region> for Mode {
    fn from(r: Region) -> Self {
        match r {
            Region::Minus => Mode::Minus,
            Region::Plus => Mode::Plus,
        }
    }
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Minus => "-",
            Mode::Plus => "+",
            Mode::Sliding => "sliding",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// The trajectory reached the switching surface.
    EntryCrossing,
    ExitToMinus,
    ExitToPlus,
    SlidingStart,
    SlidingEnd,
}

impl EventKind {
    pub fn label(self) -> &'static str {
        match self {
            EventKind::EntryCrossing => "entry_crossing",
            EventKind::ExitToMinus => "exit_to_minus",
            EventKind::ExitToPlus => "exit_to_plus",
            EventKind::SlidingStart => "sliding_start",
            EventKind::SlidingEnd => "sliding_end",
        }
    }

    fn exit_to(r: Region) -> Self {
        match r {
            Region::Minus => EventKind::ExitToMinus,
            Region::Plus => EventKind::ExitToPlus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub state: State,
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    pub state: State,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// Events marking departures from the surface into a region.
    pub fn exits(&self) -> impl Iterator<Item = &Event> {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::ExitToMinus | EventKind::ExitToPlus))
    }
}

/// Landing point of a region's flow on the switching surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectionHit {
    /// Transit time.
    pub t: f64,
    pub state: State,
    pub region: Region,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionOptions {
    pub integ: IntegrateOptions,
    /// Roots earlier than this are reported as tangency ambiguities.
    pub t_min: f64,
    pub t_max: f64,
}

impl SectionOptions {
    /// Defaults scaled to a fold-fold reference point: t_min = 1e-3·√ε and
    /// t_max = 1e4·√ε·max(1/|h⁻₀|, 1/|h⁺₀|).
    pub fn near_foldfold(eps: f64, h0_minus: f64, h0_plus: f64) -> Self {
        let se = eps.abs().sqrt();
        SectionOptions {
            integ: IntegrateOptions { rtol: 1e-12, atol: 1e-15, record_samples: false, ..Default::default() },
            t_min: 1e-3 * se,
            t_max: 1e4 * se * (1.0 / h0_minus.abs()).max(1.0 / h0_plus.abs()),
        }
    }
}

type Rhs<'a> = dyn Fn(&Vec3) -> Result<Vec3> + 'a;
type EventFn<'a> = dyn Fn(f64, &Vec3) -> Result<f64> + 'a;

/// How a run of steps under one vector field ended.
enum SegmentEnd {
    /// φ reached zero.
    Root { t: f64, y: Vec3 },
    /// φ was non-positive at the start and stayed so over the first step.
    Immediate { t: f64, y: Vec3 },
    Horizon { t: f64, y: Vec3 },
}

struct Segment<'a> {
    rhs: &'a Rhs<'a>,
    /// Positive while the segment continues.
    event: &'a EventFn<'a>,
    /// Value of φ at the start (a limit for departure functions).
    phi_start: f64,
    /// Tolerance on φ at the root, given the bracket's right end.
    root_tol: &'a dyn Fn(f64) -> f64,
    /// Projection applied after each accepted step (sliding keeps y = ζ(z)).
    project: Option<&'a dyn Fn(&mut Vec3)>,
}

struct Runner<'o> {
    opts: &'o IntegrateOptions,
    steps: usize,
    h_hint: Option<f64>,
}

impl<'o> Runner<'o> {
    fn new(opts: &'o IntegrateOptions) -> Self {
        Runner { opts, steps: 0, h_hint: None }
    }

    fn run(
        &mut self,
        seg: &Segment<'_>,
        t0: f64,
        y0: Vec3,
        t_end: f64,
        mut record: Option<(&mut Vec<Sample>, Mode)>,
    ) -> Result<SegmentEnd> {
        let opts = self.opts;
        let rhs = seg.rhs;
        let mut t = t0;
        let mut y = y0;
        let mut f = rhs(&y)?;
        let mut h = match self.h_hint {
            Some(h) => h,
            None => dopri::initial_step(rhs, &y, &f, opts.rtol, opts.atol, opts.max_step)?,
        };
        let mut phi_prev = seg.phi_start;
        let mut first = true;
        let mut rejects = 0usize;
        loop {
            if t >= t_end {
                return Ok(SegmentEnd::Horizon { t, y });
            }
            let remaining = t_end - t;
            let h_try = h.min(opts.max_step).min(remaining);
            let h_floor = 1e-14 * (1.0 + t.abs());
            if h_try < h_floor && h_try < remaining {
                return Err(Error::TangencyStall { t, state: State::from_array(y) });
            }
            self.steps += 1;
            if self.steps > opts.max_steps {
                return Err(Error::NonConvergence(format!("exceeded {} integration steps", opts.max_steps)));
            }
            let trial = dopri::step(rhs, &y, &f, h_try)?;
            let errn = dopri::error_norm(&trial.err, &y, &trial.y, opts.rtol, opts.atol);
            if !(errn <= 1.0) {
                rejects += 1;
                if rejects > 60 {
                    return Err(Error::TangencyStall { t, state: State::from_array(y) });
                }
                let fac = if errn.is_finite() { (0.9 * errn.powf(-0.2)).max(0.1) } else { 0.1 };
                h = h_try * fac;
                continue;
            }
            rejects = 0;
            let mut y_new = trial.y;
            let mut f_new = trial.f;
            if let Some(p) = seg.project {
                p(&mut y_new);
                f_new = rhs(&y_new)?;
            }
            let t_new = t + h_try;

            // Scan the interpolant for a sign change of φ.
            let mut prev = (0.0, phi_prev);
            let mut hit: Option<((f64, f64), (f64, f64))> = None;
            for theta in [0.25, 0.5, 0.75, 1.0] {
                let yt = if theta == 1.0 { y_new } else { dopri::hermite(&y, &f, &y_new, &f_new, h_try, theta) };
                let phi = (seg.event)(t + theta * h_try, &yt)?;
                if prev.1 > 0.0 && phi <= 0.0 {
                    hit = Some((prev, (theta, phi)));
                    break;
                }
                if first && prev.1 <= 0.0 && phi <= 0.0 && theta == 1.0 {
                    return Ok(SegmentEnd::Immediate { t: t0, y: y0 });
                }
                prev = (theta, phi);
            }
            if let Some(((ta, fa), (tb, fb))) = hit {
                let (a, b) = (t + ta * h_try, t + tb * h_try);
                let eval_err = std::cell::RefCell::new(None);
                let sub = |s: f64| -> Vec3 {
                    if s == t {
                        return y;
                    }
                    match dopri::step(rhs, &y, &f, s - t) {
                        Ok(tr) => {
                            let mut ys = tr.y;
                            if let Some(p) = seg.project {
                                p(&mut ys);
                            }
                            ys
                        }
                        Err(e) => {
                            eval_err.borrow_mut().get_or_insert(e);
                            y
                        }
                    }
                };
                let phi_at = |s: f64| -> f64 {
                    if s == t {
                        return phi_prev;
                    }
                    let ys = sub(s);
                    match (seg.event)(s, &ys) {
                        Ok(v) => v,
                        Err(e) => {
                            eval_err.borrow_mut().get_or_insert(e);
                            0.0
                        }
                    }
                };
                // Exact sub-step values at the bracket ends replace the interpolated ones.
                let fa = if ta == 0.0 { fa } else { phi_at(a) };
                let fb = if tb == 1.0 { fb } else { phi_at(b) };
                let ytol = (seg.root_tol)(b);
                let (tr, _) = if fa > 0.0 && fb <= 0.0 {
                    root::refine(&phi_at, a, fa, b, fb, ytol).best(ytol)
                } else {
                    // The interpolant and the exact sub-steps disagree on the
                    // bracket; fall back to the whole step.
                    let fe = phi_at(t_new);
                    if phi_prev > 0.0 && fe <= 0.0 {
                        root::refine(&phi_at, t, phi_prev, t_new, fe, ytol).best(ytol)
                    } else {
                        (b, fb)
                    }
                };
                let pending = eval_err.borrow_mut().take();
                if let Some(e) = pending {
                    return Err(e);
                }
                let yr = if tr == t_new { y_new } else { sub(tr) };
                if let Some((samples, mode)) = record.as_mut() {
                    push_sample(samples, tr, yr, *mode);
                }
                self.h_hint = Some(h_try);
                return Ok(SegmentEnd::Root { t: tr, y: yr });
            }

            if let Some((samples, mode)) = record.as_mut() {
                push_sample(samples, t_new, y_new, *mode);
            }
            phi_prev = prev.1;
            first = false;
            t = t_new;
            y = y_new;
            f = f_new;
            let fac = if errn == 0.0 { 5.0 } else { (0.9 * errn.powf(-0.2)).clamp(0.2, 5.0) };
            h = h_try * fac;
            self.h_hint = Some(h);
        }
    }
}

fn push_sample(samples: &mut Vec<Sample>, t: f64, y: Vec3, mode: Mode) {
    if samples.last().is_none_or(|s| t > s.t) {
        samples.push(Sample { t, state: State::from_array(y), mode });
    }
}

fn region_rhs<'a>(sys: &'a PiecewiseSystem, region: Region, eps: f64) -> impl Fn(&Vec3) -> Result<Vec3> + 'a {
    move |y: &Vec3| sys.field_eval(region, &State::from_array(*y), eps)
}

fn project_to_surface(sys: &PiecewiseSystem, y: &mut Vec3) {
    y[1] = sys.surface().lift(y[2]);
}

/// Integrate the nonsmooth flow from `init` over [0, t_end].
pub fn integrate(
    sys: &PiecewiseSystem,
    init: State,
    eps: f64,
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    if !(t_end > 0.0) {
        return Err(Error::Precondition(format!("t_end must be positive, got {t_end}")));
    }
    if !init.is_finite() {
        return Err(Error::Precondition("initial state is not finite".into()));
    }
    let surface = sys.surface();
    let mut traj = Trajectory::default();
    let mut runner = Runner::new(opts);
    let mut t = 0.0;
    let mut y = init.to_array();
    let mut n_events = 0usize;

    let record = |traj: &mut Trajectory, t: f64, y: Vec3, mode: Mode| {
        if opts.record_samples {
            push_sample(&mut traj.samples, t, y, mode);
        }
    };

    // Where to go next: a region (departing from the surface or not) or sliding.
    enum Next {
        Region { region: Region, departing: bool },
        Sliding,
    }

    let h0 = surface.eval(y[1], y[2]);
    let mut next = if h0 > opts.event_tol {
        Next::Region { region: Region::Plus, departing: false }
    } else if h0 < -opts.event_tol {
        Next::Region { region: Region::Minus, departing: false }
    } else {
        project_to_surface(sys, &mut y);
        match decide_on_surface(sys, &y, eps, opts, None)? {
            Some(r) => Next::Region { region: r, departing: true },
            None => Next::Sliding,
        }
    };
    record(&mut traj, t, y, match next {
        Next::Region { region, .. } => region.into(),
        Next::Sliding => Mode::Sliding,
    });

    while t < t_end {
        match next {
            Next::Region { region, departing } => {
                let rhs = region_rhs(sys, region, eps);
                let s = region.sign();
                let (t_dep, h_dep) = (t, surface.eval(y[1], y[2]));
                let phi_start = if departing {
                    s * sys.sigma(region, &State::from_array(y), eps)?
                } else {
                    s * h_dep
                };
                let ev_surface = move |_t: f64, v: &Vec3| Ok(s * surface.eval(v[1], v[2]));
                let ev_depart = move |tt: f64, v: &Vec3| Ok(s * (surface.eval(v[1], v[2]) - h_dep) / (tt - t_dep));
                let tol_plain = |_b: f64| opts.event_tol;
                let tol_depart = move |b: f64| opts.event_tol / (b - t_dep).max(f64::MIN_POSITIVE);
                let seg = Segment {
                    rhs: &rhs,
                    event: if departing { &ev_depart } else { &ev_surface },
                    phi_start,
                    root_tol: if departing { &tol_depart } else { &tol_plain },
                    project: None,
                };
                let samples = opts.record_samples.then_some((&mut traj.samples, Mode::from(region)));
                match runner.run(&seg, t, y, t_end, samples)? {
                    SegmentEnd::Horizon { t: tt, y: yy } => {
                        t = tt;
                        y = yy;
                        break;
                    }
                    SegmentEnd::Root { t: tt, y: yy } | SegmentEnd::Immediate { t: tt, y: yy } => {
                        t = tt;
                        y = yy;
                        project_to_surface(sys, &mut y);
                        n_events += 1;
                        if n_events > opts.max_events {
                            return Err(Error::RunawayChatter { max_events: opts.max_events });
                        }
                        traj.events.push(Event { t, state: State::from_array(y), kind: EventKind::EntryCrossing });
                        match decide_on_surface(sys, &y, eps, opts, Some(region))? {
                            Some(r) => {
                                traj.events.push(Event { t, state: State::from_array(y), kind: EventKind::exit_to(r) });
                                next = Next::Region { region: r, departing: true };
                            }
                            None => {
                                traj.events.push(Event { t, state: State::from_array(y), kind: EventKind::SlidingStart });
                                next = Next::Sliding;
                            }
                        }
                    }
                }
            }
            Next::Sliding => {
                let rhs = |v: &Vec3| sys.sliding_velocity(&State::from_array(*v), eps);
                // Positive while both fields push toward the surface.
                let ev = |_t: f64, v: &Vec3| {
                    let st = State::from_array(*v);
                    Ok(sys.sigma(Region::Minus, &st, eps)?.min(-sys.sigma(Region::Plus, &st, eps)?))
                };
                let phi_start = ev(t, &y)?;
                let tol = |_b: f64| 0.0;
                let proj = |v: &mut Vec3| project_to_surface(sys, v);
                let seg = Segment { rhs: &rhs, event: &ev, phi_start, root_tol: &tol, project: Some(&proj) };
                let samples = opts.record_samples.then_some((&mut traj.samples, Mode::Sliding));
                match runner.run(&seg, t, y, t_end, samples)? {
                    SegmentEnd::Horizon { t: tt, y: yy } => {
                        t = tt;
                        y = yy;
                        break;
                    }
                    SegmentEnd::Root { t: tt, y: yy } | SegmentEnd::Immediate { t: tt, y: yy } => {
                        t = tt;
                        y = yy;
                        n_events += 1;
                        if n_events > opts.max_events {
                            return Err(Error::RunawayChatter { max_events: opts.max_events });
                        }
                        let st = State::from_array(y);
                        let sm = sys.sigma(Region::Minus, &st, eps)?;
                        let sp = sys.sigma(Region::Plus, &st, eps)?;
                        // The field whose σ changed sign is the one the orbit follows.
                        let r = if -sp <= sm { Region::Plus } else { Region::Minus };
                        traj.events.push(Event { t, state: st, kind: EventKind::SlidingEnd });
                        traj.events.push(Event { t, state: st, kind: EventKind::exit_to(r) });
                        next = Next::Region { region: r, departing: true };
                    }
                }
            }
        }
    }
    record(&mut traj, t, y, match next {
        Next::Region { region, .. } => region.into(),
        Next::Sliding => Mode::Sliding,
    });
    Ok(traj)
}

/// Decide how to continue from a point on the surface. `arrived_from` is the
/// region the orbit came from, if any. Returns the region to depart into, or
/// `None` to slide.
fn decide_on_surface(
    sys: &PiecewiseSystem,
    y: &Vec3,
    eps: f64,
    opts: &IntegrateOptions,
    arrived_from: Option<Region>,
) -> Result<Option<Region>> {
    let st = State::from_array(*y);
    let fm = sys.field_eval(Region::Minus, &st, eps)?;
    let fp = sys.field_eval(Region::Plus, &st, eps)?;
    let mag = fm.iter().chain(fp.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = opts.tangency_tol * (1.0 + mag);
    let surface = sys.surface();
    let sm = surface.sigma(fm[1], fm[2]);
    let sp = surface.sigma(fp[1], fp[2]);
    Ok(match arrived_from {
        Some(from) => {
            let to = from.opposite();
            let s_to = if to == Region::Plus { sp } else { sm };
            let s_from = if from == Region::Plus { sp } else { sm };
            if s_to * to.sign() > tol {
                Some(to)
            } else if s_from * to.sign() > tol {
                None
            } else {
                // Grazing contact: the orbit touches the surface and stays in its region.
                Some(from)
            }
        }
        None => {
            if sp > tol && sm > tol {
                Some(Region::Plus)
            } else if sp < -tol && sm < -tol {
                Some(Region::Minus)
            } else if sm > tol && sp < -tol {
                None
            } else if sp > tol {
                Some(Region::Plus)
            } else if sm < -tol {
                Some(Region::Minus)
            } else {
                return Err(Error::TangencyAmbiguity { sigma: sp.abs().max(sm.abs()), t: 0.0 });
            }
        }
    })
}

/// Follow region `region`'s field from (x, ζ(z), z) to its next intersection with
/// the switching surface, ignoring the other region.
pub fn flow_to_section(
    sys: &PiecewiseSystem,
    region: Region,
    x: f64,
    z: f64,
    eps: f64,
    opts: &SectionOptions,
) -> Result<SectionHit> {
    let surface = sys.surface();
    let start = State::new(x, surface.lift(z), z);
    if !start.is_finite() {
        return Err(Error::Precondition("start point is not finite".into()));
    }
    let sigma = sys.sigma(region, &start, eps)?;
    let fv = sys.field_eval(region, &start, eps)?;
    let mag = fv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sigma.abs() <= opts.integ.tangency_tol * (1.0 + mag) {
        return Err(Error::TangencyAmbiguity { sigma, t: 0.0 });
    }
    let s = sigma.signum();
    let h_dep = surface.eval(start.y, start.z);
    let rhs = region_rhs(sys, region, eps);
    let ev = move |tt: f64, v: &Vec3| Ok(s * (surface.eval(v[1], v[2]) - h_dep) / tt);
    let event_tol = opts.integ.event_tol;
    let tol = move |b: f64| event_tol / b.max(f64::MIN_POSITIVE);
    let seg = Segment { rhs: &rhs, event: &ev, phi_start: s * sigma, root_tol: &tol, project: None };
    let mut runner = Runner::new(&opts.integ);
    match runner.run(&seg, 0.0, start.to_array(), opts.t_max, None)? {
        SegmentEnd::Root { t, y } => {
            if t < opts.t_min {
                return Err(Error::TangencyAmbiguity { sigma, t });
            }
            Ok(SectionHit { t, state: State::from_array(y), region })
        }
        SegmentEnd::Immediate { t, .. } => Err(Error::TangencyAmbiguity { sigma, t }),
        SegmentEnd::Horizon { .. } => Err(Error::NoReturn { t_max: opts.t_max }),
    }
}

#[cfg(test)]
mod tests;
