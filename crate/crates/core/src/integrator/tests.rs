use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::psys::{SmoothParts, SurfaceParams};

/// ẋ = 0 and constant (ẏ, ż) per region.
#[derive(Debug)]
struct Affine {
    minus: (f64, f64),
    plus: (f64, f64),
}

impl Affine {
    fn pick(&self, r: Region) -> (f64, f64) {
        match r {
            Region::Minus => self.minus,
            Region::Plus => self.plus,
        }
    }
}

impl SmoothParts for Affine {
    fn f(&self, _x: f64, _y: f64) -> f64 {
        0.0
    }
    fn g(&self, _x: f64, _y: f64) -> f64 {
        0.0
    }
    fn g_shift(&self, r: Region, _eps: f64) -> f64 {
        self.pick(r).0
    }
    fn h(&self, r: Region, _y: f64, _z: f64, _eps: f64) -> f64 {
        self.pick(r).1
    }
}

/// ẋ = 1, ẏ = k·x + gᵢ, ż = hᵢ: H is exactly quadratic in time.
#[derive(Debug)]
struct Parabola {
    k: f64,
    g: (f64, f64),
    h: (f64, f64),
}

impl SmoothParts for Parabola {
    fn f(&self, _x: f64, _y: f64) -> f64 {
        1.0
    }
    fn g(&self, x: f64, _y: f64) -> f64 {
        self.k * x
    }
    fn g_shift(&self, r: Region, _eps: f64) -> f64 {
        match r {
            Region::Minus => self.g.0,
            Region::Plus => self.g.1,
        }
    }
    fn h(&self, r: Region, _y: f64, _z: f64, _eps: f64) -> f64 {
        match r {
            Region::Minus => self.h.0,
            Region::Plus => self.h.1,
        }
    }
}

fn surface() -> SurfaceParams {
    SurfaceParams::new(1.05, 1.75).unwrap()
}

fn sys_of(parts: impl SmoothParts + 'static) -> PiecewiseSystem {
    PiecewiseSystem::new(surface(), Arc::new(parts))
}

fn tight() -> IntegrateOptions {
    IntegrateOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() }
}

#[test]
fn linear_crossing_time_from_above() {
    // F = (0, 0, 1) in both regions: H falls at rate b.
    let sys = sys_of(Affine { minus: (0.0, 1.0), plus: (0.0, 1.0) });
    let init = State::new(0.0, 1.2, 1.0);
    let h0 = sys.h_of(&init);
    assert!(h0 > 0.0);
    let traj = integrate(&sys, init, 0.0, 2.0, &tight()).unwrap();
    let cross = traj.events.iter().find(|e| e.kind == EventKind::EntryCrossing).unwrap();
    assert!((cross.t - h0 / 1.75).abs() < 1e-10, "{} vs {}", cross.t, h0 / 1.75);
    assert!(traj.exits().next().unwrap().kind == EventKind::ExitToMinus);
}

#[test]
fn linear_crossing_time_from_below() {
    // F = (0, 1, 0) in both regions: H rises at rate a + b.
    let sys = sys_of(Affine { minus: (1.0, 0.0), plus: (1.0, 0.0) });
    let init = State::new(0.0, 0.2, 0.5);
    let h0 = sys.h_of(&init);
    assert!(h0 < 0.0);
    let traj = integrate(&sys, init, 0.0, 5.0, &tight()).unwrap();
    let cross = traj.events.iter().find(|e| e.kind == EventKind::EntryCrossing).unwrap();
    assert!((cross.t + h0 / 2.8).abs() < 1e-10);
    assert!(sys.h_of(&cross.state).abs() <= 1e-12);
    let last = traj.last().unwrap();
    assert_eq!(last.mode, Mode::Plus);
    assert!((last.t - 5.0).abs() < 1e-12);
}

#[test]
fn antisymmetric_fields_freeze_z_on_the_surface() {
    let sys = sys_of(Affine { minus: (2.0, 1.0), plus: (-2.0, -1.0) });
    let init = State::new(0.0, 0.2, 0.5);
    let traj = integrate(&sys, init, 0.0, 3.0, &tight()).unwrap();
    let start = traj.events.iter().find(|e| e.kind == EventKind::SlidingStart).unwrap();
    let last = traj.last().unwrap();
    assert_eq!(last.mode, Mode::Sliding);
    assert!((last.state.z - start.state.z).abs() < 1e-12);
    assert!(sys.h_of(&last.state).abs() < 1e-12);
}

#[test]
fn sliding_exits_where_the_plus_field_turns() {
    // ẋ = 1 so x tracks time; ẏ⁻ = x/2 + 1, ẏ⁺ = x/2 − 1, ż = 1.
    #[derive(Debug)]
    struct TurnField;
    impl SmoothParts for TurnField {
        fn f(&self, _x: f64, _y: f64) -> f64 {
            1.0
        }
        fn g(&self, x: f64, _y: f64) -> f64 {
            0.5 * x
        }
        fn g_shift(&self, r: Region, _eps: f64) -> f64 {
            match r {
                Region::Minus => 1.0,
                Region::Plus => -1.0,
            }
        }
        fn h(&self, _r: Region, _y: f64, _z: f64, _eps: f64) -> f64 {
            1.0
        }
    }
    // a = b = 1, so σ = 2ẏ − ż. σ⁻ = 2(0.5x + 1) − 1 > 0 for x > −1 and
    // σ⁺ = 2(0.5x − 1) − 1 = x − 3, which turns positive at x = 3.
    let sys = PiecewiseSystem::new(SurfaceParams::new(1.0, 1.0).unwrap(), Arc::new(TurnField));
    let p = sys.surface();
    let init = State::new(0.0, p.lift(0.0), 0.0);
    let traj = integrate(&sys, init, 0.0, 4.0, &tight()).unwrap();
    assert_eq!(traj.samples[0].mode, Mode::Sliding);
    let exit = traj.events.iter().find(|e| e.kind == EventKind::ExitToPlus).unwrap();
    assert!((exit.t - 3.0).abs() < 1e-9, "exit at {}", exit.t);
    assert!(traj.events.iter().any(|e| e.kind == EventKind::SlidingEnd));
    assert_eq!(traj.last().unwrap().mode, Mode::Plus);
}

#[test]
fn trajectory_invariants() {
    let sys = sys_of(Parabola { k: -1.0, g: (0.5, 0.8), h: (0.3, 0.2) });
    let traj = integrate(&sys, State::new(0.0, 0.1, 0.0), 0.0, 3.0, &tight()).unwrap();
    for w in traj.samples.windows(2) {
        assert!(w[1].t > w[0].t);
    }
    for e in &traj.events {
        assert!(sys.h_of(&e.state).abs() <= 1e-12);
    }
}

fn parabola_chord(sys: &PiecewiseSystem, p: &Parabola, x0: f64, region: Region) -> f64 {
    let s = sys.surface();
    let (g, h) = match region {
        Region::Minus => (p.g.0, p.h.0),
        Region::Plus => (p.g.1, p.h.1),
    };
    let ab = s.a() + s.b();
    // H(t) − H(0) = σt + (a+b)k t²/2.
    let sigma = ab * (p.k * x0 + g) - s.b() * h;
    -2.0 * sigma / (ab * p.k)
}

#[test]
fn parabola_transit_matches_chord_time() {
    let p = Parabola { k: -2.0, g: (0.0, 1.0), h: (0.0, 0.5) };
    let sys = sys_of(Parabola { ..p });
    let opts = SectionOptions {
        integ: IntegrateOptions { rtol: 1e-12, atol: 1e-15, record_samples: false, ..Default::default() },
        t_min: 1e-9,
        t_max: 100.0,
    };
    for x0 in [0.1, 0.0, -0.3] {
        let hit = flow_to_section(&sys, Region::Plus, x0, 0.4, 0.0, &opts).unwrap();
        let exact = parabola_chord(&sys, &p, x0, Region::Plus);
        assert!((hit.t - exact).abs() < 1e-8, "x0={x0}: {} vs {exact}", hit.t);
        assert!(sys.h_of(&hit.state).abs() <= 1e-12);
    }
}

#[test]
fn virtual_departure_still_returns() {
    // σ < 0 for the + field at x0 = 0.2: the orbit dips below the surface and
    // comes back at the positive root of the same parabola.
    let p = Parabola { k: 2.0, g: (0.0, -1.0), h: (0.0, 0.5) };
    let sys = sys_of(Parabola { ..p });
    let opts = SectionOptions {
        integ: IntegrateOptions { rtol: 1e-12, atol: 1e-15, record_samples: false, ..Default::default() },
        t_min: 1e-9,
        t_max: 100.0,
    };
    let x0 = 0.2;
    let exact = parabola_chord(&sys, &p, x0, Region::Plus);
    assert!(exact > 0.0);
    let hit = flow_to_section(&sys, Region::Plus, x0, 0.4, 0.0, &opts).unwrap();
    assert!((hit.t - exact).abs() < 1e-8);
}

#[test]
fn grazing_start_is_ambiguous() {
    // σ = 0 exactly at x0 = 0.5 for k = −2, g⁺ = 1, h⁺ = 0.
    let sys = sys_of(Parabola { k: -2.0, g: (0.0, 1.0), h: (0.0, 0.0) });
    let opts = SectionOptions { integ: tight(), t_min: 1e-9, t_max: 10.0 };
    let err = flow_to_section(&sys, Region::Plus, 0.5, 0.4, 0.0, &opts).unwrap_err();
    assert!(matches!(err, Error::TangencyAmbiguity { .. } | Error::NoReturn { .. }));
}

#[test]
fn escaping_orbit_reports_no_return() {
    let sys = sys_of(Affine { minus: (0.0, 1.0), plus: (1.0, 0.0) });
    let opts = SectionOptions { integ: tight(), t_min: 1e-9, t_max: 10.0 };
    let err = flow_to_section(&sys, Region::Plus, 0.0, 0.0, 0.0, &opts).unwrap_err();
    assert!(matches!(err, Error::NoReturn { .. }));
}

#[test]
fn halving_tolerance_changes_transit_by_little() {
    let sys = sys_of(Parabola { k: -1.5, g: (0.0, 0.9), h: (0.0, 0.3) });
    let run = |rtol: f64| {
        let opts = SectionOptions {
            integ: IntegrateOptions { rtol, atol: rtol * 1e-2, record_samples: false, ..Default::default() },
            t_min: 1e-9,
            t_max: 100.0,
        };
        flow_to_section(&sys, Region::Plus, 0.05, 0.1, 0.0, &opts).unwrap().t
    };
    for rtol in [1e-6, 1e-8, 1e-10] {
        let (a, b) = (run(rtol), run(rtol / 2.0));
        assert!((a - b).abs() <= 10.0 * rtol * a.max(1.0));
    }
}

#[test]
fn runaway_chatter_is_reported() {
    let sys = sys_of(Affine { minus: (1.0, 0.0), plus: (1.0, 0.0) });
    let opts = IntegrateOptions { max_events: 0, ..tight() };
    let err = integrate(&sys, State::new(0.0, 0.2, 0.5), 0.0, 5.0, &opts).unwrap_err();
    assert!(matches!(err, Error::RunawayChatter { .. }));
}

#[test]
fn csv_exports_have_headers() {
    let sys = sys_of(Affine { minus: (1.0, 0.0), plus: (1.0, 0.0) });
    let traj = integrate(&sys, State::new(0.0, 0.2, 0.5), 0.0, 1.0, &tight()).unwrap();
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, &traj, &sys.surface()).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,x,y,z,region,H\n"));
    let mut buf = Vec::new();
    write_events_csv(&mut buf, &traj).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,x,y,z,kind\n"));
    assert!(text.contains("exit_to_plus"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn reversed_flow_returns_to_start(x0 in -0.4f64..0.4, z0 in -1.0f64..1.0, k in -3.0f64..-0.5) {
        let sys = sys_of(Parabola { k, g: (0.0, 1.2), h: (0.0, 0.4) });
        let opts = SectionOptions {
            integ: IntegrateOptions { rtol: 1e-12, atol: 1e-15, record_samples: false, ..Default::default() },
            t_min: 1e-9,
            t_max: 100.0,
        };
        let hit = flow_to_section(&sys, Region::Plus, x0, z0, 0.0, &opts);
        prop_assume!(hit.is_ok());
        let hit = hit.unwrap();
        prop_assert!(hit.t >= opts.t_min);
        prop_assert!(sys.h_of(&hit.state).abs() <= opts.integ.event_tol);
        let back = flow_to_section(&sys.time_scaled(-1.0), Region::Plus, hit.state.x, hit.state.z, 0.0, &opts).unwrap();
        prop_assert!((back.state.x - x0).abs() < 1e-6);
        prop_assert!((back.state.z - z0).abs() < 1e-6);
        prop_assert!((back.t - hit.t).abs() < 1e-6);
    }
}
