use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{integrate, IntegrateOptions, Sample};
use crate::psys::{PiecewiseSystem, State};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasureOptions {
    pub integ: IntegrateOptions,
    /// Leading fraction of the run discarded as transient.
    pub transient_fraction: f64,
    pub min_cycles: usize,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        MeasureOptions { integ: IntegrateOptions::default(), transient_fraction: 0.5, min_cycles: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleMeasurement {
    pub period: f64,
    pub period_std: f64,
    /// Half the peak-to-peak z range over the retained tail.
    pub z_amplitude: f64,
    pub z_amplitude_std: f64,
    /// z level of the timing section.
    pub z_mean: f64,
    pub cycles: usize,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Period and amplitude statistics from already-integrated samples.
pub fn measure_samples(samples: &[Sample], opts: &MeasureOptions) -> Result<CycleMeasurement> {
    let insufficient = |why: String| Error::InsufficientData(why);
    let (Some(first), Some(last)) = (samples.first(), samples.last()) else {
        return Err(insufficient("no samples".into()));
    };
    let t_cut = first.t + opts.transient_fraction * (last.t - first.t);
    let tail: Vec<&Sample> = samples.iter().filter(|s| s.t >= t_cut).collect();
    if tail.len() < 3 {
        return Err(insufficient(format!("only {} samples after the transient", tail.len())));
    }

    // Time-weighted mean of z over the tail.
    let mut area = 0.0;
    for w in tail.windows(2) {
        area += 0.5 * (w[0].state.z + w[1].state.z) * (w[1].t - w[0].t);
    }
    let span = tail[tail.len() - 1].t - tail[0].t;
    let z_mean = area / span;

    let mut crossings = Vec::new();
    let mut idx = Vec::new();
    for (i, w) in tail.windows(2).enumerate() {
        let (z0, z1) = (w[0].state.z, w[1].state.z);
        if z0 < z_mean && z1 >= z_mean {
            let th = (z_mean - z0) / (z1 - z0);
            crossings.push(w[0].t + th * (w[1].t - w[0].t));
            idx.push(i + 1);
        }
    }
    let cycles = crossings.len().saturating_sub(1);
    if cycles < opts.min_cycles {
        return Err(insufficient(format!(
            "{cycles} complete cycles in the tail, need {}",
            opts.min_cycles
        )));
    }
    let periods: Vec<f64> = crossings.windows(2).map(|w| w[1] - w[0]).collect();
    let (period, period_std) = mean_std(&periods);

    let amps: Vec<f64> = idx
        .windows(2)
        .map(|w| {
            let (lo, hi) = tail[w[0]..=w[1]]
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.state.z), hi.max(s.state.z)));
            0.5 * (hi - lo)
        })
        .collect();
    let third = (amps.len() / 3).max(1);
    let early = mean_std(&amps[..third]).0;
    let late = mean_std(&amps[amps.len() - third..]).0;
    if !(late > 0.5 * early) {
        return Err(insufficient(format!(
            "oscillation is not sustained (cycle amplitude fell from {early:e} to {late:e})"
        )));
    }
    let (_, z_amplitude_std) = mean_std(&amps);
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.state.z), hi.max(s.state.z)));

    Ok(CycleMeasurement { period, period_std, z_amplitude: 0.5 * (hi - lo), z_amplitude_std, z_mean, cycles })
}

/// Integrates from `init` over [0, t_max] and measures the settled
/// oscillation.
pub fn measure_cycle(
    sys: &PiecewiseSystem,
    eps: f64,
    init: State,
    t_max: f64,
    opts: &MeasureOptions,
) -> Result<CycleMeasurement> {
    if !(0.0..1.0).contains(&opts.transient_fraction) {
        return Err(Error::Config(format!(
            "transient fraction must lie in [0, 1), got {}",
            opts.transient_fraction
        )));
    }
    let integ = IntegrateOptions { record_samples: true, ..opts.integ };
    let traj = integrate(sys, init, eps, t_max, &integ)?;
    measure_samples(&traj.samples, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::Mode;
    use crate::psys::{Region, SmoothParts, SurfaceParams};
    use std::sync::Arc;

    fn sampled(f: impl Fn(f64) -> f64, t_end: f64, n: usize) -> Vec<Sample> {
        (0..=n)
            .map(|i| {
                let t = t_end * i as f64 / n as f64;
                Sample { t, state: State::new(0.0, 0.0, f(t)), mode: Mode::Minus }
            })
            .collect()
    }

    #[test]
    fn sine_wave_period_and_amplitude() {
        let s = sampled(|t| 3.0 + 0.2 * (2.0 * std::f64::consts::PI * t / 0.7).sin(), 20.0, 200_000);
        let m = measure_samples(&s, &MeasureOptions::default()).unwrap();
        assert!((m.period - 0.7).abs() < 1e-6, "{m:?}");
        assert!((m.z_amplitude - 0.2).abs() < 1e-6);
        assert!(m.period_std < 1e-6);
    }

    #[test]
    fn decaying_wave_is_rejected() {
        let s = sampled(|t| (-t).exp() * (10.0 * t).sin(), 20.0, 200_000);
        let err = measure_samples(&s, &MeasureOptions::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)), "{err}");
    }

    #[test]
    fn too_few_cycles_is_rejected() {
        let s = sampled(|t| t.sin(), 20.0, 2000);
        assert!(matches!(measure_samples(&s, &MeasureOptions::default()), Err(Error::InsufficientData(_))));
    }

    /// A damped rotation in (x, y) with z relaxing to y; the switching
    /// surface H = 101y − 100 − z stays far from the motion.
    #[derive(Debug)]
    struct Focus;
    impl SmoothParts for Focus {
        fn f(&self, x: f64, y: f64) -> f64 {
            -0.2 * x - 3.0 * y
        }
        fn g(&self, x: f64, y: f64) -> f64 {
            3.0 * x - 0.2 * y
        }
        fn g_shift(&self, _r: Region, _e: f64) -> f64 {
            0.0
        }
        fn h(&self, _r: Region, y: f64, z: f64, _e: f64) -> f64 {
            y - z
        }
    }

    #[test]
    fn linear_focus_has_no_sustained_cycle() {
        let sys = PiecewiseSystem::new(SurfaceParams::new(100.0, 1.0).unwrap(), Arc::new(Focus));
        let err = measure_cycle(&sys, 0.0, State::new(0.1, 0.0, 0.0), 60.0, &MeasureOptions::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)), "{err}");
    }
}
