//! The `flipflop` command line.

mod verify;

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::bifurcation::{
    analyze, find_foldfold, foldfold_residual, newton_foldfold, predict_fixed_points, predict_period,
    predict_z_offset, Analysis, FoldFoldPoint, Seed,
};
use crate::config::{ResolvedModel, RunConfig};
use crate::error::{Error, Result};
use crate::glacial::{insolation_q, load_orbital_series, obliquity_s2};
use crate::integrator::{integrate, write_events_csv, write_trajectory_csv};
use crate::poincare::{find_cycle, CycleOptions, CycleReport, MeasureOptions};
use crate::psys::{ParamFamily, PiecewiseSystem, State};
use crate::report::sig17;

pub use verify::{verify_point, VerifyRow};

#[derive(Debug, Parser)]
#[command(name = "flipflop", version, about = "Fold-fold bifurcation analysis for two-zone Filippov systems")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for reports and CSV output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Fold-fold point as x0,y0,z0,param; overrides the configuration.
    #[arg(long, global = true, value_parser = parse_point, allow_hyphen_values = true)]
    pub point: Option<[f64; 4]>,
    /// Refine the given point by Newton before using it.
    #[arg(long, global = true)]
    pub polish: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search the configured seeds for fold-fold points.
    FindFoldfold,
    /// Evaluate the coefficients and the theorem's hypotheses at a point.
    Check,
    /// Leading-order period and fixed points for each epsilon.
    Predict {
        /// Epsilon values; defaults to the configuration's list.
        #[arg(long = "eps", value_delimiter = ',', allow_hyphen_values = true)]
        eps: Vec<f64>,
    },
    /// Integrate the nonsmooth flow and measure the cycle.
    Simulate {
        #[arg(long = "eps", allow_hyphen_values = true)]
        eps: f64,
        /// Horizon; defaults to the configured number of predicted periods.
        #[arg(long)]
        t_max: Option<f64>,
    },
    /// Cross-check closed forms against the time-map fit and Newton cycles.
    Verify {
        #[arg(long = "eps", value_delimiter = ',', allow_hyphen_values = true)]
        eps: Vec<f64>,
    },
    /// Insolation Q and obliquity term s2 along an orbital series.
    Forcing {
        /// CSV with header t,e,beta.
        series: PathBuf,
        /// Output CSV; defaults to forcing.csv under --out or the working directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn parse_point(s: &str) -> std::result::Result<[f64; 4], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect::<std::result::Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected 4 comma-separated numbers, got {}", v.len()))
}

/// What a command produced.
pub struct Outcome {
    pub json: serde_json::Value,
    pub text: String,
    pub exit: i32,
    /// File name for the JSON report under --out.
    pub report_name: &'static str,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(out) => {
            if let Some(dir) = &cli.out {
                let path = dir.join(out.report_name);
                if let Err(e) = write_json(&path, &out.json) {
                    eprintln!("error: {e}");
                    return e.kind().exit_code();
                }
            }
            let mut stdout = std::io::stdout().lock();
            let body = if cli.json { serde_json::to_string_pretty(&out.json).unwrap_or_default() } else { out.text };
            let _ = writeln!(stdout, "{body}");
            out.exit
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.kind().exit_code()
        }
    }
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    if let Command::Forcing { series, output } = &cli.command {
        return cmd_forcing(series, output.as_deref(), cli.out.as_deref());
    }
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("--config is required for this command".into()))?;
    let cfg = RunConfig::load(path)?;
    let ctx = Context::new(cfg)?;
    match &cli.command {
        Command::FindFoldfold => cmd_find_foldfold(&ctx),
        Command::Check => cmd_check(&ctx, cli),
        Command::Predict { eps } => cmd_predict(&ctx, cli, eps),
        Command::Simulate { eps, t_max } => cmd_simulate(&ctx, cli, *eps, *t_max),
        Command::Verify { eps } => cmd_verify(&ctx, cli, eps),
        Command::Forcing { .. } => unreachable!(),
    }
}

struct Context {
    cfg: RunConfig,
    model: ResolvedModel,
    family: Box<dyn ParamFamily>,
}

impl Context {
    fn new(cfg: RunConfig) -> Result<Self> {
        let model = cfg.resolve_model()?;
        let family = model.family()?;
        Ok(Context { cfg, model, family })
    }

    fn model_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.model).unwrap_or(serde_json::Value::Null)
    }

    fn epsilons(&self, given: &[f64]) -> Result<Vec<f64>> {
        let eps = if given.is_empty() { self.cfg.bifurcation.epsilons.clone() } else { given.to_vec() };
        if eps.is_empty() {
            return Err(Error::Config("no epsilon values: pass --eps or set bifurcation.epsilons".into()));
        }
        for e in &eps {
            if !(*e > 0.0 && e.is_finite()) {
                return Err(Error::Config(format!("epsilon must be positive, got {e}")));
            }
        }
        Ok(eps)
    }

    /// The point from --point, the configuration, or failing both the first
    /// applicable point of a seed search. Residuals are recomputed and gated.
    fn point(&self, cli: &Cli) -> Result<(FoldFoldPoint, PiecewiseSystem)> {
        let given = cli.point.or_else(|| {
            self.cfg.bifurcation.point.map(|p| [p.x0, p.y0, p.z0, p.param_value])
        });
        let p = match given {
            Some([x0, y0, z0, param]) => {
                if cli.polish {
                    newton_foldfold(self.family.as_ref(), Seed { x: x0, y: y0, z: z0, param })
                        .map_err(|f| Error::Precondition(format!("polishing the point failed: {}", f.reason)))?
                } else {
                    let sys = self.family.system_at(param)?;
                    FoldFoldPoint {
                        x0,
                        y0,
                        z0,
                        param_name: self.family.param_name().to_string(),
                        param_value: param,
                        residuals: foldfold_residual(&sys, x0, y0, z0)?,
                    }
                }
            }
            None => {
                let seeds = self.cfg.seeds(self.family.as_ref())?;
                let found = find_foldfold(self.family.as_ref(), &seeds);
                let mut chosen = None;
                for p in &found.points {
                    let sys = self.family.system_at(p.param_value)?;
                    if analyze(&sys, p).is_ok_and(|a| a.verdict.applicable) {
                        chosen = Some(p.clone());
                        break;
                    }
                }
                chosen
                    .or_else(|| found.points.first().cloned())
                    .ok_or_else(|| Error::Inapplicable("no fold-fold point found from the configured seeds".into()))?
            }
        };
        let sys = self.family.system_at(p.param_value)?;
        p.verify(&sys)?;
        Ok((p, sys))
    }
}

fn point_json(p: &FoldFoldPoint) -> serde_json::Value {
    serde_json::to_value(p).unwrap_or(serde_json::Value::Null)
}

fn point_text(p: &FoldFoldPoint) -> String {
    format!(
        "x0 = {}  y0 = {}  z0 = {}  {} = {}  max residual = {}",
        sig17(p.x0),
        sig17(p.y0),
        sig17(p.z0),
        p.param_name,
        sig17(p.param_value),
        sig17(p.max_residual())
    )
}

fn cmd_find_foldfold(ctx: &Context) -> Result<Outcome> {
    let seeds = ctx.cfg.seeds(ctx.family.as_ref())?;
    let found = find_foldfold(ctx.family.as_ref(), &seeds);
    let mut text = format!("{} seeds, {} distinct fold-fold points\n", seeds.len(), found.points.len());
    for p in &found.points {
        text += &point_text(p);
        text.push('\n');
    }
    let json = json!({
        "model": ctx.model_json(),
        "seeds": seeds.len(),
        "points": found.points,
        "failures": found.failures,
    });
    Ok(Outcome { json, text, exit: if found.points.is_empty() { 1 } else { 0 }, report_name: "foldfold.json" })
}

fn analysis_text(a: &Analysis) -> String {
    let mut t = String::new();
    let c = a.coefficients.to_json();
    if let Some(map) = c.as_object() {
        for (k, v) in map {
            let val = v.as_f64().map(sig17).unwrap_or_else(|| "undefined".into());
            t += &format!("{k:>18} = {val}\n");
        }
    }
    for (name, cond) in a.verdict.conditions() {
        let holds = match cond.holds {
            Some(true) => "holds",
            Some(false) => "FAILS",
            None => "undefined",
        };
        let lhs = cond.lhs.map(sig17).unwrap_or_else(|| "undefined".into());
        t += &format!("{name:>8}: {holds:<9} lhs = {lhs}\n");
    }
    t += &format!("applicable: {}\nstable branch: {:?}\n", a.verdict.applicable, a.verdict.stable_branch);
    for n in &a.verdict.notes {
        t += &format!("note: {n}\n");
    }
    t
}

fn cmd_check(ctx: &Context, cli: &Cli) -> Result<Outcome> {
    let (p, sys) = ctx.point(cli)?;
    let a = analyze(&sys, &p)?;
    let json = json!({
        "model": ctx.model_json(),
        "point": point_json(&p),
        "coefficients": a.coefficients.to_json(),
        "verdict": a.verdict,
    });
    let text = format!("{}\n{}", point_text(&p), analysis_text(&a));
    Ok(Outcome { json, text, exit: if a.verdict.applicable { 0 } else { 1 }, report_name: "check.json" })
}

fn applicable_analysis(sys: &PiecewiseSystem, p: &FoldFoldPoint) -> Result<Analysis> {
    let a = analyze(sys, p)?;
    if !a.verdict.applicable {
        let mut why: Vec<String> = a.verdict.failed().iter().map(|c| format!("{c} fails")).collect();
        why.extend(a.verdict.undefined().iter().map(|c| format!("{c} undefined")));
        return Err(Error::Inapplicable(why.join(", ")));
    }
    Ok(a)
}

fn cmd_predict(ctx: &Context, cli: &Cli, eps: &[f64]) -> Result<Outcome> {
    let eps = ctx.epsilons(eps)?;
    let (p, sys) = ctx.point(cli)?;
    let a = applicable_analysis(&sys, &p)?;
    let c = &a.coefficients;
    let mut rows = Vec::new();
    let mut text = format!("{}\n{:>24} {:>24} {:>24}\n", point_text(&p), "epsilon", "period", "z_offset");
    for e in eps {
        let t = predict_period(c, e)?;
        let fp = predict_fixed_points(c, &p, e)?;
        text += &format!("{:>24} {:>24} {:>24}\n", sig17(e), sig17(t), sig17(fp.z_offset));
        rows.push(json!({
            "epsilon": e,
            "period_predicted": t,
            "z_offset_predicted": fp.z_offset,
            "fixed_points": { "lower": [fp.lower.0, fp.lower.1], "upper": [fp.upper.0, fp.upper.1] },
        }));
    }
    let json = json!({ "model": ctx.model_json(), "point": point_json(&p), "stable_branch": a.verdict.stable_branch, "rows": rows });
    Ok(Outcome { json, text, exit: 0, report_name: "predict.json" })
}

fn cmd_simulate(ctx: &Context, cli: &Cli, eps: f64, t_max: Option<f64>) -> Result<Outcome> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Config(format!("epsilon must be positive, got {eps}")));
    }
    if t_max.is_some_and(|t| !(t > 0.0)) {
        return Err(Error::Config("--t-max must be positive".into()));
    }
    let (p, sys) = ctx.point(cli)?;
    let analysis = analyze(&sys, &p).ok().filter(|a| a.verdict.applicable);

    let mut report = CycleReport {
        epsilon: eps,
        period_predicted: None,
        period_newton: None,
        period_simulated: None,
        z_offset_predicted: None,
        z_offset_measured: None,
        eigenvalue_moduli: None,
    };
    let surf = sys.surface();
    let mut init = State::new(p.x0, p.y0, p.z0 + eps.sqrt());
    if let Some(a) = &analysis {
        let c = &a.coefficients;
        report.period_predicted = predict_period(c, eps).ok();
        report.z_offset_predicted = predict_z_offset(c, eps).ok();
        if let Ok(seed) = crate::poincare::predicted_seed(c, &p, eps, a.verdict.stable_branch) {
            init = State::new(seed.0, surf.lift(seed.1), seed.1);
            if let Ok(cyc) = find_cycle(&sys, eps, seed, &CycleOptions::near_foldfold(c, eps)) {
                report.period_newton = Some(cyc.period);
                report.eigenvalue_moduli = Some(cyc.eigenvalue_moduli);
            }
        }
    }
    let horizon = match (t_max, ctx.cfg.integration.t_max, report.period_predicted.or(report.period_newton)) {
        (Some(t), _, _) | (None, Some(t), _) => t,
        (None, None, Some(period)) => ctx.cfg.integration.t_max_periods * period,
        (None, None, None) => {
            return Err(Error::Config("no predicted period to size the horizon; pass --t-max".into()))
        }
    };
    let opts = MeasureOptions { integ: ctx.cfg.integration.options, ..Default::default() };
    let integ = crate::integrator::IntegrateOptions { record_samples: true, ..opts.integ };
    let traj = integrate(&sys, init, eps, horizon, &integ)?;
    let measured = crate::poincare::measure_samples(&traj.samples, &opts);
    if let Ok(m) = &measured {
        report.period_simulated = Some(m.period);
        report.z_offset_measured = Some(m.z_amplitude);
    }

    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|source| Error::Io { path: dir.clone(), source })?;
    write_trajectory_csv(create(&dir.join("trajectory.csv"))?, &traj, &surf)?;
    write_events_csv(create(&dir.join("events.csv"))?, &traj)?;

    let opt = |v: Option<f64>| v.map(sig17).unwrap_or_else(|| "n/a".into());
    let mut text = format!(
        "epsilon = {}\nhorizon = {}\nsamples = {}, events = {}\n",
        sig17(eps),
        sig17(horizon),
        traj.samples.len(),
        traj.events.len()
    );
    text += &format!(
        "period: predicted {}  newton {}  simulated {}\nz offset: predicted {}  measured {}\n",
        opt(report.period_predicted),
        opt(report.period_newton),
        opt(report.period_simulated),
        opt(report.z_offset_predicted),
        opt(report.z_offset_measured)
    );
    if let Err(e) = &measured {
        text += &format!("measurement: {e}\n");
    }
    let json = json!({
        "model": ctx.model_json(),
        "point": point_json(&p),
        "horizon": horizon,
        "cycle": report,
        "measurement_error": measured.as_ref().err().map(|e| e.to_string()),
    });
    Ok(Outcome { json, text, exit: 0, report_name: "cycle_report.json" })
}

fn cmd_verify(ctx: &Context, cli: &Cli, eps: &[f64]) -> Result<Outcome> {
    let eps = ctx.epsilons(eps)?;
    let (p, sys) = ctx.point(cli)?;
    let a = applicable_analysis(&sys, &p)?;
    let fit_tol = match ctx.model {
        ResolvedModel::Synthetic { .. } => 1e-4,
        ResolvedModel::Glacial { .. } => 1e-3,
    };
    let rows = verify_point(&sys, &p, &a, &eps, fit_tol)?;
    let all = rows.iter().all(|r| r.pass);
    let mut text = format!("{}\n", point_text(&p));
    for r in &rows {
        text += &format!(
            "{:<5} {:<28} value {:>24}  reference {:>24}  error {:>24}  tol {:>10e}\n",
            if r.pass { "pass" } else { "FAIL" },
            r.check,
            sig17(r.value),
            sig17(r.reference),
            sig17(r.error),
            r.tolerance
        );
    }
    let json = json!({ "model": ctx.model_json(), "point": point_json(&p), "rows": rows, "all_pass": all });
    Ok(Outcome { json, text, exit: if all { 0 } else { 1 }, report_name: "verify.json" })
}

fn cmd_forcing(series: &Path, output: Option<&Path>, out_dir: Option<&Path>) -> Result<Outcome> {
    let samples = load_orbital_series(series)?;
    let path = match (output, out_dir) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(d)) => d.join("forcing.csv"),
        (None, None) => PathBuf::from("forcing.csv"),
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    }
    let io = |e: csv::Error| Error::Io { path: path.clone(), source: std::io::Error::other(e) };
    let mut w = csv::Writer::from_path(&path).map_err(io)?;
    w.write_record(["t", "Q", "s2"]).map_err(io)?;
    for s in &samples {
        let q = insolation_q(s.e)?;
        w.write_record([sig17(s.t), sig17(q), sig17(obliquity_s2(s.beta))]).map_err(io)?;
    }
    w.flush().map_err(|source| Error::Io { path: path.clone(), source })?;
    let text = format!("wrote {} rows to {}", samples.len(), path.display());
    let json = json!({ "rows": samples.len(), "output": path });
    Ok(Outcome { json, text, exit: 0, report_name: "forcing.json" })
}
