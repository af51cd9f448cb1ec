//! Batch experiment runner behind the `mfpe` binary.
//!
//! Every command reads an [`ExperimentConfig`], writes CSV outputs and a
//! `manifest.json` into the output directory, and returns a [`Report`].

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::bayes::{mean_direction, particle_filter_oracle, resultant_length, run_filter, ParticleFilterConfig};
use crate::check::run_identity_suite;
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{Error, Result};
use crate::fpe::{evolve, DensityGrid};
use crate::io::atomic_write;
use crate::sde::{density_from_ensemble, expected_histogram_l1, simulate_ensemble};
use crate::stats::angle_deg;

pub const EXIT_OK: i32 = 0;
pub const EXIT_TOLERANCE: i32 = 2;
pub const EXIT_INVALID_CONFIG: i32 = 3;
pub const EXIT_BLOW_UP: i32 = 4;
/// Output could not be written.
pub const EXIT_IO: i32 = 1;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    /// Human-readable summary lines.
    pub lines: Vec<String>,
    /// False when a tolerance or budget was exceeded.
    pub passed: bool,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_OK
        } else {
            EXIT_TOLERANCE
        }
    }
}

/// Exit code for a failed run.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_)
        | Error::Json(_)
        | Error::Csv(_)
        | Error::ShapeMismatch(_)
        | Error::GridTooSmall { .. }
        | Error::ConventionMismatch { .. }
        | Error::CflViolation { .. }
        | Error::PoleProximity { .. } => EXIT_INVALID_CONFIG,
        Error::NonFiniteDensity { .. }
        | Error::NonFiniteState { .. }
        | Error::DegenerateUpdate { .. }
        | Error::WeightCollapse { .. } => EXIT_BLOW_UP,
        Error::Io(_) => EXIT_IO,
    }
}

/// Load the config, apply the seed override, and dispatch.
pub fn run(kind: ExperimentKind, opts: &RunOptions) -> Result<Report> {
    let mut cfg = ExperimentConfig::load(&opts.config)?;
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let base = opts.config.parent().unwrap_or(Path::new("")).to_path_buf();
    run_config(kind, &cfg, &base, &opts.out)
}

/// Run an already-loaded config; `base` resolves relative input paths.
pub fn run_config(kind: ExperimentKind, cfg: &ExperimentConfig, base: &Path, out: &Path) -> Result<Report> {
    cfg.validate(kind)?;
    std::fs::create_dir_all(out)?;
    let start = Instant::now();
    let mut run = Run {
        cfg,
        base,
        out,
        outputs: Vec::new(),
        extra: serde_json::Map::new(),
        lines: Vec::new(),
    };
    let passed = match kind {
        ExperimentKind::Check => cmd_check(&mut run)?,
        ExperimentKind::Fpe => cmd_fpe(&mut run)?,
        ExperimentKind::Mc => cmd_mc(&mut run)?,
        ExperimentKind::Compare => cmd_compare(&mut run)?,
        ExperimentKind::Filter => cmd_filter(&mut run)?,
    };
    let manifest = Manifest {
        command: kind.name(),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        passed,
        outputs: &run.outputs,
        wall_time_s: start.elapsed().as_secs_f64(),
        results: Value::Object(run.extra),
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    atomic_write(&out.join("manifest.json"), text.as_bytes())?;
    Ok(Report {
        lines: run.lines,
        passed,
    })
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'static str,
    version: &'static str,
    /// Effective config, seed override applied.
    config: &'a ExperimentConfig,
    passed: bool,
    outputs: &'a [String],
    wall_time_s: f64,
    results: Value,
}

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    base: &'a Path,
    out: &'a Path,
    outputs: Vec<String>,
    extra: serde_json::Map<String, Value>,
    lines: Vec<String>,
}

impl Run<'_> {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        atomic_write(&self.out.join(name), contents.as_bytes())?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn write_grid(&mut self, name: &str, d: &DensityGrid) -> Result<()> {
        self.write(name, &d.to_csv_string())
    }

    fn result(&mut self, key: &str, v: Value) {
        self.extra.insert(key.to_string(), v);
    }

    fn say(&mut self, line: String) {
        self.lines.push(line);
    }
}

fn cmd_check(run: &mut Run<'_>) -> Result<bool> {
    let report = run_identity_suite(&run.cfg.check, run.cfg.chart())?;
    run.write("check.csv", &report.to_csv_string())?;
    run.result("rows", serde_json::to_value(&report.rows)?);
    for l in report.table().lines() {
        run.say(l.to_string());
    }
    Ok(report.passed())
}

fn cmd_fpe(run: &mut Run<'_>) -> Result<bool> {
    let shape = run.cfg.shape()?;
    let p0 = run.cfg.init.density(shape, run.base)?;
    let spec = run.cfg.spec()?;
    let ev = evolve(&p0, &spec, &run.cfg.solver)?;
    for (i, (t, d)) in ev.snapshots.iter().enumerate() {
        if i + 1 < ev.snapshots.len() {
            run.write_grid(&format!("snapshot_{i:03}.csv"), d)?;
            run.say(format!("snapshot {i} at t = {t}"));
        }
    }
    let fin = ev.final_density();
    run.write_grid("final.csv", fin)?;
    let uniform = 1.0 / run.cfg.chart().total_area();
    let dev = fin.values.iter().fold(0.0f64, |m, v| m.max((v - uniform).abs()));
    let drift = ev
        .mass_trace
        .iter()
        .fold(0.0f64, |m, (_, v)| m.max((v - ev.mass_trace[0].1).abs()));
    run.say(format!(
        "t_final = {}  steps = {}  dt = {:.3e}",
        run.cfg.solver.t_final, ev.steps, ev.dt
    ));
    run.say(format!("max|p - 1/area| = {dev:.3e}"));
    run.say(format!(
        "max mass drift = {drift:.3e}  clip events = {} (mass {:.1e})",
        ev.clip_events, ev.clipped_mass
    ));
    run.result("steps", json!(ev.steps));
    run.result("dt", json!(ev.dt));
    run.result(
        "snapshot_times",
        json!(ev.snapshots.iter().map(|s| s.0).collect::<Vec<_>>()),
    );
    run.result("max_deviation_from_uniform", json!(dev));
    run.result("mass_trace", json!(ev.mass_trace));
    run.result("clip_trace", json!(ev.clip_trace));
    run.result("clipped_mass", json!(ev.clipped_mass));
    Ok(true)
}

fn cmd_mc(run: &mut Run<'_>) -> Result<bool> {
    let shape = run.cfg.shape()?;
    let spec = run.cfg.spec()?;
    let init = run.cfg.init.particles(shape, run.base)?;
    let mc = run.cfg.mc;
    let ens = simulate_ensemble(mc.particles, &spec, mc.dt, run.cfg.solver.t_final, run.cfg.seed, &init)?;
    run.write("ensemble.csv", &ens.to_csv_string())?;
    let d = density_from_ensemble(&ens, shape);
    run.write_grid("density.csv", &d)?;
    let crossings: u64 = ens.pole_crossings.iter().map(|&c| c as u64).sum();
    run.say(format!("{} particles, {} steps, t = {}", ens.len(), ens.steps, ens.t));
    run.say(format!(
        "pole crossings = {crossings}  subdivisions = {}",
        ens.subdivisions
    ));
    run.result("steps", json!(ens.steps));
    run.result("pole_crossings", json!(crossings));
    run.result("subdivisions", json!(ens.subdivisions));
    Ok(true)
}

fn cmd_compare(run: &mut Run<'_>) -> Result<bool> {
    let shape = run.cfg.shape()?;
    let spec = run.cfg.spec()?;
    let p0 = run.cfg.init.density(shape, run.base)?;
    let ev = evolve(&p0, &spec, &run.cfg.solver)?;
    let pde = ev.final_density();
    let init = run.cfg.init.particles(shape, run.base)?;
    let mc = run.cfg.mc;
    let ens = simulate_ensemble(mc.particles, &spec, mc.dt, run.cfg.solver.t_final, run.cfg.seed, &init)?;
    let hist = density_from_ensemble(&ens, shape);
    run.write_grid("pde.csv", pde)?;
    run.write_grid("mc.csv", &hist)?;
    let l1 = hist.l1_distance(pde)?;
    let linf = hist.linf_distance(pde)?;
    let floor = expected_histogram_l1(pde, mc.particles);
    let band = run.cfg.compare.band.unwrap_or(1.5 * floor + 0.01);
    let passed = l1 <= band;
    run.write(
        "compare.csv",
        &format!("l1,linf,total_variation,expected_mc_l1,band,passed\n{l1:.16e},{linf:.16e},{:.16e},{floor:.16e},{band:.16e},{passed}\n", 0.5 * l1),
    )?;
    run.say(format!("L1 = {l1:.4e}  Linf = {linf:.4e}  TV = {:.4e}", 0.5 * l1));
    run.say(format!(
        "expected MC L1 = {floor:.4e}  band = {band:.4e}  {}",
        if passed { "PASS" } else { "FAIL" }
    ));
    run.result("l1", json!(l1));
    run.result("linf", json!(linf));
    run.result("total_variation", json!(0.5 * l1));
    run.result("expected_mc_l1", json!(floor));
    run.result("band", json!(band));
    run.result("mass_trace", json!(ev.mass_trace));
    run.result("clip_trace", json!(ev.clip_trace));
    Ok(passed)
}

fn cmd_filter(run: &mut Run<'_>) -> Result<bool> {
    let shape = run.cfg.shape()?;
    let spec = run.cfg.spec()?;
    let p0 = run.cfg.init.density(shape, run.base)?;
    let schedule = run.cfg.filter.schedule()?;
    let grid = run_filter(&p0, &spec, &schedule, &run.cfg.solver)?;
    for (i, s) in grid.iter().enumerate() {
        run.write_grid(&format!("posterior_{i:03}.csv"), &s.posterior)?;
    }
    let fc = &run.cfg.filter;
    let oracle = if fc.oracle && !schedule.is_empty() {
        let pf = ParticleFilterConfig {
            n_particles: fc.particles,
            dt: fc.dt,
            seed: run.cfg.seed,
            shape,
        };
        let init = run.cfg.init.particles(shape, run.base)?;
        Some(particle_filter_oracle(&pf, &spec, &init, &schedule)?)
    } else {
        None
    };
    let (budget_l1, budget_angle) = (fc.budget_l1, fc.budget_angle_deg);
    let mut table = String::from("t,l1,angle_deg,ess,resultant_length,predict_mass,normalizer\n");
    let mut passed = true;
    let mut rows = Vec::new();
    for (i, s) in grid.iter().enumerate() {
        let r = resultant_length(&s.posterior);
        let (l1, ang, ess) = match &oracle {
            Some(pf) => {
                let o = &pf[i];
                run.write_grid(&format!("oracle_{i:03}.csv"), &o.density)?;
                let l1 = s.posterior.l1_distance(&o.density)?;
                let ang = angle_deg(mean_direction(&s.posterior), o.mean);
                passed &= l1 <= budget_l1 && ang <= budget_angle;
                (Some(l1), Some(ang), Some(o.ess))
            }
            None => (None, None, None),
        };
        let f = |x: Option<f64>| x.map(|v| format!("{v:.16e}")).unwrap_or_default();
        table.push_str(&format!(
            "{:.16e},{},{},{},{r:.16e},{:.16e},{:.16e}\n",
            s.t,
            f(l1),
            f(ang),
            f(ess),
            s.predict_mass,
            s.normalizer
        ));
        let line = match (l1, ang) {
            (Some(l1), Some(a)) => format!("t = {:.3}  L1 = {l1:.4e}  angle = {a:.3} deg  R = {r:.4}", s.t),
            _ => format!("t = {:.3}  R = {r:.4}", s.t),
        };
        run.say(line);
        rows.push(
            json!({"t": s.t, "l1": l1, "angle_deg": ang, "ess": ess, "resultant_length": r,
            "predict_mass": s.predict_mass, "normalizer": s.normalizer}),
        );
    }
    run.write("filter.csv", &table)?;
    run.result("measurements", Value::Array(rows));
    if oracle.is_some() {
        run.say(format!(
            "budget L1 <= {budget_l1}, angle <= {budget_angle} deg: {}",
            if passed { "PASS" } else { "FAIL" }
        ));
    }
    Ok(passed)
}
