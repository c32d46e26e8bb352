//! Run orchestration behind the command-line subcommands.

mod convergence;
mod suite;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::checkpoint;
use crate::config::{Profile, SimConfig};
use crate::diagnostics::{
    mass_rate_bound_check, morawetz_bound_accumulator, potential_decay_check,
    variance_identity_residual, write_csv, DiagnosticsRecord, MorawetzWeight, StandardProbe,
};
use crate::error::{Error, Result};
use crate::evolution::{
    conserved_energy, energy_scale, evolve, picard_solve, StepPolicy, Trajectory,
};
use crate::grid::{Grid, RadialField};
use crate::profiles::{gaussian, ring};
use crate::propagator::{mehler_oracle, mehler_propagate, PotentialKind, ORACLE_MAX_POINTS};
use crate::scattering::{roundtrip, scattering_report};

pub use convergence::{
    convergence_study, fit_order, ConvergenceRow, ConvergenceTable, OrderEstimate,
};
pub use suite::check_suite;

/// One evaluated check. `tolerance` is `None` for checks without a numeric threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
}

impl CheckResult {
    /// Passes when `value <= tolerance`.
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> CheckResult {
        CheckResult {
            name: name.into(),
            passed: value <= tolerance,
            value: Some(value),
            tolerance: Some(tolerance),
            detail: String::new(),
        }
    }

    pub fn flag(name: &str, passed: bool, detail: impl Into<String>) -> CheckResult {
        CheckResult {
            name: name.into(),
            passed,
            value: None,
            tolerance: None,
            detail: detail.into(),
        }
    }

    pub fn errored(name: &str, err: &Error) -> CheckResult {
        CheckResult::flag(name, false, err.to_string())
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> CheckResult {
        self.detail = detail.into();
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub command: String,
    pub config: SimConfig,
    pub final_record: Option<DiagnosticsRecord>,
    pub checks: Vec<CheckResult>,
    /// Watchdog trip that ended the run early.
    pub stopped: Option<String>,
    /// Files written, relative to the output directory.
    pub artifacts: Vec<String>,
    /// Subcommand-specific output.
    pub report: Option<Value>,
    pub passed: bool,
}

impl RunSummary {
    fn new(command: &str, config: &SimConfig) -> RunSummary {
        RunSummary {
            command: command.into(),
            config: config.clone(),
            final_record: None,
            checks: Vec::new(),
            stopped: None,
            artifacts: Vec::new(),
            report: None,
            passed: false,
        }
    }

    fn push(&mut self, check: CheckResult) {
        debug_assert!(
            self.checks.iter().all(|c| c.name != check.name),
            "duplicate check {}",
            check.name
        );
        self.checks.push(check);
    }

    /// Records a check, or a failed check when `result` is an error.
    fn push_result(&mut self, name: &str, result: Result<CheckResult>) {
        self.push(result.unwrap_or_else(|e| CheckResult::errored(name, &e)));
    }

    fn finish(mut self) -> RunSummary {
        self.passed = self.stopped.is_none() && self.checks.iter().all(|c| c.passed);
        self
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Artifact sink; does nothing without a directory.
struct Output<'a> {
    dir: Option<&'a Path>,
    written: Vec<String>,
}

impl<'a> Output<'a> {
    fn new(dir: Option<&'a Path>) -> Result<Output<'a>> {
        if let Some(d) = dir {
            fs::create_dir_all(d)?;
        }
        Ok(Output {
            dir,
            written: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> Option<PathBuf> {
        let d = self.dir?;
        self.written.push(name.into());
        Some(d.join(name))
    }

    fn text(&mut self, name: &str, content: &str) -> Result<()> {
        if let Some(p) = self.path(name) {
            fs::write(p, content)?;
        }
        Ok(())
    }

    fn field(&mut self, name: &str, field: &RadialField) -> Result<()> {
        if let Some(p) = self.path(name) {
            checkpoint::write(&p, field)?;
        }
        Ok(())
    }

    fn csv(&mut self, name: &str, records: &[DiagnosticsRecord]) -> Result<()> {
        if let Some(p) = self.path(name) {
            let mut buf = Vec::new();
            write_csv(&mut buf, records)?;
            fs::write(p, buf)?;
        }
        Ok(())
    }
}

/// The initial field of a configuration, stamped at `t0`.
pub fn initial_field(config: &SimConfig) -> Result<RadialField> {
    let grid = Grid::new(config.radius, config.points)?;
    let field = match config.profile {
        Profile::Gaussian => gaussian(&grid, config.amplitude, config.width),
        Profile::Ring => ring(&grid, config.amplitude, config.center, config.width),
        Profile::Checkpoint => {
            let path = config.checkpoint_path.as_ref().ok_or_else(|| {
                Error::Config("profile = checkpoint needs checkpoint_path".into())
            })?;
            let field = checkpoint::read(path, Some(&grid))?;
            let g = field.grid();
            if g.radius() != config.radius || g.points() != config.points {
                return Err(Error::Config(format!(
                    "checkpoint grid (R = {}, N = {}) differs from the configured grid (R = {}, N = {})",
                    g.radius(),
                    g.points(),
                    config.radius,
                    config.points
                )));
            }
            field
        }
    };
    Ok(field.with_time(config.t0))
}

fn standard_probe(config: &SimConfig, grid: &Arc<Grid>) -> Result<StandardProbe> {
    Ok(StandardProbe {
        radii: if config.diag_local_mass {
            config.rho.clone()
        } else {
            Vec::new()
        },
        weight: if config.diag_morawetz {
            Some(MorawetzWeight::smooth(grid, config.morawetz_epsilon)?)
        } else {
            None
        },
    })
}

/// Runs the configured evolution; a watchdog trip returns the partial trajectory and the reason.
fn evolve_config(config: &SimConfig, u0: &RadialField) -> Result<(Trajectory, Option<String>)> {
    let probe = standard_probe(config, u0.grid())?;
    match evolve(u0, config.t1, &config.step_policy(), config.kind, &probe) {
        Ok(traj) => Ok((traj, None)),
        Err(Error::Watchdog { trip, t, partial }) => {
            Ok((*partial, Some(format!("t = {t}: {trip}"))))
        }
        Err(e) => Err(e),
    }
}

fn relative(x: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        x / scale
    } else {
        x
    }
}

/// Largest `|M(t) − M(t₀)| / M(t₀)` per unit time.
pub fn mass_drift_rate(traj: &Trajectory) -> f64 {
    let recs = traj.records();
    let (Some(a), Some(b)) = (recs.first(), recs.last()) else {
        return 0.0;
    };
    let span = (b.t - a.t).abs();
    let worst = recs
        .iter()
        .map(|r| (r.mass - a.mass).abs())
        .fold(0.0, f64::max);
    if span == 0.0 {
        return 0.0;
    }
    relative(worst, a.mass) / span
}

/// Largest conserved-energy drift relative to the energy scale at the start.
pub fn energy_drift(traj: &Trajectory) -> f64 {
    let recs = traj.records();
    let Some(a) = recs.first() else {
        return 0.0;
    };
    let nl = traj.nonlinearity.is_on();
    let e0 = conserved_energy(a, nl);
    let worst = recs
        .iter()
        .map(|r| (conserved_energy(r, nl) - e0).abs())
        .fold(0.0, f64::max);
    relative(worst, energy_scale(a, traj.kind, nl))
}

/// Tolerances applied by `simulate`.
pub const MASS_DRIFT_TOL: f64 = 1e-10;
pub const VARIANCE_TOL: f64 = 1e-3;
pub const DECAY_TOL: f64 = 1e-4;

fn trajectory_checks(config: &SimConfig, traj: &Trajectory, summary: &mut RunSummary) {
    summary.push(CheckResult::at_most(
        "mass_drift_per_time",
        mass_drift_rate(traj),
        MASS_DRIFT_TOL,
    ));
    summary.push(CheckResult::at_most(
        "energy_drift",
        energy_drift(traj),
        config.watchdog_energy.unwrap_or(1e-2),
    ));
    let enough = traj.len() >= 3;
    if config.kind == PotentialKind::Repulsive && config.diag_variance {
        summary.push_result(
            "variance_identity",
            if enough {
                variance_identity_residual(traj).map(|res| {
                    let worst = res
                        .iter()
                        .map(|r| r.residual_e1().max(r.residual_e2()))
                        .fold(0.0, f64::max);
                    let scale = res.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
                    CheckResult::at_most("variance_identity", relative(worst, scale), VARIANCE_TOL)
                        .with_detail("max residual of dE1/dt, dE2/dt relative to max |rhs|")
                })
            } else {
                Err(Error::Usage(
                    "variance identity needs at least 3 snapshots".into(),
                ))
            },
        );
        summary.push_result(
            "potential_decay",
            potential_decay_check(traj).map(|d| {
                CheckResult::at_most("potential_decay", d.worst_ratio, 1.0 + DECAY_TOL).with_detail(
                    format!(
                        "worst at t = {}{}",
                        d.at_t,
                        if d.vacuous { " (vacuous)" } else { "" }
                    ),
                )
            }),
        );
    }
    if config.diag_local_mass {
        for &rho in &config.rho {
            let name = format!("local_mass_rate_rho_{rho}");
            let result = if enough {
                mass_rate_bound_check(traj, rho).map(|rep| {
                    CheckResult::at_most(&name, rep.worst_slack, 0.0)
                        .with_detail(format!("identity residual {:e}", rep.identity_residual))
                })
            } else {
                Err(Error::Usage(
                    "local mass rate needs at least 3 snapshots".into(),
                ))
            };
            summary.push_result(&name, result);
        }
    }
    if config.diag_morawetz {
        summary.push_result(
            "morawetz_bound",
            morawetz_bound_accumulator(traj, config.morawetz_k).map(|b| CheckResult {
                name: "morawetz_bound".into(),
                passed: b.ratio.is_finite(),
                value: Some(b.ratio),
                tolerance: None,
                detail: format!(
                    "lhs {:e}, scale {:e}, ball radius {}",
                    b.lhs, b.rhs_scale, b.ball_radius
                ),
            }),
        );
    }
    if config.diag_scattering && config.kind != PotentialKind::Confining {
        let times = sample_times(traj, 11);
        match scattering_report(traj, &times, config.tol) {
            Ok(rep) => {
                summary.push(CheckResult::at_most(
                    "scattering_extraction",
                    rep.residual,
                    config.tol,
                ));
                summary.report = serde_json::to_value(&rep).ok();
            }
            Err(e) => summary.push(CheckResult::errored("scattering_extraction", &e)),
        }
    }
}

/// Up to `count` snapshot times spread evenly over the trajectory, always including the last.
fn sample_times(traj: &Trajectory, count: usize) -> Vec<f64> {
    let t = traj.times();
    if t.len() <= count {
        return t;
    }
    let mut out: Vec<f64> = (0..count)
        .map(|i| t[i * (t.len() - 1) / (count - 1)])
        .collect();
    out.dedup();
    out
}

/// `simulate`: evolve, attach diagnostics, write CSV and checkpoints, evaluate checks.
pub fn simulate(config: &SimConfig, out: Option<&Path>) -> Result<RunSummary> {
    let mut output = Output::new(out)?;
    let mut summary = RunSummary::new("simulate", config);
    let u0 = initial_field(config)?;
    let (traj, stopped) = evolve_config(config, &u0)?;
    if let Some(reason) = &stopped {
        summary.push(CheckResult::flag("watchdog", false, reason.clone()));
    }
    summary.stopped = stopped;
    trajectory_checks(config, &traj, &mut summary);
    summary.final_record = traj.records().last().cloned();
    output.csv("diagnostics.csv", traj.records())?;
    output.field("field_initial.bin", &u0)?;
    if let Some(last) = traj.last() {
        output.field("field_final.bin", last)?;
    }
    if let Some(rep) = &summary.report {
        output.text("scattering.json", &serde_json::to_string_pretty(rep)?)?;
    }
    summary.artifacts = output.written;
    Ok(summary.finish())
}

/// `propagate`: one linear propagation over `[t0, t1]` with unitarity and exactness checks.
pub fn propagate(config: &SimConfig, out: Option<&Path>) -> Result<RunSummary> {
    let mut output = Output::new(out)?;
    let mut summary = RunSummary::new("propagate", config);
    let u0 = initial_field(config)?;
    let span = config.t1 - config.t0;
    let u1 = mehler_propagate(&u0, span, config.kind)?;
    summary.push(CheckResult::at_most(
        "unitarity",
        relative((u1.mass() - u0.mass()).abs(), u0.mass()),
        1e-12,
    ));
    if config.kind == PotentialKind::Confining {
        let periods = span / (2.0 * std::f64::consts::PI);
        if periods.round() != 0.0 && (periods - periods.round()).abs() < 1e-12 {
            let sign = if periods.round() as i64 % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            let err = relative(u1.l2_distance(&u0.scaled(sign.into())), u0.l2_norm());
            summary.push(
                CheckResult::at_most("full_period_sign", err, 1e-7).with_detail(format!(
                    "U(t) = {}Identity after {} periods",
                    if sign < 0.0 { "−" } else { "" },
                    periods.round()
                )),
            );
        }
    }
    let oracle_ok = config.points <= ORACLE_MAX_POINTS
        && span != 0.0
        && (config.kind != PotentialKind::Confining || span.abs() < std::f64::consts::PI);
    if oracle_ok {
        summary.push_result(
            "kernel_oracle",
            mehler_oracle(&u0, span, config.kind).map(|o| {
                CheckResult::at_most(
                    "kernel_oracle",
                    relative(o.l2_distance(&u1), u0.l2_norm()),
                    1e-6,
                )
            }),
        );
    }
    summary.final_record = Some(crate::diagnostics::base_record(&u1, config.kind));
    output.field("field_initial.bin", &u0)?;
    output.field("field_final.bin", &u1)?;
    summary.artifacts = output.written;
    Ok(summary.finish())
}

#[derive(Debug, Clone, Serialize)]
struct PicardOutput {
    iterations: usize,
    differences: Vec<f64>,
    ratios: Vec<f64>,
    noise_floor: f64,
    converged: bool,
    split_step_distance: f64,
}

/// Largest tolerated L² gap between the Picard fixed point and a split-step run.
pub const SPLIT_STEP_MATCH_TOL: f64 = 5e-5;

/// `picard`: Duhamel iteration on `[t0, t0 + picard_t_loc]` against a split-step run.
pub fn picard(config: &SimConfig, out: Option<&Path>) -> Result<RunSummary> {
    let mut output = Output::new(out)?;
    let mut summary = RunSummary::new("picard", config);
    let u0 = initial_field(config)?;
    let opts = config.picard_options();
    let rep = picard_solve(&u0, &opts, config.kind)?;
    let end = rep.last().expect("Picard keeps the solution").clone();
    let split = evolve(
        &u0,
        end.t(),
        &StepPolicy::new(opts.node_dt, usize::MAX).with_watchdog(config.watchdog()),
        config.kind,
        &crate::diagnostics::NoProbe,
    )?;
    let distance = split
        .last()
        .expect("evolve returns a snapshot")
        .l2_distance(&end);
    summary.push(CheckResult::flag(
        "converged",
        rep.converged,
        format!("{} iterations", rep.iterations),
    ));
    let late: Vec<f64> = rep
        .resolved_ratios()
        .into_iter()
        .filter(|&(k, _)| k >= 4)
        .map(|p| p.1)
        .collect();
    let worst = late.iter().copied().fold(0.0, f64::max);
    summary.push(
        CheckResult::at_most("contraction_after_4", worst, 0.5).with_detail(format!(
            "{} resolved ratios from iteration 4 on",
            late.len()
        )),
    );
    summary.push(CheckResult::at_most(
        "split_step_match",
        distance,
        SPLIT_STEP_MATCH_TOL,
    ));
    summary.final_record = Some(crate::diagnostics::base_record(&end, config.kind));
    let report = PicardOutput {
        iterations: rep.iterations,
        differences: rep.differences.clone(),
        ratios: rep.ratios.clone(),
        noise_floor: rep.noise_floor,
        converged: rep.converged,
        split_step_distance: distance,
    };
    let value = serde_json::to_value(&report)?;
    output.text("picard.json", &serde_json::to_string_pretty(&value)?)?;
    output.field("field_final.bin", &end)?;
    summary.report = Some(value);
    summary.artifacts = output.written;
    Ok(summary.finish())
}

/// `scatter`: evolve, then pull back, extract `u_+` and fit a rate.
pub fn scatter(config: &SimConfig, out: Option<&Path>) -> Result<RunSummary> {
    let mut config = config.clone();
    config.diag_scattering = true;
    let mut summary = simulate(&config, out)?;
    summary.command = "scatter".into();
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
struct WaveOutput {
    t_start: f64,
    tau_tail: f64,
    tail_estimate: f64,
    picard_iterations: usize,
    picard_differences: Vec<f64>,
    roundtrip_error: f64,
    extraction_residual: f64,
}

/// `waveop`: wave operator of the configured profile taken as `u_+`, then the round trip.
pub fn waveop(config: &SimConfig, out: Option<&Path>) -> Result<RunSummary> {
    let mut output = Output::new(out)?;
    let mut summary = RunSummary::new("waveop", config);
    let u_plus = initial_field(config)?.with_time(0.0);
    let rt = roundtrip(&u_plus, config.t_start, config.kind, &config.wave_options())?;
    summary.push(
        CheckResult::at_most("tail_estimate", rt.wave.tail_estimate, 0.1 * config.tol)
            .with_detail(format!("τ_tail = {}", rt.wave.tau_tail)),
    );
    summary.push(CheckResult::at_most(
        "roundtrip_error",
        rt.error,
        config.tol,
    ));
    summary.final_record = Some(crate::diagnostics::base_record(&rt.wave.u0, config.kind));
    let report = WaveOutput {
        t_start: config.t_start,
        tau_tail: rt.wave.tau_tail,
        tail_estimate: rt.wave.tail_estimate,
        picard_iterations: rt.wave.picard.iterations,
        picard_differences: rt.wave.picard.differences.clone(),
        roundtrip_error: rt.error,
        extraction_residual: rt.extraction.residual,
    };
    let value = serde_json::to_value(&report)?;
    output.text("waveop.json", &serde_json::to_string_pretty(&value)?)?;
    output.field("field_u0.bin", &rt.wave.u0)?;
    summary.report = Some(value);
    summary.artifacts = output.written;
    Ok(summary.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Convergence,
    Check,
    Propagate,
    Picard,
    Scatter,
    Waveop,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Convergence => "convergence",
            Command::Check => "check",
            Command::Propagate => "propagate",
            Command::Picard => "picard",
            Command::Scatter => "scatter",
            Command::Waveop => "waveop",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct Timing<'a> {
    command: &'a str,
    wall_seconds: f64,
}

/// Runs a subcommand and writes `summary.json` plus `timing.json` to `out`.
/// Wall time is kept out of the summary so that it stays reproducible.
pub fn execute(
    command: Command,
    config: &SimConfig,
    out: Option<&Path>,
) -> Result<(RunSummary, f64)> {
    let start = Instant::now();
    let mut summary = match command {
        Command::Simulate => simulate(config, out)?,
        Command::Convergence => convergence_study(config, out)?.0,
        Command::Check => check_suite(config, out)?,
        Command::Propagate => propagate(config, out)?,
        Command::Picard => picard(config, out)?,
        Command::Scatter => scatter(config, out)?,
        Command::Waveop => waveop(config, out)?,
    };
    let wall = start.elapsed().as_secs_f64();
    if let Some(dir) = out {
        summary.artifacts.push("summary.json".into());
        fs::write(dir.join("summary.json"), summary.to_json()?)?;
        let timing = Timing {
            command: command.name(),
            wall_seconds: wall,
        };
        fs::write(
            dir.join("timing.json"),
            serde_json::to_string_pretty(&timing)?,
        )?;
    }
    Ok((summary, wall))
}
