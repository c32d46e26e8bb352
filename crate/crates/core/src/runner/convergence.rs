use std::path::Path;
use std::thread;

use num_complex::Complex64;
use serde::Serialize;

use super::{energy_drift, initial_field, CheckResult, Output, RunSummary};
use crate::config::{LadderParam, SimConfig};
use crate::diagnostics::NoProbe;
use crate::error::{Error, Result};
use crate::evolution::{evolve, StepPolicy};
use crate::grid::{RadialField, SPHERE};

/// Errors at or below this are treated as roundoff.
pub const FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "status", content = "order")]
pub enum OrderEstimate {
    /// Least-squares slope of `log error` against `log h` over the levels above the floor.
    Order(f64),
    /// Fewer than two levels above the floor.
    Floor,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub observable: String,
    /// One error per level, or per adjacent pair for self-convergence.
    pub errors: Vec<f64>,
    /// `log(e_i / e_{i+1}) / log q`, `None` when either error is at the floor.
    pub pairwise: Vec<Option<f64>>,
    pub estimate: OrderEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub parameter: LadderParam,
    pub ladder: Vec<f64>,
    /// Refinement factor between adjacent levels.
    pub ratio: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn row(&self, observable: &str) -> Option<&ConvergenceRow> {
        self.rows.iter().find(|r| r.observable == observable)
    }

    /// `observable,level,parameter,error,pairwise_order,estimate`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("observable,level,parameter,error,pairwise_order,estimate\n");
        for row in &self.rows {
            let est = match row.estimate {
                OrderEstimate::Order(p) => format!("{p:.16e}"),
                OrderEstimate::Floor => "floor".into(),
            };
            for (i, e) in row.errors.iter().enumerate() {
                let pair = if i == 0 { None } else { row.pairwise[i - 1] };
                out.push_str(&format!(
                    "{},{},{:.16e},{:.16e},{},{}\n",
                    row.observable,
                    i,
                    self.ladder[i],
                    e,
                    pair.map(|p| format!("{p:.16e}")).unwrap_or_default(),
                    est
                ));
            }
        }
        out
    }
}

/// Refinement factor of a geometric ladder, coarse to fine. `dt` ladders
/// decrease and `N` ladders increase.
fn geometric_ratio(ladder: &[f64], param: LadderParam) -> Result<f64> {
    if ladder.len() < 3 {
        return Err(Error::Usage(format!(
            "a ladder needs at least 3 levels, got {}",
            ladder.len()
        )));
    }
    let step = |w: &[f64]| match param {
        LadderParam::Dt => w[0] / w[1],
        LadderParam::N => w[1] / w[0],
    };
    let q = step(&ladder[..2]);
    if !(q > 1.0 + 1e-9) {
        return Err(Error::Usage(format!("ladder {ladder:?} does not refine")));
    }
    if ladder.windows(2).any(|w| (step(w) - q).abs() > 1e-6 * q) {
        return Err(Error::Usage(format!("ladder {ladder:?} is not geometric")));
    }
    Ok(q)
}

fn estimate(errors: &[f64], q: f64) -> (Vec<Option<f64>>, OrderEstimate) {
    let pairwise = errors
        .windows(2)
        .map(|w| (w[0] > FLOOR && w[1] > FLOOR).then(|| (w[0] / w[1]).ln() / q.ln()))
        .collect();
    let pts: Vec<(f64, f64)> = errors
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > FLOOR)
        .map(|(i, &e)| (-(i as f64) * q.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return (pairwise, OrderEstimate::Floor);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (pairwise, OrderEstimate::Order(sxy / sxx))
}

/// Least-squares order of an error sequence on a ladder refined by `q` per level.
pub fn fit_order(errors: &[f64], q: f64) -> OrderEstimate {
    estimate(errors, q).1
}

// L² distance between fields on grids of equal radius, through shared sine modes.
fn spectral_distance(a: &RadialField, b: &RadialField) -> f64 {
    let (ca, cb) = (a.sine_coefficients(), b.sine_coefficients());
    let n = ca.len().max(cb.len());
    let zero = Complex64::new(0.0, 0.0);
    let s: f64 = (0..n)
        .map(|m| {
            (ca.get(m).copied().unwrap_or(zero) - cb.get(m).copied().unwrap_or(zero)).norm_sqr()
        })
        .sum();
    (SPHERE * s).sqrt()
}

struct Level {
    mass_drift: f64,
    energy_drift: f64,
    last: RadialField,
}

fn run_level(config: &SimConfig) -> Result<Level> {
    let u0 = initial_field(config)?;
    let policy = StepPolicy {
        stride: usize::MAX,
        ..config.step_policy()
    };
    let traj = evolve(&u0, config.t1, &policy, config.kind, &NoProbe)?;
    let (a, b) = (
        &traj.records()[0],
        traj.records().last().expect("evolve returns a snapshot"),
    );
    let mass_drift = if a.mass > 0.0 {
        (b.mass - a.mass).abs() / a.mass
    } else {
        0.0
    };
    Ok(Level {
        mass_drift,
        energy_drift: energy_drift(&traj),
        last: traj.last().cloned().expect("snapshot"),
    })
}

/// Runs the configured evolution at every ladder level, concurrently, and
/// estimates convergence orders of the mass drift, the energy drift and the
/// final state (self-convergence between adjacent levels).
pub fn convergence_study(
    config: &SimConfig,
    out: Option<&Path>,
) -> Result<(RunSummary, ConvergenceTable)> {
    let ladder = if config.ladder.is_empty() {
        match config.ladder_param {
            LadderParam::Dt => vec![config.dt, config.dt / 2.0, config.dt / 4.0],
            LadderParam::N => (0..3).map(|i| (config.points << i) as f64).collect(),
        }
    } else {
        config.ladder.clone()
    };
    let q = geometric_ratio(&ladder, config.ladder_param)?;
    let configs: Vec<SimConfig> = ladder
        .iter()
        .map(|&x| {
            let mut c = config.clone();
            match config.ladder_param {
                LadderParam::Dt => c.dt = x,
                LadderParam::N => c.points = x.round() as usize,
            }
            c.validate().map(|_| c)
        })
        .collect::<Result<_>>()?;
    let levels: Vec<Level> = thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| s.spawn(move || run_level(c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("ladder run panicked"))
            .collect::<Result<Vec<_>>>()
    })?;

    let scale = levels[0].last.l2_norm();
    let state: Vec<f64> = levels
        .windows(2)
        .map(|w| {
            let d = spectral_distance(&w[0].last, &w[1].last);
            if scale > 0.0 {
                d / scale
            } else {
                d
            }
        })
        .collect();
    let mut rows = Vec::new();
    for (name, errors) in [
        (
            "mass_drift",
            levels.iter().map(|l| l.mass_drift).collect::<Vec<_>>(),
        ),
        (
            "energy_drift",
            levels.iter().map(|l| l.energy_drift).collect(),
        ),
        ("final_state", state),
    ] {
        let (pairwise, est) = estimate(&errors, q);
        rows.push(ConvergenceRow {
            observable: name.into(),
            errors,
            pairwise,
            estimate: est,
        });
    }
    let table = ConvergenceTable {
        parameter: config.ladder_param,
        ladder,
        ratio: q,
        rows,
    };

    let mut summary = RunSummary::new("convergence", config);
    if config.ladder_param == LadderParam::Dt && config.nonlinear {
        let row = table.row("energy_drift").expect("energy row");
        summary.push(match row.estimate {
            OrderEstimate::Order(p) => CheckResult {
                name: "energy_drift_order".into(),
                passed: p >= ENERGY_ORDER_MIN,
                value: Some(p),
                tolerance: Some(ENERGY_ORDER_MIN),
                detail: "passes when the fitted order is at least the tolerance".into(),
            },
            OrderEstimate::Floor => CheckResult::flag("energy_drift_order", true, "floor"),
        });
    }
    let mut output = Output::new(out)?;
    output.text("convergence.csv", &table.to_csv())?;
    summary.report = Some(serde_json::to_value(&table)?);
    summary.final_record = None;
    summary.artifacts = output.written;
    Ok((summary.finish(), table))
}

/// Smallest accepted energy-drift order of the Strang scheme.
pub const ENERGY_ORDER_MIN: f64 = 1.9;
