use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use super::{
    energy_drift, mass_drift_rate, simulate, CheckResult, Output, RunSummary, SPLIT_STEP_MATCH_TOL,
};
use crate::checkpoint;
use crate::config::{emit, parse_config, SimConfig};
use crate::diagnostics::{
    energy, interval_partition, mass_in_ball_check, mass_rate_bound_check,
    morawetz_bound_accumulator, morawetz_rate_residual, potential_decay_check, split_energies,
    variance_identity_residual, z_accumulate, MorawetzWeight, NoProbe,
};
use crate::error::{Error, Result};
use crate::evolution::{evolve, picard_solve, PicardOptions, StepPolicy, Trajectory};
use crate::grid::{Grid, RadialField};
use crate::profiles::{gaussian, localized_random, ring};
use crate::propagator::{mehler_oracle, mehler_propagate, PotentialKind};
use crate::scattering::{pullback, roundtrip, sigma_cauchy_matrix, sigma_distance, WaveOptions};

type Check = fn(&Ctx) -> Result<CheckResult>;

struct Ctx {
    grid: Arc<Grid>,
    seed: u64,
    config: SimConfig,
}

impl Ctx {
    fn random(&self, k: u64) -> RadialField {
        localized_random(&self.grid, self.seed.wrapping_mul(31).wrapping_add(k))
    }

    fn run(
        &self,
        u: &RadialField,
        t1: f64,
        policy: StepPolicy,
        kind: PotentialKind,
    ) -> Result<Trajectory> {
        evolve(u, t1, &policy, kind, &NoProbe)
    }
}

fn rel(x: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        x / scale
    } else {
        x
    }
}

fn transform_round_trip(c: &Ctx) -> Result<CheckResult> {
    let u = c.random(0);
    let back = c.grid.sine_inverse(&c.grid.sine_forward(u.w())?)?;
    let err = RadialField::from_w(&c.grid, back, 0.0)?.l2_distance(&u);
    Ok(CheckResult::at_most(
        "transform_round_trip",
        rel(err, u.l2_norm()),
        1e-12,
    ))
}

fn parseval(c: &Ctx) -> Result<CheckResult> {
    let u = c.random(1);
    Ok(CheckResult::at_most(
        "parseval",
        rel((u.spectral_mass() - u.mass()).abs(), u.mass()),
        1e-12,
    ))
}

fn sigma_identity(c: &Ctx) -> Result<CheckResult> {
    let u = gaussian(&c.grid, 1.0, 1.0);
    let ratio = 0.5 * (u.grad_sq() + u.weight_sq()) / u.mass();
    Ok(CheckResult::at_most(
        "sigma_identity_ground_state",
        (ratio - 1.5).abs(),
        1e-8,
    ))
}

fn checkpoint_round_trip(c: &Ctx) -> Result<CheckResult> {
    let u = c.random(2).with_time(0.75);
    let bytes = checkpoint::encode(&u);
    let back = checkpoint::decode(&bytes, Some(&c.grid))?;
    let same = checkpoint::encode(&back) == bytes && back.w() == u.w() && back.t() == u.t();
    Ok(CheckResult::flag(
        "checkpoint_round_trip",
        same,
        format!("{} bytes", bytes.len()),
    ))
}

fn checkpoint_corruption(c: &Ctx) -> Result<CheckResult> {
    let mut bytes = checkpoint::encode(&c.random(3));
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x10;
    Ok(match checkpoint::decode(&bytes, Some(&c.grid)) {
        Err(Error::Checkpoint(msg)) => {
            CheckResult::flag("checkpoint_corruption_detected", true, msg)
        }
        Err(e) => CheckResult::flag(
            "checkpoint_corruption_detected",
            false,
            format!("unexpected error: {e}"),
        ),
        Ok(_) => CheckResult::flag(
            "checkpoint_corruption_detected",
            false,
            "corrupted file decoded",
        ),
    })
}

fn confining_phase(c: &Ctx) -> Result<CheckResult> {
    let u = gaussian(&c.grid, 1.0, 1.0);
    let t = 0.5;
    let out = mehler_propagate(&u, t, PotentialKind::Confining)?;
    let err = out.l2_distance(&u.scaled(Complex64::from_polar(1.0, -1.5 * t)));
    Ok(CheckResult::at_most(
        "confining_ground_state_phase",
        err,
        1e-8,
    ))
}

fn full_period(c: &Ctx) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for k in 0..3 {
        let u = c.random(10 + k);
        let out = mehler_propagate(&u, 2.0 * PI, PotentialKind::Confining)?;
        worst = worst.max(out.l2_distance(&u.scaled((-1.0).into())));
    }
    Ok(CheckResult::at_most("confining_full_period", worst, 1e-7))
}

fn oracle(c: &Ctx) -> Result<CheckResult> {
    let u = c.random(4);
    let mut worst: f64 = 0.0;
    for kind in PotentialKind::ALL {
        for t in [-0.6, 1.0] {
            worst =
                worst.max(mehler_propagate(&u, t, kind)?.l2_distance(&mehler_oracle(&u, t, kind)?));
        }
    }
    Ok(CheckResult::at_most("kernel_oracle", worst, 1e-6))
}

fn unitarity(c: &Ctx) -> Result<CheckResult> {
    let u = c.random(5);
    let mut worst: f64 = 0.0;
    for kind in PotentialKind::ALL {
        let out = mehler_propagate(&u, 1.3, kind)?;
        worst = worst.max(rel((out.mass() - u.mass()).abs(), u.mass()));
    }
    Ok(CheckResult::at_most("unitarity", worst, 1e-12))
}

fn mass_conservation(c: &Ctx) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for kind in PotentialKind::ALL {
        let tr = c.run(
            &gaussian(&c.grid, 1.0, 1.0),
            1.0,
            StepPolicy::new(1e-3, 50),
            kind,
        )?;
        worst = worst.max(mass_drift_rate(&tr));
    }
    Ok(CheckResult::at_most("mass_conservation", worst, 1e-10))
}

fn energy_conservation(c: &Ctx) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for kind in PotentialKind::ALL {
        let tr = c.run(
            &gaussian(&c.grid, 1.0, 1.0),
            1.0,
            StepPolicy::new(1e-3, 50),
            kind,
        )?;
        worst = worst.max(energy_drift(&tr));
    }
    Ok(CheckResult::at_most("energy_drift", worst, 1e-4))
}

fn reversibility(c: &Ctx) -> Result<CheckResult> {
    let u = c.random(6);
    let fwd = c.run(
        &u,
        0.5,
        StepPolicy::new(1e-2, 1000),
        PotentialKind::Confining,
    )?;
    let back = c.run(
        fwd.last().expect("snapshot"),
        0.0,
        StepPolicy::new(1e-2, 1000),
        PotentialKind::Confining,
    )?;
    let err = back.last().expect("snapshot").l2_distance(&u);
    Ok(CheckResult::at_most(
        "time_reversibility",
        rel(err, u.l2_norm()),
        1e-10,
    ))
}

fn picard_zero(c: &Ctx) -> Result<CheckResult> {
    let rep = picard_solve(
        &RadialField::zeros(&c.grid, 0.0),
        &PicardOptions::default(),
        PotentialKind::Free,
    )?;
    Ok(CheckResult::flag(
        "picard_zero_data",
        rep.converged && rep.iterations == 1,
        format!("{} iterations", rep.iterations),
    ))
}

fn picard_contraction(c: &Ctx) -> Result<CheckResult> {
    let u = gaussian(&c.grid, 1.0, 1.0);
    let opts = PicardOptions {
        t_loc: 0.1,
        node_dt: 1e-3,
        ..PicardOptions::default()
    };
    let rep = picard_solve(&u, &opts, PotentialKind::Confining)?;
    let worst = rep
        .resolved_ratios()
        .into_iter()
        .filter(|&(k, _)| k >= 4)
        .map(|p| p.1)
        .fold(0.0, f64::max);
    let end = rep.last().expect("solution");
    let split = c.run(
        &u,
        end.t(),
        StepPolicy::new(opts.node_dt, usize::MAX),
        PotentialKind::Confining,
    )?;
    let gap = split.last().expect("snapshot").l2_distance(end);
    let ok = rep.converged && worst <= 0.5 && gap <= SPLIT_STEP_MATCH_TOL;
    Ok(CheckResult {
        name: "picard_contraction".into(),
        passed: ok,
        value: Some(worst),
        tolerance: Some(0.5),
        detail: format!("{} iterations, split-step gap {gap:e}", rep.iterations),
    })
}

fn split_energy_sum(c: &Ctx) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for k in 0..3 {
        let u = c.random(20 + k);
        for t in [0.0, 0.7, 2.0] {
            let (e1, e2) = split_energies(&u, t, PotentialKind::Repulsive)?;
            let e = energy(&u, PotentialKind::Repulsive);
            worst = worst.max(rel((e1 - e2 - e).abs(), e1.abs() + e2.abs()));
        }
    }
    Ok(CheckResult::at_most("split_energy_sum", worst, 1e-9))
}

fn repulsive_run(c: &Ctx) -> Result<Trajectory> {
    c.run(
        &gaussian(&c.grid, 1.0, 1.0),
        1.0,
        StepPolicy::new(1e-3, 10),
        PotentialKind::Repulsive,
    )
}

fn variance_identity(c: &Ctx) -> Result<CheckResult> {
    let res = variance_identity_residual(&repulsive_run(c)?)?;
    let worst = res
        .iter()
        .map(|r| r.residual_e1().max(r.residual_e2()))
        .fold(0.0, f64::max);
    let scale = res.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
    Ok(CheckResult::at_most(
        "variance_identity",
        rel(worst, scale),
        1e-3,
    ))
}

fn potential_decay(c: &Ctx) -> Result<CheckResult> {
    let d = potential_decay_check(&repulsive_run(c)?)?;
    Ok(CheckResult::at_most(
        "potential_decay",
        d.worst_ratio,
        1.0 + 1e-4,
    ))
}

fn local_mass(c: &Ctx) -> Result<CheckResult> {
    let u = ring(&c.grid, 0.3, 3.0, 0.7);
    let tr = c.run(&u, 1.0, StepPolicy::new(1e-3, 5), PotentialKind::Free)?;
    let mut slack = f64::NEG_INFINITY;
    let mut residual: f64 = 0.0;
    for rho in [1.0, 2.0, 4.0] {
        let rep = mass_rate_bound_check(&tr, rho)?;
        let peak = rep
            .identity_rate
            .iter()
            .map(|r| r.abs())
            .fold(0.0, f64::max);
        slack = slack.max(rep.worst_slack);
        residual = residual.max(rel(rep.identity_residual, peak));
    }
    Ok(CheckResult {
        name: "local_mass_rate".into(),
        passed: slack <= 0.0 && residual <= 1e-3,
        value: Some(slack),
        tolerance: Some(0.0),
        detail: format!("identity residual {residual:e} relative"),
    })
}

fn mass_in_ball(c: &Ctx) -> Result<CheckResult> {
    let mut fields = vec![gaussian(&c.grid, 1.0, 1.0), ring(&c.grid, 1.0, 3.0, 0.5)];
    fields.extend((0..4).map(|k| c.random(30 + k)));
    let mut worst: f64 = 0.0;
    for u in &fields {
        for rho in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let m = mass_in_ball_check(u, rho)?;
            worst = worst.max(m.mass / m.bound);
        }
    }
    Ok(CheckResult::at_most("mass_in_ball", worst, 1.0))
}

fn morawetz_identity(c: &Ctx) -> Result<CheckResult> {
    let weight = MorawetzWeight::smooth(&c.grid, 0.5)?;
    let u = gaussian(&c.grid, 1.0, 1.0);
    let mut worst: f64 = 0.0;
    for kind in PotentialKind::ALL {
        let tr = c.run(&u, 0.5, StepPolicy::new(1e-3, 5), kind)?;
        worst = worst.max(morawetz_rate_residual(&tr, &weight)?.relative());
    }
    Ok(CheckResult::at_most("morawetz_rate_identity", worst, 1e-2))
}

fn morawetz_bound(c: &Ctx) -> Result<CheckResult> {
    let u = gaussian(&c.grid, 1.0, 1.0);
    let mut worst: f64 = 0.0;
    for kind in PotentialKind::ALL {
        let tr = c.run(&u, 1.0, StepPolicy::new(1e-3, 10), kind)?;
        worst = worst.max(morawetz_bound_accumulator(&tr, 1.0)?.ratio);
    }
    Ok(CheckResult {
        name: "morawetz_bound_finite".into(),
        passed: worst.is_finite(),
        value: Some(worst),
        tolerance: None,
        detail: "largest ratio over the three kinds".into(),
    })
}

fn z_additivity(c: &Ctx) -> Result<CheckResult> {
    let tr = c.run(
        &gaussian(&c.grid, 1.0, 0.7),
        1.0,
        StepPolicy::new(1e-3, 10),
        PotentialKind::Free,
    )?;
    let total = z_accumulate(&tr).total_pow10;
    let p = interval_partition(&tr, (total / 4.5).powf(0.1))?;
    let sum: f64 = p.intervals.iter().map(|i| i.z.powi(10)).sum();
    Ok(CheckResult::at_most(
        "z_partition_additivity",
        rel((sum - total).abs(), total),
        1e-12,
    ))
}

fn linear_pullback(c: &Ctx) -> Result<CheckResult> {
    let u = c.random(7);
    let tr = c.run(
        &u,
        1.0,
        StepPolicy::new(1e-2, 20).linear(),
        PotentialKind::Repulsive,
    )?;
    let mut worst: f64 = 0.0;
    for s in tr.snapshots() {
        worst = worst.max(sigma_distance(&pullback(s, PotentialKind::Repulsive)?, &u));
    }
    Ok(CheckResult::at_most(
        "linear_pullback_constant",
        worst,
        1e-8,
    ))
}

fn cauchy_matrix(c: &Ctx) -> Result<CheckResult> {
    let tr = c.run(
        &gaussian(&c.grid, 0.5, 1.0),
        1.0,
        StepPolicy::new(1e-3, 100),
        PotentialKind::Repulsive,
    )?;
    let m = sigma_cauchy_matrix(&tr, &tr.times())?;
    let n = m.times.len();
    let ok = (0..n).all(|i| {
        m.distances[i][i] == 0.0
            && (0..n).all(|j| m.distances[i][j] == m.distances[j][i] && m.distances[i][j] >= 0.0)
    });
    Ok(CheckResult::flag(
        "sigma_matrix_shape",
        ok,
        format!("{n} x {n}"),
    ))
}

fn roundtrip_zero(c: &Ctx) -> Result<CheckResult> {
    let rt = roundtrip(
        &RadialField::zeros(&c.grid, 0.0),
        1.0,
        PotentialKind::Repulsive,
        &WaveOptions::default(),
    )?;
    Ok(CheckResult::at_most("roundtrip_zero", rt.error, 0.0))
}

fn config_round_trip(c: &Ctx) -> Result<CheckResult> {
    let text = emit(&c.config);
    let back = parse_config(&text)?;
    Ok(CheckResult::flag(
        "config_round_trip",
        back == c.config && emit(&back) == text,
        "",
    ))
}

fn determinism(c: &Ctx) -> Result<CheckResult> {
    let mut cfg = SimConfig::minimal(
        PotentialKind::Repulsive,
        c.grid.radius(),
        c.grid.points(),
        0.2,
        1e-2,
    );
    cfg.seed = c.seed;
    let a = simulate(&cfg, None)?.to_json()?;
    let b = simulate(&cfg, None)?.to_json()?;
    Ok(CheckResult::flag(
        "summary_determinism",
        a == b,
        format!("{} bytes", a.len()),
    ))
}

const CHECKS: &[(&str, Check)] = &[
    ("transform_round_trip", transform_round_trip),
    ("parseval", parseval),
    ("sigma_identity_ground_state", sigma_identity),
    ("checkpoint_round_trip", checkpoint_round_trip),
    ("checkpoint_corruption_detected", checkpoint_corruption),
    ("confining_ground_state_phase", confining_phase),
    ("confining_full_period", full_period),
    ("kernel_oracle", oracle),
    ("unitarity", unitarity),
    ("mass_conservation", mass_conservation),
    ("energy_drift", energy_conservation),
    ("time_reversibility", reversibility),
    ("picard_zero_data", picard_zero),
    ("picard_contraction", picard_contraction),
    ("split_energy_sum", split_energy_sum),
    ("variance_identity", variance_identity),
    ("potential_decay", potential_decay),
    ("local_mass_rate", local_mass),
    ("mass_in_ball", mass_in_ball),
    ("morawetz_rate_identity", morawetz_identity),
    ("morawetz_bound_finite", morawetz_bound),
    ("z_partition_additivity", z_additivity),
    ("linear_pullback_constant", linear_pullback),
    ("sigma_matrix_shape", cauchy_matrix),
    ("roundtrip_zero", roundtrip_zero),
    ("config_round_trip", config_round_trip),
    ("summary_determinism", determinism),
];

/// Every property check on the configured grid, seeded by `config.seed`.
/// Failures are collected; none stops the suite.
pub fn check_suite(config: &SimConfig, out: Option<&Path>) -> Result<RunSummary> {
    let ctx = Ctx {
        grid: Grid::new(config.radius, config.points)?,
        seed: config.seed,
        config: config.clone(),
    };
    let mut summary = RunSummary::new("check", config);
    for (name, check) in CHECKS {
        let result = check(&ctx).map(|mut r| {
            r.name = name.to_string();
            r
        });
        summary.push_result(name, result);
    }
    let mut output = Output::new(out)?;
    let mut lines = String::from("check,passed,value,tolerance\n");
    for c in &summary.checks {
        let fmt = |x: Option<f64>| x.map(|v| format!("{v:.16e}")).unwrap_or_default();
        lines.push_str(&format!(
            "{},{},{},{}\n",
            c.name,
            c.passed,
            fmt(c.value),
            fmt(c.tolerance)
        ));
    }
    output.text("checks.csv", &lines)?;
    summary.artifacts = output.written;
    Ok(summary.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_names_are_unique() {
        for (i, (a, _)) in CHECKS.iter().enumerate() {
            assert!(CHECKS[i + 1..].iter().all(|(b, _)| a != b), "{a}");
        }
    }

    #[test]
    fn a_failing_check_does_not_stop_the_suite() {
        let ctx = Ctx {
            grid: Grid::new(20.0, 64).unwrap(),
            seed: 0,
            config: SimConfig::minimal(PotentialKind::Free, 20.0, 64, 1.0, 0.1),
        };
        let mut summary = RunSummary::new("check", &ctx.config);
        summary.push_result("oracle", Err(Error::Usage("boom".into())));
        summary.push_result("parseval", parseval(&ctx));
        let s = summary.finish();
        assert!(!s.passed);
        assert_eq!(s.checks.len(), 2);
        assert!(s.checks[1].passed);
    }
}
