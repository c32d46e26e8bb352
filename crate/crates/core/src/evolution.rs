//! Nonlinear time stepping and the Duhamel fixed-point solver.
//!
//! The quintic flow `iu_t = |u|⁴u` is solved exactly pointwise
//! (`u ↦ e^{−i|u|⁴τ} u`), the linear flow exactly by [`PropagatorPlan`], and
//! the two are composed by Strang splitting, nonlinear halves outside.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{base_record, DiagnosticsRecord, Probe};
use crate::error::{Error, Result, Trip};
use crate::grid::{Grid, RadialField};
use crate::propagator::{PotentialKind, PropagatorPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    /// `F(u) = |u|⁴ u`
    Defocusing,
    /// `F ≡ 0`; the flow is the linear propagator.
    Off,
}

impl Nonlinearity {
    pub fn is_on(self) -> bool {
        self == Nonlinearity::Defocusing
    }
}

/// `F(u) = |u|⁴ u` in `w`-units: `r F(w / r) = |w|⁴ w / r⁴`.
pub fn quintic_w(field: &RadialField) -> Vec<Complex64> {
    field
        .w()
        .iter()
        .zip(field.grid().r())
        .map(|(w, r)| {
            let a = w.norm_sqr() / (r * r);
            w * (a * a)
        })
        .collect()
}

/// Exact flow of `iu_t = |u|⁴u` for signed duration `tau`.
pub fn nonlinear_phase_step(field: &RadialField, tau: f64) -> RadialField {
    let mut out = field.clone();
    nonlinear_phase_in_place(&mut out, tau);
    out
}

fn nonlinear_phase_in_place(field: &mut RadialField, tau: f64) {
    if tau == 0.0 {
        return;
    }
    let r: Vec<f64> = field.grid().r().to_vec();
    for (w, r) in field.w_mut().iter_mut().zip(&r) {
        let a = w.norm_sqr() / (r * r);
        *w *= Complex64::from_polar(1.0, -a * a * tau);
    }
}

/// Watchdog thresholds checked at every snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Watchdog {
    /// Largest tolerated mass fraction in `[0.9 R, R]`.
    pub boundary_fraction: f64,
    /// Abort when `|E(t) − E(t0)|`, relative to the summed magnitudes of the
    /// energy's terms at `t0`, exceeds this.
    pub energy_drift: Option<f64>,
    /// Abort with "Z-blowup suspected" when `∫‖u‖₁₀¹⁰ dt` exceeds this.
    pub z_pow10: Option<f64>,
}

impl Default for Watchdog {
    fn default() -> Self {
        Watchdog {
            boundary_fraction: 1e-6,
            energy_drift: Some(1e-2),
            z_pow10: Some(1e12),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPolicy {
    pub dt: f64,
    /// Emit a snapshot every `stride` steps (and always at the end).
    pub stride: usize,
    pub watchdog: Watchdog,
    pub nonlinearity: Nonlinearity,
}

impl StepPolicy {
    pub fn new(dt: f64, stride: usize) -> StepPolicy {
        StepPolicy {
            dt,
            stride: stride.max(1),
            watchdog: Watchdog::default(),
            nonlinearity: Nonlinearity::Defocusing,
        }
    }

    pub fn with_watchdog(mut self, watchdog: Watchdog) -> StepPolicy {
        self.watchdog = watchdog;
        self
    }

    pub fn linear(mut self) -> StepPolicy {
        self.nonlinearity = Nonlinearity::Off;
        self
    }

    pub fn validate(&self, kind: PotentialKind) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if kind == PotentialKind::Confining && self.dt >= PI {
            return Err(Error::Config(format!(
                "confining steps need dt < π (dt / 2 < π / 2), got {}",
                self.dt
            )));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// One Strang step `N(dt/2) ∘ L(dt) ∘ N(dt/2)`.
pub fn strang_step(field: &RadialField, dt: f64, kind: PotentialKind) -> Result<RadialField> {
    if kind == PotentialKind::Confining && dt.abs() >= PI {
        return Err(Error::Config(format!(
            "confining steps need |dt| < π, got {dt}"
        )));
    }
    let plan = PropagatorPlan::new(field.grid(), kind, dt)?;
    let mut u = nonlinear_phase_step(field, 0.5 * dt);
    plan.apply_in_place(&mut u);
    nonlinear_phase_in_place(&mut u, 0.5 * dt);
    Ok(u)
}

/// Ordered snapshots of one run, all on one grid.
#[derive(Clone)]
pub struct Trajectory {
    pub kind: PotentialKind,
    pub nonlinearity: Nonlinearity,
    snapshots: Vec<RadialField>,
    records: Vec<DiagnosticsRecord>,
}

impl std::fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Trajectory")
            .field("kind", &self.kind)
            .field("nonlinearity", &self.nonlinearity)
            .field("snapshots", &self.snapshots.len())
            .field("t_first", &self.first().map(RadialField::t))
            .field("t_last", &self.last().map(RadialField::t))
            .finish()
    }
}

impl Trajectory {
    pub fn new(kind: PotentialKind, nonlinearity: Nonlinearity) -> Trajectory {
        Trajectory {
            kind,
            nonlinearity,
            snapshots: Vec::new(),
            records: Vec::new(),
        }
    }

    /// Appends a snapshot. Times must stay strictly monotone and the grid shared.
    pub fn push(&mut self, field: RadialField, record: DiagnosticsRecord) -> Result<()> {
        if let Some(first) = self.snapshots.first() {
            if !first.same_grid(&field) {
                return Err(Error::Usage(
                    "trajectory snapshots must share one grid".into(),
                ));
            }
        }
        let n = self.snapshots.len();
        if n >= 2 {
            let dir = self.snapshots[1].t() - self.snapshots[0].t();
            if (field.t() - self.snapshots[n - 1].t()) * dir <= 0.0 {
                return Err(Error::Usage(
                    "trajectory times must be strictly monotone".into(),
                ));
            }
        } else if n == 1 && field.t() == self.snapshots[0].t() {
            return Err(Error::Usage(
                "trajectory times must be strictly monotone".into(),
            ));
        }
        self.snapshots.push(field);
        self.records.push(record);
        Ok(())
    }

    pub fn snapshots(&self) -> &[RadialField] {
        &self.snapshots
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(RadialField::t).collect()
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn first(&self) -> Option<&RadialField> {
        self.snapshots.first()
    }

    pub fn last(&self) -> Option<&RadialField> {
        self.snapshots.last()
    }

    pub fn grid(&self) -> Option<&Arc<Grid>> {
        self.snapshots.first().map(RadialField::grid)
    }

    /// Index of the snapshot closest in time to `t`.
    pub fn nearest(&self, t: f64) -> Option<usize> {
        self.snapshots
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1.t() - t).abs().total_cmp(&(b.1.t() - t).abs()))
            .map(|(i, _)| i)
    }
}

/// The conserved energy of a record; the quintic term drops out when the nonlinearity is off.
pub fn conserved_energy(record: &DiagnosticsRecord, nonlinear: bool) -> f64 {
    if nonlinear {
        record.energy
    } else {
        record.energy - record.pot6 / 3.0
    }
}

/// Sum of the magnitudes of the conserved energy's terms. Energy drift is
/// measured against it since the repulsive energy can vanish.
pub fn energy_scale(record: &DiagnosticsRecord, kind: PotentialKind, nonlinear: bool) -> f64 {
    let quintic = if nonlinear { record.pot6 / 3.0 } else { 0.0 };
    0.5 * record.grad_sq + 0.5 * kind.sign().abs() * record.weight_sq + quintic
}

fn check_watchdog(
    field: &RadialField,
    record: &DiagnosticsRecord,
    nonlinear: bool,
    e0: f64,
    e_scale: f64,
    z_pow10: f64,
    wd: &Watchdog,
) -> Option<Trip> {
    if !field.is_finite() || !record.energy.is_finite() {
        return Some(Trip::NonFinite);
    }
    let fraction = field.boundary_fraction();
    if fraction > wd.boundary_fraction {
        return Some(Trip::BoundaryMass {
            fraction,
            threshold: wd.boundary_fraction,
        });
    }
    if let Some(thr) = wd.z_pow10 {
        if !(z_pow10 <= thr) {
            return Some(Trip::ZBlowup {
                z_pow10,
                threshold: thr,
            });
        }
    }
    if let Some(thr) = wd.energy_drift {
        if e_scale > 0.0 {
            let drift = (conserved_energy(record, nonlinear) - e0).abs() / e_scale;
            if drift > thr {
                return Some(Trip::EnergyDrift {
                    drift,
                    threshold: thr,
                });
            }
        }
    }
    None
}

/// Evolves `field` from `field.t()` to `t1` with Strang steps.
///
/// The step count is `ceil(|t1 − t0| / dt)` with the step shrunk to land on
/// `t1` exactly. Snapshots are emitted every `policy.stride` steps and at `t1`;
/// each carries the base diagnostics plus whatever `probe` contributes.
pub fn evolve(
    field: &RadialField,
    t1: f64,
    policy: &StepPolicy,
    kind: PotentialKind,
    probe: &dyn Probe,
) -> Result<Trajectory> {
    policy.validate(kind)?;
    let t0 = field.t();
    let mut traj = Trajectory::new(kind, policy.nonlinearity);
    let mut record = base_record(field, kind);
    record.merge(probe.probe(field));
    let e0 = conserved_energy(&record, policy.nonlinearity.is_on());
    let e_scale = energy_scale(&record, kind, policy.nonlinearity.is_on());
    let mut prev_pot10 = record.pot10;
    let mut z_total = 0.0;
    traj.push(field.clone(), record)?;
    if t1 == t0 {
        return Ok(traj);
    }

    let span = t1 - t0;
    let steps = (span.abs() / policy.dt).ceil().max(1.0) as usize;
    let dt = span / steps as f64;
    let plan = PropagatorPlan::new(field.grid(), kind, dt)?;
    let nl = policy.nonlinearity.is_on();
    let mut u = field.clone();
    let mut opened = false;
    for n in 1..=steps {
        if nl && !opened {
            nonlinear_phase_in_place(&mut u, 0.5 * dt);
        }
        plan.apply_in_place(&mut u);
        let snapshot = n % policy.stride == 0 || n == steps;
        if !snapshot {
            if nl {
                // closing half of this step fused with the opening half of the next
                nonlinear_phase_in_place(&mut u, dt);
            }
            opened = true;
            continue;
        }
        if nl {
            nonlinear_phase_in_place(&mut u, 0.5 * dt);
        }
        opened = false;
        let t = if n == steps { t1 } else { t0 + n as f64 * dt };
        u.set_time(t);
        let mut record = base_record(&u, kind);
        let prev_t = traj.last().map(RadialField::t).unwrap_or(t0);
        record.z_increment = 0.5 * (prev_pot10 + record.pot10) * (t - prev_t).abs();
        z_total += record.z_increment;
        prev_pot10 = record.pot10;
        if let Some(trip) = check_watchdog(&u, &record, nl, e0, e_scale, z_total, &policy.watchdog)
        {
            return Err(Error::Watchdog {
                trip,
                t,
                partial: Box::new(traj),
            });
        }
        record.merge(probe.probe(&u));
        traj.push(u.clone(), record)?;
    }
    Ok(traj)
}

/// Options for [`picard_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardOptions {
    /// Length of the local interval `[t0, t0 + t_loc]`.
    pub t_loc: f64,
    /// Spacing of the time-quadrature nodes.
    pub node_dt: f64,
    pub max_iterations: usize,
    /// Stop once `d_k <= tol · sup_t ‖u(t)‖₂`.
    pub tol: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            t_loc: 0.1,
            node_dt: 1e-3,
            max_iterations: 30,
            tol: 1e-13,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PicardReport {
    /// Number of applications of the solution map.
    pub iterations: usize,
    /// `d_k = sup_t ‖u^{(k+1)}(t) − u^{(k)}(t)‖₂`.
    pub differences: Vec<f64>,
    /// `d_{k+1} / d_k`.
    pub ratios: Vec<f64>,
    /// Differences below this are roundoff, not contraction.
    pub noise_floor: f64,
    pub converged: bool,
    /// Set when `d_k` grew three times in a row.
    pub contraction_failure: bool,
    pub times: Vec<f64>,
    pub solution: Vec<RadialField>,
}

impl PicardReport {
    /// Ratios between consecutive differences that both sit above the noise floor.
    pub fn resolved_ratios(&self) -> Vec<(usize, f64)> {
        self.ratios
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                self.differences[*k] > self.noise_floor
                    && self.differences[k + 1] > self.noise_floor
            })
            .map(|(k, &r)| (k, r))
            .collect()
    }

    /// The iteration contracts eventually: it converged, or its last resolved ratio is below 1.
    pub fn eventually_contracting(&self) -> bool {
        !self.contraction_failure
            && (self.converged || self.resolved_ratios().last().is_some_and(|&(_, r)| r < 1.0))
    }

    pub fn last(&self) -> Option<&RadialField> {
        self.solution.last()
    }
}

pub(crate) struct DuhamelSetup<'a> {
    /// Data `v` in the frame `U(−(t − frame_origin))`.
    pub anchor: &'a RadialField,
    pub frame_origin: f64,
    pub times: Vec<f64>,
    /// Index of the node where the integral starts (`v(t_a) = anchor`).
    pub anchor_index: usize,
}

/// Picard iteration for `v(t) = anchor − i ∫_{t_a}^{t} U(−(s − τ0)) F(u(s)) ds`,
/// `u(t) = U(t − τ0) v(t)`, trapezoid over the nodes.
pub(crate) fn picard_iterate(
    setup: &DuhamelSetup<'_>,
    kind: PotentialKind,
    max_iterations: usize,
    tol: f64,
) -> Result<PicardReport> {
    let grid = setup.anchor.grid();
    let times = &setup.times;
    let nodes = times.len();
    let forward: Vec<PropagatorPlan> = times
        .iter()
        .map(|t| PropagatorPlan::new(grid, kind, t - setup.frame_origin))
        .collect::<Result<_>>()?;
    let stamp = |mut f: RadialField, t: f64| {
        f.set_time(t);
        f
    };
    let mut current: Vec<RadialField> = forward
        .iter()
        .zip(times)
        .map(|(p, &t)| stamp(p.apply(&setup.anchor.clone().with_time(0.0)), t))
        .collect();
    let mut differences = Vec::new();
    let mut converged = false;
    let mut contraction_failure = false;
    let mut rising = 0;
    let mut iterations = 0;
    let mut noise_floor = 0.0;

    while iterations < max_iterations {
        iterations += 1;
        // pulled-back nonlinearity at every node
        let mut pulled: Vec<Vec<Complex64>> = Vec::with_capacity(nodes);
        for (u, &t) in current.iter().zip(times) {
            let f = RadialField::from_w(grid, quintic_w(u), 0.0)?;
            let back = PropagatorPlan::new(grid, kind, -(t - setup.frame_origin))?.apply(&f);
            pulled.push(back.into_w());
        }
        // cumulative trapezoid from the anchor node
        let n = grid.points();
        let mut integral = vec![vec![Complex64::new(0.0, 0.0); n]; nodes];
        let a = setup.anchor_index;
        for j in (a + 1)..nodes {
            let h = times[j] - times[j - 1];
            let (lo, hi) = integral.split_at_mut(j);
            for ((acc, prev), (g0, g1)) in hi[0]
                .iter_mut()
                .zip(&lo[j - 1])
                .zip(pulled[j - 1].iter().zip(&pulled[j]))
            {
                *acc = prev + 0.5 * h * (g0 + g1);
            }
        }
        for j in (0..a).rev() {
            let h = times[j] - times[j + 1];
            let (lo, hi) = integral.split_at_mut(j + 1);
            for ((acc, next), (g0, g1)) in lo[j]
                .iter_mut()
                .zip(&hi[0])
                .zip(pulled[j].iter().zip(&pulled[j + 1]))
            {
                *acc = next + 0.5 * h * (g0 + g1);
            }
        }
        let minus_i = Complex64::new(0.0, -1.0);
        let mut next = Vec::with_capacity(nodes);
        for ((plan, j_n), &t) in forward.iter().zip(&integral).zip(times) {
            let v: Vec<Complex64> = setup
                .anchor
                .w()
                .iter()
                .zip(j_n)
                .map(|(a, j)| a + minus_i * j)
                .collect();
            let v = RadialField::from_w(grid, v, 0.0)?;
            next.push(stamp(plan.apply(&v), t));
        }
        let d = next
            .iter()
            .zip(&current)
            .map(|(a, b)| a.l2_distance(b))
            .fold(0.0, f64::max);
        let scale = next.iter().map(RadialField::l2_norm).fold(0.0, f64::max);
        noise_floor = 1e3 * f64::EPSILON * scale;
        if let Some(&prev) = differences.last() {
            rising = if d > prev { rising + 1 } else { 0 };
        }
        differences.push(d);
        current = next;
        if d <= tol * scale {
            converged = true;
            break;
        }
        if rising >= 3 {
            contraction_failure = true;
            break;
        }
    }
    let ratios = differences
        .windows(2)
        .map(|p| if p[0] > 0.0 { p[1] / p[0] } else { 0.0 })
        .collect();
    Ok(PicardReport {
        iterations,
        differences,
        ratios,
        noise_floor,
        converged,
        contraction_failure,
        times: times.clone(),
        solution: current,
    })
}

/// Duhamel iteration `u^{(k+1)} = Φ(u^{(k)})`, `Φ(u)(t) = U(t)u₀ − i∫₀ᵗ U(t−s)F(u(s)) ds`,
/// on `[t0, t0 + t_loc]` starting from `u^{(0)}(t) = U(t)u₀`.
pub fn picard_solve(
    u0: &RadialField,
    opts: &PicardOptions,
    kind: PotentialKind,
) -> Result<PicardReport> {
    if !(opts.t_loc > 0.0 && opts.node_dt > 0.0) {
        return Err(Error::Config(
            "Picard interval and node spacing must be positive".into(),
        ));
    }
    let nodes = (opts.t_loc / opts.node_dt).round().max(1.0) as usize;
    let h = opts.t_loc / nodes as f64;
    let t0 = u0.t();
    let times = (0..=nodes).map(|n| t0 + n as f64 * h).collect();
    let setup = DuhamelSetup {
        anchor: u0,
        frame_origin: t0,
        times,
        anchor_index: 0,
    };
    picard_iterate(&setup, kind, opts.max_iterations.max(1), opts.tol)
}

/// `max_t ‖u(t) − U(t−t₀)u(t₀) + i∫_{t₀}^t U(t−s)F(u(s)) ds‖₂` with the time
/// integral by trapezoid over the snapshots.
pub fn duhamel_residual(traj: &Trajectory) -> Result<f64> {
    let snaps = traj.snapshots();
    let Some(first) = snaps.first() else {
        return Ok(0.0);
    };
    let grid = first.grid();
    let t0 = first.t();
    let n = grid.points();
    let mut integral = vec![Complex64::new(0.0, 0.0); n];
    let mut prev_g: Option<Vec<Complex64>> = None;
    let mut prev_t = t0;
    let mut worst: f64 = 0.0;
    for u in snaps {
        let back = PropagatorPlan::new(grid, traj.kind, -(u.t() - t0))?;
        let g = if traj.nonlinearity.is_on() {
            back.apply(&RadialField::from_w(grid, quintic_w(u), 0.0)?)
                .into_w()
        } else {
            vec![Complex64::new(0.0, 0.0); n]
        };
        if let Some(pg) = &prev_g {
            let h = u.t() - prev_t;
            for ((acc, a), b) in integral.iter_mut().zip(pg).zip(&g) {
                *acc += 0.5 * h * (a + b);
            }
        }
        let v = back.apply(u);
        let res: Vec<Complex64> = v
            .w()
            .iter()
            .zip(first.w())
            .zip(&integral)
            .map(|((v, a), j)| v - a + Complex64::i() * j)
            .collect();
        let res = RadialField::from_w(grid, res, 0.0)?;
        worst = worst.max(res.l2_norm());
        prev_g = Some(g);
        prev_t = u.t();
    }
    Ok(worst)
}
