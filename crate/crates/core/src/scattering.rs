//! Repulsive-case asymptotics: pullbacks `v(t) = U(−t)u(t)`, scattering
//! states, wave operators and the round trip between them.

use serde::{Deserialize, Serialize};

use crate::diagnostics::NoProbe;
use crate::error::{Error, Result};
use crate::evolution::{
    evolve, picard_iterate, quintic_w, DuhamelSetup, Nonlinearity, PicardReport, StepPolicy,
    Trajectory, Watchdog,
};
use crate::grid::RadialField;
use crate::propagator::{mehler_propagate, PotentialKind};

fn require_scattering_kind(kind: PotentialKind) -> Result<()> {
    if kind == PotentialKind::Confining {
        return Err(Error::Usage(
            "no scattering theory for the confining potential; use the repulsive or free kind"
                .into(),
        ));
    }
    Ok(())
}

/// `v = U(−t)u(t)`, stamped as a `t = 0` object.
pub fn pullback(field: &RadialField, kind: PotentialKind) -> Result<RadialField> {
    require_scattering_kind(kind)?;
    Ok(mehler_propagate(field, -field.t(), kind)?.with_time(0.0))
}

/// `‖f‖_Σ = (‖∇f‖₂² + ‖xf‖₂²)^{1/2}`.
pub fn sigma_norm(field: &RadialField) -> f64 {
    (field.grad_sq() + field.weight_sq()).sqrt()
}

pub fn sigma_distance(a: &RadialField, b: &RadialField) -> f64 {
    sigma_norm(&a.difference(b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaMatrix {
    /// Snapshot times actually used (nearest to the requested ones).
    pub times: Vec<f64>,
    pub distances: Vec<Vec<f64>>,
}

fn pick_snapshots<'a>(traj: &'a Trajectory, times: &[f64]) -> Result<Vec<&'a RadialField>> {
    let ts = traj.times();
    let (lo, hi) = ts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| {
            (a.min(t), b.max(t))
        });
    let tol = 1e-9 * (1.0 + hi.abs().max(lo.abs()));
    times
        .iter()
        .map(|&t| {
            if t < lo - tol || t > hi + tol {
                return Err(Error::Usage(format!(
                    "time {t} outside the trajectory [{lo}, {hi}]"
                )));
            }
            Ok(&traj.snapshots()[traj.nearest(t).expect("trajectory is not empty")])
        })
        .collect()
}

/// Pairwise `‖v(t) − v(τ)‖_Σ` between pullbacks of the snapshots nearest to `times`.
pub fn sigma_cauchy_matrix(traj: &Trajectory, times: &[f64]) -> Result<SigmaMatrix> {
    require_scattering_kind(traj.kind)?;
    let snaps = pick_snapshots(traj, times)?;
    let pulled: Vec<RadialField> = snaps
        .iter()
        .map(|u| pullback(u, traj.kind))
        .collect::<Result<_>>()?;
    let n = pulled.len();
    let mut distances = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = sigma_distance(&pulled[i], &pulled[j]);
            distances[i][j] = d;
            distances[j][i] = d;
        }
    }
    Ok(SigmaMatrix {
        times: snaps.iter().map(|u| u.t()).collect(),
        distances,
    })
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub u_plus: RadialField,
    /// `Σ`-distance between the last two pullbacks.
    pub residual: f64,
    pub tolerance_met: bool,
}

/// `u_+ ≈ U(−T)u(T)` at the last snapshot. A short run or an unmet tolerance
/// is flagged, not an error.
pub fn extract_scattering_state(traj: &Trajectory, tol: f64) -> Result<Extraction> {
    require_scattering_kind(traj.kind)?;
    let snaps = traj.snapshots();
    let Some(last) = snaps.last() else {
        return Err(Error::Usage("empty trajectory".into()));
    };
    let u_plus = pullback(last, traj.kind)?;
    let residual = if snaps.len() >= 2 {
        sigma_distance(&u_plus, &pullback(&snaps[snaps.len() - 2], traj.kind)?)
    } else {
        f64::INFINITY
    };
    Ok(Extraction {
        u_plus,
        residual,
        tolerance_met: residual < tol,
    })
}

/// Least-squares fit `‖v(t) − u_+‖_Σ ≈ C e^{−λ t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub decay_rate: f64,
    pub prefactor: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScatteringReport {
    pub times: Vec<f64>,
    pub distances: Vec<Vec<f64>>,
    /// `‖v(t) − u_+‖_Σ` at the sample times.
    pub distance_to_limit: Vec<f64>,
    pub residual: f64,
    pub tolerance: f64,
    pub tolerance_met: bool,
    pub rate_fit: Option<RateFit>,
    #[serde(skip)]
    pub u_plus: Option<RadialField>,
}

impl ScatteringReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn fit_rate(times: &[f64], d: &[f64]) -> Option<RateFit> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(d)
        .filter(|p| *p.1 > 0.0)
        .map(|(&t, &d)| (t, d.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(RateFit {
        decay_rate: -slope,
        prefactor: (my - slope * mt).exp(),
        samples: pts.len(),
    })
}

/// Cauchy matrix, extracted state, and an empirical convergence rate.
pub fn scattering_report(
    traj: &Trajectory,
    sample_times: &[f64],
    tol: f64,
) -> Result<ScatteringReport> {
    let matrix = sigma_cauchy_matrix(traj, sample_times)?;
    let ext = extract_scattering_state(traj, tol)?;
    let snaps = pick_snapshots(traj, sample_times)?;
    let distance_to_limit: Vec<f64> = snaps
        .iter()
        .map(|u| pullback(u, traj.kind).map(|v| sigma_distance(&v, &ext.u_plus)))
        .collect::<Result<_>>()?;
    let t_last = traj.last().map(RadialField::t).unwrap_or(0.0);
    let (ft, fd): (Vec<f64>, Vec<f64>) = matrix
        .times
        .iter()
        .zip(&distance_to_limit)
        .filter(|p| *p.0 != t_last)
        .map(|(a, b)| (*a, *b))
        .unzip();
    Ok(ScatteringReport {
        times: matrix.times,
        distances: matrix.distances,
        distance_to_limit,
        residual: ext.residual,
        tolerance: tol,
        tolerance_met: ext.tolerance_met,
        rate_fit: fit_rate(&ft, &fd),
        u_plus: Some(ext.u_plus),
    })
}

/// Parameters of the wave-operator construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveOptions {
    /// Initial tail length; doubled until the tail estimate meets `0.1 · tol`.
    pub tau_tail: f64,
    pub max_doublings: usize,
    pub node_dt: f64,
    pub max_iterations: usize,
    pub picard_tol: f64,
    /// Target accuracy of the construction.
    pub tol: f64,
    /// Step and stride of the backward evolution to `t = 0`.
    pub dt: f64,
    pub stride: usize,
    pub watchdog: Watchdog,
}

impl Default for WaveOptions {
    fn default() -> Self {
        WaveOptions {
            tau_tail: 1.0,
            max_doublings: 4,
            node_dt: 1e-2,
            max_iterations: 30,
            picard_tol: 1e-13,
            tol: 1e-3,
            dt: 1e-3,
            stride: 100,
            watchdog: Watchdog {
                boundary_fraction: 1e-3,
                energy_drift: None,
                z_pow10: None,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct WaveReport {
    /// The candidate `u₀` at `t = 0`.
    pub u0: RadialField,
    /// The tail fixed point at `T_start`.
    pub at_start: RadialField,
    pub tail_end: f64,
    pub tau_tail: f64,
    /// `‖F(u(T_end))‖₂ cosh²(T_end) (1 − tanh T_end)`: the omitted `∫_{T_end}^∞`
    /// assuming `‖F(u(s))‖₂` decays at least like `cosh^{−2} s`.
    pub tail_estimate: f64,
    pub picard: PicardReport,
    pub backward: Trajectory,
}

fn tail_estimate(field: &RadialField) -> Result<f64> {
    let t = field.t();
    let f = RadialField::from_w(field.grid(), quintic_w(field), t)?;
    let c = t.cosh();
    Ok(f.l2_norm() * c * c * (1.0 - t.tanh()))
}

/// Solves `u(t) = U(t)u_+ + i∫_t^{T_end} U(t − s)F(u(s)) ds` on `[T_start, T_end]`
/// by Picard iteration, then evolves `u(T_start)` back to `t = 0`.
pub fn wave_operator(
    u_plus: &RadialField,
    t_start: f64,
    kind: PotentialKind,
    opts: &WaveOptions,
) -> Result<WaveReport> {
    require_scattering_kind(kind)?;
    if !(t_start > 0.0 && opts.tau_tail > 0.0 && opts.node_dt > 0.0) {
        return Err(Error::Config(
            "wave operator needs T_start, τ_tail and node spacing positive".into(),
        ));
    }
    let anchor = u_plus.clone().with_time(0.0);
    let mut tau = opts.tau_tail;
    let mut doublings = 0;
    let (picard, estimate) = loop {
        let t_end = t_start + tau;
        let nodes = (tau / opts.node_dt).round().max(1.0) as usize;
        let h = tau / nodes as f64;
        let times: Vec<f64> = (0..=nodes).map(|n| t_start + n as f64 * h).collect();
        let setup = DuhamelSetup {
            anchor: &anchor,
            frame_origin: 0.0,
            times,
            anchor_index: nodes,
        };
        let picard = picard_iterate(&setup, kind, opts.max_iterations.max(1), opts.picard_tol)?;
        if picard.contraction_failure {
            return Err(Error::Usage(format!(
                "wave-operator iteration failed to contract on [{t_start}, {t_end}]; ratios {:?}",
                picard.ratios
            )));
        }
        let estimate = tail_estimate(picard.last().expect("at least two nodes"))?;
        if estimate < 0.1 * opts.tol || doublings >= opts.max_doublings {
            break (picard, estimate);
        }
        tau *= 2.0;
        doublings += 1;
    };
    let at_start = picard.solution[0].clone();
    let policy = StepPolicy {
        dt: opts.dt,
        stride: opts.stride.max(1),
        watchdog: opts.watchdog,
        nonlinearity: Nonlinearity::Defocusing,
    };
    let backward = evolve(&at_start, 0.0, &policy, kind, &NoProbe)?;
    let u0 = backward.last().expect("evolve returns a snapshot").clone();
    Ok(WaveReport {
        u0,
        at_start,
        tail_end: t_start + tau,
        tau_tail: tau,
        tail_estimate: estimate,
        picard,
        backward,
    })
}

#[derive(Debug, Clone)]
pub struct RoundTrip {
    /// `‖u_+^{rec} − u_+‖_Σ`.
    pub error: f64,
    pub wave: WaveReport,
    /// Extraction from the forward run of `u₀` to `T_start`.
    pub extraction: Extraction,
}

/// Wave operator, forward evolution of `u₀` to `T_start`, extraction there.
pub fn roundtrip(
    u_plus: &RadialField,
    t_start: f64,
    kind: PotentialKind,
    opts: &WaveOptions,
) -> Result<RoundTrip> {
    let wave = wave_operator(u_plus, t_start, kind, opts)?;
    let policy = StepPolicy {
        dt: opts.dt,
        stride: opts.stride.max(1),
        watchdog: opts.watchdog,
        nonlinearity: Nonlinearity::Defocusing,
    };
    let forward = evolve(&wave.u0, t_start, &policy, kind, &NoProbe)?;
    let extraction = extract_scattering_state(&forward, opts.tol)?;
    let error = sigma_distance(&extraction.u_plus, &u_plus.clone().with_time(0.0));
    Ok(RoundTrip {
        error,
        wave,
        extraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::profiles::gaussian;

    #[test]
    fn pullback_basics() {
        let g = Grid::new(30.0, 1024).unwrap();
        let u = gaussian(&g, 1.0, 1.0);
        assert_eq!(pullback(&u, PotentialKind::Repulsive).unwrap().w(), u.w());
        assert!(pullback(&u, PotentialKind::Confining).is_err());
        let p = StepPolicy::new(1e-2, 10).linear();
        let tr = evolve(&u, 1.0, &p, PotentialKind::Repulsive, &NoProbe).unwrap();
        for s in tr.snapshots() {
            let v = pullback(s, PotentialKind::Repulsive).unwrap();
            assert!(sigma_distance(&v, &u) < 1e-8);
        }
    }

    #[test]
    fn linear_cauchy_matrix_and_extraction() {
        let g = Grid::new(30.0, 1024).unwrap();
        let u = gaussian(&g, 1.0, 1.0);
        let p = StepPolicy::new(1e-2, 10).linear();
        let tr = evolve(&u, 1.0, &p, PotentialKind::Repulsive, &NoProbe).unwrap();
        let m = sigma_cauchy_matrix(&tr, &[0.0, 0.5, 0.5, 1.0]).unwrap();
        assert_eq!(m.distances[1][2], 0.0);
        for i in 0..4 {
            assert_eq!(m.distances[i][i], 0.0);
            for j in 0..4 {
                assert_eq!(m.distances[i][j], m.distances[j][i]);
                assert!(m.distances[i][j] <= 1e-8);
            }
        }
        let ext = extract_scattering_state(&tr, 1e-6).unwrap();
        assert!(ext.tolerance_met);
        assert!(sigma_distance(&ext.u_plus, &u) < 1e-8);
        assert!(sigma_cauchy_matrix(&tr, &[2.0]).is_err());
    }

    #[test]
    fn zero_data_scatters_to_zero() {
        let g = Grid::new(30.0, 512).unwrap();
        let z = RadialField::zeros(&g, 0.0);
        let tr = evolve(
            &z,
            1.0,
            &StepPolicy::new(1e-2, 10),
            PotentialKind::Repulsive,
            &NoProbe,
        )
        .unwrap();
        let ext = extract_scattering_state(&tr, 1e-6).unwrap();
        assert_eq!(sigma_norm(&ext.u_plus), 0.0);
        let opts = WaveOptions {
            tau_tail: 0.5,
            dt: 1e-2,
            node_dt: 0.05,
            ..WaveOptions::default()
        };
        let rt = roundtrip(&z, 1.0, PotentialKind::Repulsive, &opts).unwrap();
        assert_eq!(rt.error, 0.0);
        assert_eq!(rt.wave.u0.l2_norm(), 0.0);
    }

    #[test]
    fn short_run_flags_unmet_tolerance() {
        let g = Grid::new(30.0, 512).unwrap();
        let u = gaussian(&g, 1.0, 1.0);
        let tr = evolve(
            &u,
            0.0,
            &StepPolicy::new(1e-2, 10),
            PotentialKind::Repulsive,
            &NoProbe,
        )
        .unwrap();
        let ext = extract_scattering_state(&tr, 1e-3).unwrap();
        assert!(!ext.tolerance_met);
    }

    #[test]
    fn wave_operator_is_identity_in_linear_regime() {
        let g = Grid::new(40.0, 2048).unwrap();
        let u = gaussian(&g, 1e-5, 1.0);
        let opts = WaveOptions {
            tau_tail: 0.5,
            node_dt: 0.05,
            dt: 1e-2,
            stride: 50,
            ..WaveOptions::default()
        };
        let w = wave_operator(&u, 1.0, PotentialKind::Repulsive, &opts).unwrap();
        assert!(sigma_distance(&w.u0, &u) < 1e-8);
    }

    #[test]
    fn rate_fit_recovers_exponential() {
        let t: Vec<f64> = (0..6).map(|i| i as f64 * 0.5).collect();
        let d: Vec<f64> = t.iter().map(|t| 3.0 * (-1.7 * t).exp()).collect();
        let f = fit_rate(&t, &d).unwrap();
        assert!((f.decay_rate - 1.7).abs() < 1e-12);
        assert!((f.prefactor - 3.0).abs() < 1e-12);
    }
}
