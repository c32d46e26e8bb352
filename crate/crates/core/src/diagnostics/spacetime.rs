use serde::Serialize;

use super::local_mass::CutoffChi;
use crate::error::{Error, Result};
use crate::evolution::Trajectory;

/// Admissible `(q, r)` pairs, `2/q + 3/r = 3/2`, sampled per snapshot.
pub const STRICHARTZ_PAIRS: [(f64, f64); 3] =
    [(f64::INFINITY, 2.0), (2.0, 6.0), (10.0 / 3.0, 10.0 / 3.0)];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZReport {
    /// `∫ ‖u‖₁₀¹⁰ dt` between consecutive snapshots.
    pub increments: Vec<f64>,
    pub total_pow10: f64,
    /// `‖u‖_{L¹⁰_{t,x}}` over the whole run.
    pub total: f64,
}

fn pot10_series(traj: &Trajectory) -> (Vec<f64>, Vec<f64>) {
    let recs = traj.records();
    (
        recs.iter().map(|r| r.t).collect(),
        recs.iter().map(|r| r.pot10).collect(),
    )
}

/// `L¹⁰_{t,x}` norm by trapezoid in time.
pub fn z_accumulate(traj: &Trajectory) -> ZReport {
    let (t, f) = pot10_series(traj);
    let increments: Vec<f64> = (1..t.len())
        .map(|i| 0.5 * (f[i - 1] + f[i]) * (t[i] - t[i - 1]).abs())
        .collect();
    let total_pow10: f64 = increments.iter().sum();
    ZReport {
        increments,
        total_pow10,
        total: total_pow10.powf(0.1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionInterval {
    pub start: f64,
    pub end: f64,
    /// `‖u‖_{L¹⁰(I × ℝ³)}`
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalPartition {
    pub eta: f64,
    pub intervals: Vec<PartitionInterval>,
}

impl IntervalPartition {
    pub fn count(&self) -> usize {
        self.intervals.len()
    }
}

/// Greedy left-to-right split into intervals with `Z(I_j) = η`, the last one
/// holding the remainder. The time integrand is linear between snapshots, so
/// split points are exact for the trapezoid rule.
pub fn interval_partition(traj: &Trajectory, eta: f64) -> Result<IntervalPartition> {
    if !(eta > 0.0) {
        return Err(Error::Config(format!("η must be positive, got {eta}")));
    }
    let (t, f) = pot10_series(traj);
    let mut intervals = Vec::new();
    let Some(&t0) = t.first() else {
        return Ok(IntervalPartition { eta, intervals });
    };
    let target = eta.powi(10);
    let dir = if t.len() > 1 && t[1] < t[0] {
        -1.0
    } else {
        1.0
    };
    let mut start = t0;
    let mut acc = 0.0;
    for i in 1..t.len() {
        let h = (t[i] - t[i - 1]).abs();
        let slope = (f[i] - f[i - 1]) / h;
        // position within the segment and integrand there
        let mut s = 0.0;
        let mut fs = f[i - 1];
        loop {
            let rest = 0.5 * (fs + f[i]) * (h - s);
            if acc + rest < target {
                acc += rest;
                break;
            }
            let need = target - acc;
            let a = 0.5 * slope;
            let disc = (fs * fs + 4.0 * a * need).max(0.0);
            let tau = if fs + disc.sqrt() > 0.0 {
                2.0 * need / (fs + disc.sqrt())
            } else {
                h - s
            };
            let tau = tau.min(h - s);
            s += tau;
            fs = f[i - 1] + slope * s;
            let end = t[i - 1] + dir * s;
            intervals.push(PartitionInterval { start, end, z: eta });
            start = end;
            acc = 0.0;
            if s >= h {
                break;
            }
        }
    }
    let last = *t.last().unwrap();
    if start != last || intervals.is_empty() {
        intervals.push(PartitionInterval {
            start,
            end: last,
            z: acc.powf(0.1),
        });
    }
    Ok(IntervalPartition { eta, intervals })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrichartzNorm {
    pub q: f64,
    pub r: f64,
    /// `‖u‖_{L^q_t L^r_x}` over the run.
    pub value: f64,
}

/// Spacetime norms over the run for every pair in [`STRICHARTZ_PAIRS`].
pub fn strichartz_norms(traj: &Trajectory) -> Vec<StrichartzNorm> {
    let recs = traj.records();
    STRICHARTZ_PAIRS
        .iter()
        .enumerate()
        .map(|(k, &(q, r))| {
            let value = if q.is_infinite() {
                recs.iter().map(|rec| rec.strichartz[k]).fold(0.0, f64::max)
            } else {
                let mut s = 0.0;
                for i in 1..recs.len() {
                    let a = recs[i - 1].strichartz[k].powf(q);
                    let b = recs[i].strichartz[k].powf(q);
                    s += 0.5 * (a + b) * (recs[i].t - recs[i - 1].t).abs();
                }
                s.powf(1.0 / q)
            };
            StrichartzNorm { q, r, value }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BubbleRow {
    pub rho: f64,
    /// `inf_{t ∈ I} Mass(u(t), B(0, ρ))`
    pub inf_mass: f64,
    pub inf_mass_per_length: f64,
}

/// Smallest local mass over the snapshots inside `interval`, for each radius of the ladder.
pub fn concentration_scan(
    traj: &Trajectory,
    interval: (f64, f64),
    rho_ladder: &[f64],
) -> Result<Vec<BubbleRow>> {
    let (lo, hi) = (interval.0.min(interval.1), interval.0.max(interval.1));
    if hi <= lo {
        return Err(Error::Usage(
            "concentration scan needs an interval of positive length".into(),
        ));
    }
    let inside: Vec<_> = traj
        .snapshots()
        .iter()
        .filter(|u| u.t() >= lo && u.t() <= hi)
        .collect();
    if inside.is_empty() {
        return Err(Error::Usage(format!("no snapshots inside [{lo}, {hi}]")));
    }
    let chi = CutoffChi::new();
    let radius = inside[0].grid().radius();
    rho_ladder
        .iter()
        .map(|&rho| {
            if !(rho > 0.0) || 2.0 * rho > radius {
                return Err(Error::Domain(format!(
                    "ladder radius {rho} needs 0 < 2ρ <= R = {radius}"
                )));
            }
            let inf_mass = inside
                .iter()
                .map(|u| chi.local_mass_unchecked(u, rho))
                .fold(f64::INFINITY, f64::min);
            Ok(BubbleRow {
                rho,
                inf_mass,
                inf_mass_per_length: inf_mass / (hi - lo),
            })
        })
        .collect()
}
