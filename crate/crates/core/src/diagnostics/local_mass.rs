use serde::Serialize;

use super::centered_differences;
use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::grid::{RadialField, SPHERE};

fn bump(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

fn bump_prime(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp() / (x * x)
    }
}

/// Smooth step: 0 for `x ≤ 0`, 1 for `x ≥ 1`.
pub(crate) fn smooth_step(x: f64) -> f64 {
    let a = bump(x);
    let b = bump(1.0 - x);
    a / (a + b)
}

pub(crate) fn smooth_step_prime(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let a = bump(x);
    let b = bump(1.0 - x);
    (bump_prime(x) * b + a * bump_prime(1.0 - x)) / ((a + b) * (a + b))
}

/// Radial cutoff with `χ = 1` on `[0, 1]`, `χ = 0` on `[2, ∞)` and a `C^∞`
/// step `χ(r) = S(2 − r)` between, `S(x) = f(x) / (f(x) + f(1 − x))`, `f(x) = e^{−1/x}`.
#[derive(Debug, Clone, Copy)]
pub struct CutoffChi {
    sup_prime: f64,
}

impl Default for CutoffChi {
    fn default() -> Self {
        CutoffChi::new()
    }
}

impl CutoffChi {
    pub fn new() -> CutoffChi {
        let sup_prime = (0..=20_000)
            .map(|i| smooth_step_prime(i as f64 / 20_000.0))
            .fold(0.0, f64::max);
        CutoffChi { sup_prime }
    }

    pub fn value(&self, r: f64) -> f64 {
        smooth_step(2.0 - r)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        -smooth_step_prime(2.0 - r)
    }

    pub fn sup_derivative(&self) -> f64 {
        self.sup_prime
    }

    /// `C_χ = 4 sup|χ'|`.
    pub fn rate_constant(&self) -> f64 {
        4.0 * self.sup_prime
    }

    pub(crate) fn local_mass_unchecked(&self, field: &RadialField, rho: f64) -> f64 {
        let g = field.grid();
        SPHERE
            * g.integrate(
                field
                    .w()
                    .iter()
                    .zip(g.r())
                    .map(|(w, r)| self.value(r / rho).powi(2) * w.norm_sqr()),
            )
    }

    /// `(2/ρ) 4π ∫ χχ'(r/ρ) Im(w̄ w') dr`, the exact rate of change of the local mass.
    pub fn mass_rate(&self, field: &RadialField, rho: f64) -> f64 {
        let g = field.grid();
        let dw = field.w_prime();
        2.0 / rho
            * SPHERE
            * g.integrate(field.w().iter().zip(&dw).zip(g.r()).map(|((w, d), r)| {
                let s = r / rho;
                self.value(s) * self.derivative(s) * (w.conj() * d).im
            }))
    }
}

fn check_rho(field: &RadialField, rho: f64) -> Result<()> {
    let radius = field.grid().radius();
    if !(rho > 0.0) || 2.0 * rho > radius {
        return Err(Error::Domain(format!(
            "local mass needs 0 < 2ρ <= R, got ρ = {rho}, R = {radius}"
        )));
    }
    Ok(())
}

/// `Mass(u, B(0, ρ)) = 4π ∫ χ²(r/ρ) |w|² dr`.
pub fn local_mass(field: &RadialField, rho: f64) -> Result<f64> {
    check_rho(field, rho)?;
    Ok(CutoffChi::new().local_mass_unchecked(field, rho))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassRateReport {
    pub rho: f64,
    pub rate_constant: f64,
    /// Interior snapshot times.
    pub times: Vec<f64>,
    /// Centered differences of the local mass.
    pub fd_rate: Vec<f64>,
    /// `(C_χ/ρ) ‖∇u‖₂ Mass^{1/2}`
    pub bound: Vec<f64>,
    /// The exact rate evaluated on each snapshot.
    pub identity_rate: Vec<f64>,
    /// `max(|fd_rate| − bound)`; the inequality holds when this is ≤ 0.
    pub worst_slack: f64,
    /// `max |fd_rate − identity_rate|`.
    pub identity_residual: f64,
}

/// Local-mass transport: `|∂_t Mass| ≤ (C_χ/ρ) ‖∇u‖₂ Mass^{1/2}` and the exact rate identity.
pub fn mass_rate_bound_check(traj: &Trajectory, rho: f64) -> Result<MassRateReport> {
    if traj.len() < 3 {
        return Err(Error::Usage(format!(
            "needs at least 3 snapshots, got {}",
            traj.len()
        )));
    }
    let snaps = traj.snapshots();
    check_rho(&snaps[0], rho)?;
    let chi = CutoffChi::new();
    let t = traj.times();
    let mass: Vec<f64> = snaps
        .iter()
        .map(|u| chi.local_mass_unchecked(u, rho))
        .collect();
    let c = chi.rate_constant();
    let mut rep = MassRateReport {
        rho,
        rate_constant: c,
        times: Vec::new(),
        fd_rate: Vec::new(),
        bound: Vec::new(),
        identity_rate: Vec::new(),
        worst_slack: f64::NEG_INFINITY,
        identity_residual: 0.0,
    };
    for (i, d) in centered_differences(&t, &mass) {
        let u = &snaps[i];
        let bound = c / rho * traj.records()[i].grad_sq.sqrt() * mass[i].sqrt();
        let exact = chi.mass_rate(u, rho);
        rep.worst_slack = rep.worst_slack.max(d.abs() - bound);
        rep.identity_residual = rep.identity_residual.max((d - exact).abs());
        rep.times.push(t[i]);
        rep.fd_rate.push(d);
        rep.bound.push(bound);
        rep.identity_rate.push(exact);
    }
    Ok(rep)
}

/// `C_S = |B(0,2)|^{2/3} S²` where `S² = 1 / (3 (π/2)^{4/3})` is the sharp
/// constant in `‖u‖₆² ≤ S² ‖∇u‖₂²`: then `Mass(u, B(0,ρ)) ≤ C_S ρ² ‖∇u‖₂²`.
pub const SOBOLEV_BALL_CONSTANT: f64 = 1.897_454_221_427_345;

#[cfg(test)]
fn sobolev_ball_constant() -> f64 {
    use std::f64::consts::PI;
    (32.0 * PI / 3.0).powf(2.0 / 3.0) / (3.0 * (PI / 2.0).powf(4.0 / 3.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassInBall {
    pub rho: f64,
    pub mass: f64,
    /// `C_S ρ² ‖∇u‖₂²`
    pub bound: f64,
}

impl MassInBall {
    pub fn holds(&self) -> bool {
        self.mass <= self.bound
    }
}

pub fn mass_in_ball_check(field: &RadialField, rho: f64) -> Result<MassInBall> {
    let mass = local_mass(field, rho)?;
    Ok(MassInBall {
        rho,
        mass,
        bound: SOBOLEV_BALL_CONSTANT * rho * rho * field.grad_sq(),
    })
}
