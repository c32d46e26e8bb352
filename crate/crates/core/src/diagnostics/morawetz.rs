use std::sync::Arc;

use serde::Serialize;

use super::centered_differences;
use super::local_mass::{smooth_step, CutoffChi};
use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::grid::{Grid, RadialField, SPHERE};
use crate::propagator::PotentialKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum MorawetzMode {
    /// `a = R ψ(r/R)` with `ψ' = χ`: `ψ(s) = s` for `s ≤ 1`, `3/2` for `s ≥ 2`.
    Sharp { scale: f64 },
    /// `a = √(r² + ε²)`.
    Smooth { epsilon: f64 },
}

/// Radial Morawetz weight tabulated on a grid.
#[derive(Debug, Clone)]
pub struct MorawetzWeight {
    pub mode: MorawetzMode,
    grid: Arc<Grid>,
    pub a: Vec<f64>,
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    /// `Δa = a'' + 2a'/r`
    pub lap: Vec<f64>,
    /// `ΔΔa`, absent for the sharp weight (it carries a point mass at the origin).
    pub bilap: Option<Vec<f64>>,
}

// ∫_0^x S(σ) dσ by composite Simpson.
fn step_integral(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let x = x.min(1.0);
    let n = 400;
    let h = x / n as f64;
    let mut s = smooth_step(0.0) + smooth_step(x);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * smooth_step(i as f64 * h);
    }
    s * h / 3.0
}

fn psi(s: f64) -> f64 {
    if s <= 1.0 {
        s
    } else if s >= 2.0 {
        1.5
    } else {
        // ∫_1^s S(2 − σ) dσ = ½ − ∫_0^{2−s} S
        1.0 + 0.5 - step_integral(2.0 - s)
    }
}

impl MorawetzWeight {
    pub fn smooth(grid: &Arc<Grid>, epsilon: f64) -> Result<MorawetzWeight> {
        if !(epsilon > 0.0) {
            return Err(Error::Config(format!(
                "Morawetz ε must be positive, got {epsilon}"
            )));
        }
        let e2 = epsilon * epsilon;
        let n = grid.points();
        let (mut a, mut a1, mut a2, mut lap, mut bilap) = (
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        );
        for &r in grid.r() {
            let s = (r * r + e2).sqrt();
            let s3 = s * s * s;
            a.push(s);
            a1.push(r / s);
            a2.push(e2 / s3);
            lap.push(e2 / s3 + 2.0 / s);
            bilap.push(-15.0 * e2 * e2 / (s3 * s3 * s));
        }
        Ok(MorawetzWeight {
            mode: MorawetzMode::Smooth { epsilon },
            grid: Arc::clone(grid),
            a,
            a1,
            a2,
            lap,
            bilap: Some(bilap),
        })
    }

    pub fn sharp(grid: &Arc<Grid>, scale: f64) -> Result<MorawetzWeight> {
        if !(scale > 0.0) {
            return Err(Error::Config(format!(
                "Morawetz scale must be positive, got {scale}"
            )));
        }
        let chi = CutoffChi::new();
        let mut w = MorawetzWeight {
            mode: MorawetzMode::Sharp { scale },
            grid: Arc::clone(grid),
            a: Vec::new(),
            a1: Vec::new(),
            a2: Vec::new(),
            lap: Vec::new(),
            bilap: None,
        };
        for &r in grid.r() {
            let s = r / scale;
            let a1 = chi.value(s);
            let a2 = chi.derivative(s) / scale;
            w.a.push(scale * psi(s));
            w.a1.push(a1);
            w.a2.push(a2);
            w.lap.push(a2 + 2.0 * a1 / r);
        }
        Ok(w)
    }

    fn check_grid(&self, field: &RadialField) -> Result<()> {
        let g = field.grid();
        if g.radius() != self.grid.radius() || g.points() != self.grid.points() {
            return Err(Error::Usage(
                "Morawetz weight was tabulated on a different grid".into(),
            ));
        }
        Ok(())
    }
}

/// `∫ a_k Im(u_k ū) dx = 4π ∫ a' Im(w' w̄) dr`.
pub fn morawetz_action(field: &RadialField, weight: &MorawetzWeight) -> Result<f64> {
    weight.check_grid(field)?;
    let dw = field.w_prime();
    Ok(SPHERE
        * field.grid().integrate(
            field
                .w()
                .iter()
                .zip(&dw)
                .zip(&weight.a1)
                .map(|((w, d), a1)| a1 * (d * w.conj()).im),
        ))
}

/// Right side of the momentum identity integrated against `∇a`:
/// `¼∫(−ΔΔa)|u|² + ∫a''|∂_r u|² − ∫a' ∂_rV |u|² + ⅔∫Δa|u|⁶`.
pub fn morawetz_rate(
    field: &RadialField,
    weight: &MorawetzWeight,
    kind: PotentialKind,
    nonlinear: bool,
) -> Result<f64> {
    weight.check_grid(field)?;
    let Some(bilap) = &weight.bilap else {
        return Err(Error::Usage(
            "the sharp weight has a distributional ΔΔa; use the smooth weight for the rate identity \
             and morawetz_bound_accumulator for the sharp weight"
                .into(),
        ));
    };
    let g = field.grid();
    let dw = field.w_prime();
    let s = kind.sign();
    let nl = if nonlinear { 2.0 / 3.0 } else { 0.0 };
    let sum = g.integrate((0..g.points()).map(|j| {
        let r = g.r()[j];
        let w = field.w()[j];
        let m = w.norm_sqr();
        let ur = dw[j] - w / r;
        -0.25 * bilap[j] * m + weight.a2[j] * ur.norm_sqr() - s * weight.a1[j] * r * m
            + nl * weight.lap[j] * m * m * m / (r * r * r * r)
    }));
    Ok(SPHERE * sum)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateResidual {
    pub times: Vec<f64>,
    /// Centered differences of the action.
    pub fd_rate: Vec<f64>,
    pub rhs: Vec<f64>,
    pub max_residual: f64,
    /// `max |rhs|`, for relative comparisons.
    pub scale: f64,
}

impl RateResidual {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.max_residual / self.scale
        } else {
            self.max_residual
        }
    }
}

/// Finite-difference rate of the Morawetz action against the quadrature right side.
pub fn morawetz_rate_residual(traj: &Trajectory, weight: &MorawetzWeight) -> Result<RateResidual> {
    if traj.len() < 3 {
        return Err(Error::Usage(format!(
            "needs at least 3 snapshots, got {}",
            traj.len()
        )));
    }
    let t = traj.times();
    let actions: Vec<f64> = traj
        .snapshots()
        .iter()
        .map(|u| morawetz_action(u, weight))
        .collect::<Result<_>>()?;
    let mut out = RateResidual {
        times: Vec::new(),
        fd_rate: Vec::new(),
        rhs: Vec::new(),
        max_residual: 0.0,
        scale: 0.0,
    };
    for (i, d) in centered_differences(&t, &actions) {
        let rhs = morawetz_rate(
            &traj.snapshots()[i],
            weight,
            traj.kind,
            traj.nonlinearity.is_on(),
        )?;
        out.max_residual = out.max_residual.max((d - rhs).abs());
        out.scale = out.scale.max(rhs.abs());
        out.times.push(t[i]);
        out.fd_rate.push(d);
        out.rhs.push(rhs);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MorawetzBound {
    pub k: f64,
    /// `K |I|^{1/2}`
    pub ball_radius: f64,
    /// `∫_I ∫_{|x| ≤ K|I|^{1/2}} |u|⁶ / |x| dx dt`
    pub lhs: f64,
    pub rhs_scale: f64,
    /// `lhs / rhs_scale`, 0 when both vanish.
    pub ratio: f64,
}

/// Spacetime Morawetz quantity over the whole trajectory, with the kind-dependent scale.
pub fn morawetz_bound_accumulator(traj: &Trajectory, k: f64) -> Result<MorawetzBound> {
    let (Some(first), Some(last)) = (traj.first(), traj.last()) else {
        return Err(Error::Usage("empty trajectory".into()));
    };
    if !(k > 0.0) {
        return Err(Error::Config(format!("K must be positive, got {k}")));
    }
    let g = first.grid();
    let len = (last.t() - first.t()).abs();
    let ball = k * len.sqrt();
    if ball > 0.5 * g.radius() {
        return Err(Error::Domain(format!(
            "Morawetz ball K|I|^(1/2) = {ball} exceeds R/2 = {}",
            0.5 * g.radius()
        )));
    }
    let density = |u: &RadialField| {
        SPHERE
            * g.integrate(
                u.w()
                    .iter()
                    .zip(g.r())
                    .filter(|p| *p.1 <= ball)
                    .map(|(w, r)| {
                        let m = w.norm_sqr();
                        m * m * m / (r * r * r * r * r)
                    }),
            )
    };
    let snaps = traj.snapshots();
    let vals: Vec<f64> = snaps.iter().map(density).collect();
    let mut lhs = 0.0;
    for i in 1..snaps.len() {
        lhs += 0.5 * (vals[i - 1] + vals[i]) * (snaps[i].t() - snaps[i - 1].t()).abs();
    }
    let recs = traj.records();
    let e = recs[0].energy;
    let rhs_scale = match traj.kind {
        PotentialKind::Free => ball * e,
        PotentialKind::Confining => k * (len.sqrt() + len) * e,
        PotentialKind::Repulsive => {
            let grad = recs.iter().map(|r| r.grad_sq).fold(0.0, f64::max);
            let pot = recs.iter().map(|r| r.pot6).fold(0.0, f64::max);
            ball * (grad + pot)
        }
    };
    let ratio = if lhs == 0.0 && rhs_scale == 0.0 {
        0.0
    } else {
        lhs / rhs_scale
    };
    Ok(MorawetzBound {
        k,
        ball_radius: ball,
        lhs,
        rhs_scale,
        ratio,
    })
}
