use serde::Serialize;

use super::{centered_differences, heisenberg_pair};
use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::grid::RadialField;
use crate::propagator::PotentialKind;

/// `E(u) = ½‖∇u‖² + ½s‖xu‖² + ⅓‖u‖₆⁶` with `s = ±1` for `V = ±½|x|²`, 0 for free.
pub fn energy(field: &RadialField, kind: PotentialKind) -> f64 {
    0.5 * field.grad_sq()
        + 0.5 * kind.sign() * field.weight_sq()
        + field.lp_pow_unchecked(6.0) / 3.0
}

/// Repulsive split energies at time `t`:
/// `E1 = ½‖P(−t)u‖² + ⅓cosh²t ‖u‖₆⁶`, `E2 = ½‖X(−t)u‖² + ⅓sinh²t ‖u‖₆⁶`.
pub fn split_energies(field: &RadialField, t: f64, kind: PotentialKind) -> Result<(f64, f64)> {
    if kind != PotentialKind::Repulsive {
        return Err(Error::Usage(format!(
            "split energies are defined for the repulsive kind, not {kind}"
        )));
    }
    let (p, x) = heisenberg_pair(field, t, kind);
    let pot6 = field.lp_pow_unchecked(6.0);
    let (c, s) = (t.cosh(), t.sinh());
    Ok((0.5 * p + c * c * pot6 / 3.0, 0.5 * x + s * s * pot6 / 3.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceResidual {
    pub t: f64,
    pub de1: f64,
    pub de2: f64,
    /// `−⅔ sinh(2t) ‖u‖₆⁶`
    pub rhs: f64,
}

impl VarianceResidual {
    pub fn residual_e1(&self) -> f64 {
        (self.de1 - self.rhs).abs()
    }

    pub fn residual_e2(&self) -> f64 {
        (self.de2 - self.rhs).abs()
    }
}

fn require_repulsive(traj: &Trajectory, min_len: usize) -> Result<()> {
    if traj.kind != PotentialKind::Repulsive {
        return Err(Error::Usage(format!(
            "needs a repulsive trajectory, got {}",
            traj.kind
        )));
    }
    if traj.len() < min_len {
        return Err(Error::Usage(format!(
            "needs at least {min_len} snapshots, got {}",
            traj.len()
        )));
    }
    Ok(())
}

/// Centered differences of `E1`, `E2` against `−⅔ sinh(2t) ‖u‖₆⁶` at interior snapshots.
pub fn variance_identity_residual(traj: &Trajectory) -> Result<Vec<VarianceResidual>> {
    require_repulsive(traj, 3)?;
    let recs = traj.records();
    let t: Vec<f64> = recs.iter().map(|r| r.t).collect();
    let e1: Vec<f64> = recs.iter().map(|r| r.e1.unwrap_or(f64::NAN)).collect();
    let e2: Vec<f64> = recs.iter().map(|r| r.e2.unwrap_or(f64::NAN)).collect();
    let d1 = centered_differences(&t, &e1);
    let d2 = centered_differences(&t, &e2);
    Ok(d1
        .iter()
        .zip(&d2)
        .map(|(&(i, de1), &(_, de2))| VarianceResidual {
            t: t[i],
            de1,
            de2,
            rhs: -(2.0 / 3.0) * (2.0 * t[i]).sinh() * recs[i].pot6,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialDecay {
    /// `max_t ⅓cosh²(t)‖u(t)‖₆⁶ / E1(t₀)`
    pub worst_ratio: f64,
    pub at_t: f64,
    /// `E1(t₀) = 0`: nothing to check.
    pub vacuous: bool,
}

/// Sharp potential-energy decay `⅓cosh²(t)‖u(t)‖₆⁶ ≤ E1(t₀)` over a forward repulsive run.
pub fn potential_decay_check(traj: &Trajectory) -> Result<PotentialDecay> {
    require_repulsive(traj, 1)?;
    let recs = traj.records();
    if recs[0].t < 0.0 || traj.times().windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Usage(
            "potential decay is checked on forward runs from t >= 0".into(),
        ));
    }
    let e10 = recs[0].e1.unwrap_or(0.0);
    if e10 == 0.0 {
        return Ok(PotentialDecay {
            worst_ratio: 0.0,
            at_t: recs[0].t,
            vacuous: true,
        });
    }
    let mut worst = PotentialDecay {
        worst_ratio: f64::NEG_INFINITY,
        at_t: recs[0].t,
        vacuous: false,
    };
    for r in recs {
        let c = r.t.cosh();
        let ratio = c * c * r.pot6 / 3.0 / e10;
        if ratio > worst.worst_ratio {
            worst.worst_ratio = ratio;
            worst.at_t = r.t;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::NoProbe;
    use crate::evolution::{evolve, StepPolicy};
    use crate::grid::Grid;
    use crate::profiles::{gaussian, localized_random};
    use std::f64::consts::PI;

    #[test]
    fn gaussian_energies() {
        let g = Grid::new(20.0, 2048).unwrap();
        let u = gaussian(&g, 1.0, 1.0);
        let p32 = PI.powf(1.5);
        let pot = (PI / 3.0).powf(1.5);
        assert!((energy(&u, PotentialKind::Confining) - (1.5 * p32 + pot / 3.0)).abs() < 1e-10);
        assert!((energy(&u, PotentialKind::Free) - (0.75 * p32 + pot / 3.0)).abs() < 1e-10);
        assert!((energy(&u, PotentialKind::Repulsive) - pot / 3.0).abs() < 1e-10);
        assert_eq!(
            energy(&RadialField::zeros(&g, 0.0), PotentialKind::Confining),
            0.0
        );
    }

    #[test]
    fn split_energies_sum_to_energy() {
        let g = Grid::new(20.0, 1024).unwrap();
        for seed in 0..4 {
            let u = localized_random(&g, seed);
            for t in [0.0, 0.4, 1.0, 2.5] {
                let (e1, e2) = split_energies(&u, t, PotentialKind::Repulsive).unwrap();
                let e = energy(&u, PotentialKind::Repulsive);
                assert!(
                    (e1 - e2 - e).abs() <= 1e-9 * (e1.abs() + e2.abs()),
                    "{e1} {e2} {e}"
                );
            }
        }
    }

    #[test]
    fn split_energies_at_zero_time() {
        let g = Grid::new(20.0, 1024).unwrap();
        let u = localized_random(&g, 11);
        let (e1, e2) = split_energies(&u, 0.0, PotentialKind::Repulsive).unwrap();
        let pot6 = u.lp_pow(6.0).unwrap();
        assert!((e1 - (0.5 * u.grad_sq() + pot6 / 3.0)).abs() < 1e-10 * e1);
        assert!((e2 - 0.5 * u.weight_sq()).abs() < 1e-10 * e2);
        let z = RadialField::zeros(&g, 0.0);
        assert_eq!(
            split_energies(&z, 1.0, PotentialKind::Repulsive).unwrap(),
            (0.0, 0.0)
        );
        assert!(split_energies(&u, 0.0, PotentialKind::Free).is_err());
    }

    #[test]
    fn variance_identity_on_a_short_run() {
        let g = Grid::new(30.0, 2048).unwrap();
        let u = gaussian(&g, 1.0, 1.0);
        let tr = evolve(
            &u,
            0.5,
            &StepPolicy::new(1e-3, 10),
            PotentialKind::Repulsive,
            &NoProbe,
        )
        .unwrap();
        let res = variance_identity_residual(&tr).unwrap();
        let scale = res.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        for r in &res {
            assert!(r.residual_e1() < 1e-3 * scale, "{r:?}");
            assert!(r.residual_e2() < 1e-3 * scale, "{r:?}");
        }
    }

    #[test]
    fn potential_decay_on_zero_and_gaussian() {
        let g = Grid::new(30.0, 1024).unwrap();
        let z = RadialField::zeros(&g, 0.0);
        let tr = evolve(
            &z,
            0.1,
            &StepPolicy::new(1e-2, 1),
            PotentialKind::Repulsive,
            &NoProbe,
        )
        .unwrap();
        assert!(potential_decay_check(&tr).unwrap().vacuous);

        let u = gaussian(&g, 1.0, 1.0);
        let tr = evolve(
            &u,
            1.0,
            &StepPolicy::new(1e-3, 20),
            PotentialKind::Repulsive,
            &NoProbe,
        )
        .unwrap();
        let d = potential_decay_check(&tr).unwrap();
        assert!(d.worst_ratio <= 1.0 + 1e-6, "{d:?}");
        let r0 = &tr.records()[0];
        assert!(r0.pot6 / 3.0 / r0.e1.unwrap() <= 1.0);
    }
}
