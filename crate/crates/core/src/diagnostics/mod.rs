//! Conserved, monotone and bounded quantities, measured on fields and trajectories.

mod energy;
mod local_mass;
mod morawetz;
mod spacetime;

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{RadialField, SPHERE};
use crate::propagator::{heisenberg_coefficients, Observable, PotentialKind};

pub use energy::{
    energy, potential_decay_check, split_energies, variance_identity_residual, PotentialDecay,
    VarianceResidual,
};
pub use local_mass::{
    local_mass, mass_in_ball_check, mass_rate_bound_check, CutoffChi, MassInBall, MassRateReport,
    SOBOLEV_BALL_CONSTANT,
};
pub use morawetz::{
    morawetz_action, morawetz_bound_accumulator, morawetz_rate, morawetz_rate_residual,
    MorawetzBound, MorawetzMode, MorawetzWeight, RateResidual,
};
pub use spacetime::{
    concentration_scan, interval_partition, strichartz_norms, z_accumulate, BubbleRow,
    IntervalPartition, StrichartzNorm, ZReport, STRICHARTZ_PAIRS,
};

/// One time sample of every tracked scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    /// Repulsive split energies at the record time.
    pub e1: Option<f64>,
    pub e2: Option<f64>,
    pub mass: f64,
    pub grad_sq: f64,
    pub weight_sq: f64,
    /// `‖u‖₆⁶`
    pub pot6: f64,
    /// `‖u‖₁₀¹⁰`
    pub pot10: f64,
    pub h_half: f64,
    /// `(ρ, Mass(u, B(0, ρ)))`
    pub local_mass: Vec<(f64, f64)>,
    pub morawetz_action: Option<f64>,
    /// `∫ ‖u‖₁₀¹⁰ dt` since the previous snapshot.
    pub z_increment: f64,
    /// Spatial norms `‖u‖_r` for the exponents of [`STRICHARTZ_PAIRS`].
    pub strichartz: Vec<f64>,
}

/// Values a probe adds to a record.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecordFragment {
    pub local_mass: Vec<(f64, f64)>,
    pub morawetz_action: Option<f64>,
}

impl DiagnosticsRecord {
    pub fn merge(&mut self, fragment: RecordFragment) {
        self.local_mass.extend(fragment.local_mass);
        if fragment.morawetz_action.is_some() {
            self.morawetz_action = fragment.morawetz_action;
        }
    }
}

/// Per-snapshot diagnostics callback. Probes only read the field.
pub trait Probe {
    fn probe(&self, field: &RadialField) -> RecordFragment;
}

/// Adds nothing.
pub struct NoProbe;

impl Probe for NoProbe {
    fn probe(&self, _: &RadialField) -> RecordFragment {
        RecordFragment::default()
    }
}

impl<F: Fn(&RadialField) -> RecordFragment> Probe for F {
    fn probe(&self, field: &RadialField) -> RecordFragment {
        self(field)
    }
}

/// Local masses at fixed radii and, optionally, the Morawetz action.
#[derive(Debug, Clone, Default)]
pub struct StandardProbe {
    pub radii: Vec<f64>,
    pub weight: Option<MorawetzWeight>,
}

impl Probe for StandardProbe {
    fn probe(&self, field: &RadialField) -> RecordFragment {
        let chi = CutoffChi::new();
        let half = 0.5 * field.grid().radius();
        let local_mass = self
            .radii
            .iter()
            .filter(|&&rho| rho <= half)
            .map(|&rho| (rho, chi.local_mass_unchecked(field, rho)))
            .collect();
        let morawetz_action = self
            .weight
            .as_ref()
            .and_then(|a| morawetz_action(field, a).ok());
        RecordFragment {
            local_mass,
            morawetz_action,
        }
    }
}

/// `(‖P(−t)u‖², ‖X(−t)u‖²)` from a single spectral derivative.
pub(crate) fn heisenberg_pair(field: &RadialField, t: f64, kind: PotentialKind) -> (f64, f64) {
    let (ap, bp) = heisenberg_coefficients(kind, -t, Observable::P);
    let (ax, bx) = heisenberg_coefficients(kind, -t, Observable::X);
    let grid = field.grid();
    let dw = field.w_prime();
    let (mut p, mut x) = (0.0, 0.0);
    for ((dw, w), r) in dw.iter().zip(field.w()).zip(grid.r()) {
        let d = Complex64::i() * (dw - w / r);
        let rw = r * w;
        p += (ap * d + bp * rw).norm_sqr();
        x += (ax * d + bx * rw).norm_sqr();
    }
    (SPHERE * grid.dr() * p, SPHERE * grid.dr() * x)
}

/// The diagnostics every snapshot carries.
pub fn base_record(field: &RadialField, kind: PotentialKind) -> DiagnosticsRecord {
    let t = field.t();
    let mass = field.mass();
    let grad_sq = field.grad_sq();
    let weight_sq = field.weight_sq();
    let pot6 = field.lp_pow_unchecked(6.0);
    let pot10 = field.lp_pow_unchecked(10.0);
    let energy = 0.5 * grad_sq + 0.5 * kind.sign() * weight_sq + pot6 / 3.0;
    let (e1, e2, h_half) = match kind {
        PotentialKind::Free => (None, None, grad_sq.sqrt()),
        _ => {
            let (p, x) = heisenberg_pair(field, t, kind);
            let h = (0.5 * p + 0.5 * x).sqrt();
            if kind == PotentialKind::Repulsive {
                let (c, s) = (t.cosh(), t.sinh());
                (
                    Some(0.5 * p + c * c * pot6 / 3.0),
                    Some(0.5 * x + s * s * pot6 / 3.0),
                    h,
                )
            } else {
                (None, None, h)
            }
        }
    };
    let strichartz = STRICHARTZ_PAIRS
        .iter()
        .map(|&(_, r)| field.lp_pow_unchecked(r).powf(1.0 / r))
        .collect();
    DiagnosticsRecord {
        t,
        energy,
        e1,
        e2,
        mass,
        grad_sq,
        weight_sq,
        pot6,
        pot10,
        h_half,
        local_mass: Vec::new(),
        morawetz_action: None,
        z_increment: 0.0,
        strichartz,
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Writes records as CSV, one row per snapshot, columns in field order.
pub fn write_csv<W: Write>(out: &mut W, records: &[DiagnosticsRecord]) -> Result<()> {
    let radii: Vec<f64> = records
        .first()
        .map(|r| r.local_mass.iter().map(|p| p.0).collect())
        .unwrap_or_default();
    let mut header: Vec<String> = [
        "t",
        "energy",
        "e1",
        "e2",
        "mass",
        "grad_sq",
        "weight_sq",
        "pot6",
        "pot10",
        "h_half",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(radii.iter().map(|r| format!("local_mass_rho_{r}")));
    header.push("morawetz_action".into());
    header.push("z_increment".into());
    header.extend(
        STRICHARTZ_PAIRS
            .iter()
            .map(|(_, r)| format!("strichartz_l{r}")),
    );
    writeln!(out, "{}", header.join(","))?;
    for rec in records {
        let mut row = vec![
            fmt_f64(rec.t),
            fmt_f64(rec.energy),
            fmt_opt(rec.e1),
            fmt_opt(rec.e2),
            fmt_f64(rec.mass),
            fmt_f64(rec.grad_sq),
            fmt_f64(rec.weight_sq),
            fmt_f64(rec.pot6),
            fmt_f64(rec.pot10),
            fmt_f64(rec.h_half),
        ];
        for rho in &radii {
            let v = rec.local_mass.iter().find(|p| p.0 == *rho).map(|p| p.1);
            row.push(fmt_opt(v));
        }
        row.push(fmt_opt(rec.morawetz_action));
        row.push(fmt_f64(rec.z_increment));
        row.extend(rec.strichartz.iter().map(|&v| fmt_f64(v)));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Centered finite differences at interior samples: `(t_i, (y_{i+1} − y_{i−1}) / (t_{i+1} − t_{i−1}))`.
pub(crate) fn centered_differences(t: &[f64], y: &[f64]) -> Vec<(usize, f64)> {
    (1..t.len().saturating_sub(1))
        .map(|i| (i, (y[i + 1] - y[i - 1]) / (t[i + 1] - t[i - 1])))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::profiles::{gaussian, localized_random};
    use crate::propagator::h_half_norm;

    #[test]
    fn base_record_matches_direct_calls() {
        let g = Grid::new(20.0, 1024).unwrap();
        let u = localized_random(&g, 4).with_time(0.7);
        for kind in PotentialKind::ALL {
            let rec = base_record(&u, kind);
            assert!((rec.h_half - h_half_norm(&u, 0.7, kind)).abs() < 1e-12 * rec.h_half);
            assert!((rec.energy - energy(&u, kind)).abs() < 1e-12 * rec.energy.abs().max(1.0));
            assert_eq!(rec.mass, u.mass());
        }
        let rec = base_record(&u, PotentialKind::Repulsive);
        let (e1, e2) = split_energies(&u, 0.7, PotentialKind::Repulsive).unwrap();
        assert!((rec.e1.unwrap() - e1).abs() < 1e-12 * e1);
        assert!((rec.e2.unwrap() - e2).abs() < 1e-12 * e2);
    }

    #[test]
    fn csv_columns_follow_record_order() {
        let g = Grid::new(20.0, 256).unwrap();
        let u = gaussian(&g, 1.0, 1.0);
        let probe = StandardProbe {
            radii: vec![1.0, 2.0],
            weight: None,
        };
        let mut rec = base_record(&u, PotentialKind::Repulsive);
        rec.merge(probe.probe(&u));
        let mut buf = Vec::new();
        write_csv(&mut buf, &[rec.clone()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(header[0], "t");
        assert_eq!(header[10], "local_mass_rho_1");
        assert_eq!(header[12], "morawetz_action");
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), header.len());
        assert_eq!(row[1].parse::<f64>().unwrap(), rec.energy);
        assert_eq!(row[12], "");
    }
}
