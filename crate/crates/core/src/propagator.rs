//! Exact linear propagators `U(t) = e^{it(½Δ − V)}` for `V ∈ {0, ±½|x|²}`.
//!
//! Completing the square in the Mehler kernel gives, for one chunk of time `τ`,
//!
//! ```text
//! confining: U(τ) = M_c ∘ U_free(sin τ)  ∘ M_c,  M_c = e^{−i r² tan(τ/2) / 2}
//! repulsive: U(τ) = M_c ∘ U_free(sinh τ) ∘ M_c,  M_c = e^{+i r² tanh(τ/2) / 2}
//! ```
//!
//! and the free flow is diagonal in the sine basis. Confining times are split
//! into equal chunks of length at most π/2, where the factorization is regular.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, RadialField, SPHERE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialKind {
    /// `V ≡ 0`
    Free,
    /// `V = +½|x|²`
    Confining,
    /// `V = −½|x|²`
    Repulsive,
}

impl PotentialKind {
    pub const ALL: [PotentialKind; 3] = [
        PotentialKind::Free,
        PotentialKind::Confining,
        PotentialKind::Repulsive,
    ];

    /// Sign `s` in `V = s ½|x|²`.
    pub fn sign(self) -> f64 {
        match self {
            PotentialKind::Free => 0.0,
            PotentialKind::Confining => 1.0,
            PotentialKind::Repulsive => -1.0,
        }
    }

    pub fn potential(self, r: f64) -> f64 {
        0.5 * self.sign() * r * r
    }

    /// Longest time a single factorized application may cover.
    pub fn max_chunk(self) -> f64 {
        match self {
            PotentialKind::Confining => FRAC_PI_2,
            _ => f64::INFINITY,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PotentialKind::Free => "free",
            PotentialKind::Confining => "confining",
            PotentialKind::Repulsive => "repulsive",
        }
    }
}

impl fmt::Display for PotentialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PotentialKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "free" => Ok(PotentialKind::Free),
            "confining" | "harmonic" => Ok(PotentialKind::Confining),
            "repulsive" | "inverted" => Ok(PotentialKind::Repulsive),
            other => Err(Error::Config(format!("unknown potential kind '{other}'"))),
        }
    }
}

/// Multiplies sine coefficients by `e^{−i k² s / 2}`.
fn free_multiplier(grid: &Grid, s: f64) -> Vec<Complex64> {
    grid.k()
        .iter()
        .map(|k| Complex64::from_polar(1.0, -0.5 * k * k * s))
        .collect()
}

#[derive(Debug, Clone)]
struct Chunk {
    chirp: Option<Vec<Complex64>>,
    spectral: Vec<Complex64>,
}

impl Chunk {
    fn new(grid: &Grid, kind: PotentialKind, tau: f64) -> Result<Chunk> {
        let (coef, s) = match kind {
            PotentialKind::Free => (0.0, tau),
            PotentialKind::Confining => (-0.5 * (0.5 * tau).tan(), tau.sin()),
            PotentialKind::Repulsive => (0.5 * (0.5 * tau).tanh(), tau.sinh()),
        };
        let chirp = if coef == 0.0 {
            None
        } else {
            check_phase_resolution(grid, coef)?;
            Some(
                grid.r()
                    .iter()
                    .map(|r| Complex64::from_polar(1.0, coef * r * r))
                    .collect(),
            )
        };
        Ok(Chunk {
            chirp,
            spectral: free_multiplier(grid, s),
        })
    }

    fn apply(&self, grid: &Grid, w: &mut [Complex64]) {
        if let Some(ch) = &self.chirp {
            w.iter_mut().zip(ch).for_each(|(z, c)| *z *= c);
        }
        grid.sine_forward_in_place(w);
        w.iter_mut().zip(&self.spectral).for_each(|(z, m)| *z *= m);
        grid.sine_inverse_in_place(w);
        if let Some(ch) = &self.chirp {
            w.iter_mut().zip(ch).for_each(|(z, c)| *z *= c);
        }
    }
}

// The chirp e^{i c r²} must not advance by more than π between the last two cells.
fn check_phase_resolution(grid: &Grid, coef: f64) -> Result<()> {
    let big_r = grid.radius();
    let dr = grid.dr();
    let increment = coef.abs() * (big_r * big_r - (big_r - dr) * (big_r - dr));
    if increment > PI {
        let ok = |n: usize| {
            let d = big_r / (n + 1) as f64;
            coef.abs() * (2.0 * big_r * d - d * d) <= PI
        };
        let mut required_n = (2.0 * coef.abs() * big_r * big_r / PI).ceil().max(1.0) as usize;
        while required_n > 1 && ok(required_n - 1) {
            required_n -= 1;
        }
        while !ok(required_n) {
            required_n += 1;
        }
        return Err(Error::Resolution {
            increment,
            required_n,
        });
    }
    Ok(())
}

/// Precomputed phases for applying `U(t)` on one grid.
#[derive(Debug, Clone)]
pub struct PropagatorPlan {
    grid: Arc<Grid>,
    kind: PotentialKind,
    t: f64,
    chunk: Chunk,
    repeats: usize,
}

impl PropagatorPlan {
    pub fn new(grid: &Arc<Grid>, kind: PotentialKind, t: f64) -> Result<PropagatorPlan> {
        let repeats = match kind {
            PotentialKind::Confining => ((t.abs() / kind.max_chunk()).ceil() as usize).max(1),
            _ => 1,
        };
        let chunk = Chunk::new(grid, kind, t / repeats as f64)?;
        Ok(PropagatorPlan {
            grid: Arc::clone(grid),
            kind,
            t,
            chunk,
            repeats,
        })
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn max_chunk(&self) -> f64 {
        self.kind.max_chunk()
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn apply_in_place(&self, field: &mut RadialField) {
        assert_eq!(**field.grid(), *self.grid, "plan built for another grid");
        if self.t == 0.0 {
            return;
        }
        for _ in 0..self.repeats {
            self.chunk.apply(&self.grid, field.w_mut());
        }
        let t = field.t() + self.t;
        field.set_time(t);
    }

    pub fn apply(&self, field: &RadialField) -> RadialField {
        let mut out = field.clone();
        self.apply_in_place(&mut out);
        out
    }
}

/// Free Schrödinger flow for signed time `s`.
pub fn free_propagate(field: &RadialField, s: f64) -> RadialField {
    let grid = field.grid();
    let mut out = field.clone();
    if s != 0.0 {
        let m = free_multiplier(grid, s);
        let w = out.w_mut();
        grid.sine_forward_in_place(w);
        w.iter_mut().zip(&m).for_each(|(z, m)| *z *= m);
        grid.sine_inverse_in_place(w);
    }
    out.with_time(field.t() + s)
}

/// `U(t) field` through the phase–transform–phase factorization.
pub fn mehler_propagate(field: &RadialField, t: f64, kind: PotentialKind) -> Result<RadialField> {
    Ok(PropagatorPlan::new(field.grid(), kind, t)?.apply(field))
}

/// Largest grid size accepted by [`mehler_oracle`].
pub const ORACLE_MAX_POINTS: usize = 4096;

/// Brute-force quadrature of the radial Mehler kernel,
///
/// ```text
/// w(t, r) = −2i (2πiσ)^{−1/2} ∫_0^R e^{i c (r² + ρ²) / (2σ)} sin(rρ / σ) w(ρ) dρ
/// ```
///
/// with `(σ, c) = (t, 1)`, `(sin t, cos t)` or `(sinh t, cosh t)`. Costs O(N²).
/// Confining times are limited to `0 < |t| < π` (the principal branch).
pub fn mehler_oracle(field: &RadialField, t: f64, kind: PotentialKind) -> Result<RadialField> {
    let grid = field.grid();
    if grid.points() > ORACLE_MAX_POINTS {
        return Err(Error::Usage(format!(
            "kernel quadrature limited to N <= {ORACLE_MAX_POINTS}, got {}",
            grid.points()
        )));
    }
    let (sigma, c) = match kind {
        PotentialKind::Free => (t, 1.0),
        PotentialKind::Confining => {
            if t.abs() >= PI {
                return Err(Error::Usage(format!(
                    "kernel quadrature needs |t| < π for the confining kind, got {t}"
                )));
            }
            (t.sin(), t.cos())
        }
        PotentialKind::Repulsive => (t.sinh(), t.cosh()),
    };
    if sigma.abs() < 1e-12 {
        return Err(Error::SingularTime(t));
    }
    // (2πiσ)^{-1/2} on the principal branch: (2π|σ|)^{-1/2} e^{-iπ/4 sgn σ}
    let pref = Complex64::new(0.0, -2.0)
        * Complex64::from_polar(
            (2.0 * PI * sigma.abs()).powf(-0.5),
            -0.25 * PI * sigma.signum(),
        );
    let r = grid.r();
    let chirp: Vec<Complex64> = r
        .iter()
        .map(|x| Complex64::from_polar(1.0, 0.5 * c * x * x / sigma))
        .collect();
    let g: Vec<Complex64> = field.w().iter().zip(&chirp).map(|(w, ch)| w * ch).collect();
    let dr = grid.dr();
    let w: Vec<Complex64> = r
        .iter()
        .zip(&chirp)
        .map(|(&ri, chi)| {
            let s: Complex64 = r
                .iter()
                .zip(&g)
                .map(|(&rho, gj)| gj * (ri * rho / sigma).sin())
                .sum();
            pref * chi * s * dr
        })
        .collect();
    RadialField::from_w(grid, w, field.t() + t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observable {
    /// Momentum, `P(0) = i∇`.
    P,
    /// Position, `X(0) = x`.
    X,
}

/// Coefficients `(a, b)` of `U(−t) A U(t) = a i∇ + b x` for `A ∈ {i∇, x}`.
pub fn heisenberg_coefficients(kind: PotentialKind, t: f64, which: Observable) -> (f64, f64) {
    match (kind, which) {
        (PotentialKind::Repulsive, Observable::P) => (t.cosh(), -t.sinh()),
        (PotentialKind::Repulsive, Observable::X) => (-t.sinh(), t.cosh()),
        (PotentialKind::Confining, Observable::P) => (t.cos(), t.sin()),
        (PotentialKind::Confining, Observable::X) => (-t.sin(), t.cos()),
        (PotentialKind::Free, Observable::P) => (1.0, 0.0),
        (PotentialKind::Free, Observable::X) => (-t, 1.0),
    }
}

/// Radial component of `P(t)u` or `X(t)u`.
///
/// Stored in `w`-units: `values_w[j] = r_j · (a i ∂_r u + b r u)(r_j)`.
#[derive(Debug, Clone)]
pub struct HeisenbergProfile {
    grid: Arc<Grid>,
    values_w: Vec<Complex64>,
    pub t: f64,
    pub kind: PotentialKind,
    pub which: Observable,
}

impl HeisenbergProfile {
    /// Profile values at the grid radii.
    pub fn values(&self) -> Vec<Complex64> {
        self.values_w
            .iter()
            .zip(self.grid.r())
            .map(|(v, r)| v / r)
            .collect()
    }

    /// `4π ∫ |profile|² r² dr`.
    pub fn l2_norm_sq(&self) -> f64 {
        SPHERE
            * self
                .grid
                .integrate(self.values_w.iter().map(|v| v.norm_sqr()))
    }
}

pub fn heisenberg_apply(
    field: &RadialField,
    t: f64,
    kind: PotentialKind,
    which: Observable,
) -> HeisenbergProfile {
    let (a, b) = heisenberg_coefficients(kind, t, which);
    let ia = Complex64::new(0.0, a);
    let grid = field.grid();
    let values_w = field
        .w_prime()
        .iter()
        .zip(field.w())
        .zip(grid.r())
        .map(|((dw, w), r)| ia * (dw - w / r) + b * r * w)
        .collect();
    HeisenbergProfile {
        grid: Arc::clone(grid),
        values_w,
        t,
        kind,
        which,
    }
}

/// `‖H(−t)^{1/2} u‖₂`: `‖∇u‖₂` for the free kind, otherwise
/// `(½‖P(−t)u‖² + ½‖X(−t)u‖²)^{1/2}`.
pub fn h_half_norm(field: &RadialField, t: f64, kind: PotentialKind) -> f64 {
    match kind {
        PotentialKind::Free => field.grad_sq().sqrt(),
        _ => {
            let p = heisenberg_apply(field, -t, kind, Observable::P).l2_norm_sq();
            let x = heisenberg_apply(field, -t, kind, Observable::X).l2_norm_sq();
            (0.5 * p + 0.5 * x).sqrt()
        }
    }
}

/// `‖U(t)f‖_∞ |τ|^{3/2} / ‖f‖₁` with `τ = sin t` (confining) or `τ = t`.
pub fn dispersive_ratio(field: &RadialField, t: f64, kind: PotentialKind) -> Result<f64> {
    let tau = match kind {
        PotentialKind::Confining => t.sin(),
        _ => t,
    };
    if tau.abs() < 1e-12 {
        return Err(Error::SingularTime(t));
    }
    let l1 = field.l1_norm();
    if l1 == 0.0 {
        return Ok(0.0);
    }
    let evolved = mehler_propagate(field, t, kind)?;
    Ok(evolved.sup_norm() * tau.abs().powf(1.5) / l1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{gaussian, localized_random};

    fn rel_l2(a: &RadialField, b: &RadialField) -> f64 {
        a.l2_distance(b) / b.l2_norm()
    }

    fn free_gaussian(grid: &Arc<Grid>, s: f64) -> RadialField {
        // e^{-r²/2} evolved freely: (1 + is)^{-3/2} e^{-r² / (2(1 + is))}
        let z = Complex64::new(1.0, s);
        RadialField::from_profile(grid, |r| z.powf(-1.5) * (-r * r / (2.0 * z)).exp(), s).unwrap()
    }

    #[test]
    fn free_identity_and_inverse() {
        let g = Grid::new(20.0, 512).unwrap();
        let f = localized_random(&g, 3);
        let same = free_propagate(&f, 0.0);
        assert_eq!(same.w(), f.w());
        let back = free_propagate(&free_propagate(&f, 0.7), -0.7);
        assert!(rel_l2(&back, &f) < 1e-12);
        assert!(back.t().abs() < 1e-15);
    }

    #[test]
    fn free_gaussian_closed_form() {
        let g = Grid::new(30.0, 2048).unwrap();
        let out = free_propagate(&gaussian(&g, 1.0, 1.0), 1.0);
        let exact = free_gaussian(&g, 1.0);
        assert!(out.l2_distance(&exact) < 1e-6);
        assert_eq!(out.t(), 1.0);
    }

    #[test]
    fn confining_ground_state_rotates() {
        let g = Grid::new(20.0, 2048).unwrap();
        let u = gaussian(&g, 1.0, 1.0);
        let out = mehler_propagate(&u, 0.5, PotentialKind::Confining).unwrap();
        let exact = u.scaled(Complex64::from_polar(1.0, -0.75));
        assert!(out.l2_distance(&exact) < 1e-8);
    }

    #[test]
    fn confining_full_period_is_minus_identity() {
        let g = Grid::new(20.0, 1024).unwrap();
        for seed in 0..3 {
            let u = localized_random(&g, seed);
            let out = mehler_propagate(&u, 2.0 * PI, PotentialKind::Confining).unwrap();
            assert!(out.l2_distance(&u.scaled(Complex64::new(-1.0, 0.0))) < 1e-7);
        }
    }

    #[test]
    fn oracle_matches_factorization() {
        let g = Grid::new(20.0, 512).unwrap();
        let u = localized_random(&g, 11);
        for kind in PotentialKind::ALL {
            for t in [-0.8, 0.3, 1.0] {
                let a = mehler_propagate(&u, t, kind).unwrap();
                let b = mehler_oracle(&u, t, kind).unwrap();
                assert!(
                    a.l2_distance(&b) < 1e-6,
                    "{kind} t={t}: {}",
                    a.l2_distance(&b)
                );
            }
        }
    }

    #[test]
    fn oracle_closed_forms() {
        let g = Grid::new(20.0, 1024).unwrap();
        let u = gaussian(&g, 1.0, 1.0);
        let free = mehler_oracle(&u, 1.0, PotentialKind::Free).unwrap();
        assert!(free.l2_distance(&free_gaussian(&g, 1.0)) < 1e-6);
        let conf = mehler_oracle(&u, 0.9, PotentialKind::Confining).unwrap();
        assert!(conf.l2_distance(&u.scaled(Complex64::from_polar(1.0, -1.35))) < 1e-6);
    }

    #[test]
    fn oracle_rejects_singular_times() {
        let g = Grid::new(10.0, 64).unwrap();
        let u = gaussian(&g, 1.0, 1.0);
        assert!(matches!(
            mehler_oracle(&u, 0.0, PotentialKind::Free),
            Err(Error::SingularTime(_))
        ));
        assert!(matches!(
            mehler_oracle(&u, 0.0, PotentialKind::Repulsive),
            Err(Error::SingularTime(_))
        ));
        assert!(mehler_oracle(&u, PI, PotentialKind::Confining).is_err());
        let big = Grid::new(10.0, 5000).unwrap();
        assert!(matches!(
            mehler_oracle(&gaussian(&big, 1.0, 1.0), 0.5, PotentialKind::Free),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn unitarity_and_group_law() {
        let g = Grid::new(20.0, 1024).unwrap();
        let u = localized_random(&g, 5);
        for kind in PotentialKind::ALL {
            for t in [-2.0, -0.4, 1.3, 2.0] {
                let v = mehler_propagate(&u, t, kind).unwrap();
                assert!((v.mass() - u.mass()).abs() <= 1e-10 * u.mass());
            }
            let ab =
                mehler_propagate(&mehler_propagate(&u, 0.4, kind).unwrap(), 0.7, kind).unwrap();
            let c = mehler_propagate(&u, 1.1, kind).unwrap();
            assert!(ab.l2_distance(&c) < 1e-8, "{kind}: {}", ab.l2_distance(&c));
            assert!((ab.t() - 1.1).abs() < 1e-15);
        }
    }

    #[test]
    fn phase_guard_names_required_size() {
        let g = Grid::new(60.0, 64).unwrap();
        let u = gaussian(&g, 1.0, 1.0);
        match mehler_propagate(&u, 1.5, PotentialKind::Confining) {
            Err(Error::Resolution { required_n, .. }) => {
                let fine = Grid::new(60.0, required_n).unwrap();
                let uf = gaussian(&fine, 1.0, 1.0);
                assert!(mehler_propagate(&uf, 1.5, PotentialKind::Confining).is_ok());
                let coarse = Grid::new(60.0, required_n - 1).unwrap();
                assert!(mehler_propagate(
                    &gaussian(&coarse, 1.0, 1.0),
                    1.5,
                    PotentialKind::Confining
                )
                .is_err());
            }
            other => panic!("expected resolution error, got {other:?}"),
        }
    }

    #[test]
    fn heisenberg_at_time_zero() {
        let g = Grid::new(20.0, 512).unwrap();
        let u = localized_random(&g, 2);
        let du = u.radial_derivative();
        for kind in PotentialKind::ALL {
            let p = heisenberg_apply(&u, 0.0, kind, Observable::P).values();
            for (pv, d) in p.iter().zip(&du) {
                assert!((pv - Complex64::i() * d).norm() < 1e-12 * (1.0 + d.norm()));
            }
            let x = heisenberg_apply(&u, 0.0, kind, Observable::X).values();
            for ((xv, uv), r) in x.iter().zip(u.u()).zip(g.r()) {
                assert!((xv - uv * r).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn heisenberg_norm_expands_as_a_square() {
        let g = Grid::new(20.0, 1024).unwrap();
        let u = localized_random(&g, 8);
        let t = 1.0_f64;
        let prof = heisenberg_apply(&u, -t, PotentialKind::Repulsive, Observable::P);
        // independent quadrature of the three terms
        let du = u.radial_derivative();
        let r = g.r();
        let q = |f: &dyn Fn(usize) -> f64| SPHERE * g.integrate((0..r.len()).map(f));
        let grad = q(&|j| du[j].norm_sqr() * r[j] * r[j]);
        let weight = u.weight_sq();
        let uu = u.u();
        let cross = q(&|j| (Complex64::i() * du[j] * (r[j] * uu[j]).conj()).re * r[j] * r[j]);
        let expanded =
            t.cosh().powi(2) * grad + t.sinh().powi(2) * weight + 2.0 * t.cosh() * t.sinh() * cross;
        let direct = prof.l2_norm_sq();
        assert!(
            (direct - expanded).abs() < 1e-9 * direct,
            "{direct} {expanded}"
        );
    }

    #[test]
    fn heisenberg_inversion_recovers_gradient() {
        let g = Grid::new(20.0, 1024).unwrap();
        let u = localized_random(&g, 4);
        let t = 0.8_f64;
        let p = heisenberg_apply(&u, -t, PotentialKind::Repulsive, Observable::P).values();
        let x = heisenberg_apply(&u, -t, PotentialKind::Repulsive, Observable::X).values();
        let du = u.radial_derivative();
        let num: f64 = p
            .iter()
            .zip(&x)
            .zip(&du)
            .zip(g.r())
            .map(|(((p, x), d), r)| {
                let rec = t.cosh() * p - t.sinh() * x;
                (rec - Complex64::i() * d).norm_sqr() * r * r
            })
            .sum();
        let den: f64 = du
            .iter()
            .zip(g.r())
            .map(|(d, r)| d.norm_sqr() * r * r)
            .sum();
        assert!((num / den).sqrt() < 1e-8);
    }

    #[test]
    fn heisenberg_operators_commute_with_the_flow() {
        let g = Grid::new(20.0, 1024).unwrap();
        let u0 = localized_random(&g, 6);
        let grad = u0.grad_sq();
        let weight = u0.weight_sq();
        for kind in PotentialKind::ALL {
            for t in [0.4, 1.2] {
                let ut = mehler_propagate(&u0, t, kind).unwrap();
                let p = heisenberg_apply(&ut, -t, kind, Observable::P).l2_norm_sq();
                let x = heisenberg_apply(&ut, -t, kind, Observable::X).l2_norm_sq();
                assert!(
                    (p - grad).abs() < 1e-8 * grad,
                    "{kind} P t={t}: {p} vs {grad}"
                );
                assert!(
                    (x - weight).abs() < 1e-8 * weight,
                    "{kind} X t={t}: {x} vs {weight}"
                );
            }
        }
    }

    #[test]
    fn h_half_values() {
        let g = Grid::new(20.0, 1024).unwrap();
        let u = gaussian(&g, 1.0, 1.0);
        let expect = 1.5 * PI.powf(1.5);
        for t in [0.0, 0.7, 2.5] {
            let h = h_half_norm(&u, t, PotentialKind::Confining);
            assert!((h * h - expect).abs() < 1e-8 * expect);
        }
        let z = RadialField::zeros(&g, 0.0);
        for kind in PotentialKind::ALL {
            assert_eq!(h_half_norm(&z, 1.0, kind), 0.0);
        }
        let t = 0.6;
        let v = localized_random(&g, 1);
        let h = h_half_norm(&v, t, PotentialKind::Repulsive);
        let p = heisenberg_apply(&v, -t, PotentialKind::Repulsive, Observable::P).l2_norm_sq();
        let x = heisenberg_apply(&v, -t, PotentialKind::Repulsive, Observable::X).l2_norm_sq();
        assert!((h * h - 0.5 * (p + x)).abs() < 1e-12 * h * h);
    }

    #[test]
    fn dispersive_ratio_for_free_gaussian() {
        let g = Grid::new(30.0, 2048).unwrap();
        let u = gaussian(&g, 1.0, 1.0);
        let l1 = (2.0 * PI).powf(1.5);
        let limit = (2.0 * PI).powf(-1.5);
        for t in [1.0_f64, 2.0] {
            let ratio = dispersive_ratio(&u, t, PotentialKind::Free).unwrap();
            // sup |U(t)u| = (1 + t²)^{-3/4} at the origin
            let exact = (1.0 + t * t).powf(-0.75) * t.powf(1.5) / l1;
            assert!((ratio - exact).abs() < 1e-6 * exact, "{ratio} {exact}");
            assert!(ratio < 1.0 && ratio <= 1.05 * limit);
        }
        let z = RadialField::zeros(&g, 0.0);
        assert_eq!(dispersive_ratio(&z, 1.0, PotentialKind::Free).unwrap(), 0.0);
        assert!(matches!(
            dispersive_ratio(&u, PI, PotentialKind::Confining),
            Err(Error::SingularTime(_))
        ));
    }

    #[test]
    fn kind_parsing() {
        assert_eq!(
            "Repulsive".parse::<PotentialKind>().unwrap(),
            PotentialKind::Repulsive
        );
        assert!("sideways".parse::<PotentialKind>().is_err());
    }
}
