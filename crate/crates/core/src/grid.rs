//! Radial grids and fields.
//!
//! A radial function `u(r)` on R^3 is stored through `w(r) = r u(r)` at the
//! interior points `r_j = j dr`, `j = 1..N`, with `dr = R / (N + 1)` and
//! implicit Dirichlet values `w(0) = w(R) = 0`. In these variables the radial
//! Laplacian is `Δu = w'' / r`, so the sine basis diagonalizes it.
//!
//! Sine-transform normalization: `ŵ_m = sqrt(2 dr / (N + 1)) Σ_j w_j sin(k_m r_j)`
//! with `k_m = π m / R`. These are the coefficients of `w` in the orthonormal
//! basis `φ_m(r) = sqrt(2 / R) sin(k_m r)` of `L²(0, R)`, so
//! `Σ_j |w_j|² dr = Σ_m |ŵ_m|²` and `∫|w'|² dr = Σ_m k_m² |ŵ_m|²`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustdct::{Dct1, DctPlanner, Dst1};

use crate::error::{Error, Result};

/// Ambient dimension. Only the radial n = 3 problem is implemented.
pub const DIM: usize = 3;

/// Surface area of the unit sphere in R^3.
pub const SPHERE: f64 = 4.0 * PI;

pub struct Grid {
    radius: f64,
    points: usize,
    dr: f64,
    r: Vec<f64>,
    k: Vec<f64>,
    dst: Arc<dyn Dst1<f64>>,
    dct: Arc<dyn Dct1<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("radius", &self.radius)
            .field("points", &self.points)
            .field("dr", &self.dr)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.radius.to_bits() == other.radius.to_bits() && self.points == other.points
    }
}

impl Grid {
    pub const MIN_POINTS: usize = 8;

    pub fn new(radius: f64, points: usize) -> Result<Arc<Grid>> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Config(format!(
                "radius must be positive, got {radius}"
            )));
        }
        if points < Self::MIN_POINTS {
            return Err(Error::Config(format!(
                "need at least {} interior points, got {points}",
                Self::MIN_POINTS
            )));
        }
        let dr = radius / (points + 1) as f64;
        let r = (1..=points).map(|j| j as f64 * dr).collect();
        let k = (1..=points).map(|m| PI * m as f64 / radius).collect();
        let mut planner = DctPlanner::new();
        let dst = planner.plan_dst1(points);
        let dct = planner.plan_dct1(points + 2);
        Ok(Arc::new(Grid {
            radius,
            points,
            dr,
            r,
            k,
            dst,
            dct,
        }))
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    /// Interior radii `r_1 < ... < r_N`.
    pub fn r(&self) -> &[f64] {
        &self.r
    }

    /// Sine wavenumbers `k_1 < ... < k_N`.
    pub fn k(&self) -> &[f64] {
        &self.k
    }

    /// Trapezoid rule for `∫_0^R g(r) dr` where `g` vanishes at both ends.
    /// `g` is supplied by its interior samples.
    pub fn integrate<I: IntoIterator<Item = f64>>(&self, samples: I) -> f64 {
        self.dr * samples.into_iter().sum::<f64>()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.points {
            return Err(Error::Shape {
                expected: self.points,
                got: len,
            });
        }
        Ok(())
    }

    // Real DST-I applied separately to the real and imaginary parts.
    fn dst_complex(&self, data: &mut [Complex64], scale: f64) {
        let mut re: Vec<f64> = data.iter().map(|z| z.re).collect();
        let mut im: Vec<f64> = data.iter().map(|z| z.im).collect();
        self.dst.process_dst1(&mut re);
        self.dst.process_dst1(&mut im);
        for ((z, a), b) in data.iter_mut().zip(re).zip(im) {
            *z = Complex64::new(a * scale, b * scale);
        }
    }

    fn forward_scale(&self) -> f64 {
        (2.0 * self.dr / (self.points + 1) as f64).sqrt()
    }

    fn inverse_scale(&self) -> f64 {
        (2.0 / self.radius).sqrt()
    }

    /// Forward orthonormal sine transform `w ↦ ŵ`.
    pub fn sine_forward(&self, w: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(w.len())?;
        let mut out = w.to_vec();
        self.sine_forward_in_place(&mut out);
        Ok(out)
    }

    /// Inverse of [`Grid::sine_forward`].
    pub fn sine_inverse(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(coeffs.len())?;
        let mut out = coeffs.to_vec();
        self.sine_inverse_in_place(&mut out);
        Ok(out)
    }

    pub(crate) fn sine_forward_in_place(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.points);
        self.dst_complex(data, self.forward_scale());
    }

    pub(crate) fn sine_inverse_in_place(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.points);
        self.dst_complex(data, self.inverse_scale());
    }

    /// `w'(r_j)` from sine coefficients: the sine series differentiated into
    /// a cosine series, evaluated with a DCT-I.
    pub fn derivative_from_coefficients(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(coeffs.len())?;
        let n = self.points;
        let mut re = vec![0.0; n + 2];
        let mut im = vec![0.0; n + 2];
        for (m, (c, k)) in coeffs.iter().zip(&self.k).enumerate() {
            re[m + 1] = c.re * k;
            im[m + 1] = c.im * k;
        }
        self.dct.process_dct1(&mut re);
        self.dct.process_dct1(&mut im);
        let s = self.inverse_scale();
        Ok((1..=n)
            .map(|j| Complex64::new(re[j] * s, im[j] * s))
            .collect())
    }
}

/// Complex radial profile at a fixed time, stored as `w = r u`.
#[derive(Debug, Clone)]
pub struct RadialField {
    grid: Arc<Grid>,
    w: Vec<Complex64>,
    t: f64,
}

impl PartialEq for RadialField {
    fn eq(&self, other: &Self) -> bool {
        *self.grid == *other.grid && self.w == other.w && self.t.to_bits() == other.t.to_bits()
    }
}

impl RadialField {
    /// Samples `w_j = r_j f(r_j)`.
    pub fn from_profile<F>(grid: &Arc<Grid>, f: F, t: f64) -> Result<RadialField>
    where
        F: Fn(f64) -> Complex64,
    {
        let mut w = Vec::with_capacity(grid.points());
        for &r in grid.r() {
            let v = f(r);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFiniteSample { radius: r });
            }
            w.push(v * r);
        }
        Ok(RadialField {
            grid: Arc::clone(grid),
            w,
            t,
        })
    }

    pub fn from_w(grid: &Arc<Grid>, w: Vec<Complex64>, t: f64) -> Result<RadialField> {
        grid.check_len(w.len())?;
        Ok(RadialField {
            grid: Arc::clone(grid),
            w,
            t,
        })
    }

    pub fn zeros(grid: &Arc<Grid>, t: f64) -> RadialField {
        RadialField {
            grid: Arc::clone(grid),
            w: vec![Complex64::new(0.0, 0.0); grid.points()],
            t,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn w(&self) -> &[Complex64] {
        &self.w
    }

    pub(crate) fn w_mut(&mut self) -> &mut [Complex64] {
        &mut self.w
    }

    pub fn into_w(self) -> Vec<Complex64> {
        self.w
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn with_time(mut self, t: f64) -> RadialField {
        self.t = t;
        self
    }

    pub(crate) fn set_time(&mut self, t: f64) {
        self.t = t;
    }

    pub fn same_grid(&self, other: &RadialField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// `u(r_j) = w_j / r_j`.
    pub fn u(&self) -> Vec<Complex64> {
        self.w
            .iter()
            .zip(self.grid.r())
            .map(|(w, r)| w / r)
            .collect()
    }

    /// `u(0)` by quadratic extrapolation through the first three grid values.
    pub fn origin_value(&self) -> Complex64 {
        let r = self.grid.r();
        let u1 = self.w[0] / r[0];
        let u2 = self.w[1] / r[1];
        let u3 = self.w[2] / r[2];
        3.0 * u1 - 3.0 * u2 + u3
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn sine_coefficients(&self) -> Vec<Complex64> {
        let mut c = self.w.clone();
        self.grid.sine_forward_in_place(&mut c);
        c
    }

    /// `‖u‖₂² = 4π ∫ |w|² dr`.
    pub fn mass(&self) -> f64 {
        SPHERE * self.grid.integrate(self.w.iter().map(|z| z.norm_sqr()))
    }

    /// Mass evaluated on the sine side, `4π Σ |ŵ_m|²`.
    pub fn spectral_mass(&self) -> f64 {
        SPHERE
            * self
                .sine_coefficients()
                .iter()
                .map(|c| c.norm_sqr())
                .sum::<f64>()
    }

    /// `‖∇u‖₂² = 4π Σ k_m² |ŵ_m|²`.
    pub fn grad_sq(&self) -> f64 {
        let c = self.sine_coefficients();
        SPHERE
            * c.iter()
                .zip(self.grid.k())
                .map(|(c, k)| k * k * c.norm_sqr())
                .sum::<f64>()
    }

    /// `‖x u‖₂² = 4π ∫ r² |w|² dr`.
    pub fn weight_sq(&self) -> f64 {
        SPHERE
            * self.grid.integrate(
                self.w
                    .iter()
                    .zip(self.grid.r())
                    .map(|(z, r)| r * r * z.norm_sqr()),
            )
    }

    /// `‖u‖_p^p = 4π ∫ |w / r|^p r² dr`, for `2 <= p < ∞`.
    pub fn lp_pow(&self, p: f64) -> Result<f64> {
        if !(p.is_finite() && p >= 2.0) {
            return Err(Error::UnsupportedExponent(p));
        }
        Ok(self.lp_pow_unchecked(p))
    }

    pub(crate) fn lp_pow_unchecked(&self, p: f64) -> f64 {
        let g = &self.grid;
        let s = if p == 6.0 {
            g.integrate(self.w.iter().zip(g.r()).map(|(z, r)| {
                let a = z.norm_sqr();
                a * a * a / (r * r * r * r)
            }))
        } else if p == 10.0 {
            g.integrate(self.w.iter().zip(g.r()).map(|(z, r)| {
                let a = z.norm_sqr() / (r * r);
                a * a * a * a * a * r * r
            }))
        } else {
            g.integrate(
                self.w
                    .iter()
                    .zip(g.r())
                    .map(|(z, r)| z.norm().powf(p) * r.powf(2.0 - p)),
            )
        };
        SPHERE * s
    }

    /// `‖u‖_∞` over the grid, including the extrapolated origin value.
    pub fn sup_norm(&self) -> f64 {
        self.w
            .iter()
            .zip(self.grid.r())
            .map(|(w, r)| w.norm() / r)
            .fold(self.origin_value().norm(), f64::max)
    }

    /// `‖u‖₁ = 4π ∫ |w| r dr`.
    pub fn l1_norm(&self) -> f64 {
        SPHERE
            * self
                .grid
                .integrate(self.w.iter().zip(self.grid.r()).map(|(z, r)| z.norm() * r))
    }

    /// `‖u − v‖₂`.
    pub fn l2_distance(&self, other: &RadialField) -> f64 {
        assert!(self.same_grid(other), "fields live on different grids");
        (SPHERE
            * self
                .grid
                .integrate(self.w.iter().zip(&other.w).map(|(a, b)| (a - b).norm_sqr())))
        .sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    /// `w'(r_j)`, computed spectrally.
    pub fn w_prime(&self) -> Vec<Complex64> {
        let c = self.sine_coefficients();
        self.grid
            .derivative_from_coefficients(&c)
            .expect("length matches grid")
    }

    /// `∂_r u(r_j) = (w' − w / r) / r`.
    pub fn radial_derivative(&self) -> Vec<Complex64> {
        self.w_prime()
            .iter()
            .zip(&self.w)
            .zip(self.grid.r())
            .map(|((dw, w), r)| (dw - w / r) / r)
            .collect()
    }

    /// Fraction of the mass sitting in `r ∈ [0.9 R, R]`.
    pub fn boundary_fraction(&self) -> f64 {
        let total = self.mass();
        if total == 0.0 {
            return 0.0;
        }
        let cut = 0.9 * self.grid.radius();
        let outer = SPHERE
            * self.grid.integrate(
                self.w
                    .iter()
                    .zip(self.grid.r())
                    .filter(|(_, &r)| r >= cut)
                    .map(|(z, _)| z.norm_sqr()),
            );
        outer / total
    }

    pub fn norms(&self, exponents: &[f64]) -> Result<NormReport> {
        let mut lp = Vec::with_capacity(exponents.len());
        for &p in exponents {
            lp.push((p, self.lp_pow(p)?.powf(1.0 / p)));
        }
        let grad_sq = self.grad_sq();
        let weight_sq = self.weight_sq();
        Ok(NormReport {
            mass: self.mass(),
            grad_sq,
            weight_sq,
            sigma_sq: grad_sq + weight_sq,
            lp,
        })
    }

    /// Multiplies by a complex scalar, keeping the time stamp.
    pub fn scaled(&self, factor: Complex64) -> RadialField {
        RadialField {
            grid: Arc::clone(&self.grid),
            w: self.w.iter().map(|z| z * factor).collect(),
            t: self.t,
        }
    }

    /// `self − other`, stamped with `self.t`.
    pub fn difference(&self, other: &RadialField) -> RadialField {
        assert!(self.same_grid(other), "fields live on different grids");
        RadialField {
            grid: Arc::clone(&self.grid),
            w: self.w.iter().zip(&other.w).map(|(a, b)| a - b).collect(),
            t: self.t,
        }
    }
}

/// Norms of a single field.
#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub mass: f64,
    pub grad_sq: f64,
    pub weight_sq: f64,
    pub sigma_sq: f64,
    /// `(p, ‖u‖_p)` in request order.
    pub lp: Vec<(f64, f64)>,
}

impl NormReport {
    pub fn lp(&self, p: f64) -> Option<f64> {
        self.lp.iter().find(|(q, _)| *q == p).map(|&(_, v)| v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn gaussian(grid: &Arc<Grid>) -> RadialField {
        RadialField::from_profile(grid, |r| c((-r * r / 2.0).exp()), 0.0).unwrap()
    }

    #[test]
    fn grid_arithmetic() {
        let g = Grid::new(20.0, 2048).unwrap();
        assert_eq!(g.dr(), 20.0 / 2049.0);
        assert!((g.k()[0] - PI / 20.0).abs() < 1e-15);
        assert!(g.r()[2047] < 20.0);
        assert!(g.r().windows(2).all(|p| p[0] < p[1]));

        let g = Grid::new(40.0, 4096).unwrap();
        assert!((g.k()[4095] - 4096.0 * PI / 40.0).abs() < 1e-12);
        assert!((g.k()[4095] - 321.7).abs() < 0.05);
    }

    #[test]
    fn grid_rejects_bad_config() {
        assert!(matches!(Grid::new(0.0, 64), Err(Error::Config(_))));
        assert!(matches!(Grid::new(-1.0, 64), Err(Error::Config(_))));
        assert!(matches!(Grid::new(10.0, 7), Err(Error::Config(_))));
    }

    #[test]
    fn profile_sampling() {
        let g = Grid::new(20.0, 256).unwrap();
        let f = gaussian(&g);
        for (w, r) in f.w().iter().zip(g.r()) {
            assert_eq!(*w, c(r * (-r * r / 2.0).exp()));
        }
        let z = RadialField::from_profile(&g, |_| c(0.0), 1.5).unwrap();
        assert!(z.w().iter().all(|w| *w == c(0.0)));
        assert_eq!(z.t(), 1.5);

        let err =
            RadialField::from_profile(&g, |r| if r > 10.0 { c(f64::NAN) } else { c(1.0) }, 0.0)
                .unwrap_err();
        match err {
            Error::NonFiniteSample { radius } => assert!(radius > 10.0 && radius < 10.1),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn inverse_r_profile_mass_is_box_quadrature() {
        let g = Grid::new(20.0, 1024).unwrap();
        let f = RadialField::from_profile(&g, |r| c(1.0 / r), 0.0).unwrap();
        for w in f.w() {
            assert!((w.re - 1.0).abs() < 1e-14);
        }
        // trapezoid of the constant 1 with zero Dirichlet ends
        let oracle = 4.0 * PI * g.dr() * 1024.0;
        assert!((f.mass() - oracle).abs() < 1e-12 * oracle);
        assert!((f.mass() - 4.0 * PI * 20.0).abs() < 4.0 * PI * 20.0 / 1000.0);
    }

    #[test]
    fn single_mode_is_an_eigenvector() {
        let g = Grid::new(20.0, 512).unwrap();
        let f = RadialField::from_profile(&g, |r| c((PI * r / 20.0).sin() / r), 0.0).unwrap();
        let coeffs = f.sine_coefficients();
        assert!(coeffs[0].norm() > 1.0);
        assert!(coeffs[1..].iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn transform_shape_and_zero() {
        let g = Grid::new(5.0, 16).unwrap();
        assert!(matches!(
            g.sine_forward(&[c(0.0); 15]),
            Err(Error::Shape { .. })
        ));
        assert!(matches!(
            g.sine_inverse(&[c(0.0); 17]),
            Err(Error::Shape { .. })
        ));
        let z = g.sine_forward(&[c(0.0); 16]).unwrap();
        assert!(z.iter().all(|v| *v == c(0.0)));
    }

    #[test]
    fn gaussian_norms_match_closed_forms() {
        let g = Grid::new(20.0, 2048).unwrap();
        let rep = gaussian(&g).norms(&[6.0]).unwrap();
        let p32 = PI.powf(1.5);
        assert!((rep.mass - p32).abs() < 1e-12 * p32);
        assert!((rep.grad_sq - 1.5 * p32).abs() < 1e-10 * p32);
        assert!((rep.weight_sq - 1.5 * p32).abs() < 1e-10 * p32);
        assert_eq!(rep.sigma_sq, rep.grad_sq + rep.weight_sq);
        let l6 = (PI / 3.0).powf(1.5);
        assert!((rep.lp(6.0).unwrap().powi(6) - l6).abs() < 1e-10 * l6);
    }

    #[test]
    fn sigma_identity_for_ground_state() {
        let g = Grid::new(20.0, 1024).unwrap();
        let rep = gaussian(&g).norms(&[]).unwrap();
        assert!((0.5 * rep.sigma_sq / rep.mass - 1.5).abs() < 1e-8);
    }

    #[test]
    fn zero_field_norms() {
        let g = Grid::new(10.0, 64).unwrap();
        let rep = RadialField::zeros(&g, 0.0)
            .norms(&[2.0, 6.0, 10.0])
            .unwrap();
        assert_eq!(rep.mass, 0.0);
        assert_eq!(rep.grad_sq, 0.0);
        assert_eq!(rep.weight_sq, 0.0);
        assert!(rep.lp.iter().all(|&(_, v)| v == 0.0));
    }

    #[test]
    fn exponent_below_two_is_rejected() {
        let g = Grid::new(10.0, 64).unwrap();
        let f = gaussian(&g);
        assert!(matches!(
            f.norms(&[1.5]),
            Err(Error::UnsupportedExponent(_))
        ));
        assert!(matches!(
            f.lp_pow(f64::INFINITY),
            Err(Error::UnsupportedExponent(_))
        ));
    }

    #[test]
    fn l6_quadrature_converges() {
        // Second order or better in dr; the even integrand usually gives far more.
        let exact = (PI / 3.0).powf(1.5);
        let err = |n| {
            let g = Grid::new(8.0, n).unwrap();
            (gaussian(&g).lp_pow(6.0).unwrap() - exact).abs()
        };
        let (e1, e2) = (err(15), err(31));
        assert!(e2 <= e1 / 4.0 || e2 < 1e-13, "{e1} {e2}");
    }

    #[test]
    fn radial_derivative_of_gaussian() {
        let g = Grid::new(20.0, 2048).unwrap();
        let d = gaussian(&g).radial_derivative();
        let worst = d
            .iter()
            .zip(g.r())
            .map(|(d, r)| (d - c(-r * (-r * r / 2.0).exp())).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn radial_derivative_of_single_mode() {
        let big_r = 10.0;
        let g = Grid::new(big_r, 256).unwrap();
        let kk = PI / big_r;
        let f = RadialField::from_profile(&g, |r| c((kk * r).sin() / r), 0.0).unwrap();
        let d = f.radial_derivative();
        for (d, r) in d.iter().zip(g.r()) {
            let exact = (kk * r * (kk * r).cos() - (kk * r).sin()) / (r * r);
            assert!((d.re - exact).abs() < 1e-9, "r={r}: {} vs {exact}", d.re);
        }
    }

    #[test]
    fn constant_profile_has_flat_interior_derivative() {
        // The wall makes w = r non-smooth at R; only the interior well away from it is flat.
        let g = Grid::new(10.0, 1024).unwrap();
        let f = RadialField::from_profile(&g, |r| c((-(r / 6.0).powi(16)).exp()), 0.0).unwrap();
        let d = f.radial_derivative();
        for (d, r) in d.iter().zip(g.r()).filter(|(_, &r)| r < 2.0) {
            assert!(d.norm() < 1e-6, "r={r}: {d}");
        }
    }

    #[test]
    fn origin_extrapolation_is_third_order() {
        let err = |n| {
            let g = Grid::new(10.0, n).unwrap();
            let f = RadialField::from_profile(&g, |r| c((-r * r).exp() + r * r * r), 0.0).unwrap();
            (f.origin_value().re - 1.0).abs()
        };
        let ratio = err(511) / err(1023);
        assert!((ratio.log2() - 3.0).abs() < 0.1, "{ratio}");
    }

    fn random_field(g: &Arc<Grid>, seed: u64) -> RadialField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = (0..g.points())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        RadialField::from_w(g, w, 0.0).unwrap()
    }

    #[test]
    fn random_round_trip_and_parseval() {
        let g = Grid::new(17.0, 1000).unwrap();
        for seed in 0..4 {
            let f = random_field(&g, seed);
            let back = g.sine_inverse(&g.sine_forward(f.w()).unwrap()).unwrap();
            let num: f64 = back
                .iter()
                .zip(f.w())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum();
            let den: f64 = f.w().iter().map(|a| a.norm_sqr()).sum();
            assert!((num / den).sqrt() < 1e-12);
            assert!((f.mass() - f.spectral_mass()).abs() <= 1e-10 * f.mass());
        }
    }

    #[test]
    fn truncating_modes_never_increases_gradient() {
        let g = Grid::new(12.0, 256).unwrap();
        for seed in 10..14 {
            let f = random_field(&g, seed);
            let mut coeffs = f.sine_coefficients();
            for c in coeffs.iter_mut().skip(128) {
                *c = Complex64::new(0.0, 0.0);
            }
            let t = RadialField::from_w(&g, g.sine_inverse(&coeffs).unwrap(), 0.0).unwrap();
            assert!(t.grad_sq() <= f.grad_sq());
        }
    }

    #[test]
    fn boundary_fraction_watchdog_value() {
        let g = Grid::new(20.0, 512).unwrap();
        assert!(gaussian(&g).boundary_fraction() < 1e-30);
        let flat = RadialField::from_profile(&g, |r| c(1.0 / r), 0.0).unwrap();
        assert!((flat.boundary_fraction() - 0.1).abs() < 0.01);
    }
}
