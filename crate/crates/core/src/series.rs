//! Polynomial models of analytic and harmonic functions on the unit disc.
//!
//! Analytic functions are stored as finite power series (truncations of
//! other families are made explicit polynomials), so evaluation and
//! differentiation are exact. A harmonic `u` is carried through its analytic
//! completion `f` with `u = Re f`; the conjugate `v = Im f` is normalized by
//! `v(0) = 0`, i.e. the constant coefficient of the completion is real.

use num_complex::Complex64;

use crate::quad::gauss_legendre_01;
use crate::{Error, Result};

/// Radius factors (relative to `delta_b(z)/2`) of the deterministic rings
/// used by [`local_sup`]. Fixed so results are reproducible.
pub const LOCAL_SUP_RING_FACTORS: [f64; 5] = [0.25, 0.5, 0.75, 0.9, 0.99];

/// A finite complex power series `f(z) = Σ coeffs[n] z^n`.
///
/// The zero function is the single coefficient `0`; `coeffs` is never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    coeffs: Vec<Complex64>,
}

impl PowerSeries {
    /// Builds a series from coefficients (index n = coefficient of `z^n`).
    /// An empty list is normalized to the zero function.
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        if coeffs.is_empty() {
            return Self { coeffs: vec![Complex64::new(0.0, 0.0)] };
        }
        Self { coeffs }
    }

    /// Convenience constructor from real coefficients.
    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self::new(vec![])
    }

    /// The monomial `z`.
    pub fn identity() -> Self {
        Self::from_real(&[0.0, 1.0])
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Horner evaluation of the finite sum.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Term-by-term derivative; the degree drops by one and constants map to
    /// the zero series.
    pub fn derivative(&self) -> PowerSeries {
        if self.coeffs.len() == 1 {
            return PowerSeries::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, &c)| c * n as f64)
            .collect();
        PowerSeries::new(coeffs)
    }

    /// The series minus its constant term.
    pub fn recentered(&self) -> PowerSeries {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] = Complex64::new(0.0, 0.0);
        PowerSeries::new(coeffs)
    }

    /// Coefficient upper bound `Σ n(n-1)|c_n|` for `|f''|` on the closed unit
    /// disc. Used to turn circle-sampling spacing into a sup deficiency bound.
    pub fn second_derivative_coeff_bound(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(2)
            .map(|(n, c)| (n * (n - 1)) as f64 * c.norm())
            .sum()
    }
}

/// Distance from `z` to the unit circle, `1 - |z|`.
pub fn boundary_distance(z: Complex64) -> f64 {
    1.0 - z.norm()
}

/// Which shift operator of the conjugation theorems to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftKind {
    /// `z ↦ z + e^{i arg z} η δ_b(z)`: push outward along the ray through z.
    Radial,
    /// `z ↦ z + i e^{i arg z} η δ_b(z)`: push at right angles to the ray.
    Rotated,
}

/// A harmonic function `u = Re f` given through its analytic completion.
///
/// The constant coefficient of the completion is kept real, which pins the
/// conjugate's additive constant to `v(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicFunction {
    completion: PowerSeries,
}

impl HarmonicFunction {
    /// Wraps an analytic completion, dropping any imaginary part of the
    /// constant coefficient (which changes `v` by a constant, not `u`).
    pub fn from_completion(f: PowerSeries) -> Self {
        let mut coeffs = f.coeffs.clone();
        coeffs[0] = Complex64::new(coeffs[0].re, 0.0);
        Self { completion: PowerSeries::new(coeffs) }
    }

    pub fn completion(&self) -> &PowerSeries {
        &self.completion
    }

    /// `u(z) = Re f(z)`.
    pub fn eval(&self, z: Complex64) -> f64 {
        self.completion.eval(z).re
    }

    /// `v(z) = Im f(z)`, the conjugate values with `v(0) = 0`.
    pub fn conjugate_value(&self, z: Complex64) -> f64 {
        self.completion.eval(z).im
    }

    /// The harmonic conjugate as a harmonic function in its own right.
    ///
    /// If `u = Re f` with `f(0)` real, the completion of `v = Im f` is
    /// `-i (f - f(0))`, again with real (zero) constant term.
    pub fn conjugate(&self) -> HarmonicFunction {
        let shifted = self.completion.recentered();
        let coeffs = shifted
            .coeffs
            .iter()
            .map(|&c| Complex64::new(0.0, -1.0) * c)
            .collect();
        HarmonicFunction::from_completion(PowerSeries::new(coeffs))
    }

    /// `u` shifted by one of the two theorem operators, evaluated at `z`.
    ///
    /// The shifted point stays strictly inside the disc for `|z| < 1` and
    /// `0 < η < 1`; `arg 0` is taken to be `0`.
    pub fn shift_eval(&self, kind: ShiftKind, eta: f64, z: Complex64) -> f64 {
        self.eval(shifted_point(kind, eta, z))
    }
}

/// The shifted evaluation point of [`HarmonicFunction::shift_eval`].
pub fn shifted_point(kind: ShiftKind, eta: f64, z: Complex64) -> Complex64 {
    debug_assert!(z.norm() < 1.0 && eta > 0.0 && eta < 1.0);
    let arg = if z.norm() == 0.0 { 0.0 } else { z.arg() };
    let dir = Complex64::from_polar(1.0, arg);
    let step = eta * boundary_distance(z);
    match kind {
        ShiftKind::Radial => z + dir * step,
        ShiftKind::Rotated => z + Complex64::new(0.0, 1.0) * dir * step,
    }
}

/// The deterministic sample set of [`local_sup`]: the center plus five
/// concentric rings at the fixed [`LOCAL_SUP_RING_FACTORS`], each carrying
/// `samples` angles rounded up to a power of two (so sample sets are nested
/// as `samples` grows and the sup is monotone in it).
pub fn local_sup_points(z: Complex64, samples: usize) -> Result<Vec<Complex64>> {
    if z.norm() >= 1.0 {
        return Err(Error::Domain(format!(
            "local sup needs |z| < 1, got |z| = {}",
            z.norm()
        )));
    }
    let angles = samples.max(1).next_power_of_two();
    let radius = boundary_distance(z) / 2.0;
    let mut points = Vec::with_capacity(1 + LOCAL_SUP_RING_FACTORS.len() * angles);
    points.push(z);
    for &factor in &LOCAL_SUP_RING_FACTORS {
        let r = factor * radius;
        for j in 0..angles {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / angles as f64;
            points.push(z + Complex64::from_polar(r, theta));
        }
    }
    Ok(points)
}

/// Sampled local sup `M_c(g)(z) = sup { |g(w)| : |w - z| < δ_b(z)/2 }`.
///
/// Always at least `|g(z)|` and monotone nondecreasing in `samples`.
pub fn local_sup<F>(g: F, z: Complex64, samples: usize) -> Result<f64>
where
    F: Fn(Complex64) -> Complex64,
{
    let points = local_sup_points(z, samples)?;
    Ok(points.iter().map(|&w| g(w).norm()).fold(0.0, f64::max))
}

/// Real-valued variant of [`local_sup`] for already-absolute integrands.
pub fn local_sup_real<F>(g: F, z: Complex64, samples: usize) -> Result<f64>
where
    F: Fn(Complex64) -> f64,
{
    let points = local_sup_points(z, samples)?;
    Ok(points.iter().map(|&w| g(w).abs()).fold(0.0, f64::max))
}

/// Residual of the Taylor identity
/// `u(w) - u(z) = Re[f'(z)(w-z)] + ∫₀¹ Re[f''(z+s(w-z))(w-z)²](1-s) ds`,
/// with the integral evaluated by a `quad_points`-node Gauss–Legendre rule.
///
/// Exact (to rounding) for `deg f ≤ 2` once the rule integrates linear
/// functions, and converging to zero at the rule's order otherwise.
pub fn taylor_remainder_residual(
    f: &PowerSeries,
    z: Complex64,
    w: Complex64,
    quad_points: usize,
) -> Result<f64> {
    if z.norm() >= 1.0 || w.norm() >= 1.0 {
        return Err(Error::Domain(
            "taylor identity needs the segment [z, w] inside the open disc".into(),
        ));
    }
    assert!(quad_points >= 2, "need at least 2 quadrature points");
    let f1 = f.derivative();
    let f2 = f1.derivative();
    let step = w - z;
    let lhs = f.eval(w).re - f.eval(z).re;
    let first = (f1.eval(z) * step).re;
    let integral: f64 = gauss_legendre_01(quad_points)
        .iter()
        .map(|&(s, wt)| wt * (f2.eval(z + step * s) * step * step).re * (1.0 - s))
        .sum();
    Ok((lhs - first - integral).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_poly(rng: &mut ChaCha8Rng, degree: usize) -> PowerSeries {
        let coeffs = (0..=degree)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        PowerSeries::new(coeffs)
    }

    #[test]
    fn eval_identity_constant_square() {
        let id = PowerSeries::identity();
        assert_eq!(id.eval(c(0.3, 0.4)), c(0.3, 0.4));

        let five = PowerSeries::from_real(&[5.0]);
        assert_eq!(five.eval(c(0.9, 0.0)), c(5.0, 0.0));

        let sq = PowerSeries::from_real(&[0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(sq.eval(c(0.0, 0.5)).re, -0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(sq.eval(c(0.0, 0.5)).im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn derivative_examples() {
        let sq = PowerSeries::from_real(&[0.0, 0.0, 1.0]);
        assert_eq!(sq.derivative(), PowerSeries::from_real(&[0.0, 2.0]));

        let constant = PowerSeries::from_real(&[7.0]);
        assert_eq!(constant.derivative(), PowerSeries::from_real(&[0.0]));

        let ones = PowerSeries::from_real(&[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(ones.derivative(), PowerSeries::from_real(&[1.0, 2.0, 3.0]));
    }

    #[test]
    fn conjugate_of_x_is_y() {
        let u = HarmonicFunction::from_completion(PowerSeries::identity());
        let v = u.conjugate();
        for &(x, y) in &[(0.3, 0.4), (-0.2, 0.1), (0.0, 0.0)] {
            assert_abs_diff_eq!(v.eval(c(x, y)), y, epsilon = 1e-15);
        }
    }

    #[test]
    fn conjugate_of_constant_is_zero() {
        let u = HarmonicFunction::from_completion(PowerSeries::from_real(&[1.0]));
        let v = u.conjugate();
        assert_eq!(v.eval(c(0.5, -0.3)), 0.0);
    }

    #[test]
    fn conjugate_of_re_z_squared() {
        // u = x² - y², v should be 2xy.
        let u = HarmonicFunction::from_completion(PowerSeries::from_real(&[0.0, 0.0, 1.0]));
        let v = u.conjugate();
        for &(x, y) in &[(0.3, 0.4), (-0.5, 0.2), (0.1, -0.7)] {
            assert_abs_diff_eq!(u.eval(c(x, y)), x * x - y * y, epsilon = 1e-15);
            assert_abs_diff_eq!(v.eval(c(x, y)), 2.0 * x * y, epsilon = 1e-15);
        }
    }

    #[test]
    fn conjugation_normalizes_v_at_zero() {
        let f = PowerSeries::new(vec![c(2.0, 3.0), c(1.0, -1.0)]);
        let u = HarmonicFunction::from_completion(f);
        assert_eq!(u.conjugate_value(c(0.0, 0.0)), 0.0);
        assert_eq!(u.conjugate().eval(c(0.0, 0.0)), 0.0);
    }

    #[test]
    fn mean_value_property_by_circle_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = HarmonicFunction::from_completion(random_poly(&mut rng, 7));
        let center = c(0.2, -0.3);
        for &radius in &[0.1, 0.4] {
            let n = 256;
            let avg: f64 = (0..n)
                .map(|j| {
                    let theta = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                    u.eval(center + Complex64::from_polar(radius, theta))
                })
                .sum::<f64>()
                / n as f64;
            assert_abs_diff_eq!(avg, u.eval(center), epsilon = 1e-12);
        }
    }

    #[test]
    fn boundary_distance_examples() {
        assert_eq!(boundary_distance(c(0.0, 0.0)), 1.0);
        assert_eq!(boundary_distance(c(0.5, 0.0)), 0.5);
        assert_abs_diff_eq!(
            boundary_distance(c(0.6 * 0.9, 0.8 * 0.9)),
            0.1,
            epsilon = 1e-15
        );
    }

    #[test]
    fn local_sup_of_constant() {
        let g = |_w: Complex64| c(-2.5, 0.0);
        let v = local_sup(g, c(0.3, 0.1), 16).unwrap();
        assert_abs_diff_eq!(v, 2.5, epsilon = 1e-15);
    }

    #[test]
    fn local_sup_identity_at_origin() {
        // Disc |w| < 1/2; outer ring sits at 0.99 * 0.5 = 0.495.
        let g = |w: Complex64| w;
        let coarse = local_sup(g, c(0.0, 0.0), 4).unwrap();
        let fine = local_sup(g, c(0.0, 0.0), 64).unwrap();
        assert!(coarse <= fine + 1e-15);
        assert!(fine >= 0.45);
        assert!(fine <= 0.5);
        assert_abs_diff_eq!(fine, 0.495, epsilon = 1e-12);
    }

    #[test]
    fn local_sup_matches_brute_force_over_sample_set() {
        let g = |w: Complex64| w * w;
        let z = c(0.5, 0.0);
        let samples = 32;
        let oracle = local_sup_points(z, samples)
            .unwrap()
            .iter()
            .map(|w| (w * w).norm())
            .fold(0.0, f64::max);
        assert_eq!(local_sup(g, z, samples).unwrap(), oracle);
    }

    #[test]
    fn local_sup_rejects_boundary_points() {
        assert!(local_sup(|w| w, c(1.0, 0.0), 8).is_err());
    }

    #[test]
    fn shift_eval_examples() {
        let constant = HarmonicFunction::from_completion(PowerSeries::from_real(&[3.0]));
        assert_eq!(constant.shift_eval(ShiftKind::Radial, 0.3, c(0.1, 0.2)), 3.0);
        assert_eq!(constant.shift_eval(ShiftKind::Rotated, 0.7, c(-0.4, 0.0)), 3.0);

        let u = HarmonicFunction::from_completion(PowerSeries::identity());
        assert_abs_diff_eq!(
            u.shift_eval(ShiftKind::Radial, 0.5, c(0.5, 0.0)),
            0.75,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            u.shift_eval(ShiftKind::Rotated, 0.5, c(0.5, 0.0)),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn taylor_residual_vanishes_for_low_degree() {
        let id = PowerSeries::identity();
        let r = taylor_remainder_residual(&id, c(0.2, -0.4), c(-0.3, 0.5), 2).unwrap();
        assert!(r <= 1e-14, "residual {r}");

        let sq = PowerSeries::from_real(&[0.0, 0.0, 1.0]);
        let r = taylor_remainder_residual(&sq, c(0.0, 0.0), c(0.5, 0.0), 2).unwrap();
        assert!(r <= 1e-14, "residual {r}");
    }

    #[test]
    fn taylor_residual_against_refined_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let f = random_poly(&mut rng, 10);
            let z = c(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6));
            let w = c(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6));
            let coarse = taylor_remainder_residual(&f, z, w, 64).unwrap();
            let fine = taylor_remainder_residual(&f, z, w, 640).unwrap();
            assert!(coarse <= 1e-10, "coarse residual {coarse}");
            assert!(fine <= 1e-12, "refined residual {fine}");
        }
    }

    #[test]
    fn taylor_residual_rejects_exterior_segment() {
        let id = PowerSeries::identity();
        assert!(taylor_remainder_residual(&id, c(0.0, 0.0), c(1.2, 0.0), 8).is_err());
    }

    #[test]
    fn cauchy_riemann_by_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let u = HarmonicFunction::from_completion(random_poly(&mut rng, 8));
            let v = u.conjugate();
            let z = c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
            let h = 1e-5 * boundary_distance(z);
            let ux = (u.eval(z + c(h, 0.0)) - u.eval(z - c(h, 0.0))) / (2.0 * h);
            let uy = (u.eval(z + c(0.0, h)) - u.eval(z - c(0.0, h))) / (2.0 * h);
            let vx = (v.eval(z + c(h, 0.0)) - v.eval(z - c(h, 0.0))) / (2.0 * h);
            let vy = (v.eval(z + c(0.0, h)) - v.eval(z - c(0.0, h))) / (2.0 * h);
            assert_abs_diff_eq!(ux, vy, epsilon = 1e-8);
            assert_abs_diff_eq!(uy, -vx, epsilon = 1e-8);
        }
    }

    #[test]
    fn local_sup_of_weighted_function_is_comparable() {
        // δ_b is between δ_b(z)/2 and 3δ_b(z)/2 on the local disc, so the
        // sampled sups inherit the same two-sided comparison.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let f = random_poly(&mut rng, 6);
            let z = c(rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7));
            if z.norm() >= 0.95 {
                continue;
            }
            let weighted =
                local_sup(|w| f.eval(w) * boundary_distance(w), z, 64).unwrap();
            let plain = local_sup(|w| f.eval(w), z, 64).unwrap();
            let scale = boundary_distance(z) * plain;
            assert!(weighted <= 1.5 * scale + 1e-12);
            assert!(weighted >= 0.5 * scale - 1e-12);
        }
    }

    proptest! {
        #[test]
        fn shifted_points_stay_inside(
            r in 0.0f64..0.999,
            theta in 0.0f64..std::f64::consts::TAU,
            eta in 0.001f64..0.999,
        ) {
            let z = Complex64::from_polar(r, theta);
            prop_assert!(shifted_point(ShiftKind::Radial, eta, z).norm() < 1.0);
            prop_assert!(shifted_point(ShiftKind::Rotated, eta, z).norm() < 1.0);
        }

        #[test]
        fn local_sup_monotone_and_dominates_center(
            s1 in 1usize..64,
            s2 in 1usize..64,
            x in -0.6f64..0.6,
            y in -0.6f64..0.6,
        ) {
            let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
            let g = |w: Complex64| (w + Complex64::new(0.3, 0.0)) * w;
            let z = Complex64::new(x, y);
            let a = local_sup(g, z, lo).unwrap();
            let b = local_sup(g, z, hi).unwrap();
            prop_assert!(a <= b + 1e-15);
            prop_assert!(a >= g(z).norm() - 1e-15);
        }

        #[test]
        fn conjugation_is_involution_up_to_sign(
            re0 in -1.0f64..1.0,
            re1 in -1.0f64..1.0,
            im1 in -1.0f64..1.0,
            re2 in -1.0f64..1.0,
            im2 in -1.0f64..1.0,
        ) {
            let f = PowerSeries::new(vec![
                Complex64::new(re0, 0.0),
                Complex64::new(re1, im1),
                Complex64::new(re2, im2),
            ]);
            let u = HarmonicFunction::from_completion(f);
            let twice = u.conjugate().conjugate();
            for &(x, y) in &[(0.4, 0.1), (-0.2, -0.6), (0.0, 0.5)] {
                let z = Complex64::new(x, y);
                let expected = -(u.eval(z) - u.eval(Complex64::new(0.0, 0.0)));
                prop_assert!((twice.eval(z) - expected).abs() < 1e-12);
            }
        }
    }
}
