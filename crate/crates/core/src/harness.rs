//! Pointwise derivative bounds, delta-norm probes, and empirical operator
//! constants over reproducible test-function families.
//!
//! "Bounded" is operationalized at desk scale as: the family-max ratio
//! `‖T f‖ / ‖f‖` is finite and drifts by at most ~20% when the family's
//! max degree doubles. True operator norms are suprema over
//! infinite-dimensional balls; these ratios are their measurable shadow.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::quad::{weighted_p_norm, NormSpec, PolarGrid};
use crate::series::{
    boundary_distance, local_sup, shifted_point, HarmonicFunction, PowerSeries, ShiftKind,
};
use crate::weights::bb_constant;
use crate::{Error, Result};

/// Ring sample count used when the local sup operator appears inside a
/// whole-grid norm (keeps the composite affordable).
const MC_SUP_SAMPLES: usize = 8;

/// Configuration for the pointwise derivative bound: a disc of radius
/// `sigma` about `a` inside the unit disc, a probe offset `h` with
/// `|h| = eta * sigma`, and an evaluation point `z` with `|z - a| < |h|`.
#[derive(Debug, Clone, Copy)]
pub struct DerivBoundConfig {
    pub a: Complex64,
    pub sigma: f64,
    pub eta: f64,
    pub z: Complex64,
    pub h: Complex64,
}

impl DerivBoundConfig {
    pub fn new(a: Complex64, sigma: f64, eta: f64, z: Complex64, h: Complex64) -> Result<Self> {
        if !(sigma > 0.0 && a.norm() + sigma < 1.0) {
            return Err(Error::Domain("disc of radius sigma about a must stay inside".into()));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::Domain("eta must lie in (0, 1)".into()));
        }
        if (h.norm() - eta * sigma).abs() > 1e-12 * sigma {
            return Err(Error::Domain("|h| must equal eta * sigma".into()));
        }
        if (z - a).norm() >= h.norm() {
            return Err(Error::Domain("need |z - a| < |h|".into()));
        }
        Ok(DerivBoundConfig { a, sigma, eta, z, h })
    }

    /// Coefficient `10η / (2(1-η²))` multiplying `σM` on the right side.
    pub fn tail_coefficient(&self) -> f64 {
        10.0 * self.eta / (2.0 * (1.0 - self.eta * self.eta))
    }
}

/// Margin `RHS - LHS` of the pointwise bound
/// `|f'(z)| σ ≤ (1/η)(|u(a+h)| + |u(a+ih)| + 2|u(a)|) + 10η/(2(1-η²)) σ M`,
/// with `M` the sampled max of `|f'|` on the circle `|w - a| = σ`.
///
/// `M` is sampled from below and enters the right side positively, so the
/// margin can undershoot by at most [`deriv_bound_sampling_deficiency`].
pub fn deriv_bound_margin(f: &PowerSeries, cfg: &DerivBoundConfig, sup_samples: usize) -> f64 {
    assert!(sup_samples >= 1);
    let fp = f.derivative();
    let u = |w: Complex64| f.eval(w).re;
    let lhs = fp.eval(cfg.z).norm() * cfg.sigma;
    let m = (0..sup_samples)
        .map(|j| {
            let theta = std::f64::consts::TAU * j as f64 / sup_samples as f64;
            fp.eval(cfg.a + Complex64::from_polar(cfg.sigma, theta)).norm()
        })
        .fold(0.0, f64::max);
    let i_h = Complex64::new(0.0, 1.0) * cfg.h;
    let rhs = (u(cfg.a + cfg.h).abs() + u(cfg.a + i_h).abs() + 2.0 * u(cfg.a).abs()) / cfg.eta
        + cfg.tail_coefficient() * cfg.sigma * m;
    rhs - lhs
}

/// Modulus-of-continuity bound on how much circle sampling can shrink the
/// right side: `|f'|` moves at most `Σ n(n-1)|c_n|` per unit arc length.
pub fn deriv_bound_sampling_deficiency(
    f: &PowerSeries,
    cfg: &DerivBoundConfig,
    sup_samples: usize,
) -> f64 {
    let lipschitz = f.second_derivative_coeff_bound();
    let half_arc = std::f64::consts::PI * cfg.sigma / sup_samples as f64;
    cfg.tail_coefficient() * cfg.sigma * lipschitz * half_arc
}

/// Reproducible test-function families.
#[derive(Debug, Clone)]
pub enum TestFamily {
    /// Random polynomials: even-indexed members carry coefficient variance
    /// `4^{-n}` (behave like functions analytic past the boundary), odd
    /// members variance 1 (boundary-concentrated mass). Coefficient streams
    /// depend only on `(seed, member)`, so raising `max_degree` extends
    /// members instead of redrawing them.
    RandomPoly { max_degree: usize, count: usize, seed: u64 },
    /// Taylor truncation of the peaked kernel `(1 - z/ρ)^{-s}` with the pole
    /// at distance `ρ > 1`.
    PeakTruncated { pole_modulus: f64, power: f64, truncation: usize },
}

impl TestFamily {
    pub fn members(&self) -> Vec<PowerSeries> {
        match *self {
            TestFamily::RandomPoly { max_degree, count, seed } => (0..count)
                .map(|i| {
                    let member_seed = seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                    let mut rng = ChaCha8Rng::seed_from_u64(member_seed);
                    let hard = i % 2 == 1;
                    let coeffs = (0..=max_degree)
                        .map(|n| {
                            let x: f64 = StandardNormal.sample(&mut rng);
                            let y: f64 = StandardNormal.sample(&mut rng);
                            let scale = if hard { 1.0 } else { 0.5f64.powi(n as i32) };
                            Complex64::new(x, y) * (scale * std::f64::consts::FRAC_1_SQRT_2)
                        })
                        .collect();
                    PowerSeries::new(coeffs)
                })
                .collect(),
            TestFamily::PeakTruncated { pole_modulus, power, truncation } => {
                assert!(pole_modulus > 1.0, "pole must lie outside the closed disc");
                let mut coeffs = Vec::with_capacity(truncation + 1);
                let mut c = 1.0f64;
                for n in 0..=truncation {
                    coeffs.push(Complex64::new(c, 0.0));
                    c *= (n as f64 + power) / (n as f64 + 1.0) / pole_modulus;
                }
                vec![PowerSeries::new(coeffs)]
            }
        }
    }

    /// Members with the constant term removed (for `f(0) = 0` contexts).
    pub fn members_recentered(&self) -> Vec<PowerSeries> {
        self.members().iter().map(PowerSeries::recentered).collect()
    }

    /// The same family at a different max degree (coefficient streams are
    /// shared, so members extend rather than redraw).
    pub fn with_degree(&self, degree: usize) -> TestFamily {
        match *self {
            TestFamily::RandomPoly { count, seed, .. } => {
                TestFamily::RandomPoly { max_degree: degree, count, seed }
            }
            TestFamily::PeakTruncated { pole_modulus, power, .. } => {
                TestFamily::PeakTruncated { pole_modulus, power, truncation: degree }
            }
        }
    }
}

/// Measured delta-norm characteristics of a p-(quasi)norm.
#[derive(Debug, Clone, Copy)]
pub struct DeltaNormProbe {
    pub p: f64,
    /// Worst `‖f+g‖ / (‖f‖ + ‖g‖)` over family pairs.
    pub triangle_constant: f64,
    /// Min and max log-log scaling slopes of `‖αf‖` vs `α` (both 1 for the
    /// homogeneous p-norm).
    pub scale_exp_low: f64,
    pub scale_exp_high: f64,
}

/// Measures the triangle constant over all pairs and the scaling exponents
/// by least-squares log-log fit over a geometric α sweep.
pub fn delta_norm_probe(
    p: f64,
    members: &[PowerSeries],
    grid: &PolarGrid,
) -> Result<DeltaNormProbe> {
    let spec = NormSpec::unweighted(p);
    let norms: Vec<f64> = members
        .iter()
        .map(|f| weighted_p_norm(|z| f.eval(z).norm(), &spec, grid))
        .collect::<Result<_>>()?;

    let mut triangle: f64 = 0.0;
    for i in 0..members.len() {
        for j in (i + 1)..members.len() {
            if norms[i] + norms[j] == 0.0 {
                continue;
            }
            let sum_norm = weighted_p_norm(
                |z| (members[i].eval(z) + members[j].eval(z)).norm(),
                &spec,
                grid,
            )?;
            triangle = triangle.max(sum_norm / (norms[i] + norms[j]));
        }
    }

    let alphas: Vec<f64> = (-3..=3).map(|k| 2.0f64.powi(k)).collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (f, &base) in members.iter().zip(&norms).take(8) {
        if base == 0.0 {
            continue;
        }
        // Least-squares slope of log ‖αf‖ against log α.
        let points: Vec<(f64, f64)> = alphas
            .iter()
            .map(|&alpha| {
                let scaled = weighted_p_norm(|z| alpha * f.eval(z).norm(), &spec, grid).unwrap();
                (alpha.ln(), scaled.ln())
            })
            .collect();
        let n = points.len() as f64;
        let (sx, sy): (f64, f64) = points.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
        let sxx: f64 = points.iter().map(|&(x, _)| x * x).sum();
        let sxy: f64 = points.iter().map(|&(x, y)| x * y).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        lo = lo.min(slope);
        hi = hi.max(slope);
    }
    Ok(DeltaNormProbe { p, triangle_constant: triangle, scale_exp_low: lo, scale_exp_high: hi })
}

/// The operators whose empirical constants the harness estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    /// `u ↦ δ_b f'`.
    UToDeriv,
    /// `δ_b f' ↦ f - f(0)`.
    DerivToF,
    /// `u ↦ v`, the harmonic conjugate.
    UToV,
    /// `u ↦ u(z + e^{i arg z} η δ_b)`.
    ShiftRadial,
    /// `u ↦ u(z + i e^{i arg z} η δ_b)`.
    ShiftRotated,
    /// `δ_b g ↦ M_c(δ_b g)`.
    McComposite,
}

impl OpKind {
    pub const ALL: [OpKind; 6] = [
        OpKind::UToDeriv,
        OpKind::DerivToF,
        OpKind::UToV,
        OpKind::ShiftRadial,
        OpKind::ShiftRotated,
        OpKind::McComposite,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            OpKind::UToDeriv => "u-to-deriv",
            OpKind::DerivToF => "deriv-to-f",
            OpKind::UToV => "u-to-v",
            OpKind::ShiftRadial => "shift-radial",
            OpKind::ShiftRotated => "shift-rotated",
            OpKind::McComposite => "mc-composite",
        }
    }
}

/// Family sweep result for one operator.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub op: OpKind,
    /// Max of `‖out‖/‖in‖` over usable members.
    pub ratio_max: f64,
    /// Per-member ratios; `None` marks a skipped (zero-input-norm) member.
    pub ratios: Vec<Option<f64>>,
    pub skipped: usize,
}

/// Estimates the empirical constant of `op` as the family-max output/input
/// norm ratio in `L^p(w dA)`. Members whose input norm vanishes are skipped
/// and reported.
pub fn estimate_operator_constant(
    op: OpKind,
    members: &[PowerSeries],
    spec: &NormSpec,
    grid: &PolarGrid,
    eta: f64,
) -> Result<EstimateReport> {
    let mut ratios = Vec::with_capacity(members.len());
    let mut ratio_max: f64 = 0.0;
    let mut skipped = 0;
    for f in members {
        let u = HarmonicFunction::from_completion(f.clone());
        let fp = f.derivative();
        let f0 = f.eval(Complex64::new(0.0, 0.0));
        let (input_norm, output_norm) = match op {
            OpKind::UToDeriv => (
                weighted_p_norm(|z| u.eval(z), spec, grid)?,
                weighted_p_norm(|z| boundary_distance(z) * fp.eval(z).norm(), spec, grid)?,
            ),
            OpKind::DerivToF => (
                weighted_p_norm(|z| boundary_distance(z) * fp.eval(z).norm(), spec, grid)?,
                weighted_p_norm(|z| (f.eval(z) - f0).norm(), spec, grid)?,
            ),
            OpKind::UToV => (
                weighted_p_norm(|z| u.eval(z), spec, grid)?,
                weighted_p_norm(|z| u.conjugate_value(z), spec, grid)?,
            ),
            OpKind::ShiftRadial | OpKind::ShiftRotated => {
                let kind =
                    if op == OpKind::ShiftRadial { ShiftKind::Radial } else { ShiftKind::Rotated };
                (
                    weighted_p_norm(|z| u.eval(z), spec, grid)?,
                    weighted_p_norm(|z| u.eval(shifted_point(kind, eta, z)), spec, grid)?,
                )
            }
            OpKind::McComposite => {
                let weighted = |z: Complex64| boundary_distance(z) * f.eval(z).norm();
                (
                    weighted_p_norm(weighted, spec, grid)?,
                    weighted_p_norm(
                        |z| {
                            local_sup(|w| f.eval(w) * boundary_distance(w), z, MC_SUP_SAMPLES)
                                .expect("grid nodes are interior")
                        },
                        spec,
                        grid,
                    )?,
                )
            }
        };
        if input_norm <= 1e-14 {
            ratios.push(None);
            skipped += 1;
            continue;
        }
        let ratio = output_norm / input_norm;
        ratio_max = ratio_max.max(ratio);
        ratios.push(Some(ratio));
    }
    Ok(EstimateReport { op, ratio_max, ratios, skipped })
}

/// Family-max ratios of `op` at each requested max degree (same coefficient
/// streams throughout, so consecutive entries measure degree drift).
pub fn degree_stability(
    op: OpKind,
    family: &TestFamily,
    degrees: &[usize],
    spec: &NormSpec,
    grid: &PolarGrid,
    eta: f64,
) -> Result<Vec<f64>> {
    degrees
        .iter()
        .map(|&degree| {
            let members = family.with_degree(degree).members();
            Ok(estimate_operator_constant(op, &members, spec, grid, eta)?.ratio_max)
        })
        .collect()
}

/// Independent coefficient-moment value of `‖v‖ = ‖u - u(0)‖` in `L²(dA)`:
/// radial moments give `Σ_{n≥1} |c_n|² π / (2(n+1))` for both squares.
pub fn conjugation_moment_norm(f: &PowerSeries) -> f64 {
    f.coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, c)| c.norm_sqr() * std::f64::consts::PI / (2.0 * (n as f64 + 1.0)))
        .sum::<f64>()
        .sqrt()
}

/// The two intermediate constants, their product, and the directly measured
/// conjugation constant.
#[derive(Debug, Clone, Copy)]
pub struct PipelineReport {
    pub bb_constant: f64,
    pub c_u_to_deriv: f64,
    pub c_deriv_to_f: f64,
    pub c_direct: f64,
}

impl PipelineReport {
    pub fn product(&self) -> f64 {
        self.c_u_to_deriv * self.c_deriv_to_f
    }

    /// `|v| ≤ |f - f(0)|` pointwise, so the direct constant can never beat
    /// the two-step product (up to quadrature rounding).
    pub fn consistent(&self, tolerance: f64) -> bool {
        self.c_direct <= self.product() * (1.0 + tolerance)
    }
}

/// Runs the two-step route (`u ↦ δ_b f'`, `δ_b f' ↦ f - f(0)`) next to the
/// direct conjugation constant. Aborts with the divergence flag when the
/// weight's sampled Bekollé–Bonami constant blows up.
pub fn theorem_pipeline_report(
    members: &[PowerSeries],
    spec: &NormSpec,
    grid: &PolarGrid,
    eta: f64,
    q: f64,
    bb_depth: u32,
    bb_resolution: usize,
) -> Result<PipelineReport> {
    let bb = bb_constant(&spec.weight, q, bb_depth, bb_resolution)?;
    let c1 = estimate_operator_constant(OpKind::UToDeriv, members, spec, grid, eta)?;
    let c2 = estimate_operator_constant(OpKind::DerivToF, members, spec, grid, eta)?;
    let direct = estimate_operator_constant(OpKind::UToV, members, spec, grid, eta)?;
    Ok(PipelineReport {
        bb_constant: bb,
        c_u_to_deriv: c1.ratio_max,
        c_deriv_to_f: c2.ratio_max,
        c_direct: direct.ratio_max,
    })
}
