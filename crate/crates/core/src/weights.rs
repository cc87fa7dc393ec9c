//! Weight families on the disc, Bekollé–Bonami quotients and constants, the
//! associated maximal function, and the essential-constancy diagnostic.
//!
//! Averages over a boundary disc `B` are taken over `B ∩ 𝔻` with `|B|`
//! replaced by `area(B ∩ 𝔻)` (weights live on the disc only, and
//! Carleson-square style variants of the definition are equivalent).
//! Integration over `B ∩ 𝔻` walks rays from the origin: per angle the disc
//! cuts out a radial chord, integrated by Gauss–Legendre with cubic
//! clustering toward `|z| = 1` whenever the chord is clipped there. A weight
//! is flagged divergent when its integral over some family disc keeps
//! growing (>10×) between consecutive rungs of an 8× resolution ladder.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::carleson::{top_half_bounds, SquareId};
use crate::quad::{gauss_legendre, PolarGrid};
use crate::{pairwise_sum, Error, Result};

/// Growth factor across one resolution ladder rung that marks divergence.
pub const DIVERGENCE_GROWTH_FACTOR: f64 = 10.0;

/// Radial refinement between consecutive ladder rungs.
pub const LADDER_REFINEMENT: usize = 8;

/// A positive weight on the unit disc.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    /// `w ≡ 1` (plain area measure).
    Unit,
    /// `w(z) = (1 - |z|)^α`.
    Power(f64),
    /// Tabulated radial weight: linear interpolation between `(r, value)`
    /// nodes, constant extrapolation beyond the first/last node.
    RadialTable(Vec<(f64, f64)>),
    /// `base(z) · (1 + amplitude · cos(frequency · arg z))`.
    AngularPerturbed {
        base: Box<WeightSpec>,
        amplitude: f64,
        frequency: u32,
    },
}

impl WeightSpec {
    /// Builds a radial table weight, validating positivity and ordering.
    pub fn radial_table(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain("radial table needs at least one node".into()));
        }
        for pair in points.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::Domain("radial table radii must be strictly increasing".into()));
            }
        }
        if points.iter().any(|&(r, v)| r <= 0.0 || r >= 1.0 || v <= 0.0) {
            return Err(Error::Domain(
                "radial table needs radii in (0,1) and positive values".into(),
            ));
        }
        Ok(WeightSpec::RadialTable(points))
    }

    /// Parses the radial-table text format: one `r value` pair per line,
    /// blank lines and `#` comments allowed.
    pub fn radial_table_from_str(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |s: Option<&str>| -> Result<f64> {
                s.and_then(|t| t.parse().ok()).ok_or_else(|| {
                    Error::Domain(format!("radial table line {}: expected `r value`", lineno + 1))
                })
            };
            let r = parse(parts.next())?;
            let v = parse(parts.next())?;
            if parts.next().is_some() {
                return Err(Error::Domain(format!(
                    "radial table line {}: expected exactly two fields",
                    lineno + 1
                )));
            }
            points.push((r, v));
        }
        Self::radial_table(points)
    }

    pub fn angular_perturbed(base: WeightSpec, amplitude: f64, frequency: u32) -> Result<Self> {
        if amplitude.is_nan() || amplitude.abs() >= 1.0 {
            return Err(Error::Domain("perturbation amplitude must satisfy |ε| < 1".into()));
        }
        Ok(WeightSpec::AngularPerturbed { base: Box::new(base), amplitude, frequency })
    }

    pub fn eval(&self, z: Complex64) -> f64 {
        match self {
            WeightSpec::Unit => 1.0,
            WeightSpec::Power(alpha) => (1.0 - z.norm()).powf(*alpha),
            WeightSpec::RadialTable(points) => {
                let r = z.norm();
                match points.iter().position(|&(rn, _)| rn >= r) {
                    Some(0) => points[0].1,
                    Some(i) => {
                        let (r0, v0) = points[i - 1];
                        let (r1, v1) = points[i];
                        v0 + (v1 - v0) * (r - r0) / (r1 - r0)
                    }
                    None => points.last().unwrap().1,
                }
            }
            WeightSpec::AngularPerturbed { base, amplitude, frequency } => {
                base.eval(z) * (1.0 + amplitude * (*frequency as f64 * z.arg()).cos())
            }
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            WeightSpec::Unit => "unit",
            WeightSpec::Power(_) => "power",
            WeightSpec::RadialTable(_) => "radial-table",
            WeightSpec::AngularPerturbed { .. } => "angular-perturbed",
        }
    }

    pub fn param_string(&self) -> String {
        match self {
            WeightSpec::Unit => String::new(),
            WeightSpec::Power(alpha) => format!("{alpha}"),
            WeightSpec::RadialTable(points) => format!("{}nodes", points.len()),
            WeightSpec::AngularPerturbed { amplitude, frequency, .. } => {
                format!("eps={amplitude},k={frequency}")
            }
        }
    }
}

/// A measure `μ = w dA` evaluated through a grid.
#[derive(Debug, Clone, Copy)]
pub struct MeasureSpec<'a> {
    pub weight: &'a WeightSpec,
    pub grid: &'a PolarGrid,
}

impl<'a> MeasureSpec<'a> {
    pub fn new(weight: &'a WeightSpec, grid: &'a PolarGrid) -> Self {
        MeasureSpec { weight, grid }
    }

    /// Total mass `μ(𝔻)`; errors if it is not finite and positive.
    pub fn total_mass(&self) -> Result<f64> {
        let mass = crate::quad::integrate(|z| self.weight.eval(z), self.grid)?;
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Domain(format!("measure has mass {mass}")));
        }
        Ok(mass)
    }

    pub fn distribution<F>(&self, g: F, lambda: f64) -> f64
    where
        F: Fn(Complex64) -> f64 + Sync,
    {
        crate::quad::distribution_function(g, lambda, |z| self.weight.eval(z), self.grid)
    }
}

/// A disc whose closure reaches the unit circle while still meeting the open
/// unit disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryDisc {
    pub center: Complex64,
    pub radius: f64,
}

impl BoundaryDisc {
    pub fn new(center: Complex64, radius: f64) -> Self {
        assert!(radius > 0.0, "radius must be positive");
        assert!(
            center.norm() + radius >= 1.0 - 1e-12,
            "closure must intersect the unit circle"
        );
        assert!(center.norm() - radius < 1.0, "disc must meet the open unit disc");
        BoundaryDisc { center, radius }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (z - self.center).norm() < self.radius
    }
}

/// The deterministic dyadic family: at scale `2^{-n}` (n = 0..=depth),
/// centers `(1 - 2^{-n}) e^{2πi j 2^{-n}}` and radii `2^{-n}` and `2·2^{-n}`.
pub fn boundary_disc_family(depth: u32) -> Vec<BoundaryDisc> {
    let mut family = Vec::new();
    for n in 0..=depth {
        let scale = 0.5f64.powi(n as i32);
        let count = 1u64 << n;
        for j in 0..count {
            let theta = std::f64::consts::TAU * j as f64 * scale;
            let center = Complex64::from_polar(1.0 - scale, theta);
            family.push(BoundaryDisc::new(center, scale));
            family.push(BoundaryDisc::new(center, 2.0 * scale));
        }
    }
    family
}

/// Per-angle radial chord of `B ∩ 𝔻` along the ray at angle `arg c + phi`.
/// Returns `(a, b, clipped)` with the chord `[a, b]` and whether `b` was
/// clipped at the unit circle; `None` when the chord is empty.
fn chord(disc: &BoundaryDisc, phi: f64) -> Option<(f64, f64, bool)> {
    let cm = disc.center.norm();
    let rho = disc.radius;
    let (r_lo, r_hi) = if cm <= rho {
        let disc_sq = rho * rho - cm * cm * phi.sin().powi(2);
        if disc_sq < 0.0 {
            return None;
        }
        (0.0, cm * phi.cos() + disc_sq.sqrt())
    } else {
        let disc_sq = rho * rho - cm * cm * phi.sin().powi(2);
        if disc_sq < 0.0 || phi.cos() <= 0.0 {
            return None;
        }
        let root = disc_sq.sqrt();
        (cm * phi.cos() - root, cm * phi.cos() + root)
    };
    let clipped = r_hi >= 1.0 - 1e-14;
    let a = r_lo.max(0.0);
    let b = if clipped { 1.0 } else { r_hi };
    if b <= a {
        return None;
    }
    Some((a, b, clipped))
}

/// Integrates `f dA` over `B ∩ 𝔻`.
///
/// Angular Gauss–Legendre panels split at the angles where the disc's far
/// edge crosses the unit circle (the integrand has a kink there); radial
/// chords use `n_r`-point Gauss–Legendre, cubically clustered toward the
/// circle when the chord is clipped.
pub fn integrate_over_cap<F>(f: F, disc: &BoundaryDisc, n_r: usize, n_theta: usize) -> f64
where
    F: Fn(Complex64) -> f64 + Sync,
{
    let cm = disc.center.norm();
    let rho = disc.radius;
    let base_arg = if cm == 0.0 { 0.0 } else { disc.center.arg() };
    let phi_max = if cm <= rho {
        std::f64::consts::PI
    } else {
        (rho / cm).asin()
    };

    // Angular panel breakpoints: +-phi_max and the circle crossings.
    let mut breaks = vec![-phi_max, phi_max];
    if cm > 0.0 {
        let cos_star = (1.0 + cm * cm - rho * rho) / (2.0 * cm);
        if cos_star.abs() < 1.0 {
            let phi_star = cos_star.acos();
            if phi_star < phi_max {
                breaks.push(-phi_star);
                breaks.push(phi_star);
            }
        }
    }
    breaks.sort_by(|a, b| a.total_cmp(b));

    let radial_rule = gauss_legendre(n_r);
    let angular_rule = gauss_legendre(n_theta);

    let panel_values: Vec<f64> = breaks
        .windows(2)
        .flat_map(|pair| {
            let (lo, hi) = (pair[0], pair[1]);
            angular_rule.iter().map(move |&(x, w)| {
                let phi = 0.5 * (hi + lo) + 0.5 * (hi - lo) * x;
                (phi, 0.5 * (hi - lo) * w)
            })
        })
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(phi, wtheta)| {
            let Some((a, b, clipped)) = chord(disc, phi) else {
                return 0.0;
            };
            let theta = base_arg + phi;
            let ray: f64 = if clipped {
                // r = 1 - (1-a)(1-t)^3 concentrates nodes at the circle.
                radial_rule
                    .iter()
                    .map(|&(x, w)| {
                        let t = 0.5 * (x + 1.0);
                        let s = 1.0 - t;
                        let r = 1.0 - (1.0 - a) * s * s * s;
                        let jac = 3.0 * (1.0 - a) * s * s * 0.5;
                        w * jac * f(Complex64::from_polar(r, theta)) * r
                    })
                    .sum()
            } else {
                radial_rule
                    .iter()
                    .map(|&(x, w)| {
                        let r = 0.5 * (b + a) + 0.5 * (b - a) * x;
                        w * 0.5 * (b - a) * f(Complex64::from_polar(r, theta)) * r
                    })
                    .sum()
            };
            ray * wtheta
        })
        .collect();
    pairwise_sum(&panel_values)
}

/// One Bekollé–Bonami quotient evaluated at a fixed resolution, without
/// divergence screening. Returns `(quotient, ∫w, ∫w^{-1/(q-1)}, area)`.
pub fn bb_quotient_at(
    w: &WeightSpec,
    q: f64,
    disc: &BoundaryDisc,
    resolution: usize,
) -> (f64, f64, f64, f64) {
    assert!(q > 1.0, "the quotient needs q > 1");
    let n_r = resolution;
    let n_theta = 4 * resolution;
    let sigma_exp = -1.0 / (q - 1.0);
    let area = integrate_over_cap(|_| 1.0, disc, n_r, n_theta);
    let i_w = integrate_over_cap(|z| w.eval(z), disc, n_r, n_theta);
    let i_sigma = integrate_over_cap(|z| w.eval(z).powf(sigma_exp), disc, n_r, n_theta);
    let quotient = (i_w / area) * (i_sigma / area).powf(q - 1.0);
    (quotient, i_w, i_sigma, area)
}

/// The Bekollé–Bonami quotient
/// `(1/|B| ∫_B w) (1/|B| ∫_B w^{-1/(q-1)})^{q-1}` over `B ∩ 𝔻`.
///
/// Always ≥ 1 (discrete Hölder on the shared nodes), and exactly 1 for
/// constant weights. Errors with a divergence flag when either component
/// integral grows by more than 10× across the 8× resolution ladder.
pub fn bb_quotient(w: &WeightSpec, q: f64, disc: &BoundaryDisc, resolution: usize) -> Result<f64> {
    let coarse = bb_quotient_at(w, q, disc, resolution);
    let fine = bb_quotient_at(w, q, disc, resolution * LADDER_REFINEMENT);
    for (label, lo, hi) in [("w", coarse.1, fine.1), ("w^(-1/(q-1))", coarse.2, fine.2)] {
        if hi > DIVERGENCE_GROWTH_FACTOR * lo {
            return Err(Error::DivergentWeight(format!(
                "integral of {label} grew {:.2}x under refinement on disc centered {} radius {}",
                hi / lo,
                disc.center,
                disc.radius
            )));
        }
    }
    Ok(fine.0)
}

/// Sampled Bekollé–Bonami constant: the max quotient over the deterministic
/// boundary-disc family up to `family_depth`. Monotone nondecreasing in the
/// depth, and a lower bound for the true supremum.
pub fn bb_constant(w: &WeightSpec, q: f64, family_depth: u32, resolution: usize) -> Result<f64> {
    let family = boundary_disc_family(family_depth);
    let quotients = family
        .iter()
        .map(|disc| bb_quotient(w, q, disc, resolution))
        .collect::<Result<Vec<f64>>>()?;
    Ok(quotients.into_iter().fold(1.0, f64::max))
}

/// Sampled Bekollé–Bonami maximal function: the max of `avg_{B∩𝔻} |g|` over
/// family discs containing `z`. The scale-1 disc contains every point, so
/// the max is over a nonempty set.
pub fn bb_maximal<F>(g: F, z: Complex64, family_depth: u32, resolution: usize) -> f64
where
    F: Fn(Complex64) -> f64 + Sync,
{
    assert!(z.norm() < 1.0);
    boundary_disc_family(family_depth)
        .iter()
        .filter(|disc| disc.contains(z))
        .map(|disc| {
            let area = integrate_over_cap(|_| 1.0, disc, resolution, 4 * resolution);
            let avg = integrate_over_cap(|w| g(w).abs(), disc, resolution, 4 * resolution);
            avg / area
        })
        .fold(0.0, f64::max)
}

/// Average of `|g|` over one boundary disc (for oracle comparisons).
pub fn disc_average<F>(g: F, disc: &BoundaryDisc, resolution: usize) -> f64
where
    F: Fn(Complex64) -> f64 + Sync,
{
    let area = integrate_over_cap(|_| 1.0, disc, resolution, 4 * resolution);
    integrate_over_cap(|w| g(w).abs(), disc, resolution, 4 * resolution) / area
}

/// Max over all Carleson-square top halves up to `tree_depth` of
/// `sup w / inf w` on a deterministic product sample of the top half.
/// Equals 1 for constant weights.
pub fn essential_constancy(w: &WeightSpec, tree_depth: u32) -> f64 {
    let (n_r, n_theta) = (17, 65);
    let mut worst: f64 = 1.0;
    for level in 0..=tree_depth {
        for index in 0..(1u64 << level) {
            let id = SquareId::new(level, index).unwrap();
            let (r_lo, r_hi, th_lo, th_hi) = top_half_bounds(id);
            let mut sup = f64::MIN;
            let mut inf = f64::MAX;
            for i in 0..n_r {
                let r = r_lo + (r_hi - r_lo) * i as f64 / (n_r - 1) as f64;
                for j in 0..n_theta {
                    let theta = th_lo + (th_hi - th_lo) * j as f64 / (n_theta - 1) as f64;
                    let v = w.eval(Complex64::from_polar(r, theta));
                    sup = sup.max(v);
                    inf = inf.min(v);
                }
            }
            worst = worst.max(sup / inf);
        }
    }
    worst
}
