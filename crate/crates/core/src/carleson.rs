//! The dyadic Carleson-square tree of the unit disc.
//!
//! Level `n` squares are annular sectors `1 - 2^{-n} ≤ |z| < 1` with a
//! dyadic argument interval of length `2π 2^{-n}`; the root (level 0) is the
//! whole disc. Each square splits into two children (radial halving forces
//! binary angular branching). The top half of a square is its inner radial
//! half, and the top halves tile the disc.
//!
//! A tree stores one scalar pair `(b, d)` per top half plus their cumulative
//! maxima along root-to-leaf chains, which is all the good-lambda machinery
//! consumes. Values can come from sampled sups of an analytic function or
//! from externally supplied tables.

use num_complex::Complex64;
use rayon::prelude::*;
use std::fmt::Write as _;

use crate::quad::gauss_legendre;
use crate::series::PowerSeries;
use crate::weights::WeightSpec;
use crate::{Error, Result};

/// Identifier of a dyadic Carleson square: level `n ≥ 0` and angular index
/// `j ∈ [0, 2^n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SquareId {
    level: u32,
    index: u64,
}

impl SquareId {
    pub fn new(level: u32, index: u64) -> Result<Self> {
        if level > 40 || index >= (1u64 << level) {
            return Err(Error::InvalidSquare { level, index });
        }
        Ok(SquareId { level, index })
    }

    pub const ROOT: SquareId = SquareId { level: 0, index: 0 };

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn parent(&self) -> Option<SquareId> {
        if self.level == 0 {
            None
        } else {
            Some(SquareId { level: self.level - 1, index: self.index / 2 })
        }
    }

    /// The chain of ancestors, nearest first, ending at the root.
    pub fn ancestors(&self) -> Vec<SquareId> {
        let mut chain = Vec::with_capacity(self.level as usize);
        let mut cursor = *self;
        while let Some(parent) = cursor.parent() {
            chain.push(parent);
            cursor = parent;
        }
        chain
    }

    /// The `2^n` descendants exactly `n` levels below.
    pub fn descendants_at_depth(&self, n: u32) -> Vec<SquareId> {
        let first = self.index << n;
        (first..first + (1u64 << n))
            .map(|index| SquareId { level: self.level + n, index })
            .collect()
    }

    pub fn children(&self) -> [SquareId; 2] {
        [
            SquareId { level: self.level + 1, index: 2 * self.index },
            SquareId { level: self.level + 1, index: 2 * self.index + 1 },
        ]
    }

    fn flat(&self) -> usize {
        ((1u64 << self.level) - 1 + self.index) as usize
    }
}

/// Number of squares in a complete tree of the given depth.
pub fn node_count(depth: u32) -> usize {
    ((1u64 << (depth + 1)) - 1) as usize
}

/// All square ids of levels `0..=depth`, in level order.
pub fn ids_up_to(depth: u32) -> impl Iterator<Item = SquareId> {
    (0..=depth).flat_map(|level| {
        (0..(1u64 << level)).map(move |index| SquareId { level, index })
    })
}

/// `(r_min, r_max, θ_min, θ_max)` of a square: radially `[1 - 2^{-n}, 1)`,
/// angularly the dyadic interval `[2πj 2^{-n}, 2π(j+1) 2^{-n})`.
pub fn square_bounds(id: SquareId) -> (f64, f64, f64, f64) {
    let scale = 0.5f64.powi(id.level as i32);
    let r_min = 1.0 - scale;
    let th_min = std::f64::consts::TAU * id.index as f64 * scale;
    let th_max = std::f64::consts::TAU * (id.index + 1) as f64 * scale;
    (r_min, 1.0, th_min, th_max)
}

/// Bounds of the top half: the inner radial half `[1-2^{-n}, 1-2^{-n-1})`
/// over the same argument interval.
pub fn top_half_bounds(id: SquareId) -> (f64, f64, f64, f64) {
    let (r_min, _, th_min, th_max) = square_bounds(id);
    let r_max = 1.0 - 0.5f64.powi(id.level as i32 + 1);
    (r_min, r_max, th_min, th_max)
}

fn normalized_arg(z: Complex64) -> f64 {
    let arg = z.arg();
    if arg < 0.0 {
        arg + std::f64::consts::TAU
    } else {
        arg
    }
}

pub fn square_contains(id: SquareId, z: Complex64) -> bool {
    debug_assert!(z.norm() < 1.0);
    let (r_min, _, th_min, th_max) = square_bounds(id);
    let theta = normalized_arg(z);
    z.norm() >= r_min && theta >= th_min && theta < th_max
}

pub fn top_half_contains(id: SquareId, z: Complex64) -> bool {
    debug_assert!(z.norm() < 1.0);
    let (r_min, r_max, th_min, th_max) = top_half_bounds(id);
    let theta = normalized_arg(z);
    z.norm() >= r_min && z.norm() < r_max && theta >= th_min && theta < th_max
}

/// Whether `z` is in the shaded set of the union of the top halves of `ids`:
/// some point of the union lies on the same ray, no farther from the origin.
/// (With a light at the origin, `z` is in the union or blocked by it.)
pub fn shaded_set_contains(ids: &[SquareId], z: Complex64) -> bool {
    debug_assert!(z.norm() < 1.0);
    let theta = normalized_arg(z);
    let r = z.norm();
    ids.iter().any(|&id| {
        let (r_min, _, th_min, th_max) = top_half_bounds(id);
        theta >= th_min && theta < th_max && r >= r_min
    })
}

/// The dyadic tree with per-top-half scalars `b, d ≥ 0` and their cumulative
/// maxima `B, D` along root-to-leaf chains. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct CarlesonTree {
    depth: u32,
    b: Vec<f64>,
    d: Vec<f64>,
    b_cum: Vec<f64>,
    d_cum: Vec<f64>,
}

impl CarlesonTree {
    /// Builds a tree from explicit per-node values in level order.
    pub fn from_values(depth: u32, b: Vec<f64>, d: Vec<f64>) -> Result<Self> {
        let n = node_count(depth);
        if b.len() != n || d.len() != n {
            return Err(Error::Domain(format!(
                "expected {n} node values for depth {depth}, got {} and {}",
                b.len(),
                d.len()
            )));
        }
        if b.iter().chain(&d).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain("b and d must be finite and nonnegative".into()));
        }
        let mut b_cum = b.clone();
        let mut d_cum = d.clone();
        for id in ids_up_to(depth) {
            if let Some(parent) = id.parent() {
                let (i, p) = (id.flat(), parent.flat());
                b_cum[i] = b_cum[i].max(b_cum[p]);
                d_cum[i] = d_cum[i].max(d_cum[p]);
            }
        }
        Ok(CarlesonTree { depth, b, d, b_cum, d_cum })
    }

    /// Builds the tree from an analytic `f` with `f(0) = 0`: on each top
    /// half `T` at level `k`, `b(T)` is the sampled sup of `|f|` and `d(T)`
    /// is `2^{-k-1}` times the sampled sup of `|f'|`.
    ///
    /// Sups are taken over a deterministic product grid on the closure of
    /// the top half (about `samples` points, allocated by aspect ratio), so
    /// they are lower bounds of the true sups that include the radial
    /// endpoints where `|f|` typically peaks.
    pub fn from_function(f: &PowerSeries, depth: u32, samples: usize) -> Result<Self> {
        let at_zero = f.eval(Complex64::new(0.0, 0.0)).norm();
        if at_zero > 1e-12 {
            return Err(Error::BasePointNotZero(at_zero));
        }
        let fp = f.derivative();
        let n_theta = ((samples as f64 * 4.0 * std::f64::consts::PI).sqrt().ceil() as usize).max(4);
        let n_r = (samples.div_ceil(n_theta)).max(2);

        let ids: Vec<SquareId> = ids_up_to(depth).collect();
        let pairs: Vec<(f64, f64)> = ids
            .par_iter()
            .map(|&id| {
                let (r_lo, r_hi, th_lo, th_hi) = top_half_bounds(id);
                let mut sup_f = 0.0f64;
                let mut sup_fp = 0.0f64;
                for i in 0..n_r {
                    let r = r_lo + (r_hi - r_lo) * i as f64 / (n_r - 1) as f64;
                    for j in 0..n_theta {
                        let theta =
                            th_lo + (th_hi - th_lo) * j as f64 / (n_theta - 1) as f64;
                        let z = Complex64::from_polar(r, theta);
                        sup_f = sup_f.max(f.eval(z).norm());
                        sup_fp = sup_fp.max(fp.eval(z).norm());
                    }
                }
                let half_width = 0.5f64.powi(id.level() as i32 + 1);
                (sup_f, half_width * sup_fp)
            })
            .collect();

        let (b, d) = pairs.into_iter().unzip();
        Self::from_values(depth, b, d)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn b(&self, id: SquareId) -> f64 {
        self.b[id.flat()]
    }

    pub fn d(&self, id: SquareId) -> f64 {
        self.d[id.flat()]
    }

    /// `B(T)`: max of `b` over the square's top half and all its ancestors.
    pub fn b_cum(&self, id: SquareId) -> f64 {
        self.b_cum[id.flat()]
    }

    /// `D(T)`: same cumulative max for `d`.
    pub fn d_cum(&self, id: SquareId) -> f64 {
        self.d_cum[id.flat()]
    }

    pub fn max_b_cum(&self) -> f64 {
        self.b_cum.iter().copied().fold(0.0, f64::max)
    }

    /// Rescales both value fields (used by homogeneity checks).
    pub fn scaled(&self, factor: f64) -> CarlesonTree {
        assert!(factor >= 0.0 && factor.is_finite());
        CarlesonTree {
            depth: self.depth,
            b: self.b.iter().map(|v| v * factor).collect(),
            d: self.d.iter().map(|v| v * factor).collect(),
            b_cum: self.b_cum.iter().map(|v| v * factor).collect(),
            d_cum: self.d_cum.iter().map(|v| v * factor).collect(),
        }
    }

    /// Text dump, one `n j b d B D` line per node in level order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for id in ids_up_to(self.depth) {
            let i = id.flat();
            writeln!(
                out,
                "{} {} {} {} {} {}",
                id.level(),
                id.index(),
                self.b[i],
                self.d[i],
                self.b_cum[i],
                self.d_cum[i]
            )
            .unwrap();
        }
        out
    }

    /// Parses a dump (or a bare `n j b d` table); cumulative maxima are
    /// recomputed, so trailing `B D` columns are accepted and ignored.
    pub fn load(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut depth = 0u32;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 && fields.len() != 6 {
                return Err(Error::Domain(format!(
                    "tree table line {}: expected `n j b d [B D]`",
                    lineno + 1
                )));
            }
            let parse_err =
                |what: &str| Error::Domain(format!("tree table line {}: bad {what}", lineno + 1));
            let level: u32 = fields[0].parse().map_err(|_| parse_err("level"))?;
            let index: u64 = fields[1].parse().map_err(|_| parse_err("index"))?;
            let b: f64 = fields[2].parse().map_err(|_| parse_err("b"))?;
            let d: f64 = fields[3].parse().map_err(|_| parse_err("d"))?;
            let id = SquareId::new(level, index)?;
            depth = depth.max(level);
            entries.push((id, b, d));
        }
        let n = node_count(depth);
        let mut b = vec![f64::NAN; n];
        let mut d = vec![f64::NAN; n];
        for (id, bv, dv) in entries {
            b[id.flat()] = bv;
            d[id.flat()] = dv;
        }
        if b.iter().any(|v| v.is_nan()) {
            return Err(Error::Domain("tree table is missing nodes".into()));
        }
        Self::from_values(depth, b, d)
    }
}

/// Result of checking `b(T) ≤ b(parent top) + d(T)` on every node.
#[derive(Debug, Clone)]
pub struct BdReport {
    /// Largest `b(T) - b(parent) - d(T)` over all nodes (≤ 0 when the
    /// inequality holds exactly).
    pub max_violation: f64,
    /// Nodes violating beyond the allowed slack, with their amounts.
    pub violations: Vec<(SquareId, f64)>,
}

impl BdReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the fundamental inequality `b(T) ≤ b(𝒯(𝒫(C))) + d(T)` node by
/// node (the root's parent term is 0). With exact sups this holds with no
/// slack; sampled sups may need `slack` to absorb sampling deficiency.
pub fn verify_bd_inequality(tree: &CarlesonTree, slack: f64) -> BdReport {
    assert!(slack >= 0.0);
    let mut max_violation = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    for id in ids_up_to(tree.depth()) {
        let parent_b = id.parent().map_or(0.0, |p| tree.b(p));
        let violation = tree.b(id) - parent_b - tree.d(id);
        max_violation = max_violation.max(violation);
        if violation > slack {
            violations.push((id, violation));
        }
    }
    BdReport { max_violation, violations }
}

/// Per-node measures `μ(T)` (top halves) and `μ(C)` (squares) for `μ = w dA`,
/// with `μ(C)` assembled additively from descendant top halves plus the
/// unresolved boundary annulus, so parent/child sums agree exactly.
#[derive(Debug, Clone)]
pub struct MeasureTable {
    depth: u32,
    mu_top: Vec<f64>,
    mu_square: Vec<f64>,
}

impl MeasureTable {
    pub fn new(weight: &WeightSpec, depth: u32) -> Result<Self> {
        let radial = gauss_legendre(16);
        let angular = gauss_legendre(24);
        let ids: Vec<SquareId> = ids_up_to(depth).collect();

        let integrate_sector = |r_map: &dyn Fn(f64) -> (f64, f64), th_lo: f64, th_hi: f64| -> f64 {
            let mut total = 0.0;
            for &(xt, wt) in &angular {
                let theta = 0.5 * (th_hi + th_lo) + 0.5 * (th_hi - th_lo) * xt;
                let mut ray = 0.0;
                for &(xr, wr) in &radial {
                    let (r, jac) = r_map(xr);
                    ray += wr * jac * weight.eval(Complex64::from_polar(r, theta)) * r;
                }
                total += wt * 0.5 * (th_hi - th_lo) * ray;
            }
            total
        };

        let mu_top: Vec<f64> = ids
            .par_iter()
            .map(|&id| {
                let (r_lo, r_hi, th_lo, th_hi) = top_half_bounds(id);
                let plain = |x: f64| -> (f64, f64) {
                    (0.5 * (r_hi + r_lo) + 0.5 * (r_hi - r_lo) * x, 0.5 * (r_hi - r_lo))
                };
                integrate_sector(&plain, th_lo, th_hi)
            })
            .collect();

        // Boundary annuli below the resolved depth, one per deepest square;
        // cubic clustering toward |z| = 1 keeps integrable power weights
        // accurate.
        let leaf_r_lo = 1.0 - 0.5f64.powi(depth as i32 + 1);
        let leaves: Vec<SquareId> =
            (0..(1u64 << depth)).map(|j| SquareId { level: depth, index: j }).collect();
        let tails: Vec<f64> = leaves
            .par_iter()
            .map(|&id| {
                let (_, _, th_lo, th_hi) = square_bounds(id);
                let clustered = |x: f64| -> (f64, f64) {
                    let t = 0.5 * (x + 1.0);
                    let s = 1.0 - t;
                    let r = 1.0 - (1.0 - leaf_r_lo) * s * s * s;
                    (r, 3.0 * (1.0 - leaf_r_lo) * s * s * 0.5)
                };
                integrate_sector(&clustered, th_lo, th_hi)
            })
            .collect();

        let mut mu_square = vec![0.0; node_count(depth)];
        for level in (0..=depth).rev() {
            for index in 0..(1u64 << level) {
                let id = SquareId { level, index };
                let i = id.flat();
                mu_square[i] = mu_top[i]
                    + if level == depth {
                        tails[index as usize]
                    } else {
                        let [left, right] = id.children();
                        mu_square[left.flat()] + mu_square[right.flat()]
                    };
            }
        }

        for id in ids_up_to(depth) {
            let i = id.flat();
            if !(mu_square[i].is_finite() && mu_square[i] > 0.0 && mu_top[i] > 0.0) {
                return Err(Error::ZeroMeasureSquare { level: id.level(), index: id.index() });
            }
        }
        Ok(MeasureTable { depth, mu_top, mu_square })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn mu_top(&self, id: SquareId) -> f64 {
        self.mu_top[id.flat()]
    }

    pub fn mu_square(&self, id: SquareId) -> f64 {
        self.mu_square[id.flat()]
    }

    /// τ: the minimum of `μ(T)/μ(C)` over all squares up to the depth.
    pub fn tau(&self) -> f64 {
        (0..self.mu_top.len())
            .map(|i| self.mu_top[i] / self.mu_square[i])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Minimum top-half measure ratio for `μ = w dA` up to `depth`.
pub fn top_half_ratio(weight: &WeightSpec, depth: u32) -> Result<f64> {
    Ok(MeasureTable::new(weight, depth)?.tau())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, TAU};

    fn id(level: u32, index: u64) -> SquareId {
        SquareId::new(level, index).unwrap()
    }

    /// Closed-form Lebesgue ratio area(T)/area(C) at level n.
    fn lebesgue_ratio(n: i32) -> f64 {
        let s = 0.5f64.powi(n + 1);
        0.5 * (2.0 - 3.0 * s) / (2.0 - 2.0 * s)
    }

    #[test]
    fn square_bounds_examples() {
        assert_eq!(square_bounds(SquareId::ROOT), (0.0, 1.0, 0.0, TAU));
        let (r, _, a, b) = square_bounds(id(1, 0));
        assert_eq!((r, a, b), (0.5, 0.0, PI));
        let (r, _, a, b) = square_bounds(id(2, 3));
        assert_abs_diff_eq!(r, 0.75);
        assert_abs_diff_eq!(a, 1.5 * PI);
        assert_abs_diff_eq!(b, TAU);
    }

    #[test]
    fn top_half_bounds_examples() {
        let (r0, r1, _, _) = top_half_bounds(SquareId::ROOT);
        assert_eq!((r0, r1), (0.0, 0.5));
        let (r0, r1, a, b) = top_half_bounds(id(1, 0));
        assert_eq!((r0, r1, a, b), (0.5, 0.75, 0.0, PI));
        let (r0, r1, a, b) = top_half_bounds(id(3, 5));
        assert_abs_diff_eq!(r0, 0.875);
        assert_abs_diff_eq!(r1, 0.9375);
        assert_abs_diff_eq!(a, 1.25 * PI);
        assert_abs_diff_eq!(b, 1.5 * PI);
    }

    #[test]
    fn parent_ancestors_descendants() {
        assert_eq!(id(2, 3).parent(), Some(id(1, 1)));
        assert_eq!(id(2, 3).ancestors(), vec![id(1, 1), SquareId::ROOT]);
        assert_eq!(SquareId::ROOT.parent(), None);

        let descendants = id(1, 0).descendants_at_depth(2);
        assert_eq!(descendants.len(), 4);
        assert_eq!(descendants, vec![id(3, 0), id(3, 1), id(3, 2), id(3, 3)]);
        for d in descendants {
            assert!(d.ancestors().contains(&id(1, 0)));
        }
    }

    #[test]
    fn invalid_square_ids_rejected() {
        assert!(SquareId::new(2, 4).is_err());
        assert!(SquareId::new(1, 2).is_err());
        assert!(SquareId::new(0, 0).is_ok());
    }

    #[test]
    fn shaded_set_examples() {
        // Top half of the root is {|z| < 1/2}: every ray hits it.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let z = Complex64::from_polar(rng.gen_range(0.0..0.999), rng.gen_range(0.0..TAU));
            assert!(shaded_set_contains(&[SquareId::ROOT], z));
        }
        // (1, 0) covers arguments [0, π) only.
        let z = Complex64::from_polar(0.9, 1.5 * PI);
        assert!(!shaded_set_contains(&[id(1, 0)], z));
    }

    #[test]
    fn shading_recovers_union_of_squares() {
        // C = squares (1,0) ∪ (1,1) = {|z| ≥ 1/2}: S(T(C)) = C.
        let ids = [id(1, 0), id(1, 1)];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10_000 {
            let z = Complex64::from_polar(rng.gen_range(0.0..0.9999), rng.gen_range(0.0..TAU));
            let shaded = shaded_set_contains(&ids, z);
            let in_c = ids.iter().any(|&sq| square_contains(sq, z));
            assert_eq!(shaded, in_c, "disagreement at z = {z}");
        }
    }

    #[test]
    fn top_halves_partition_the_disc() {
        let depth = 6;
        let inner = 1.0 - 0.5f64.powi(depth as i32 + 1);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..5_000 {
            let z = Complex64::from_polar(rng.gen_range(0.0..0.9999), rng.gen_range(0.0..TAU));
            let hits: usize = ids_up_to(depth)
                .filter(|&sq| top_half_contains(sq, z))
                .count();
            if z.norm() < inner {
                assert_eq!(hits, 1, "point {z} should lie in exactly one top half");
            } else {
                assert_eq!(hits, 0, "point {z} is in the unresolved annulus");
            }
        }
    }

    #[test]
    fn zero_function_gives_zero_tree() {
        let tree = CarlesonTree::from_function(&PowerSeries::zero(), 3, 100).unwrap();
        for sq in ids_up_to(3) {
            assert_eq!(tree.b(sq), 0.0);
            assert_eq!(tree.d(sq), 0.0);
            assert_eq!(tree.b_cum(sq), 0.0);
            assert_eq!(tree.d_cum(sq), 0.0);
        }
    }

    #[test]
    fn identity_function_tree_values() {
        let tree = CarlesonTree::from_function(&PowerSeries::identity(), 2, 400).unwrap();
        // Radial endpoints are sampled, so sup |z| over a top half is exact.
        assert_abs_diff_eq!(tree.b(SquareId::ROOT), 0.5);
        assert_abs_diff_eq!(tree.d(SquareId::ROOT), 0.5);
        assert_abs_diff_eq!(tree.b(id(1, 0)), 0.75);
        assert_abs_diff_eq!(tree.d(id(1, 0)), 0.25);
        assert_abs_diff_eq!(tree.d(id(2, 3)), 0.125);
        // Dense-sample oracle for the root top half.
        let dense = CarlesonTree::from_function(&PowerSeries::identity(), 0, 40_000).unwrap();
        assert_abs_diff_eq!(dense.b(SquareId::ROOT), 0.5);
    }

    #[test]
    fn from_function_requires_zero_base_point() {
        let f = PowerSeries::from_real(&[1.0, 1.0]);
        assert!(matches!(
            CarlesonTree::from_function(&f, 2, 100),
            Err(Error::BasePointNotZero(_))
        ));
    }

    #[test]
    fn bd_inequality_for_identity_is_tight() {
        // For f = z the inequality is an equality at every node. Sample
        // points go through one polar-to-Cartesian rounding, so the sampled
        // sups carry 1 ulp of noise around the exact dyadic values.
        let tree = CarlesonTree::from_function(&PowerSeries::identity(), 6, 400).unwrap();
        let report = verify_bd_inequality(&tree, 1e-15);
        assert!(report.passed(), "violations: {:?}", report.violations);
        assert_abs_diff_eq!(report.max_violation, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn bd_inequality_for_random_polynomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let coeffs: Vec<Complex64> = std::iter::once(Complex64::new(0.0, 0.0))
                .chain((1..=8).map(|n| {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                        * 0.5f64.powi(n)
                }))
                .collect();
            let f = PowerSeries::new(coeffs);
            let tree = CarlesonTree::from_function(&f, 8, 1000).unwrap();
            let report = verify_bd_inequality(&tree, 1e-6);
            assert!(report.passed(), "violations: {:?}", report.violations);
        }
    }

    #[test]
    fn bd_report_catches_injected_jump() {
        let mut b = vec![0.0; node_count(2)];
        let d = vec![0.0; node_count(2)];
        b[3] = 1.0; // level-2 node jumps without any d budget
        let tree = CarlesonTree::from_values(2, b, d).unwrap();
        let report = verify_bd_inequality(&tree, 0.0);
        assert!(!report.passed());
        assert_abs_diff_eq!(report.max_violation, 1.0);
        assert_eq!(report.violations.len(), 1);
    }

    #[test]
    fn cumulative_maxima_are_monotone_and_dominate() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = node_count(5);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
        let tree = CarlesonTree::from_values(5, b, d).unwrap();
        for sq in ids_up_to(5) {
            assert!(tree.b_cum(sq) >= tree.b(sq));
            assert!(tree.d_cum(sq) >= tree.d(sq));
            if let Some(parent) = sq.parent() {
                assert!(tree.b_cum(sq) >= tree.b_cum(parent));
                assert!(tree.d_cum(sq) >= tree.d_cum(parent));
            }
        }
    }

    #[test]
    fn pointwise_f_below_cumulative_b() {
        let f = PowerSeries::new(vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(0.7, 0.2),
            Complex64::new(-0.3, 0.4),
            Complex64::new(0.1, -0.2),
        ]);
        let depth = 6;
        let tree = CarlesonTree::from_function(&f, depth, 2000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let inner = 1.0 - 0.5f64.powi(depth as i32 + 1);
        for _ in 0..2000 {
            let z = Complex64::from_polar(rng.gen_range(0.0..inner), rng.gen_range(0.0..TAU));
            let home = ids_up_to(depth).find(|&sq| top_half_contains(sq, z)).unwrap();
            assert!(
                f.eval(z).norm() <= tree.b_cum(home) + 1e-4,
                "|f(z)| exceeded B at {z}"
            );
        }
    }

    #[test]
    fn dump_golden_for_identity_depth_two() {
        // Closed-form values for f = z: b = 1 - 2^{-n-1}, d = 2^{-n-1}.
        let b = vec![0.5, 0.75, 0.75, 0.875, 0.875, 0.875, 0.875];
        let d = vec![0.5, 0.25, 0.25, 0.125, 0.125, 0.125, 0.125];
        let tree = CarlesonTree::from_values(2, b, d).unwrap();
        let golden = "\
0 0 0.5 0.5 0.5 0.5
1 0 0.75 0.25 0.75 0.5
1 1 0.75 0.25 0.75 0.5
2 0 0.875 0.125 0.875 0.5
2 1 0.875 0.125 0.875 0.5
2 2 0.875 0.125 0.875 0.5
2 3 0.875 0.125 0.875 0.5
";
        assert_eq!(tree.dump(), golden);

        // The sampled tree matches the closed form to polar rounding.
        let sampled = CarlesonTree::from_function(&PowerSeries::identity(), 2, 400).unwrap();
        for sq in ids_up_to(2) {
            assert_abs_diff_eq!(sampled.b(sq), tree.b(sq), epsilon = 1e-15);
            assert_abs_diff_eq!(sampled.d(sq), tree.d(sq), epsilon = 1e-15);
        }
    }

    #[test]
    fn dump_load_round_trip_and_bare_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let n = node_count(4);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
        let tree = CarlesonTree::from_values(4, b, d).unwrap();
        let reloaded = CarlesonTree::load(&tree.dump()).unwrap();
        assert_eq!(tree, reloaded);

        let bare = "0 0 1.0 0.5\n1 0 1.25 0.25\n1 1 0.75 0.5\n";
        let t = CarlesonTree::load(bare).unwrap();
        assert_eq!(t.depth(), 1);
        assert_abs_diff_eq!(t.b_cum(id(1, 0)), 1.25);
        assert_abs_diff_eq!(t.d_cum(id(1, 1)), 0.5);

        assert!(CarlesonTree::load("0 0 1.0 0.5\n1 0 1.0 0.5\n").is_err());
    }

    #[test]
    fn lebesgue_top_half_ratios_match_closed_form() {
        let table = MeasureTable::new(&WeightSpec::Unit, 8).unwrap();
        for n in 0..=8 {
            let sq = id(n, (1u64 << n) - 1);
            let ratio = table.mu_top(sq) / table.mu_square(sq);
            assert_abs_diff_eq!(ratio, lebesgue_ratio(n as i32), epsilon = 2e-3);
        }
        assert_abs_diff_eq!(table.tau(), 0.25, epsilon = 2e-3);
        // Ratios increase with level, so the min sits at the root.
        assert_abs_diff_eq!(top_half_ratio(&WeightSpec::Unit, 6).unwrap(), 0.25, epsilon = 2e-3);
    }

    #[test]
    fn root_top_half_is_quarter_area() {
        let table = MeasureTable::new(&WeightSpec::Unit, 0).unwrap();
        assert_abs_diff_eq!(table.mu_top(SquareId::ROOT), PI / 4.0, epsilon = 1e-10);
        assert_abs_diff_eq!(table.mu_square(SquareId::ROOT), PI, epsilon = 1e-8);
    }

    #[test]
    fn weighted_top_half_ratio_stable_under_depth() {
        let w = WeightSpec::Power(1.0);
        let shallow = top_half_ratio(&w, 4).unwrap();
        let deep = top_half_ratio(&w, 6).unwrap();
        assert!(shallow > 0.0 && shallow < 1.0);
        // Deeper trees can only lower the min, and for power weights the
        // per-level ratios converge, so the drift is small.
        assert!(deep <= shallow + 1e-12);
        assert!((deep - shallow).abs() < 0.05);
        // 1-D radial oracle for the root ratio: ∫ w r dr splits in closed
        // form for α = 1 (angular factor cancels).
        let radial = |a: f64, b: f64| {
            // ∫_a^b (1-r) r dr = [r²/2 - r³/3]
            (b * b / 2.0 - b * b * b / 3.0) - (a * a / 2.0 - a * a * a / 3.0)
        };
        let table = MeasureTable::new(&w, 4).unwrap();
        let expected = radial(0.0, 0.5) / radial(0.0, 1.0);
        assert_abs_diff_eq!(
            table.mu_top(SquareId::ROOT) / table.mu_square(SquareId::ROOT),
            expected,
            epsilon = 1e-6
        );
    }

    #[test]
    fn measure_additivity_is_exact_by_construction() {
        let table = MeasureTable::new(&WeightSpec::Power(0.5), 5).unwrap();
        for sq in ids_up_to(4) {
            let [l, r] = sq.children();
            let reassembled = table.mu_top(sq) + (table.mu_square(l) + table.mu_square(r));
            assert_eq!(table.mu_square(sq), reassembled);
        }
    }
}
