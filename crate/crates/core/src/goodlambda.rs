//! The quantitative good-lambda machinery over Carleson trees.
//!
//! Everything here is arithmetic over the per-top-half scalars stored in a
//! [`CarlesonTree`]: the chain bound `B_{k+n} ≤ B_k + n D_{k+n}`, the level
//! gap `⌈(α-1)/γ⌉ - 1`, the containment of `{B ≥ αλ, D ≤ γλ}` in deep
//! descendants, the `(1-τ)^gap` measure decay, the layer-cake comparison
//! between `D` and `d`, and the empirical norm-domination ratios
//! `‖B‖/‖D‖`, `‖B‖/‖d‖`.
//!
//! Integrals of functions constant on top halves are exact sums of
//! `value · μ(T)` over the resolved tree; the unresolved boundary annulus is
//! the documented truncation (it only ever shrinks left-hand sides).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::collections::BTreeMap;

use crate::carleson::{ids_up_to, node_count, CarlesonTree, MeasureTable, SquareId};
use crate::{Error, Result};

/// Parameters of one good-lambda configuration.
#[derive(Debug, Clone, Copy)]
pub struct GoodLambdaParams {
    pub alpha: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub tau: f64,
}

impl GoodLambdaParams {
    pub fn new(alpha: f64, gamma: f64, lambda: f64, tau: f64) -> Self {
        assert!(alpha > 1.0, "the gap formula needs alpha > 1");
        assert!(gamma > 0.0 && lambda > 0.0);
        assert!(tau > 0.0 && tau < 1.0);
        GoodLambdaParams { alpha, gamma, lambda, tau }
    }
}

/// Descendant depth `⌈(α-1)/γ⌉ - 1` below a first-hit square that the set
/// `{B ≥ αλ, D ≤ γλ}` must respect.
pub fn level_gap(alpha: f64, gamma: f64) -> u32 {
    assert!(alpha > 1.0 && gamma > 0.0);
    (((alpha - 1.0) / gamma).ceil() as i64 - 1).max(0) as u32
}

/// The default λ sweep: 32 geometric points spanning `[max B / 10³, max B]`.
/// Empty for the zero tree.
pub fn lambda_grid(tree: &CarlesonTree) -> Vec<f64> {
    let top = tree.max_b_cum();
    if top <= 0.0 {
        return Vec::new();
    }
    let n = 32;
    (0..n)
        .map(|k| top * 1e-3f64.powf(1.0 - k as f64 / (n - 1) as f64))
        .collect()
}

/// Result of sweeping the chain bound over every root-to-leaf chain.
#[derive(Debug, Clone, Copy)]
pub struct ChainBoundReport {
    /// Largest `B_{k+n} - B_k - n·D_{k+n}`; the bound holds iff ≤ 0.
    pub max_violation: f64,
    pub checked: u64,
}

impl ChainBoundReport {
    pub fn passed(&self) -> bool {
        self.max_violation <= 0.0
    }
}

/// Checks `B_{k+n} ≤ B_k + n D_{k+n}` for every root-to-leaf chain and every
/// `0 ≤ k ≤ k+n ≤ depth`. Pure arithmetic over stored values.
pub fn chain_bound_check(tree: &CarlesonTree, depth: u32) -> ChainBoundReport {
    assert!(depth <= tree.depth());
    let leaves: Vec<u64> = (0..(1u64 << depth)).collect();
    let max_violation = leaves
        .par_iter()
        .map(|&leaf| {
            let chain: Vec<(f64, f64)> = (0..=depth)
                .map(|level| {
                    let id = SquareId::new(level, leaf >> (depth - level)).unwrap();
                    (tree.b_cum(id), tree.d_cum(id))
                })
                .collect();
            let mut worst = f64::NEG_INFINITY;
            for k in 0..=depth as usize {
                for m in k..=depth as usize {
                    let n = (m - k) as f64;
                    worst = worst.max(chain[m].0 - (chain[k].0 + n * chain[m].1));
                }
            }
            worst
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    let per_chain = (depth as u64 + 1) * (depth as u64 + 2) / 2;
    ChainBoundReport { max_violation, checked: (1u64 << depth) * per_chain }
}

/// First-hit levels for a cumulative field: for each node, the level of the
/// shallowest ancestor-or-self whose value reaches `lambda` (`None` if the
/// chain never reaches it). Cumulative fields are monotone along chains, so
/// the hit level is well defined.
fn first_hit_levels<F>(tree: &CarlesonTree, lambda: f64, field: F) -> Vec<Option<u32>>
where
    F: Fn(SquareId) -> f64,
{
    let mut hits: Vec<Option<u32>> = vec![None; node_count(tree.depth())];
    for id in ids_up_to(tree.depth()) {
        let flat = ((1u64 << id.level()) - 1 + id.index()) as usize;
        let inherited =
            id.parent().and_then(|p| hits[((1u64 << p.level()) - 1 + p.index()) as usize]);
        hits[flat] = inherited.or_else(|| (field(id) >= lambda).then_some(id.level()));
    }
    hits
}

/// Result of one containment check.
#[derive(Debug, Clone)]
pub struct ContainmentReport {
    /// Nodes in the bad set lying fewer than `level_gap` levels below their
    /// first-hit square, with the offending hit level.
    pub violations: Vec<(SquareId, u32)>,
    /// Min over checked nodes of `(level - hit_level) - level_gap`
    /// (`None` when the sweep was vacuous).
    pub min_margin: Option<i64>,
    pub checked: u64,
}

impl ContainmentReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verifies that every node with `B ≥ αλ` and `D ≤ γλ` sits at least
/// `level_gap(α, γ)` levels below the first square (along its chain) whose
/// top half reached `B ≥ λ`. Exhaustive over nodes: `B` and `D` are constant
/// on top halves, so node-level checking is exact.
pub fn containment_check(tree: &CarlesonTree, params: &GoodLambdaParams) -> ContainmentReport {
    let gap = level_gap(params.alpha, params.gamma) as i64;
    let lambda = params.lambda;
    let hits = first_hit_levels(tree, lambda, |id| tree.b_cum(id));
    let mut violations = Vec::new();
    let mut min_margin: Option<i64> = None;
    let mut checked = 0;
    for id in ids_up_to(tree.depth()) {
        if tree.b_cum(id) >= params.alpha * lambda && tree.d_cum(id) <= params.gamma * lambda {
            let flat = ((1u64 << id.level()) - 1 + id.index()) as usize;
            // alpha > 1 makes B ≥ αλ ≥ λ, so a hit level exists.
            let hit = hits[flat].expect("node above αλ must have a first hit");
            let margin = (id.level() - hit) as i64 - gap;
            min_margin = Some(min_margin.map_or(margin, |m| m.min(margin)));
            if margin < 0 {
                violations.push((id, hit));
            }
            checked += 1;
        }
    }
    ContainmentReport { violations, min_margin, checked }
}

/// Result of the measure-decay inequality over qualifying squares.
#[derive(Debug, Clone)]
pub struct MeasureDecayReport {
    /// Worst `lhs / rhs` over qualifying squares (`None` if vacuous).
    pub worst_ratio: Option<f64>,
    pub qualifying_squares: u64,
}

impl MeasureDecayReport {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.worst_ratio.is_none_or(|r| r <= 1.0 + tolerance)
    }
}

/// Quadrature check of `μ{z ∈ C : B ≥ αλ, D ≤ γλ} ≤ (1-τ)^gap μ(C)` per
/// qualifying square `C`; `μ` comes from the per-node table and the left
/// side sums resolved top halves only (the truncated annulus can only
/// shrink it).
pub fn measure_decay_check(
    tree: &CarlesonTree,
    params: &GoodLambdaParams,
    table: &MeasureTable,
) -> MeasureDecayReport {
    assert!(table.depth() >= tree.depth());
    let gap = level_gap(params.alpha, params.gamma);
    let lambda = params.lambda;
    let hits = first_hit_levels(tree, lambda, |id| tree.b_cum(id));
    let decay = (1.0 - params.tau).powi(gap as i32);

    // Accumulate resolved bad-set measure into each node's first-hit square.
    let mut lhs_by_square: BTreeMap<(u32, u64), f64> = BTreeMap::new();
    for id in ids_up_to(tree.depth()) {
        if tree.b_cum(id) >= params.alpha * lambda && tree.d_cum(id) <= params.gamma * lambda {
            let flat = ((1u64 << id.level()) - 1 + id.index()) as usize;
            let hit = hits[flat].expect("node above αλ must have a first hit");
            let ancestor_index = id.index() >> (id.level() - hit);
            *lhs_by_square.entry((hit, ancestor_index)).or_insert(0.0) += table.mu_top(id);
        }
    }

    let mut worst: Option<f64> = None;
    let mut qualifying = 0;
    for id in ids_up_to(tree.depth()) {
        let flat = ((1u64 << id.level()) - 1 + id.index()) as usize;
        if hits[flat] != Some(id.level()) {
            continue;
        }
        qualifying += 1;
        let lhs = lhs_by_square.get(&(id.level(), id.index())).copied().unwrap_or(0.0);
        let rhs = decay * table.mu_square(id);
        let ratio = lhs / rhs;
        worst = Some(worst.map_or(ratio, |w| w.max(ratio)));
    }
    MeasureDecayReport { worst_ratio: worst, qualifying_squares: qualifying }
}

/// Result of the layer-cake comparison between `D` and `d`.
#[derive(Debug, Clone)]
pub struct LayerCakeReport {
    pub tau: f64,
    /// `∫ D^p dμ` over resolved top halves (exact per-node sum).
    pub lhs_integral: f64,
    /// `∫ d^p dμ` over resolved top halves.
    pub rhs_integral: f64,
    /// Max over the λ grid of `τ μ{D ≥ λ} - μ{d ≥ λ}` (≤ 0 required).
    pub worst_lambda_margin: f64,
}

impl LayerCakeReport {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.tau * self.lhs_integral <= self.rhs_integral + tolerance
            && self.worst_lambda_margin <= tolerance
    }
}

/// Checks `τ ∫ D^p dμ ≤ ∫ d^p dμ` together with the pointwise-in-λ
/// comparison `τ μ{D ≥ λ} ≤ μ{d ≥ λ}` on the tree's λ grid.
pub fn layer_cake_check(tree: &CarlesonTree, p: f64, table: &MeasureTable) -> LayerCakeReport {
    assert!(p > 0.0);
    assert!(table.depth() >= tree.depth());
    let tau = table.tau();
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for id in ids_up_to(tree.depth()) {
        let mu = table.mu_top(id);
        lhs += tree.d_cum(id).powf(p) * mu;
        rhs += tree.d(id).powf(p) * mu;
    }
    let mut worst = f64::NEG_INFINITY;
    for lambda in lambda_grid(tree) {
        let mut mu_cum = 0.0;
        let mut mu_raw = 0.0;
        for id in ids_up_to(tree.depth()) {
            let mu = table.mu_top(id);
            if tree.d_cum(id) >= lambda {
                mu_cum += mu;
            }
            if tree.d(id) >= lambda {
                mu_raw += mu;
            }
        }
        worst = worst.max(tau * mu_cum - mu_raw);
    }
    if !worst.is_finite() {
        worst = 0.0; // zero tree: empty λ grid
    }
    LayerCakeReport { tau, lhs_integral: lhs, rhs_integral: rhs, worst_lambda_margin: worst }
}

/// Empirical norm-domination ratios in `L^p(μ)` over the resolved tree.
#[derive(Debug, Clone, Copy)]
pub struct NormDomination {
    /// `‖B‖ / ‖D‖`.
    pub k_cumulative: f64,
    /// `‖B‖ / ‖d‖`.
    pub k_raw: f64,
}

/// Computes `(‖B‖/‖D‖, ‖B‖/‖d‖)` with exact per-node sums. Diagnostic: the
/// ratios reflect the norm domination the good-lambda inequality implies.
pub fn norm_domination_estimate(
    tree: &CarlesonTree,
    p: f64,
    table: &MeasureTable,
) -> Result<NormDomination> {
    assert!(p > 0.0);
    assert!(table.depth() >= tree.depth());
    let norm = |value: &dyn Fn(SquareId) -> f64| -> f64 {
        let total: f64 = ids_up_to(tree.depth())
            .map(|id| value(id).powf(p) * table.mu_top(id))
            .sum();
        total.powf(1.0 / p)
    };
    let b = norm(&|id| tree.b_cum(id));
    let d_cum = norm(&|id| tree.d_cum(id));
    let d_raw = norm(&|id| tree.d(id));
    if d_raw == 0.0 {
        if b == 0.0 {
            return Ok(NormDomination { k_cumulative: 0.0, k_raw: 0.0 });
        }
        return Err(Error::ZeroDenominator(
            "d vanishes on every top half while B does not".into(),
        ));
    }
    Ok(NormDomination { k_cumulative: b / d_cum, k_raw: b / d_raw })
}

/// A random tree satisfying the fundamental inequality by construction:
/// `d` is folded-normal per node (with a per-tree decay profile) and
/// `b = u · (b_parent + d)` with `u` uniform in `[0, 1)`.
pub fn synthetic_tree(depth: u32, seed: u64) -> CarlesonTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let decay = 0.5 * rng.gen_range(0..3) as f64;
    let n = node_count(depth);
    let mut b = vec![0.0; n];
    let mut d = vec![0.0; n];
    for id in ids_up_to(depth) {
        let flat = ((1u64 << id.level()) - 1 + id.index()) as usize;
        let normal: f64 = StandardNormal.sample(&mut rng);
        d[flat] = normal.abs() * 0.5f64.powf(decay * id.level() as f64);
        let parent_b = id
            .parent()
            .map_or(0.0, |parent| b[((1u64 << parent.level()) - 1 + parent.index()) as usize]);
        b[flat] = rng.gen_range(0.0..1.0) * (parent_b + d[flat]);
    }
    CarlesonTree::from_values(depth, b, d).expect("generator produces valid values")
}
