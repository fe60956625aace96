//! Exhaustive search over every topology and active-element phase assignment,
//! and the search-count formulas it is compared against.

use num_bigint::BigUint;
use rayon::prelude::*;

use crate::config::SystemConfig;
use crate::error::{Result, RisError};
use crate::model::{EvaluationResult, PhaseConfig, Precoder, TopologyMask};
use crate::objective::{SearchContext, Workspace};

/// Largest exhaustive search the oracle will attempt.
pub const DEFAULT_CAP: u64 = 100_000_000;

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Complexity {
    /// `C(N_s, N) * 2^(bN)`.
    pub exhaustive: BigUint,
    /// `Q I_T I_N (C + N (2^b - 1))`.
    pub proposed: BigUint,
}

pub fn predict_complexity(cfg: &SystemConfig) -> Complexity {
    let n = cfg.elements as u64;
    let phases = BigUint::from(1u32) << (u64::from(cfg.phase_bits) * n);
    let exhaustive = binomial(cfg.grid_points as u64, n) * phases;
    let per_iteration = cfg.nece.candidates as u64 + n * ((1u64 << cfg.phase_bits) - 1);
    let proposed = BigUint::from(cfg.ats.neighbors as u64)
        * BigUint::from(cfg.ats.iterations as u64)
        * BigUint::from(cfg.nece.iterations as u64)
        * BigUint::from(per_iteration);
    Complexity { exhaustive, proposed }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchBudget {
    pub topologies_searched: u64,
    pub phase_combos_searched: u64,
    pub predicted_exhaustive: BigUint,
    pub predicted_proposed: BigUint,
}

#[derive(Debug, Clone)]
pub struct ExhaustiveResult {
    pub mask: TopologyMask,
    pub phase: PhaseConfig,
    pub precoder: Option<Precoder>,
    pub evaluation: EvaluationResult,
    pub score: f64,
    pub budget: SearchBudget,
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Best phase assignment over the active elements of one mask, phases
/// enumerated lexicographically with the first active element most
/// significant. Returns (score, phase index, count).
fn best_phases(ctx: &SearchContext<'_>, active: &[usize], ws: &mut Workspace) -> (f64, u64, u64) {
    let bits = ctx.cfg.phase_bits;
    let levels = 1u64 << bits;
    let total = levels.pow(active.len() as u32);
    let mut phase = vec![0u32; ctx.cfg.grid_points];
    let mut best = (f64::NEG_INFINITY, 0u64);
    for idx in 0..total {
        let mut rest = idx;
        for &n in active.iter().rev() {
            phase[n] = (rest % levels) as u32;
            rest /= levels;
        }
        let s = ctx.score(active, &phase, ws);
        if s > best.0 {
            best = (s, idx);
        }
    }
    (best.0, best.1, total)
}

fn decode_phase(ctx: &SearchContext<'_>, active: &[usize], idx: u64) -> PhaseConfig {
    let levels = 1u64 << ctx.cfg.phase_bits;
    let mut phase = PhaseConfig::zeros(ctx.cfg.phase_bits, ctx.cfg.grid_points);
    let mut rest = idx;
    for &n in active.iter().rev() {
        phase.set_level(n, (rest % levels) as u32);
        rest /= levels;
    }
    phase
}

/// Global optimum of the context's objective over `(Z, Theta)`, with inactive
/// phases pinned to level 0. Ties resolve to the first configuration in
/// enumeration order. Refuses when the search would exceed `cap` evaluations.
pub fn exhaustive_search(ctx: &SearchContext<'_>, cap: u64) -> Result<ExhaustiveResult> {
    let cfg = ctx.cfg;
    let predicted = predict_complexity(cfg);
    if predicted.exhaustive > BigUint::from(cap) {
        return Err(RisError::BudgetExceeded {
            predicted: predicted.exhaustive,
            cap,
        });
    }
    let masks = combinations(cfg.grid_points, cfg.elements);
    let per_mask: Vec<(f64, u64, u64)> = masks
        .par_iter()
        .map_init(Workspace::default, |ws, active| best_phases(ctx, active, ws))
        .collect();
    let mut best: Option<(usize, f64, u64)> = None;
    for (i, &(s, idx, _)) in per_mask.iter().enumerate() {
        if best.is_none_or(|b| s > b.1) {
            best = Some((i, s, idx));
        }
    }
    let combos: u64 = per_mask.iter().map(|x| x.2).sum();
    let (mi, score, pidx) = best.expect("at least one topology");
    let active = &masks[mi];
    let mask = TopologyMask::from_indices(cfg.grid_points, active)?;
    let phase = decode_phase(ctx, active, pidx);
    let (precoder, mut evaluation) = ctx.evaluate(&mask, &phase)?;
    evaluation.evaluations = combos;
    Ok(ExhaustiveResult {
        mask,
        phase,
        precoder,
        evaluation,
        score,
        budget: SearchBudget {
            topologies_searched: masks.len() as u64,
            phase_combos_searched: combos,
            predicted_exhaustive: predicted.exhaustive,
            predicted_proposed: predicted.proposed,
        },
    })
}

/// Exhaustive phase search for a fixed topology.
pub fn exhaustive_phases(ctx: &SearchContext<'_>, mask: &TopologyMask) -> Result<(PhaseConfig, f64)> {
    let active = mask.active_indices();
    let (score, idx, _) = best_phases(ctx, &active, &mut Workspace::default());
    Ok((decode_phase(ctx, &active, idx), score))
}
