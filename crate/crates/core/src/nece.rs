//! Neighbor-extraction cross-entropy (NECE) search over discrete RIS phases
//! for a fixed topology.
//!
//! Each iteration samples `C` phase vectors from a per-grid-point categorical
//! distribution, keeps the `C_pr` best as primary elites, scores every
//! single-element change of the best sample, and adds the ones that beat it
//! as supplementary elites. The distribution is then refit to the elites,
//! each weighted by its score relative to the elite mean.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::NeceParams;
use crate::error::{Result, RisError};
use crate::model::{EvaluationResult, PhaseConfig, Precoder, TopologyMask};
use crate::objective::{SearchContext, Workspace};
use crate::seed::StreamKey;

/// `delta(t)`: one exactly at zero.
pub fn indicator(t: f64) -> u8 {
    u8::from(t == 0.0)
}

/// Level-index form of the indicator, `delta(theta_n - F(k))`.
pub fn level_indicator(level: u32, k: u32) -> u8 {
    u8::from(level == k)
}

/// Column-stochastic `2^b x N_s` matrix; column `n` is the distribution of
/// the phase level at grid point `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    levels: usize,
    grid_points: usize,
    // column-major
    data: Vec<f64>,
}

impl ProbabilityMatrix {
    pub fn from_columns(levels: usize, columns: Vec<Vec<f64>>) -> Result<Self> {
        let grid_points = columns.len();
        let mut data = Vec::with_capacity(levels * grid_points);
        for c in columns {
            if c.len() != levels {
                return Err(RisError::invalid("probability column has wrong length"));
            }
            let s: f64 = c.iter().sum();
            if (s - 1.0).abs() > 1e-9 || c.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return Err(RisError::invalid("probability column is not a distribution"));
            }
            data.extend(c);
        }
        Ok(ProbabilityMatrix {
            levels,
            grid_points,
            data,
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    pub fn column(&self, n: usize) -> &[f64] {
        &self.data[n * self.levels..(n + 1) * self.levels]
    }

    pub fn get(&self, k: usize, n: usize) -> f64 {
        self.data[n * self.levels + k]
    }

    /// `ln Xi(Theta; P)`: log-likelihood of a phase vector.
    pub fn log_likelihood(&self, phase: &PhaseConfig) -> f64 {
        (0..self.grid_points)
            .map(|n| self.get(phase.level(n) as usize, n).ln())
            .sum()
    }
}

/// Uniform start, every entry `1 / 2^b`.
pub fn init_probability(bits: u32, grid_points: usize) -> ProbabilityMatrix {
    let levels = 1usize << bits;
    ProbabilityMatrix {
        levels,
        grid_points,
        data: vec![1.0 / levels as f64; levels * grid_points],
    }
}

fn sample_level<R: Rng + ?Sized>(column: &[f64], rng: &mut R) -> u32 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in column.iter().enumerate() {
        acc += p;
        if u < acc {
            return k as u32;
        }
    }
    // u landed in the rounding slack above the last cumulative sum
    column.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u32
}

/// Draws `count` phase vectors with independent per-grid-point levels.
pub fn sample_candidates<R: Rng + ?Sized>(p: &ProbabilityMatrix, count: usize, rng: &mut R) -> Vec<PhaseConfig> {
    let bits = p.levels.trailing_zeros();
    (0..count)
        .map(|_| {
            let levels = (0..p.grid_points).map(|n| sample_level(p.column(n), rng)).collect();
            PhaseConfig::new(bits, levels).expect("sampled level within range")
        })
        .collect()
}

/// Every copy of `best` with exactly one active entry moved to another level:
/// `N (2^b - 1)` configurations, ordered by grid point then level.
pub fn neighbor_extraction(best: &PhaseConfig, mask: &TopologyMask) -> Vec<PhaseConfig> {
    let levels = 1u32 << best.bits();
    let mut out = Vec::new();
    for n in mask.active_indices() {
        for l in (0..levels).filter(|&l| l != best.level(n)) {
            let mut c = best.clone();
            c.set_level(n, l);
            out.push(c);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct EliteSet {
    pub configs: Vec<PhaseConfig>,
    pub scores: Vec<f64>,
    /// `eta_c`; mean one.
    pub weights: Vec<f64>,
    pub primary: usize,
    pub supplementary: usize,
}

impl EliteSet {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }
}

/// Builds the elite set.
///
/// `primary` must be sorted by score, best first; the top `primary_count`
/// become primary elites. Every `neighbors` entry scoring strictly above
/// `best_primary` joins as a supplementary elite. Weights are
/// `fitness_c * C_elite / sum(fitness)`, uniform when all fitness is zero.
pub fn select_elites(
    primary: &[(PhaseConfig, f64)],
    neighbors: &[(PhaseConfig, f64)],
    primary_count: usize,
    best_primary: f64,
    fitness: impl Fn(f64) -> f64,
) -> Result<EliteSet> {
    if primary.len() < primary_count || primary_count == 0 {
        return Err(RisError::invalid(format!(
            "need {primary_count} scored candidates, have {}",
            primary.len()
        )));
    }
    let mut elites: Vec<(PhaseConfig, f64)> = primary[..primary_count].to_vec();
    let mut supplementary = 0;
    for (c, s) in neighbors {
        if *s > best_primary {
            elites.push((c.clone(), *s));
            supplementary += 1;
        }
    }
    elites.sort_by(|a, b| b.1.total_cmp(&a.1));
    let count = elites.len() as f64;
    let fit: Vec<f64> = elites.iter().map(|(_, s)| fitness(*s)).collect();
    let total: f64 = fit.iter().sum();
    let weights = if total > 0.0 && total.is_finite() {
        fit.iter().map(|f| f * count / total).collect()
    } else {
        vec![1.0; elites.len()]
    };
    let (configs, scores) = elites.into_iter().unzip();
    Ok(EliteSet {
        configs,
        scores,
        weights,
        primary: primary_count,
        supplementary,
    })
}

/// Weighted empirical level frequencies of the elites, which maximize the
/// weighted elite log-likelihood, then mixed with the uniform floor
/// `p <- (1 - L eps) p + eps` and renormalized.
pub fn update_probability(old: &ProbabilityMatrix, elites: &EliteSet, smoothing: f64) -> ProbabilityMatrix {
    assert!(!elites.is_empty(), "probability update needs at least one elite");
    let levels = old.levels;
    let total: f64 = elites.weights.iter().sum();
    let mut data = vec![0.0; old.data.len()];
    for (cfg, &w) in elites.configs.iter().zip(&elites.weights) {
        for n in 0..old.grid_points {
            data[n * levels + cfg.level(n) as usize] += w;
        }
    }
    let keep = 1.0 - levels as f64 * smoothing;
    for col in data.chunks_mut(levels) {
        col.iter_mut().for_each(|x| *x = keep * (*x / total) + smoothing);
        let s: f64 = col.iter().sum();
        col.iter_mut().for_each(|x| *x /= s);
    }
    ProbabilityMatrix {
        levels,
        grid_points: old.grid_points,
        data,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeceIteration {
    pub iteration: usize,
    pub best_sample: f64,
    pub best_neighbor: f64,
    pub incumbent: f64,
    pub supplementary: usize,
    pub evaluations: u64,
}

/// Result of an inner phase search.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSolution {
    pub phase: PhaseConfig,
    pub score: f64,
    pub evaluations: u64,
}

/// Anything that picks phases for a fixed topology.
pub trait PhaseOptimizer: Sync {
    fn optimize(&self, ctx: &SearchContext<'_>, mask: &TopologyMask, key: StreamKey) -> Result<PhaseSolution>;
}

#[derive(Debug, Clone)]
pub struct Nece {
    pub params: NeceParams,
}

impl Nece {
    pub fn new(params: NeceParams) -> Self {
        Nece { params }
    }

    /// Runs the search and also returns the per-iteration trace.
    pub fn run(
        &self,
        ctx: &SearchContext<'_>,
        mask: &TopologyMask,
        key: StreamKey,
    ) -> Result<(PhaseSolution, Vec<NeceIteration>)> {
        let params = &self.params;
        let bits = ctx.cfg.phase_bits;
        let ns = ctx.cfg.grid_points;
        if mask.len() != ns {
            return Err(RisError::invalid("mask length differs from N_s"));
        }
        if params.primary_elites == 0 || params.primary_elites > params.candidates {
            return Err(RisError::invalid("need 1 <= C_pr <= C"));
        }
        let active = mask.active_indices();
        let objective = &ctx.objective;
        let mut ws = Workspace::default();
        let mut prob = init_probability(bits, ns);
        let mut evaluations = 0u64;
        let mut incumbent: Option<(PhaseConfig, f64)> = None;
        let mut trace = Vec::with_capacity(params.iterations);

        for it in 0..params.iterations {
            let mut rng = key.index(it as u64).rng();
            let samples = sample_candidates(&prob, params.candidates, &mut rng);

            let mut cache: HashMap<Vec<u32>, f64> = HashMap::with_capacity(samples.len());
            let mut scored: Vec<(PhaseConfig, f64)> = Vec::with_capacity(samples.len());
            for c in samples {
                let signature: Vec<u32> = active.iter().map(|&n| c.level(n)).collect();
                let s = *cache.entry(signature).or_insert_with(|| {
                    evaluations += 1;
                    ctx.score(&active, c.levels(), &mut ws)
                });
                scored.push((c, s));
            }
            // stable: ties keep sampling order
            scored.sort_by(|a, b| b.1.total_cmp(&a.1));
            let (best, best_score) = scored[0].clone();

            let mut base = Vec::new();
            ctx.kernel.channel_into(&active, best.levels(), &mut base);
            let mut h = Vec::with_capacity(base.len());
            let neighbors: Vec<(PhaseConfig, f64)> = neighbor_extraction(&best, mask)
                .into_iter()
                .map(|c| {
                    let n = first_difference(&best, &c);
                    h.clear();
                    h.extend_from_slice(&base);
                    ctx.kernel.apply_flip(&mut h, n, best.level(n), c.level(n));
                    evaluations += 1;
                    let s = ctx.score_channel(&h, &mut ws);
                    (c, s)
                })
                .collect();

            let elites = select_elites(&scored, &neighbors, params.primary_elites, best_score, |s| {
                objective.fitness(s)
            })?;
            prob = update_probability(&prob, &elites, params.smoothing);

            let best_neighbor = neighbors
                .iter()
                .fold(None::<&(PhaseConfig, f64)>, |acc, x| match acc {
                    Some(a) if a.1 >= x.1 => Some(a),
                    _ => Some(x),
                });
            let mut round_best = (best, best_score);
            if let Some((c, s)) = best_neighbor {
                if *s > round_best.1 {
                    round_best = (c.clone(), *s);
                }
            }
            match &incumbent {
                Some((_, s)) if *s >= round_best.1 => {}
                _ => incumbent = Some(round_best),
            }
            trace.push(NeceIteration {
                iteration: it + 1,
                best_sample: best_score,
                best_neighbor: best_neighbor.map_or(f64::NEG_INFINITY, |x| x.1),
                incumbent: incumbent.as_ref().map_or(f64::NEG_INFINITY, |x| x.1),
                supplementary: elites.supplementary,
                evaluations,
            });
        }
        let (phase, score) = incumbent.expect("at least one iteration");
        Ok((
            PhaseSolution {
                phase,
                score,
                evaluations,
            },
            trace,
        ))
    }
}

fn first_difference(a: &PhaseConfig, b: &PhaseConfig) -> usize {
    a.levels()
        .iter()
        .zip(b.levels())
        .position(|(x, y)| x != y)
        .expect("neighbor differs in one entry")
}

impl PhaseOptimizer for Nece {
    fn optimize(&self, ctx: &SearchContext<'_>, mask: &TopologyMask, key: StreamKey) -> Result<PhaseSolution> {
        self.run(ctx, mask, key).map(|(s, _)| s)
    }
}

#[derive(Debug, Clone)]
pub struct NeceResult {
    pub phase: PhaseConfig,
    pub precoder: Option<Precoder>,
    pub evaluation: EvaluationResult,
    pub score: f64,
    pub trace: Vec<NeceIteration>,
}

/// Phase search for a fixed topology followed by a full evaluation of the
/// winner.
pub fn nece_optimize(
    ctx: &SearchContext<'_>,
    mask: &TopologyMask,
    params: &NeceParams,
    key: StreamKey,
) -> Result<NeceResult> {
    let (sol, trace) = Nece::new(params.clone()).run(ctx, mask, key)?;
    let (precoder, mut evaluation) = ctx.evaluate(mask, &sol.phase)?;
    evaluation.evaluations = sol.evaluations;
    Ok(NeceResult {
        phase: sol.phase,
        precoder,
        evaluation,
        score: sol.score,
        trace,
    })
}
