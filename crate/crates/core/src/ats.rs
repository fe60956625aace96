//! Adaptive tabu search (ATS) over RIS topologies.
//!
//! The current topology moves every iteration to the best of `Q` non-tabu
//! neighbors, each obtained by swapping `p` active grid points for `p`
//! inactive ones, even when that neighbor is worse than the incumbent. The
//! swap distance `p` shrinks as the search progresses.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RisError};
use crate::model::{EvaluationResult, PhaseConfig, Precoder, TopologyMask};
use crate::nece::{PhaseOptimizer, PhaseSolution};
use crate::objective::SearchContext;
use crate::seed::StreamKey;

/// Piecewise-constant neighbor distance, as `(first iteration, p)` steps with
/// 1-based iterations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PSchedule {
    steps: Vec<(usize, usize)>,
}

impl PSchedule {
    pub fn constant(p: usize) -> Self {
        PSchedule { steps: vec![(1, p)] }
    }

    pub fn from_steps(mut steps: Vec<(usize, usize)>) -> Result<Self> {
        if steps.is_empty() {
            return Err(RisError::invalid("empty p schedule"));
        }
        steps.sort_by_key(|s| s.0);
        steps[0].0 = 1;
        if steps.iter().any(|s| s.1 == 0) {
            return Err(RisError::invalid("neighbor distance must be at least 1"));
        }
        if steps.windows(2).any(|w| w[1].1 > w[0].1) {
            return Err(RisError::invalid("p schedule must be nonincreasing"));
        }
        Ok(PSchedule { steps })
    }

    /// Two steps scaled by the element count: `round(3N/32)` for the first
    /// half of the iterations and `round(2N/32)` afterwards, each at least 1.
    /// `N = 32` gives 3 then 2.
    pub fn adaptive(elements: usize, grid_points: usize, iterations: usize) -> Self {
        let cap = elements.min(grid_points.saturating_sub(elements)).max(1);
        let scaled = |f: f64| ((f * elements as f64 / 32.0).round() as usize).clamp(1, cap);
        let early = scaled(3.0);
        let late = scaled(2.0).min(early);
        let half = (iterations / 2).max(1);
        if late == early || half <= 1 {
            PSchedule::constant(early)
        } else {
            PSchedule {
                steps: vec![(1, early), (half, late)],
            }
        }
    }

    pub fn steps(&self) -> &[(usize, usize)] {
        &self.steps
    }

    /// Distance for iteration `i`, clamped to what the mask admits.
    pub fn distance_at(&self, i: usize, elements: usize, grid_points: usize) -> usize {
        let raw = self
            .steps
            .iter()
            .take_while(|s| s.0 <= i)
            .last()
            .map_or(self.steps[0].1, |s| s.1);
        raw.min(elements.min(grid_points.saturating_sub(elements)))
    }

    pub fn validate(&self, elements: usize, grid_points: usize) -> Result<()> {
        let cap = elements.min(grid_points.saturating_sub(elements));
        if cap > 0 && self.steps[0].1 > cap {
            return Err(RisError::invalid(format!(
                "neighbor distance {} exceeds min(N, N_s - N) = {cap}",
                self.steps[0].1
            )));
        }
        Ok(())
    }
}

/// FIFO of recently visited topologies.
#[derive(Debug, Clone)]
pub struct TabuList {
    capacity: usize,
    entries: VecDeque<TopologyMask>,
}

impl TabuList {
    pub fn new(capacity: usize) -> Self {
        TabuList {
            capacity: capacity.max(1),
            entries: VecDeque::with_capacity(capacity.max(1)),
        }
    }

    pub fn push(&mut self, mask: TopologyMask) {
        if self.entries.len() >= self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(mask);
    }

    pub fn contains(&self, mask: &TopologyMask) -> bool {
        self.entries.iter().any(|m| m == mask)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TopologyMask> {
        self.entries.iter()
    }
}

/// Uniformly random mask with `elements` ones.
pub fn random_topology<R: Rng + ?Sized>(elements: usize, grid_points: usize, rng: &mut R) -> Result<TopologyMask> {
    if elements > grid_points {
        return Err(RisError::invalid(format!(
            "cannot place {elements} elements on {grid_points} grid points"
        )));
    }
    let mut idx: Vec<usize> = (0..grid_points).collect();
    let (chosen, _) = idx.partial_shuffle(rng, elements);
    TopologyMask::from_indices(grid_points, chosen)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborBatch {
    pub masks: Vec<TopologyMask>,
    /// Fewer than the requested count were found within the retry budget.
    pub short: bool,
}

/// Draws up to `count` distinct non-tabu masks, each `p` swaps away from
/// `mask`, giving up after `retry_factor * count` attempts.
pub fn generate_neighbors<R: Rng + ?Sized>(
    mask: &TopologyMask,
    p: usize,
    count: usize,
    tabu: &TabuList,
    retry_factor: usize,
    rng: &mut R,
) -> Result<NeighborBatch> {
    let mut ones = mask.active_indices();
    let mut zeros = mask.inactive_indices();
    if p == 0 || p > ones.len() || p > zeros.len() {
        if p == 0 && (ones.is_empty() || zeros.is_empty()) {
            return Ok(NeighborBatch {
                masks: Vec::new(),
                short: count > 0,
            });
        }
        return Err(RisError::invalid(format!(
            "distance {p} outside 1..=min({}, {})",
            ones.len(),
            zeros.len()
        )));
    }
    let mut masks: Vec<TopologyMask> = Vec::with_capacity(count);
    let mut attempts = 0;
    let budget = retry_factor.max(1) * count;
    while masks.len() < count && attempts < budget {
        attempts += 1;
        let (off, _) = ones.partial_shuffle(rng, p);
        let off = off.to_vec();
        let (on, _) = zeros.partial_shuffle(rng, p);
        let mut bits = mask.bits().to_vec();
        for &i in &off {
            bits[i] = false;
        }
        for &i in on.iter() {
            bits[i] = true;
        }
        let cand = TopologyMask::from_bits(bits);
        if !tabu.contains(&cand) && !masks.contains(&cand) {
            masks.push(cand);
        }
    }
    Ok(NeighborBatch {
        short: masks.len() < count,
        masks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtsIteration {
    pub iteration: usize,
    pub distance: usize,
    pub candidates: usize,
    pub short: bool,
    /// Score of the move taken this iteration.
    pub best_candidate: f64,
    pub incumbent: f64,
    pub evaluations: u64,
}

#[derive(Debug, Clone)]
pub struct AtsResult {
    pub mask: TopologyMask,
    pub phase: PhaseConfig,
    pub precoder: Option<Precoder>,
    pub evaluation: EvaluationResult,
    pub score: f64,
    pub trace: Vec<AtsIteration>,
    pub topologies_scored: u64,
    /// Phase-search evaluations across all topologies.
    pub evaluations: u64,
}

/// Tabu search over topologies with `inner` choosing phases per topology.
///
/// With `screening` set, neighbors are ranked with the screening optimizer
/// and only the chosen move is re-scored by `inner`.
pub fn ats_optimize(
    ctx: &SearchContext<'_>,
    inner: &dyn PhaseOptimizer,
    screening: Option<&dyn PhaseOptimizer>,
    key: StreamKey,
) -> Result<AtsResult> {
    let cfg = ctx.cfg;
    let params = &cfg.ats;
    let (n, ns) = (cfg.elements, cfg.grid_points);
    let schedule = cfg.schedule();
    let inner_key = key.tag("inner");

    let mut current = random_topology(n, ns, &mut key.tag("init").rng())?;
    let first = inner.optimize(ctx, &current, inner_key.index(0))?;
    let mut evaluations = first.evaluations;
    let mut topologies_scored = 1u64;
    let mut incumbent = (current.clone(), first);
    let mut tabu = TabuList::new(params.tabu_size);
    let mut trace = Vec::with_capacity(params.iterations);

    for i in 1..=params.iterations {
        let p = schedule.distance_at(i, n, ns);
        let mut rng = key.tag("neighbors").index(i as u64).rng();
        let batch = generate_neighbors(&current, p, params.neighbors, &tabu, params.retry_factor, &mut rng)?;
        let scorer = screening.unwrap_or(inner);
        let iter_key = inner_key.index(i as u64);
        let solutions: Vec<PhaseSolution> = batch
            .masks
            .par_iter()
            .enumerate()
            .map(|(q, m)| scorer.optimize(ctx, m, iter_key.index(q as u64)))
            .collect::<Result<_>>()?;
        topologies_scored += solutions.len() as u64;
        evaluations += solutions.iter().map(|s| s.evaluations).sum::<u64>();

        let chosen = solutions
            .iter()
            .enumerate()
            .fold(None::<(usize, f64)>, |acc, (q, s)| match acc {
                Some((_, best)) if best >= s.score => acc,
                _ => Some((q, s.score)),
            });
        let mut best_candidate = f64::NEG_INFINITY;
        if let Some((q, _)) = chosen {
            let next = batch.masks[q].clone();
            let mut sol = solutions[q].clone();
            if screening.is_some() {
                sol = inner.optimize(ctx, &next, iter_key.tag("rescore"))?;
                evaluations += sol.evaluations;
                topologies_scored += 1;
            }
            best_candidate = sol.score;
            if sol.score > incumbent.1.score {
                incumbent = (next.clone(), sol);
            }
            tabu.push(std::mem::replace(&mut current, next));
        } else {
            tabu.push(current.clone());
        }
        trace.push(AtsIteration {
            iteration: i,
            distance: p,
            candidates: batch.masks.len(),
            short: batch.short,
            best_candidate,
            incumbent: incumbent.1.score,
            evaluations,
        });
    }

    let (mask, sol) = incumbent;
    let (precoder, mut evaluation) = ctx.evaluate(&mask, &sol.phase)?;
    evaluation.evaluations = evaluations;
    Ok(AtsResult {
        mask,
        phase: sol.phase,
        precoder,
        evaluation,
        score: sol.score,
        trace,
        topologies_scored,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::StreamKey;

    #[test]
    fn schedule_for_32_of_64() {
        let s = PSchedule::adaptive(32, 64, 40);
        assert_eq!(s.distance_at(1, 32, 64), 3);
        assert_eq!(s.distance_at(19, 32, 64), 3);
        assert_eq!(s.distance_at(20, 32, 64), 2);
        assert_eq!(s.distance_at(40, 32, 64), 2);
    }

    #[test]
    fn schedule_respects_mask_limits() {
        let s = PSchedule::adaptive(8, 16, 40);
        assert_eq!(s.distance_at(1, 8, 16), 1);
        let s = PSchedule::adaptive(60, 64, 40);
        for i in 1..=40 {
            assert!(s.distance_at(i, 60, 64) <= 4);
        }
        assert_eq!(PSchedule::constant(3).distance_at(5, 2, 4), 2);
        assert_eq!(PSchedule::constant(3).distance_at(5, 4, 4), 0);
        assert!(PSchedule::from_steps(vec![(1, 2), (5, 3)]).is_err());
        assert!(PSchedule::constant(5).validate(2, 4).is_err());
    }

    #[test]
    fn tabu_is_fifo() {
        let mut t = TabuList::new(2);
        let m = |i| TopologyMask::from_indices(4, &[i]).unwrap();
        t.push(m(0));
        t.push(m(1));
        t.push(m(2));
        assert_eq!(t.len(), 2);
        assert!(!t.contains(&m(0)));
        assert!(t.contains(&m(1)) && t.contains(&m(2)));
    }

    #[test]
    fn random_topology_edges() {
        let mut rng = StreamKey::root(1).rng();
        assert_eq!(random_topology(4, 4, &mut rng).unwrap(), TopologyMask::full(4));
        assert_eq!(random_topology(0, 4, &mut rng).unwrap(), TopologyMask::empty(4));
        assert!(random_topology(5, 4, &mut rng).is_err());
        for _ in 0..100 {
            assert_eq!(random_topology(7, 20, &mut rng).unwrap().count(), 7);
        }
    }

    #[test]
    fn random_topology_is_uniform() {
        let mut rng = StreamKey::root(2).rng();
        let mut counts = [0usize; 4];
        let n = 100_000;
        for _ in 0..n {
            let m = random_topology(1, 4, &mut rng).unwrap();
            counts[m.active_indices()[0]] += 1;
        }
        for c in counts {
            let f = c as f64 / n as f64;
            assert!((f - 0.25).abs() < 0.02 * 0.25, "{f}");
        }
    }

    #[test]
    fn single_swap_neighbor() {
        let z = TopologyMask::from_bits(vec![true, false]);
        let mut rng = StreamKey::root(3).rng();
        let b = generate_neighbors(&z, 1, 3, &TabuList::new(1), 50, &mut rng).unwrap();
        assert_eq!(b.masks, vec![TopologyMask::from_bits(vec![false, true])]);
        assert!(b.short);
    }

    #[test]
    fn neighbors_are_swap_distance_p() {
        let z = TopologyMask::from_indices(4, &[0, 2]).unwrap();
        // all masks at one swap from z, by enumeration
        let mut expected = Vec::new();
        for off in [0, 2] {
            for on in [1, 3] {
                let mut bits = z.bits().to_vec();
                bits[off] = false;
                bits[on] = true;
                expected.push(TopologyMask::from_bits(bits));
            }
        }
        let mut rng = StreamKey::root(4).rng();
        let b = generate_neighbors(&z, 1, 10, &TabuList::new(1), 50, &mut rng).unwrap();
        assert_eq!(b.masks.len(), 4);
        for m in &b.masks {
            assert!(expected.contains(m));
            assert_eq!(m.count(), 2);
            assert_eq!(m.hamming(&z), 2);
        }
        let mut tabu = TabuList::new(1);
        tabu.push(expected[0].clone());
        let b = generate_neighbors(&z, 1, 10, &tabu, 50, &mut rng).unwrap();
        assert_eq!(b.masks.len(), 3);
        assert!(!b.masks.contains(&expected[0]));

        let z = TopologyMask::from_indices(64, &(0..32).collect::<Vec<_>>()).unwrap();
        let b = generate_neighbors(&z, 3, 15, &TabuList::new(1), 50, &mut rng).unwrap();
        assert_eq!(b.masks.len(), 15);
        assert!(b.masks.iter().all(|m| m.count() == 32 && m.hamming(&z) == 6));
    }
}
