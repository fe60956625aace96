//! Successive-refinement phase baseline: coordinate descent over the active
//! elements, one element at a time.

use irris_core::model::{ChannelSet, EvaluationResult, PhaseConfig, Precoder, TopologyMask};
use irris_core::nece::{PhaseOptimizer, PhaseSolution};
use irris_core::objective::{Objective, SearchContext, Workspace};
use irris_core::{Result, StreamKey, SystemConfig};

pub const DEFAULT_PASSES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuccessiveRefinement {
    pub max_passes: usize,
}

impl Default for SuccessiveRefinement {
    fn default() -> Self {
        SuccessiveRefinement {
            max_passes: DEFAULT_PASSES,
        }
    }
}

impl SuccessiveRefinement {
    /// Runs from the all-zero phase. Returns the solution and the number of
    /// passes made.
    pub fn run(&self, ctx: &SearchContext<'_>, mask: &TopologyMask) -> (PhaseSolution, usize) {
        let levels = ctx.cfg.levels() as u32;
        let active = mask.active_indices();
        let mut phase = PhaseConfig::zeros(ctx.cfg.phase_bits, ctx.cfg.grid_points);
        let mut ws = Workspace::default();
        let mut h = Vec::new();
        ctx.kernel.channel_into(&active, phase.levels(), &mut h);
        let mut score = ctx.score_channel(&h, &mut ws);
        let mut evaluations = 1u64;
        let mut probe = Vec::with_capacity(h.len());
        let mut passes = 0;
        while passes < self.max_passes {
            passes += 1;
            let mut improved = false;
            for &n in &active {
                let current = phase.level(n);
                let mut best = (current, score);
                for l in (0..levels).filter(|&l| l != current) {
                    probe.clear();
                    probe.extend_from_slice(&h);
                    ctx.kernel.apply_flip(&mut probe, n, current, l);
                    let s = ctx.score_channel(&probe, &mut ws);
                    evaluations += 1;
                    if s > best.1 {
                        best = (l, s);
                    }
                }
                if best.0 != current {
                    ctx.kernel.apply_flip(&mut h, n, current, best.0);
                    phase.set_level(n, best.0);
                    score = best.1;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        (
            PhaseSolution {
                phase,
                score,
                evaluations,
            },
            passes,
        )
    }
}

impl PhaseOptimizer for SuccessiveRefinement {
    fn optimize(&self, ctx: &SearchContext<'_>, mask: &TopologyMask, _key: StreamKey) -> Result<PhaseSolution> {
        Ok(self.run(ctx, mask).0)
    }
}

/// Sum-rate refinement for a fixed topology, followed by a full evaluation.
pub fn sr_baseline(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    mask: &TopologyMask,
) -> Result<(PhaseConfig, Option<Precoder>, EvaluationResult)> {
    let ctx = SearchContext::new(cfg, ch, Objective::sum_rate(cfg))?;
    let (sol, _) = SuccessiveRefinement::default().run(&ctx, mask);
    let (precoder, mut eval) = ctx.evaluate(mask, &sol.phase)?;
    eval.evaluations = sol.evaluations;
    Ok((sol.phase, precoder, eval))
}
