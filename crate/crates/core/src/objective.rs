//! Search objectives and the fast scoring path used inside the optimizers.
//!
//! Under ZF with equal power, every user sees `gamma = P / (sigma^2 tr((H H^H)^-1))`,
//! and with exact SINR targets the ZF power is `sigma^2 sum_k mu_k [(H H^H)^-1]_kk`.
//! Both only need the diagonal of the inverse Gram matrix, so the hot loop
//! builds `H_eq` from precomputed per-grid-point terms and factors a `K x K`
//! matrix. [`SearchContext::evaluate`] runs the full matrix pipeline instead
//! and is what reported results come from.

use crate::config::SystemConfig;
use crate::error::{Result, RisError};
use crate::model::{
    self, CMatrix, ChannelSet, EvalCounter, EvaluationResult, PhaseConfig, Precoder, TopologyMask, C64,
    MAX_CONDITION,
};
use crate::power::{self, SinrTargets};

#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// Maximize the weighted sum-rate at full power.
    SumRate {
        max_power: f64,
        noise_power: f64,
        weights: Vec<f64>,
    },
    /// Minimize transmit power subject to per-user SINR targets.
    MinPower { targets: Vec<f64>, noise_power: f64 },
}

impl Objective {
    pub fn sum_rate(cfg: &SystemConfig) -> Self {
        Objective::SumRate {
            max_power: cfg.max_power,
            noise_power: cfg.noise_power,
            weights: cfg.weights.clone(),
        }
    }

    pub fn min_power(cfg: &SystemConfig, targets: &SinrTargets) -> Result<Self> {
        if targets.len() != cfg.users {
            return Err(RisError::invalid(format!(
                "{} SINR targets for {} users",
                targets.len(),
                cfg.users
            )));
        }
        Ok(Objective::MinPower {
            targets: targets.values().to_vec(),
            noise_power: cfg.noise_power,
        })
    }

    /// Score of a degenerate (non-invertible) configuration.
    pub fn worst(&self) -> f64 {
        match self {
            Objective::SumRate { .. } => 0.0,
            Objective::MinPower { .. } => f64::NEG_INFINITY,
        }
    }

    /// Score from the diagonal of `(H H^H)^-1`; higher is better.
    pub fn score_from_inverse_diagonal(&self, diag: &[f64]) -> f64 {
        match self {
            Objective::SumRate {
                max_power,
                noise_power,
                weights,
            } => {
                let trace: f64 = diag.iter().sum();
                let gamma = max_power / (trace * noise_power);
                weights.iter().map(|w| w * (1.0 + gamma).log2()).sum()
            }
            Objective::MinPower {
                targets,
                noise_power,
            } => {
                let p: f64 = targets.iter().zip(diag).map(|(mu, d)| mu * d).sum();
                -noise_power * p
            }
        }
    }

    /// Nonnegative fitness used to weight elites: the rate itself, or the
    /// reciprocal power.
    pub fn fitness(&self, score: f64) -> f64 {
        match self {
            Objective::SumRate { .. } => score.max(0.0),
            Objective::MinPower { .. } => {
                if score.is_finite() && score < 0.0 {
                    -1.0 / score
                } else {
                    0.0
                }
            }
        }
    }

    /// The score a full evaluation corresponds to.
    pub fn score_of(&self, r: &EvaluationResult) -> f64 {
        if r.degenerate {
            return self.worst();
        }
        match self {
            Objective::SumRate { .. } => r.wsr,
            Objective::MinPower { .. } => -r.p_tx,
        }
    }
}

/// Writes the diagonal of `(H H^H)^-1` for a row-major `k x m` matrix into
/// `diag`. Returns `false` when the Gram matrix is not safely invertible.
pub fn gram_inverse_diagonal(h: &[C64], k: usize, m: usize, ws: &mut Workspace, diag: &mut [f64]) -> bool {
    if k > m {
        return false;
    }
    ws.ensure(k);
    let gram = &mut ws.gram;
    let mut gram_fro = 0.0;
    for i in 0..k {
        for j in 0..=i {
            let mut acc = C64::new(0.0, 0.0);
            let (ri, rj) = (&h[i * m..(i + 1) * m], &h[j * m..(j + 1) * m]);
            for t in 0..m {
                acc += ri[t] * rj[t].conj();
            }
            gram[i * k + j] = acc;
            gram_fro += if i == j { acc.norm_sqr() } else { 2.0 * acc.norm_sqr() };
        }
    }
    // In-place Cholesky on the lower triangle.
    for j in 0..k {
        let mut d = gram[j * k + j].re;
        for t in 0..j {
            d -= gram[j * k + t].norm_sqr();
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        gram[j * k + j] = C64::new(d, 0.0);
        for i in j + 1..k {
            let mut acc = gram[i * k + j];
            for t in 0..j {
                acc -= gram[i * k + t] * gram[j * k + t].conj();
            }
            gram[i * k + j] = acc / d;
        }
    }
    // Lower-triangular inverse of the factor.
    let inv = &mut ws.inv;
    inv.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
    for j in 0..k {
        inv[j * k + j] = C64::new(1.0 / gram[j * k + j].re, 0.0);
        for i in j + 1..k {
            let mut acc = C64::new(0.0, 0.0);
            for t in j..i {
                acc -= gram[i * k + t] * inv[t * k + j];
            }
            inv[i * k + j] = acc / gram[i * k + i].re;
        }
    }
    // (H H^H)^-1 = L^-H L^-1.
    let mut inv_fro = 0.0;
    for i in 0..k {
        for j in 0..=i {
            let mut acc = C64::new(0.0, 0.0);
            for l in i..k {
                acc += inv[l * k + i].conj() * inv[l * k + j];
            }
            if i == j {
                diag[i] = acc.re;
                inv_fro += acc.norm_sqr();
            } else {
                inv_fro += 2.0 * acc.norm_sqr();
            }
        }
    }
    let condition = (gram_fro * inv_fro).sqrt();
    condition.is_finite() && condition <= MAX_CONDITION
}

/// Scratch buffers for [`gram_inverse_diagonal`].
#[derive(Debug, Default, Clone)]
pub struct Workspace {
    gram: Vec<C64>,
    inv: Vec<C64>,
    diag: Vec<f64>,
    channel: Vec<C64>,
}

impl Workspace {
    fn ensure(&mut self, k: usize) {
        if self.gram.len() != k * k {
            self.gram = vec![C64::new(0.0, 0.0); k * k];
            self.inv = vec![C64::new(0.0, 0.0); k * k];
        }
    }
}

/// Per-grid-point rank-one terms `conj(h_r[n, k]) G[n, m]` and the direct
/// channel, flattened for fast recombination.
#[derive(Debug, Clone)]
pub struct CascadeKernel {
    users: usize,
    antennas: usize,
    terms: Vec<C64>,
    direct: Vec<C64>,
    phasors: Vec<C64>,
}

impl CascadeKernel {
    pub fn new(ch: &ChannelSet, bits: u32) -> Self {
        let (ns, k, m) = (ch.grid_points(), ch.users(), ch.antennas());
        let mut terms = Vec::with_capacity(ns * k * m);
        for n in 0..ns {
            for u in 0..k {
                let a = ch.ris_ue[(n, u)].conj();
                for t in 0..m {
                    terms.push(a * ch.bs_ris[(n, t)]);
                }
            }
        }
        let mut direct = Vec::with_capacity(k * m);
        for u in 0..k {
            for t in 0..m {
                direct.push(ch.bs_ue[(t, u)].conj());
            }
        }
        let levels = 1u32 << bits;
        let phasors = (0..levels)
            .map(|l| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * f64::from(l) / f64::from(levels)))
            .collect();
        CascadeKernel {
            users: k,
            antennas: m,
            terms,
            direct,
            phasors,
        }
    }

    pub fn block(&self) -> usize {
        self.users * self.antennas
    }

    /// Row-major `H_eq` restricted to the `active` grid points.
    pub fn channel_into(&self, active: &[usize], levels: &[u32], out: &mut Vec<C64>) {
        let b = self.block();
        out.clear();
        out.extend_from_slice(&self.direct);
        for &n in active {
            let ph = self.phasors[levels[n] as usize];
            let term = &self.terms[n * b..(n + 1) * b];
            for (o, t) in out.iter_mut().zip(term) {
                *o += ph * t;
            }
        }
    }

    /// Moves grid point `n` from level `from` to level `to` in an existing channel.
    pub fn apply_flip(&self, h: &mut [C64], n: usize, from: u32, to: u32) {
        let b = self.block();
        let delta = self.phasors[to as usize] - self.phasors[from as usize];
        for (o, t) in h.iter_mut().zip(&self.terms[n * b..(n + 1) * b]) {
            *o += delta * t;
        }
    }
}

/// Everything an optimizer needs to score configurations on one drop.
#[derive(Debug)]
pub struct SearchContext<'a> {
    pub cfg: &'a SystemConfig,
    pub channels: &'a ChannelSet,
    pub objective: Objective,
    pub kernel: CascadeKernel,
    pub counter: EvalCounter,
}

impl<'a> SearchContext<'a> {
    pub fn new(cfg: &'a SystemConfig, channels: &'a ChannelSet, objective: Objective) -> Result<Self> {
        if channels.grid_points() != cfg.grid_points
            || channels.antennas() != cfg.antennas
            || channels.users() != cfg.users
        {
            return Err(RisError::invalid(format!(
                "channels are N_s={} M={} K={} but config says N_s={} M={} K={}",
                channels.grid_points(),
                channels.antennas(),
                channels.users(),
                cfg.grid_points,
                cfg.antennas,
                cfg.users
            )));
        }
        Ok(SearchContext {
            cfg,
            channels,
            kernel: CascadeKernel::new(channels, cfg.phase_bits),
            objective,
            counter: EvalCounter::new(),
        })
    }

    pub fn evaluations(&self) -> u64 {
        self.counter.get()
    }

    /// Scores a row-major equivalent channel already built by the caller.
    pub fn score_channel(&self, h: &[C64], ws: &mut Workspace) -> f64 {
        self.counter.add(1);
        let k = self.cfg.users;
        let mut diag = std::mem::take(&mut ws.diag);
        diag.resize(k, 0.0);
        let ok = gram_inverse_diagonal(h, k, self.cfg.antennas, ws, &mut diag);
        let s = if ok {
            self.objective.score_from_inverse_diagonal(&diag)
        } else {
            self.objective.worst()
        };
        ws.diag = diag;
        s
    }

    /// Fast score of `(Z, Theta)` given the active indices of `Z`.
    pub fn score(&self, active: &[usize], levels: &[u32], ws: &mut Workspace) -> f64 {
        let mut h = std::mem::take(&mut ws.channel);
        self.kernel.channel_into(active, levels, &mut h);
        let s = self.score_channel(&h, ws);
        ws.channel = h;
        s
    }

    /// Full-matrix evaluation through the precoder, SINR and rate pipeline.
    pub fn evaluate(&self, mask: &TopologyMask, phase: &PhaseConfig) -> Result<(Option<Precoder>, EvaluationResult)> {
        match &self.objective {
            Objective::SumRate { .. } => {
                model::evaluate_with_precoder(self.cfg, self.channels, mask, phase, &self.counter)
            }
            Objective::MinPower { targets, .. } => {
                let targets = SinrTargets::new(targets.clone())?;
                power::evaluate_min_power(self.cfg, self.channels, mask, phase, &targets, &self.counter)
            }
        }
    }

    pub fn equivalent_channel(&self, mask: &TopologyMask, phase: &PhaseConfig) -> Result<CMatrix> {
        model::equivalent_channel(self.channels, mask, phase)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_drop;
    use crate::model::{evaluate, zf_directions};
    use crate::seed::StreamKey;
    use rand::Rng;

    #[test]
    fn inverse_diagonal_matches_dense_inverse() {
        let mut rng = StreamKey::root(5).rng();
        let mut ws = Workspace::default();
        for (k, m) in [(1, 1), (2, 2), (2, 4), (4, 4), (3, 7)] {
            let h: Vec<C64> = (0..k * m)
                .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let dense = CMatrix::from_row_slice(k, m, &h);
            let inv = (&dense * dense.adjoint()).try_inverse().unwrap();
            let mut diag = vec![0.0; k];
            assert!(gram_inverse_diagonal(&h, k, m, &mut ws, &mut diag));
            for i in 0..k {
                assert!((diag[i] - inv[(i, i)].re).abs() < 1e-10 * inv[(i, i)].re);
            }
        }
    }

    #[test]
    fn singular_gram_is_flagged() {
        let mut ws = Workspace::default();
        let row = [C64::new(1.0, 2.0), C64::new(-0.5, 0.1)];
        let h = [row[0], row[1], row[0] * 2.0, row[1] * 2.0];
        let mut diag = vec![0.0; 2];
        assert!(!gram_inverse_diagonal(&h, 2, 2, &mut ws, &mut diag));
        assert!(!gram_inverse_diagonal(&h, 2, 1, &mut ws, &mut diag));
    }

    #[test]
    fn fast_score_agrees_with_full_pipeline() {
        let cfg = SystemConfig::with_dims(4, 4, 8, 16);
        let (_, ch) = draw_drop(&cfg, 0).unwrap();
        let ctx = SearchContext::new(&cfg, &ch, Objective::sum_rate(&cfg)).unwrap();
        let mut rng = StreamKey::root(6).rng();
        let mut ws = Workspace::default();
        for _ in 0..50 {
            let mut idx: Vec<usize> = (0..16).collect();
            rand::seq::SliceRandom::shuffle(idx.as_mut_slice(), &mut rng);
            let mask = TopologyMask::from_indices(16, &idx[..8]).unwrap();
            let phase = PhaseConfig::new(1, (0..16).map(|_| rng.random_range(0..2)).collect()).unwrap();
            let fast = ctx.score(&mask.active_indices(), phase.levels(), &mut ws);
            let full = evaluate(&cfg, &ch, &mask, &phase, &EvalCounter::new()).unwrap();
            assert!((fast - full.wsr).abs() < 1e-9 * full.wsr, "{fast} vs {}", full.wsr);

            // the fast channel equals the dense one
            let mut h = Vec::new();
            ctx.kernel.channel_into(&mask.active_indices(), phase.levels(), &mut h);
            let dense = ctx.equivalent_channel(&mask, &phase).unwrap();
            for k in 0..4 {
                for m in 0..4 {
                    assert!((h[k * 4 + m] - dense[(k, m)]).norm() < 1e-12 * dense.norm());
                }
            }
        }
    }

    #[test]
    fn flip_update_matches_rebuild() {
        let cfg = SystemConfig::with_dims(4, 2, 8, 16);
        let (_, ch) = draw_drop(&cfg, 1).unwrap();
        let kernel = CascadeKernel::new(&ch, 2);
        let active: Vec<usize> = (0..16).step_by(2).collect();
        let mut levels = vec![0u32; 16];
        let mut h = Vec::new();
        kernel.channel_into(&active, &levels, &mut h);
        kernel.apply_flip(&mut h, 4, 0, 3);
        levels[4] = 3;
        let mut rebuilt = Vec::new();
        kernel.channel_into(&active, &levels, &mut rebuilt);
        for (a, b) in h.iter().zip(&rebuilt) {
            assert!((a - b).norm() < 1e-15 + 1e-12 * b.norm());
        }
    }

    #[test]
    fn power_score_matches_direction_norms() {
        let cfg = SystemConfig::with_dims(4, 3, 4, 8);
        let (_, ch) = draw_drop(&cfg, 2).unwrap();
        let targets = SinrTargets::new(vec![1.0, 2.0, 4.0]).unwrap();
        let ctx = SearchContext::new(&cfg, &ch, Objective::min_power(&cfg, &targets).unwrap()).unwrap();
        let mask = TopologyMask::leading(8, 4);
        let phase = PhaseConfig::zeros(1, 8);
        let mut ws = Workspace::default();
        let fast = ctx.score(&mask.active_indices(), phase.levels(), &mut ws);
        let v = zf_directions(&ctx.equivalent_channel(&mask, &phase).unwrap()).unwrap();
        let p: f64 = (0..3).map(|k| targets.values()[k] * cfg.noise_power * v.column(k).norm_squared()).sum();
        assert!((fast + p).abs() < 1e-9 * p);
    }
}
