//! Domain types and the closed-form physical-layer metrics: equivalent
//! channel, zero-forcing precoder, SINR, weighted sum-rate and transmit power.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Result, RisError};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Gram matrices with a Frobenius condition estimate above this are treated
/// as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// One Monte Carlo realization of the three links.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// BS to RIS, `N_s x M`.
    pub bs_ris: CMatrix,
    /// RIS to users, `N_s x K`; column `k` is `h_{r,k}`.
    pub ris_ue: CMatrix,
    /// BS to users, `M x K`; column `k` is `h_{d,k}`.
    pub bs_ue: CMatrix,
}

impl ChannelSet {
    pub fn new(bs_ris: CMatrix, ris_ue: CMatrix, bs_ue: CMatrix) -> Result<Self> {
        let ch = ChannelSet {
            bs_ris,
            ris_ue,
            bs_ue,
        };
        ch.check()?;
        Ok(ch)
    }

    fn check(&self) -> Result<()> {
        if self.bs_ris.nrows() != self.ris_ue.nrows() {
            return Err(RisError::invalid(format!(
                "BS-RIS has {} grid rows but RIS-UE has {}",
                self.bs_ris.nrows(),
                self.ris_ue.nrows()
            )));
        }
        if self.bs_ris.ncols() != self.bs_ue.nrows() {
            return Err(RisError::invalid(format!(
                "BS-RIS has {} antennas but BS-UE has {}",
                self.bs_ris.ncols(),
                self.bs_ue.nrows()
            )));
        }
        if self.ris_ue.ncols() != self.bs_ue.ncols() {
            return Err(RisError::invalid("RIS-UE and BS-UE disagree on user count"));
        }
        let finite = |m: &CMatrix| m.iter().all(|c| c.re.is_finite() && c.im.is_finite());
        if !(finite(&self.bs_ris) && finite(&self.ris_ue) && finite(&self.bs_ue)) {
            return Err(RisError::invalid("channel entries must be finite"));
        }
        Ok(())
    }

    pub fn grid_points(&self) -> usize {
        self.bs_ris.nrows()
    }

    pub fn antennas(&self) -> usize {
        self.bs_ris.ncols()
    }

    pub fn users(&self) -> usize {
        self.bs_ue.ncols()
    }

    /// Keeps only the grid points selected by `mask`, in index order. With the
    /// all-ones mask on the result this is the regular-surface channel.
    pub fn restrict(&self, mask: &TopologyMask) -> Result<ChannelSet> {
        if mask.len() != self.grid_points() {
            return Err(RisError::invalid("mask length differs from grid size"));
        }
        let rows = mask.active_indices();
        Ok(ChannelSet {
            bs_ris: self.bs_ris.select_rows(rows.iter()),
            ris_ue: self.ris_ue.select_rows(rows.iter()),
            bs_ue: self.bs_ue.clone(),
        })
    }
}

/// Binary grid-point selection `z`; `Z = diag(z)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TopologyMask {
    bits: Vec<bool>,
}

impl TopologyMask {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        TopologyMask { bits }
    }

    pub fn from_indices(len: usize, active: &[usize]) -> Result<Self> {
        let mut bits = vec![false; len];
        for &i in active {
            if i >= len {
                return Err(RisError::invalid(format!("index {i} outside grid of {len}")));
            }
            bits[i] = true;
        }
        Ok(TopologyMask { bits })
    }

    pub fn full(len: usize) -> Self {
        TopologyMask {
            bits: vec![true; len],
        }
    }

    pub fn empty(len: usize) -> Self {
        TopologyMask {
            bits: vec![false; len],
        }
    }

    /// The first `n` grid points: the regular-surface reference placement.
    pub fn leading(len: usize, n: usize) -> Self {
        TopologyMask {
            bits: (0..len).map(|i| i < n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_active(&self, n: usize) -> bool {
        self.bits[n]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn active_indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn inactive_indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| (!b).then_some(i))
            .collect()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.len(),
            self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }),
        ))
    }

    pub fn hamming(&self, other: &TopologyMask) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// Discrete reflection phases, stored as level indices into the quantized set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhaseConfig {
    bits: u32,
    levels: Vec<u32>,
}

impl PhaseConfig {
    pub fn new(bits: u32, levels: Vec<u32>) -> Result<Self> {
        if bits == 0 {
            return Err(RisError::invalid("phase bits must be at least 1"));
        }
        let count = 1u32 << bits;
        if let Some(l) = levels.iter().find(|&&l| l >= count) {
            return Err(RisError::invalid(format!(
                "phase level {l} outside 0..{count}"
            )));
        }
        Ok(PhaseConfig { bits, levels })
    }

    pub fn zeros(bits: u32, len: usize) -> Self {
        PhaseConfig {
            bits,
            levels: vec![0; len],
        }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn level(&self, n: usize) -> u32 {
        self.levels[n]
    }

    pub fn set_level(&mut self, n: usize, level: u32) {
        assert!(level < (1 << self.bits), "phase level out of range");
        self.levels[n] = level;
    }

    pub fn angle(&self, n: usize) -> f64 {
        level_angle(self.bits, self.levels[n])
    }

    /// Unit-modulus reflection coefficient `e^{j theta_n}`.
    pub fn coefficient(&self, n: usize) -> C64 {
        C64::from_polar(1.0, self.angle(n))
    }

    /// `Theta = diag(e^{j theta_1}, ..., e^{j theta_Ns})`.
    pub fn reflection_matrix(&self) -> CMatrix {
        CMatrix::from_diagonal(&DVector::from_iterator(
            self.len(),
            (0..self.len()).map(|n| self.coefficient(n)),
        ))
    }
}

fn level_angle(bits: u32, level: u32) -> f64 {
    2.0 * PI * f64::from(level) / f64::from(1u32 << bits)
}

/// The quantized phase set `{2 pi k / 2^b : k = 0..2^b-1}`, ascending.
pub fn quantized_phase_set(bits: u32) -> Result<Vec<f64>> {
    if bits == 0 || bits > 16 {
        return Err(RisError::invalid(format!("phase bits {bits} out of range 1..=16")));
    }
    Ok((0..1u32 << bits).map(|k| level_angle(bits, k)).collect())
}

/// BS precoder `W` (`M x K`) together with the per-user allocation `P_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    pub w: CMatrix,
    pub allocation: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    /// Weighted sum-rate in bit/s/Hz.
    pub wsr: f64,
    pub sinr: Vec<f64>,
    pub p_tx: f64,
    /// Number of (Z, Theta) evaluations spent producing this result.
    pub evaluations: u64,
    /// The equivalent channel could not be inverted.
    pub degenerate: bool,
}

/// Shared evaluation counter.
#[derive(Debug, Default)]
pub struct EvalCounter(AtomicU64);

impl EvalCounter {
    pub fn new() -> Self {
        EvalCounter(AtomicU64::new(0))
    }

    pub fn add(&self, n: u64) {
        self.0.fetch_add(n, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

/// `H_eq = H_r^H Z Theta G + H_d^H`, a `K x M` matrix. Inactive grid points
/// are skipped entirely.
pub fn equivalent_channel(
    ch: &ChannelSet,
    mask: &TopologyMask,
    phase: &PhaseConfig,
) -> Result<CMatrix> {
    let ns = ch.grid_points();
    if mask.len() != ns || phase.len() != ns {
        return Err(RisError::invalid(format!(
            "grid size {ns} but mask has {} and phase has {} entries",
            mask.len(),
            phase.len()
        )));
    }
    let mut h = ch.bs_ue.adjoint();
    for n in mask.active_indices() {
        let theta = phase.coefficient(n);
        for k in 0..ch.users() {
            let a = ch.ris_ue[(n, k)].conj() * theta;
            for m in 0..ch.antennas() {
                h[(k, m)] += a * ch.bs_ris[(n, m)];
            }
        }
    }
    Ok(h)
}

/// Inverts a Hermitian positive-definite matrix, rejecting it when the
/// Frobenius condition estimate exceeds [`MAX_CONDITION`].
pub fn hermitian_inverse(gram: &CMatrix) -> Result<CMatrix> {
    let chol = gram
        .clone()
        .cholesky()
        .ok_or(RisError::RankDeficient {
            condition: f64::INFINITY,
        })?;
    let inv = chol.inverse();
    let condition = gram.norm() * inv.norm();
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(RisError::RankDeficient { condition });
    }
    Ok(inv)
}

/// Unscaled ZF directions `H^H (H H^H)^{-1}`, `M x K`.
pub fn zf_directions(h_eq: &CMatrix) -> Result<CMatrix> {
    if h_eq.nrows() > h_eq.ncols() {
        return Err(RisError::RankDeficient {
            condition: f64::INFINITY,
        });
    }
    let gram = h_eq * h_eq.adjoint();
    let inv = hermitian_inverse(&gram)?;
    Ok(h_eq.adjoint() * inv)
}

fn scale_columns(v: CMatrix, allocation: &DVector<f64>) -> CMatrix {
    let mut w = v;
    for (k, &p) in allocation.iter().enumerate() {
        let s = p.sqrt();
        w.column_mut(k).iter_mut().for_each(|c| *c *= s);
    }
    w
}

/// `W = H^H (H H^H)^{-1} P_B^{1/2}` for the diagonal allocation `P_B`.
pub fn zf_precoder(h_eq: &CMatrix, allocation: &DVector<f64>) -> Result<Precoder> {
    if allocation.len() != h_eq.nrows() {
        return Err(RisError::invalid(format!(
            "allocation has {} entries for {} users",
            allocation.len(),
            h_eq.nrows()
        )));
    }
    if allocation.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(RisError::invalid("power allocation must be finite and nonnegative"));
    }
    let v = zf_directions(h_eq)?;
    Ok(Precoder {
        w: scale_columns(v, allocation),
        allocation: allocation.clone(),
    })
}

/// Equal per-user allocation rescaled by a common factor so that the ZF
/// precoder spends exactly `max_power`.
pub fn equal_power_allocation(h_eq: &CMatrix, max_power: f64) -> Result<DVector<f64>> {
    if !(max_power > 0.0) {
        return Err(RisError::invalid("P_max must be positive"));
    }
    let k = h_eq.nrows();
    let v = zf_directions(h_eq)?;
    let candidate = max_power / k as f64;
    let spent: f64 = v.column_iter().map(|c| candidate * c.norm_squared()).sum();
    let scale = max_power / spent;
    Ok(DVector::from_element(k, candidate * scale))
}

/// Per-user SINR from the general interference expression, valid for any
/// precoder.
pub fn sinr(h_eq: &CMatrix, precoder: &Precoder, noise_power: f64) -> Result<Vec<f64>> {
    if !(noise_power > 0.0) {
        return Err(RisError::invalid("noise power must be positive"));
    }
    let w = &precoder.w;
    if h_eq.ncols() != w.nrows() || h_eq.nrows() != w.ncols() {
        return Err(RisError::invalid(format!(
            "channel is {}x{} but precoder is {}x{}",
            h_eq.nrows(),
            h_eq.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    let gains = h_eq * w;
    let k = h_eq.nrows();
    Ok((0..k)
        .map(|u| {
            let signal = gains[(u, u)].norm_sqr();
            let interference: f64 = (0..k)
                .filter(|&i| i != u)
                .map(|i| gains[(u, i)].norm_sqr())
                .sum();
            signal / (interference + noise_power)
        })
        .collect())
}

/// `sum_k w_k log2(1 + sinr_k)`.
pub fn wsr(sinr: &[f64], weights: &[f64]) -> Result<f64> {
    if sinr.len() != weights.len() {
        return Err(RisError::invalid("SINR and weight vectors differ in length"));
    }
    if sinr.iter().any(|&g| !(g >= 0.0)) {
        return Err(RisError::invalid("SINR must be nonnegative"));
    }
    Ok(sinr
        .iter()
        .zip(weights)
        .map(|(&g, &w)| w * (1.0 + g).log2())
        .sum())
}

/// `P_T = sum_k ||w_k||^2`.
pub fn transmit_power(precoder: &Precoder) -> f64 {
    precoder.w.norm_squared()
}

/// Full pipeline: equivalent channel, equal-power ZF, SINR, WSR. A
/// rank-deficient channel scores zero and is flagged as degenerate.
pub fn evaluate(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    mask: &TopologyMask,
    phase: &PhaseConfig,
    counter: &EvalCounter,
) -> Result<EvaluationResult> {
    evaluate_with_precoder(cfg, ch, mask, phase, counter).map(|(_, r)| r)
}

pub fn evaluate_with_precoder(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    mask: &TopologyMask,
    phase: &PhaseConfig,
    counter: &EvalCounter,
) -> Result<(Option<Precoder>, EvaluationResult)> {
    let h_eq = equivalent_channel(ch, mask, phase)?;
    counter.add(1);
    let k = h_eq.nrows();
    let precoder = match equal_power_allocation(&h_eq, cfg.max_power)
        .and_then(|alloc| zf_precoder(&h_eq, &alloc))
    {
        Ok(p) => p,
        Err(RisError::RankDeficient { .. }) => {
            return Ok((
                None,
                EvaluationResult {
                    wsr: 0.0,
                    sinr: vec![0.0; k],
                    p_tx: 0.0,
                    evaluations: 1,
                    degenerate: true,
                },
            ))
        }
        Err(e) => return Err(e),
    };
    let gammas = sinr(&h_eq, &precoder, cfg.noise_power)?;
    let rate = wsr(&gammas, &cfg.weights)?;
    let result = EvaluationResult {
        wsr: rate,
        sinr: gammas,
        p_tx: transmit_power(&precoder),
        evaluations: 1,
        degenerate: false,
    };
    Ok((Some(precoder), result))
}
