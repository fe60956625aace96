//! Transmit-power minimization under per-user SINR targets.
//!
//! Within the ZF family, user `k` sees `gamma_k = p_k / sigma^2`, so meeting a
//! target exactly needs `p_k = mu_k sigma^2` and the search reduces to
//! choosing `(Z, Theta)` with the smallest resulting `sum_k ||w_k||^2`.

use nalgebra::DVector;

use crate::ats::{ats_optimize, AtsIteration};
use crate::config::{db_to_linear, SystemConfig};
use crate::error::{Result, RisError};
use crate::model::{
    equivalent_channel, sinr, transmit_power, wsr, zf_precoder, CMatrix, ChannelSet, EvalCounter,
    EvaluationResult, PhaseConfig, Precoder, TopologyMask,
};
use crate::nece::{Nece, PhaseOptimizer};
use crate::objective::{Objective, SearchContext};
use crate::seed::StreamKey;

/// Linear SINR targets `mu_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrTargets(Vec<f64>);

impl SinrTargets {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(RisError::invalid("SINR targets must be positive and finite"));
        }
        Ok(SinrTargets(values))
    }

    pub fn from_db(db: &[f64]) -> Result<Self> {
        SinrTargets::new(db.iter().map(|&d| db_to_linear(d)).collect())
    }

    pub fn uniform_db(users: usize, db: f64) -> Result<Self> {
        SinrTargets::from_db(&vec![db; users])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        SinrTargets::new(self.0.iter().map(|m| m * factor).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    /// `None` when the channel cannot be zero-forced.
    pub precoder: Option<Precoder>,
    /// Required power; `+inf` when infeasible.
    pub p_tx: f64,
}

impl PowerAllocation {
    pub fn feasible(&self) -> bool {
        self.precoder.is_some()
    }
}

/// ZF directions with `p_k = mu_k sigma^2`: the cheapest ZF precoder meeting
/// every target exactly.
pub fn min_power_allocation(h_eq: &CMatrix, targets: &SinrTargets, noise_power: f64) -> Result<PowerAllocation> {
    if targets.len() != h_eq.nrows() {
        return Err(RisError::invalid(format!(
            "{} targets for {} users",
            targets.len(),
            h_eq.nrows()
        )));
    }
    if !(noise_power > 0.0) {
        return Err(RisError::invalid("noise power must be positive"));
    }
    let alloc = DVector::from_iterator(targets.len(), targets.values().iter().map(|m| m * noise_power));
    match zf_precoder(h_eq, &alloc) {
        Ok(p) => {
            let p_tx = transmit_power(&p);
            Ok(PowerAllocation {
                precoder: Some(p),
                p_tx,
            })
        }
        Err(RisError::RankDeficient { .. }) => Ok(PowerAllocation {
            precoder: None,
            p_tx: f64::INFINITY,
        }),
        Err(e) => Err(e),
    }
}

/// Full-pipeline evaluation in power mode: the reported SINRs are recomputed
/// from the general interference formula.
pub fn evaluate_min_power(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    mask: &TopologyMask,
    phase: &PhaseConfig,
    targets: &SinrTargets,
    counter: &EvalCounter,
) -> Result<(Option<Precoder>, EvaluationResult)> {
    let h_eq = equivalent_channel(ch, mask, phase)?;
    counter.add(1);
    let alloc = min_power_allocation(&h_eq, targets, cfg.noise_power)?;
    match alloc.precoder {
        Some(p) => {
            let gammas = sinr(&h_eq, &p, cfg.noise_power)?;
            let rate = wsr(&gammas, &cfg.weights)?;
            let result = EvaluationResult {
                wsr: rate,
                sinr: gammas,
                p_tx: alloc.p_tx,
                evaluations: 1,
                degenerate: false,
            };
            Ok((Some(p), result))
        }
        None => Ok((
            None,
            EvaluationResult {
                wsr: 0.0,
                sinr: vec![0.0; cfg.users],
                p_tx: f64::INFINITY,
                evaluations: 1,
                degenerate: true,
            },
        )),
    }
}

#[derive(Debug, Clone)]
pub struct PowerMinResult {
    pub mask: TopologyMask,
    pub phase: PhaseConfig,
    pub precoder: Precoder,
    pub p_tx: f64,
    pub evaluation: EvaluationResult,
    pub trace: Vec<AtsIteration>,
}

/// Joint topology and phase search minimizing transmit power. Uses NECE
/// unless another inner optimizer is supplied.
pub fn joint_power_minimize(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    targets: &SinrTargets,
    inner: Option<&dyn PhaseOptimizer>,
    key: StreamKey,
) -> Result<PowerMinResult> {
    let ctx = SearchContext::new(cfg, ch, Objective::min_power(cfg, targets)?)?;
    let nece = Nece::new(cfg.nece.clone());
    let screening = cfg.ats.screening.clone().map(Nece::new);
    let inner = inner.unwrap_or(&nece);
    let r = ats_optimize(&ctx, inner, screening.as_ref().map(|s| s as &dyn PhaseOptimizer), key)?;
    let precoder = r.precoder.ok_or(RisError::Infeasible)?;
    if !r.score.is_finite() {
        return Err(RisError::Infeasible);
    }
    Ok(PowerMinResult {
        mask: r.mask,
        phase: r.phase,
        p_tx: r.evaluation.p_tx,
        precoder,
        evaluation: r.evaluation,
        trace: r.trace,
    })
}
