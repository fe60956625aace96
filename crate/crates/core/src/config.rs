//! Scenario parameters. All powers are linear watts and all gains are linear.

use serde::{Deserialize, Serialize};

use crate::ats::PSchedule;
use crate::error::{Result, RisError};

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub bs: [f64; 2],
    pub ris: [f64; 2],
    pub ue_center: [f64; 2],
    pub ue_radius: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            bs: [0.0, 0.0],
            ris: [50.0, 2.0],
            ue_center: [50.0, 0.0],
            ue_radius: 3.0,
        }
    }
}

/// Distance-dependent path-loss model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathLoss {
    /// Reference gain of the cascaded BS-RIS-UE link.
    pub c_ris: f64,
    /// Reference gain of the direct BS-UE link.
    pub c_direct: f64,
    pub alpha_bs_ris: f64,
    pub alpha_ris_ue: f64,
    pub alpha_bs_ue: f64,
}

impl Default for PathLoss {
    fn default() -> Self {
        PathLoss {
            c_ris: 1e-6,
            c_direct: 1e-3,
            alpha_bs_ris: 2.0,
            alpha_ris_ue: 2.0,
            alpha_bs_ue: 3.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeceParams {
    pub iterations: usize,
    pub candidates: usize,
    pub primary_elites: usize,
    /// Floor applied to every probability entry after each update.
    pub smoothing: f64,
}

impl Default for NeceParams {
    fn default() -> Self {
        NeceParams {
            iterations: 15,
            candidates: 200,
            primary_elites: 40,
            smoothing: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtsParams {
    /// Neighborhood size Q.
    pub neighbors: usize,
    pub iterations: usize,
    pub tabu_size: usize,
    /// Neighbor-distance schedule; `None` derives one from `N` and `N_s`.
    pub schedule: Option<PSchedule>,
    /// Rejection-sampling attempts per requested neighbor.
    pub retry_factor: usize,
    /// Optional reduced inner budget used to screen neighbors. The chosen move
    /// is re-scored with the full budget.
    pub screening: Option<NeceParams>,
}

impl Default for AtsParams {
    fn default() -> Self {
        AtsParams {
            neighbors: 15,
            iterations: 40,
            tabu_size: 1,
            schedule: None,
            retry_factor: 50,
            screening: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// BS antennas (M).
    pub antennas: usize,
    /// Single-antenna users (K).
    pub users: usize,
    /// RIS elements (N).
    pub elements: usize,
    /// Candidate grid points on the surface (N_s).
    pub grid_points: usize,
    /// Phase quantization bits (b).
    pub phase_bits: u32,
    /// Maximum transmit power, watts.
    pub max_power: f64,
    /// Noise power, watts.
    pub noise_power: f64,
    pub weights: Vec<f64>,
    pub geometry: Geometry,
    pub path_loss: PathLoss,
    pub ats: AtsParams,
    pub nece: NeceParams,
    /// Surface layout as (rows, cols); only used when exporting topologies.
    pub grid_shape: Option<(usize, usize)>,
    /// Draw fresh user positions for every Monte Carlo drop.
    pub redraw_positions: bool,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            antennas: 4,
            users: 2,
            elements: 8,
            grid_points: 16,
            phase_bits: 1,
            max_power: dbm_to_watts(10.0),
            noise_power: dbm_to_watts(-120.0),
            weights: vec![1.0; 2],
            geometry: Geometry::default(),
            path_loss: PathLoss::default(),
            ats: AtsParams::default(),
            nece: NeceParams::default(),
            grid_shape: None,
            redraw_positions: true,
            seed: 0,
        }
    }
}

impl SystemConfig {
    /// A configuration with `users` unit weights and everything else at its default.
    pub fn with_dims(antennas: usize, users: usize, elements: usize, grid_points: usize) -> Self {
        SystemConfig {
            antennas,
            users,
            elements,
            grid_points,
            weights: vec![1.0; users],
            ..SystemConfig::default()
        }
    }

    pub fn levels(&self) -> usize {
        1usize << self.phase_bits
    }

    /// Effective neighbor-distance schedule.
    pub fn schedule(&self) -> PSchedule {
        match &self.ats.schedule {
            Some(s) => s.clone(),
            None => PSchedule::adaptive(self.elements, self.grid_points, self.ats.iterations),
        }
    }

    /// (rows, cols) of the surface: the configured shape, else the squarest
    /// factorization of `N_s`.
    pub fn grid_layout(&self) -> (usize, usize) {
        if let Some(shape) = self.grid_shape {
            return shape;
        }
        let n = self.grid_points.max(1);
        let mut rows = (n as f64).sqrt().floor() as usize;
        while rows > 1 && !n.is_multiple_of(rows) {
            rows -= 1;
        }
        (rows.max(1), n / rows.max(1))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(RisError::InvalidArgument(m));
        if self.antennas == 0 {
            return fail("M (antennas) must be at least 1".into());
        }
        if self.users == 0 {
            return fail("K (users) must be at least 1".into());
        }
        if self.users > self.antennas {
            return fail(format!(
                "K = {} users exceeds M = {} antennas; zero-forcing needs K <= M",
                self.users, self.antennas
            ));
        }
        if self.elements > self.grid_points {
            return fail(format!(
                "N = {} elements exceeds N_s = {} grid points",
                self.elements, self.grid_points
            ));
        }
        if self.phase_bits == 0 || self.phase_bits > 16 {
            return fail(format!("b = {} phase bits out of range 1..=16", self.phase_bits));
        }
        if !(self.max_power > 0.0 && self.max_power.is_finite()) {
            return fail("P_max must be positive".into());
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return fail("sigma2 must be positive".into());
        }
        if self.weights.len() != self.users {
            return fail(format!(
                "{} weights given for {} users",
                self.weights.len(),
                self.users
            ));
        }
        if self.weights.iter().any(|&w| !(w > 0.0)) {
            return fail("all user weights must be positive".into());
        }
        if self.geometry.ue_radius < 0.0 {
            return fail("UE disc radius must be nonnegative".into());
        }
        for p in [&self.nece].into_iter().chain(self.ats.screening.as_ref()) {
            if p.primary_elites > p.candidates {
                return fail(format!(
                    "C_pr = {} exceeds C = {}",
                    p.primary_elites, p.candidates
                ));
            }
            if p.primary_elites == 0 || p.iterations == 0 {
                return fail("NECE needs at least one iteration and one elite".into());
            }
            if !(p.smoothing >= 0.0 && p.smoothing * (self.levels() as f64) < 1.0) {
                return fail(format!(
                    "smoothing floor {} incompatible with {} phase levels",
                    p.smoothing,
                    self.levels()
                ));
            }
        }
        if self.ats.tabu_size == 0 {
            return fail("H_size must be at least 1".into());
        }
        if let Some((r, c)) = self.grid_shape {
            if r * c != self.grid_points {
                return fail(format!("grid {}x{} does not hold N_s = {}", r, c, self.grid_points));
            }
        }
        if let Some(s) = &self.ats.schedule {
            s.validate(self.elements, self.grid_points)?;
        }
        Ok(())
    }
}
