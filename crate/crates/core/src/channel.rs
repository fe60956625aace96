//! Monte Carlo channel synthesis: user placement, distance-dependent path loss
//! and uncorrelated Rayleigh fading.
//!
//! The cascaded path loss `C_r d_BR^-a_BR d_RU^-a_RU` is split between the two
//! hops: `G` carries `sqrt(C_r d_BR^-a_BR)` and column `k` of `H_r` carries
//! `sqrt(d_RU(k)^-a_RU)`, so any recombination through `Z Theta` keeps the
//! right loss.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::{PathLoss, SystemConfig};
use crate::error::{Result, RisError};
use crate::model::{CMatrix, ChannelSet, C64};
use crate::seed::StreamKey;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropGeometry {
    pub bs: [f64; 2],
    pub ris: [f64; 2],
    pub users: Vec<[f64; 2]>,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl DropGeometry {
    pub fn d_bs_ris(&self) -> f64 {
        dist(self.bs, self.ris)
    }

    pub fn d_ris_ue(&self, k: usize) -> f64 {
        dist(self.ris, self.users[k])
    }

    pub fn d_bs_ue(&self, k: usize) -> f64 {
        dist(self.bs, self.users[k])
    }
}

/// Area-uniform positions on a disc.
pub fn place_users<R: Rng + ?Sized>(
    center: [f64; 2],
    radius: f64,
    count: usize,
    rng: &mut R,
) -> Vec<[f64; 2]> {
    (0..count)
        .map(|_| {
            let r = radius * rng.random::<f64>().sqrt();
            let phi = 2.0 * PI * rng.random::<f64>();
            [center[0] + r * phi.cos(), center[1] + r * phi.sin()]
        })
        .collect()
}

/// Cascaded BS-RIS-UE gain `C_r d_BR^-a_BR d_RU^-a_RU`.
pub fn path_loss_ris(d_bs_ris: f64, d_ris_ue: f64, pl: &PathLoss) -> Result<f64> {
    if !(d_bs_ris > 0.0 && d_ris_ue > 0.0) {
        return Err(RisError::invalid(format!(
            "distances must be positive (d_BR = {d_bs_ris}, d_RU = {d_ris_ue})"
        )));
    }
    Ok(pl.c_ris * d_bs_ris.powf(-pl.alpha_bs_ris) * d_ris_ue.powf(-pl.alpha_ris_ue))
}

/// Direct BS-UE gain `C_d d_BU^-a_BU`.
pub fn path_loss_direct(d_bs_ue: f64, pl: &PathLoss) -> Result<f64> {
    if !(d_bs_ue > 0.0) {
        return Err(RisError::invalid(format!("distance must be positive (d_BU = {d_bs_ue})")));
    }
    Ok(pl.c_direct * d_bs_ue.powf(-pl.alpha_bs_ue))
}

/// Circularly-symmetric complex Gaussian with unit variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

/// Row-major `rows x cols` matrix of unit-variance fading. A stream with more
/// rows extends one with fewer, so growing `N_s` keeps the earlier grid points.
fn fading_matrix(rows: usize, cols: usize, key: StreamKey) -> CMatrix {
    let mut rng = key.rng();
    let mut m = CMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m[(r, c)] = complex_gaussian(&mut rng);
        }
    }
    m
}

/// Draws one fading realization for fixed geometry.
pub fn draw_channels(cfg: &SystemConfig, geom: &DropGeometry, key: StreamKey) -> Result<ChannelSet> {
    let (m, k, ns) = (cfg.antennas, cfg.users, cfg.grid_points);
    if geom.users.len() != k {
        return Err(RisError::invalid("geometry user count differs from K"));
    }
    let pl = &cfg.path_loss;
    let d_br = geom.d_bs_ris();

    let mut bs_ris = fading_matrix(ns, m, key.tag("bs-ris"));
    // Only the BS-RIS share of the cascaded loss; d_RU handled per user below.
    let g_scale = path_loss_ris(d_br, 1.0, &PathLoss { alpha_ris_ue: 0.0, ..pl.clone() })?.sqrt();
    bs_ris.iter_mut().for_each(|c| *c *= g_scale);

    let mut ris_ue = fading_matrix(ns, k, key.tag("ris-ue"));
    let mut bs_ue = fading_matrix(m, k, key.tag("bs-ue"));
    for u in 0..k {
        let d_ru = geom.d_ris_ue(u);
        if !(d_ru > 0.0) {
            return Err(RisError::invalid(format!("user {u} sits on the RIS")));
        }
        let r_scale = d_ru.powf(-pl.alpha_ris_ue).sqrt();
        ris_ue.column_mut(u).iter_mut().for_each(|c| *c *= r_scale);
        let d_scale = path_loss_direct(geom.d_bs_ue(u), pl)?.sqrt();
        bs_ue.column_mut(u).iter_mut().for_each(|c| *c *= d_scale);
    }
    ChannelSet::new(bs_ris, ris_ue, bs_ue)
}

/// User positions for a drop. With `redraw_positions` off every drop shares
/// the positions of drop 0.
pub fn drop_geometry(cfg: &SystemConfig, drop: u64) -> DropGeometry {
    let idx = if cfg.redraw_positions { drop } else { 0 };
    let mut rng = StreamKey::root(cfg.seed).tag("positions").index(idx).rng();
    let g = &cfg.geometry;
    DropGeometry {
        bs: g.bs,
        ris: g.ris,
        users: place_users(g.ue_center, g.ue_radius, cfg.users, &mut rng),
    }
}

/// Geometry and channels of Monte Carlo drop `drop`; a pure function of
/// `(cfg.seed, drop)`.
pub fn draw_drop(cfg: &SystemConfig, drop: u64) -> Result<(DropGeometry, ChannelSet)> {
    let geom = drop_geometry(cfg, drop);
    let key = StreamKey::root(cfg.seed).tag("fading").index(drop);
    let ch = draw_channels(cfg, &geom, key)?;
    Ok((geom, ch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PhaseConfig, TopologyMask};

    #[test]
    fn zero_radius_collapses_to_center() {
        let mut rng = StreamKey::root(1).rng();
        let pts = place_users([50.0, 0.0], 0.0, 5, &mut rng);
        assert!(pts.iter().all(|p| *p == [50.0, 0.0]));
    }

    #[test]
    fn disc_mean_radius_is_two_thirds() {
        let mut rng = StreamKey::root(2).rng();
        let pts = place_users([1.0, -2.0], 3.0, 100_000, &mut rng);
        let mean: f64 = pts.iter().map(|p| dist(*p, [1.0, -2.0])).sum::<f64>() / pts.len() as f64;
        assert!((mean - 2.0).abs() < 0.02 * 2.0, "mean radius {mean}");
        assert!(pts.iter().all(|p| dist(*p, [1.0, -2.0]) <= 3.0));
    }

    #[test]
    fn placement_replays() {
        let a = place_users([0.0, 0.0], 1.0, 4, &mut StreamKey::root(3).rng());
        let b = place_users([0.0, 0.0], 1.0, 4, &mut StreamKey::root(3).rng());
        assert_eq!(a, b);
    }

    #[test]
    fn ris_path_loss() {
        let pl = PathLoss::default();
        assert!((path_loss_ris(1.0, 1.0, &pl).unwrap() - 1e-6).abs() < 1e-20);
        let a = path_loss_ris(3.0, 2.0, &pl).unwrap();
        let b = path_loss_ris(3.0, 4.0, &pl).unwrap();
        assert!((a / b - 4.0).abs() < 1e-12);
        // d_BR^2 = 50^2 + 2^2 = 2504
        let d_br = (2504.0f64).sqrt();
        let got = path_loss_ris(d_br, 1.5, &pl).unwrap();
        let expected = 1e-6 / 2504.0 / 2.25;
        assert!((got - expected).abs() < 1e-12 * expected);
        assert!(path_loss_ris(0.0, 1.0, &pl).is_err());
        assert!(path_loss_ris(1.0, -1.0, &pl).is_err());
    }

    #[test]
    fn direct_path_loss() {
        let pl = PathLoss::default();
        assert!((path_loss_direct(1.0, &pl).unwrap() - 1e-3).abs() < 1e-18);
        let got = path_loss_direct(10.0, &pl).unwrap();
        let expected = 1e-3 * 10f64.powf(-3.5);
        assert!((got - expected).abs() < 1e-12 * expected);
        let mut prev = f64::INFINITY;
        for d in [0.5, 1.0, 2.0, 10.0, 100.0] {
            let g = path_loss_direct(d, &pl).unwrap();
            assert!(g < prev);
            prev = g;
        }
        assert!(path_loss_direct(0.0, &pl).is_err());
    }

    #[test]
    fn fading_moments() {
        let mut rng = StreamKey::root(4).rng();
        let n = 100_000;
        let samples: Vec<C64> = (0..n).map(|_| complex_gaussian(&mut rng)).collect();
        let var = samples.iter().map(|c| c.norm_sqr()).sum::<f64>() / n as f64;
        assert!((var - 1.0).abs() < 0.02, "variance {var}");
        let mean_abs = samples.iter().map(|c| c.norm()).sum::<f64>() / n as f64;
        let rayleigh = (PI / 4.0).sqrt();
        assert!((mean_abs - rayleigh).abs() < 0.02 * rayleigh, "mean |h| {mean_abs}");
    }

    #[test]
    fn drops_are_deterministic() {
        let cfg = SystemConfig::default();
        let (g1, a) = draw_drop(&cfg, 5).unwrap();
        let (g2, b) = draw_drop(&cfg, 5).unwrap();
        assert_eq!(g1, g2);
        assert_eq!(a, b);
        let (_, c) = draw_drop(&cfg, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn larger_grid_extends_smaller_one() {
        let small = SystemConfig::with_dims(4, 4, 20, 20);
        let large = SystemConfig::with_dims(4, 4, 20, 40);
        let (_, a) = draw_drop(&small, 2).unwrap();
        let (_, b) = draw_drop(&large, 2).unwrap();
        let restricted = b.restrict(&TopologyMask::leading(40, 20)).unwrap();
        assert_eq!(a, restricted);
    }

    #[test]
    fn fixed_positions_mode() {
        let cfg = SystemConfig {
            redraw_positions: false,
            ..SystemConfig::default()
        };
        assert_eq!(drop_geometry(&cfg, 0), drop_geometry(&cfg, 9));
        let cfg = SystemConfig::default();
        assert_ne!(drop_geometry(&cfg, 0), drop_geometry(&cfg, 9));
    }

    #[test]
    fn channel_scaling_follows_path_loss() {
        let cfg = SystemConfig::with_dims(4, 2, 8, 16);
        let geom = DropGeometry {
            bs: [0.0, 0.0],
            ris: [50.0, 2.0],
            users: vec![[50.0, 0.0], [51.0, -1.0]],
        };
        // Average the cascaded single-element gain |h_r,k^* e^{j0} g_m|^2 over many draws.
        let drops = 10_000;
        let mut acc = [0.0f64; 2];
        for d in 0..drops {
            let ch = draw_channels(&cfg, &geom, StreamKey::root(99).index(d)).unwrap();
            let mask = TopologyMask::from_indices(16, &[0]).unwrap();
            let direct_free = ChannelSet::new(ch.bs_ris.clone(), ch.ris_ue.clone(), CMatrix::zeros(4, 2)).unwrap();
            let h = crate::model::equivalent_channel(&direct_free, &mask, &PhaseConfig::zeros(1, 16)).unwrap();
            for k in 0..2 {
                acc[k] += h.row(k).iter().map(|c| c.norm_sqr()).sum::<f64>() / 4.0;
            }
        }
        for k in 0..2 {
            let expected = path_loss_ris(geom.d_bs_ris(), geom.d_ris_ue(k), &cfg.path_loss).unwrap();
            let mean = acc[k] / drops as f64;
            assert!((mean / expected - 1.0).abs() < 0.05, "user {k}: {mean} vs {expected}");
        }
    }
}
