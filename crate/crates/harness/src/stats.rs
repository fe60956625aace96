//! Summary statistics over Monte Carlo drops.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn std_err(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    std_dev(xs) / (xs.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedTest {
    pub pairs: usize,
    pub mean_difference: f64,
    pub t: f64,
    /// One-sided p-value for `mean(a - b) > 0`.
    pub p_value: f64,
}

impl PairedTest {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// One-sided paired t-test of `a > b`. Needs at least two pairs.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Option<PairedTest> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let m = mean(&d);
    let se = std_err(&d);
    let n = d.len();
    let (t, p) = if se > 0.0 {
        let t = m / se;
        let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).ok()?;
        (t, dist.sf(t))
    } else if m > 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        (if m < 0.0 { f64::NEG_INFINITY } else { 0.0 }, if m < 0.0 { 1.0 } else { 0.5 })
    };
    Some(PairedTest {
        pairs: n,
        mean_difference: m,
        t,
        p_value: p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments() {
        let xs = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert_eq!(mean(&xs), 5.0);
        // sum of squared deviations is 32
        assert!((std_dev(&xs) - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert!((std_err(&xs) - (32.0f64 / 7.0 / 8.0).sqrt()).abs() < 1e-12);
        assert_eq!(std_err(&[3.0]), 0.0);
    }

    #[test]
    fn t_test_against_table() {
        // differences 1, 2, 3: mean 2, sd 1, t = 2 sqrt(3) on 2 df
        let a = [2.0, 4.0, 6.0];
        let b = [1.0, 2.0, 3.0];
        let r = paired_t_test(&a, &b).unwrap();
        assert!((r.t - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        // t_{0.95, 2} = 2.919986
        assert!(r.t > 2.919986 && r.significant(0.05));
        let p_expected = 0.5 * (1.0 - r.t / (r.t * r.t + 2.0).sqrt());
        assert!((r.p_value - p_expected).abs() < 1e-9, "{} vs {p_expected}", r.p_value);
        let r = paired_t_test(&b, &a).unwrap();
        assert!(!r.significant(0.05));
        assert!(paired_t_test(&a, &b[..2]).is_none());
        assert_eq!(paired_t_test(&[1.0, 1.0], &[1.0, 1.0]).unwrap().p_value, 0.5);
    }
}
