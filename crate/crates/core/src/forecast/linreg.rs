//! Straight-line trend by ordinary least squares on the day index.

use serde::Serialize;

use super::{ForecastError, Result};
use crate::stats::ols;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearTrend {
    pub intercept: f64,
    pub slope: f64,
    pub n_obs: usize,
}

impl LinearTrend {
    pub fn fit(x: &[f64]) -> Result<Self> {
        if x.len() < 2 {
            return Err(ForecastError::SeriesTooShort {
                len: x.len(),
                min: 2,
            });
        }
        let (intercept, slope) = if x.len() == 2 {
            (x[0], x[1] - x[0])
        } else {
            let rows: Vec<Vec<f64>> = (0..x.len()).map(|t| vec![1.0, t as f64]).collect();
            let fit = ols(&rows, x).ok_or(ForecastError::AllFitsFailed)?;
            (fit.coefficients[0], fit.coefficients[1])
        };
        Ok(Self {
            intercept,
            slope,
            n_obs: x.len(),
        })
    }

    pub fn value_at(&self, t: usize) -> f64 {
        self.intercept + self.slope * t as f64
    }

    /// Extends the line `1..=horizon` days past the sample, clamped at zero.
    pub fn forecast(&self, horizon: usize) -> Vec<f64> {
        (self.n_obs..self.n_obs + horizon)
            .map(|t| self.value_at(t).max(0.0))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_solved_normal_equations() {
        let f = LinearTrend::fit(&[0.0, 2.0, 4.0, 7.0]).unwrap();
        assert!((f.slope - 2.3).abs() < 1e-12);
        assert!((f.intercept + 0.2).abs() < 1e-12);
    }

    #[test]
    fn exact_line_and_constant() {
        let x: Vec<f64> = (0..20).map(|t| 4.0 + 1.5 * t as f64).collect();
        let f = LinearTrend::fit(&x).unwrap();
        for (t, v) in x.iter().enumerate() {
            assert!((f.value_at(t) - v).abs() < 1e-10);
        }
        assert!((f.forecast(1)[0] - 34.0).abs() < 1e-10);
        let c = LinearTrend::fit(&[6.0; 9]).unwrap();
        assert!(c.slope.abs() < 1e-12);
        assert!(c.forecast(5).iter().all(|v| (v - 6.0).abs() < 1e-10));
    }

    #[test]
    fn negative_extrapolation_is_clamped() {
        let f = LinearTrend::fit(&[10.0, 8.0, 6.0, 4.0]).unwrap();
        assert_eq!(f.forecast(4), vec![2.0, 0.0, 0.0, 0.0]);
    }
}
