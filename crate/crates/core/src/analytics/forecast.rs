//! Baseline forecasts: trailing moving average and ordinary least squares on the bucket index.

use serde::{Deserialize, Serialize};

use super::{aggregate, AnalyticsError, Granularity, Scope};
use crate::series::EnergySeries;
use crate::window::Window;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ForecastMethod {
    MovingAverage { window: usize },
    LinearRegression,
}

impl Default for ForecastMethod {
    /// One day of 15-minute samples.
    fn default() -> Self {
        ForecastMethod::MovingAverage { window: 96 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub residual_rmse: f64,
    pub max_abs_residual: f64,
    pub r_squared: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub method: ForecastMethod,
    pub granularity: Granularity,
    pub horizon: usize,
    pub history_len: usize,
    /// Predicted kWh per future bucket.
    pub predicted: Vec<f64>,
    pub total_kwh: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intercept: Option<f64>,
    pub diagnostics: FitDiagnostics,
}

/// Trailing-window mean, held constant over the horizon. The mean is accumulated
/// incrementally and clamped to the window's range, so a constant window yields
/// exactly that constant.
pub fn moving_average(history: &[f64], window: usize, horizon: usize) -> Result<(Vec<f64>, FitDiagnostics), AnalyticsError> {
    if window == 0 || history.len() < window {
        return Err(AnalyticsError::InsufficientHistory { needed: window.max(1), have: history.len() });
    }
    let tail = &history[history.len() - window..];
    let mut mean = tail[0];
    let (mut lo, mut hi) = (tail[0], tail[0]);
    for (k, &x) in tail.iter().enumerate().skip(1) {
        mean += (x - mean) / (k + 1) as f64;
        lo = lo.min(x);
        hi = hi.max(x);
    }
    let mean = mean.clamp(lo, hi);
    let residuals: Vec<f64> = tail.iter().map(|x| x - mean).collect();
    Ok((vec![mean; horizon], diagnostics(&residuals, tail)))
}

/// OLS fit of `y = intercept + slope·t` for t = 0, 1, …, using centered sums.
pub fn linear_fit(history: &[f64]) -> Result<(f64, f64), AnalyticsError> {
    let n = history.len();
    if n < 2 {
        return Err(AnalyticsError::InsufficientHistory { needed: 2, have: n });
    }
    let t_mean = (n - 1) as f64 / 2.0;
    let y_mean = history.iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (t, y) in history.iter().enumerate() {
        let dt = t as f64 - t_mean;
        sxy += dt * (y - y_mean);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;
    Ok((slope, y_mean - slope * t_mean))
}

fn diagnostics(residuals: &[f64], ys: &[f64]) -> FitDiagnostics {
    let n = residuals.len().max(1) as f64;
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    let y_mean = ys.iter().sum::<f64>() / ys.len().max(1) as f64;
    let sst: f64 = ys.iter().map(|y| (y - y_mean).powi(2)).sum();
    FitDiagnostics {
        residual_rmse: (sse / n).sqrt(),
        max_abs_residual: residuals.iter().fold(0.0, |m, r| m.max(r.abs())),
        r_squared: (sst > 0.0).then(|| 1.0 - sse / sst),
    }
}

/// Forecasts `horizon` future buckets of `scope` at `granularity` from the history in `window`.
pub fn forecast(
    series: &EnergySeries,
    scope: &Scope,
    granularity: Granularity,
    method: ForecastMethod,
    horizon: usize,
    window: &Window,
) -> Result<ForecastResult, AnalyticsError> {
    if horizon == 0 {
        return Err(AnalyticsError::BadHorizon);
    }
    let history = aggregate(series, granularity, scope, window)?.values_kwh();
    forecast_values(&history, granularity, method, horizon)
}

pub fn forecast_values(history: &[f64], granularity: Granularity, method: ForecastMethod, horizon: usize) -> Result<ForecastResult, AnalyticsError> {
    let (predicted, slope, intercept, diagnostics) = match method {
        ForecastMethod::MovingAverage { window } => {
            let (p, d) = moving_average(history, window, horizon)?;
            (p, None, None, d)
        }
        ForecastMethod::LinearRegression => {
            let (slope, intercept) = linear_fit(history)?;
            let residuals: Vec<f64> = history
                .iter()
                .enumerate()
                .map(|(t, y)| y - (intercept + slope * t as f64))
                .collect();
            let n = history.len();
            let p = (0..horizon).map(|h| intercept + slope * (n + h) as f64).collect();
            (p, Some(slope), Some(intercept), diagnostics(&residuals, history))
        }
    };
    Ok(ForecastResult {
        method,
        granularity,
        horizon,
        history_len: history.len(),
        total_kwh: predicted.iter().sum(),
        predicted,
        slope,
        intercept,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_moving_average_is_exact() {
        for c in [0.1, 0.3, 1.7, 1e-7, 123.456] {
            let (p, _) = moving_average(&vec![c; 500], 96, 5).unwrap();
            assert_eq!(p, vec![c; 5]);
        }
    }

    #[test]
    fn exact_line_is_continued() {
        let ys: Vec<f64> = (0..100).map(|t| 2.0 + 0.1 * t as f64).collect();
        let r = forecast_values(&ys, Granularity::Interval, ForecastMethod::LinearRegression, 4).unwrap();
        for (h, p) in r.predicted.iter().enumerate() {
            let want = 2.0 + 0.1 * (100 + h) as f64;
            assert!((p - want).abs() <= 1e-9 * want, "{p} vs {want}");
        }
        assert!((r.slope.unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn insufficient_history() {
        assert!(linear_fit(&[1.0]).is_err());
        assert!(moving_average(&[1.0; 10], 96, 1).is_err());
        assert!(moving_average(&[1.0; 10], 0, 1).is_err());
    }
}
