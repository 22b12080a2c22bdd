use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lppls::lstsq;
use crate::timeseries::{PriceSeries, MIN_WINDOW_OBS};

pub const DETREND_BETA_MIN: f64 = 0.05;
pub const DETREND_BETA_MAX: f64 = 0.95;
pub const DETREND_BETA_COUNT: usize = 50;

/// `A + B (tc - t)^β` with `tc` held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawTrend {
    pub a: f64,
    pub b: f64,
    pub beta: f64,
    pub tc: f64,
}

/// Detrended log-prices against log-time `x = ln(tc - t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    /// Absent when residuals were loaded from a file without trend metadata.
    pub trend: Option<PowerLawTrend>,
}

impl Residuals {
    pub fn from_parts(x: Vec<f64>, r: Vec<f64>) -> Result<Self> {
        if x.len() != r.len() {
            return Err(Error::InvalidPeriodogram(format!("x has {} values, r has {}", x.len(), r.len())));
        }
        if x.iter().chain(&r).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPeriodogram("non-finite residual or log-time".into()));
        }
        Ok(Self { x, r, trend: None })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Same log-times, different values.
    pub fn with_values(&self, r: Vec<f64>) -> Self {
        Self { x: self.x.clone(), r, trend: self.trend }
    }
}

fn fit_trend(ln_dt: &[f64], y: &[f64], beta: f64) -> Result<(f64, f64, f64)> {
    let f: Vec<f64> = ln_dt.iter().map(|l| (beta * l).exp()).collect();
    let (coef, rss) = lstsq(vec![vec![1.0; y.len()], f], y)?;
    Ok((coef[0], coef[1], rss))
}

/// Fits and subtracts the power-law trend with `tc` fixed.
///
/// β is chosen on a 50-point grid over `[0.05, 0.95]` and then refined by
/// Gauss–Newton on `(A, B, β)`; `(A, B)` come from OLS at the final β, so
/// the residuals are orthogonal to both trend columns.
pub fn detrend_power_law(series: &PriceSeries, tc: f64) -> Result<Residuals> {
    let t_max = series.last_t();
    if !(tc > t_max) || !tc.is_finite() {
        return Err(Error::InvalidTc { tc, t_max });
    }
    if series.len() < MIN_WINDOW_OBS {
        return Err(Error::WindowTooShort { n_obs: series.len(), required: MIN_WINDOW_OBS });
    }
    let y = series.log_prices();
    let ln_dt: Vec<f64> = (0..series.len()).map(|i| (tc - i as f64).ln()).collect();

    let step = (DETREND_BETA_MAX - DETREND_BETA_MIN) / (DETREND_BETA_COUNT - 1) as f64;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..DETREND_BETA_COUNT {
        let beta = DETREND_BETA_MIN + i as f64 * step;
        if let Ok((_, _, rss)) = fit_trend(&ln_dt, y, beta) {
            if best.map_or(true, |b| rss < b.1) {
                best = Some((beta, rss));
            }
        }
    }
    let (mut beta, mut rss) = best.ok_or(Error::DegenerateTrend)?;
    beta = refine_beta(&ln_dt, y, beta, &mut rss);

    let (a, b, _) = fit_trend(&ln_dt, y, beta)?;
    let r = ln_dt.iter().zip(y).map(|(l, yi)| yi - (a + b * (beta * l).exp())).collect();
    Ok(Residuals { x: ln_dt, r, trend: Some(PowerLawTrend { a, b, beta, tc }) })
}

fn refine_beta(ln_dt: &[f64], y: &[f64], start: f64, rss: &mut f64) -> f64 {
    let mut beta = start;
    for _ in 0..60 {
        let Ok((a, b, cur)) = fit_trend(ln_dt, y, beta) else { break };
        let f: Vec<f64> = ln_dt.iter().map(|l| (beta * l).exp()).collect();
        let resid: Vec<f64> = f.iter().zip(y).map(|(fi, yi)| yi - a - b * fi).collect();
        let jac_beta: Vec<f64> = f.iter().zip(ln_dt).map(|(fi, l)| b * fi * l).collect();
        let Ok((delta, _)) = lstsq(vec![vec![1.0; y.len()], f, jac_beta], &resid) else { break };
        let mut step = delta[2];
        let mut accepted = false;
        for _ in 0..30 {
            let cand = (beta + step).clamp(DETREND_BETA_MIN, DETREND_BETA_MAX);
            if let Ok((_, _, r)) = fit_trend(ln_dt, y, cand) {
                if r <= cur {
                    accepted = cand != beta;
                    beta = cand;
                    *rss = r;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted || step.abs() < 1e-15 {
            break;
        }
    }
    beta
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, NaiveDate};

    fn series_from(log_prices: Vec<f64>) -> PriceSeries {
        let d0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let dates = (0..log_prices.len()).map(|i| d0 + Duration::days(i as i64)).collect();
        PriceSeries::from_log_prices(dates, log_prices).unwrap()
    }

    #[test]
    fn pure_power_law_leaves_no_residual() {
        let tc = 240.0;
        let lp = (0..200).map(|t| 16.0 - 0.6 * (tc - t as f64).powf(0.3)).collect();
        let res = detrend_power_law(&series_from(lp), tc).unwrap();
        let worst = res.r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst <= 1e-8, "max residual {worst}");
        let trend = res.trend.unwrap();
        assert!((trend.beta - 0.3).abs() < 1e-6);
    }

    #[test]
    fn constant_series() {
        let res = detrend_power_law(&series_from(vec![3.0; 60]), 80.0).unwrap();
        assert!(res.trend.unwrap().b.abs() < 1e-9);
        assert!(res.r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn log_time_decreases() {
        let lp = (0..50).map(|t| (t as f64 * 0.1).sin()).collect();
        let res = detrend_power_law(&series_from(lp), 70.0).unwrap();
        assert!(res.x.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(res.x.len(), res.r.len());
    }

    #[test]
    fn invalid_tc() {
        let s = series_from(vec![1.0; 40]);
        assert!(matches!(detrend_power_law(&s, 39.0), Err(Error::InvalidTc { .. })));
    }

    fn solve3(m: [[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
        let det = |m: [[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let d = det(m);
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            let mut mk = m;
            for i in 0..3 {
                mk[i][k] = v[i];
            }
            *o = det(mk) / d;
        }
        out
    }

    #[test]
    fn small_oscillation_survives_minus_its_trend_projection() {
        let (tc, beta, b, c) = (240.0, 0.3, -0.6, 2e-6);
        let osc: Vec<f64> = (0..200)
            .map(|t| {
                let dt = tc - t as f64;
                c * dt.powf(beta) * (8.0 * dt.ln() + 0.4).cos()
            })
            .collect();
        let lp = (0..200).map(|t| 16.0 + b * (tc - t as f64).powf(beta) + osc[t]).collect();
        let res = detrend_power_law(&series_from(lp), tc).unwrap();

        // Linearised trend columns at the planted β.
        let cols: Vec<[f64; 3]> = (0..200)
            .map(|t| {
                let dt = tc - t as f64;
                let f = dt.powf(beta);
                [1.0, f, b * f * dt.ln()]
            })
            .collect();
        let mut m = [[0.0; 3]; 3];
        let mut v = [0.0; 3];
        for (row, o) in cols.iter().zip(&osc) {
            for i in 0..3 {
                v[i] += row[i] * o;
                for j in 0..3 {
                    m[i][j] += row[i] * row[j];
                }
            }
        }
        let g = solve3(m, v);
        let worst = cols
            .iter()
            .zip(&osc)
            .zip(&res.r)
            .map(|((row, o), r)| (o - (g[0] * row[0] + g[1] * row[1] + g[2] * row[2]) - r).abs())
            .fold(0.0f64, f64::max);
        assert!(worst <= 1e-9, "max deviation {worst}");
        assert!((res.trend.unwrap().beta - beta).abs() < 1e-4);
    }
}
