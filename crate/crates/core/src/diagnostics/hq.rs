use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::PriceSeries;

pub const DEFAULT_H: f64 = 0.5;
pub const DEFAULT_Q: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HqPoint {
    /// Trading days since the first observation.
    pub t: f64,
    pub log_tc_minus_t: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HqDerivative {
    pub h: f64,
    pub q: f64,
    pub points: Vec<HqPoint>,
}

/// `D(t) = (ln p(t) - ln p(qt)) / ((1 - q) t)^H` for `t = 1, 2, ..`, with
/// `ln p(qt)` linearly interpolated between trading days.
pub fn hq_derivative(series: &PriceSeries, tc: f64, h: f64, q: f64) -> Result<HqDerivative> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidQ(q));
    }
    if !h.is_finite() {
        return Err(Error::InvalidModelParams(format!("H = {h} is not finite")));
    }
    let t_max = series.last_t();
    if !(tc > t_max) || !tc.is_finite() {
        return Err(Error::InvalidTc { tc, t_max });
    }
    let lp = series.log_prices();
    let interp = |s: f64| {
        let i = s.floor() as usize;
        if i + 1 >= lp.len() {
            return lp[lp.len() - 1];
        }
        let frac = s - i as f64;
        lp[i] + frac * (lp[i + 1] - lp[i])
    };
    let points: Vec<HqPoint> = (1..lp.len())
        .map(|i| {
            let t = i as f64;
            let d = (lp[i] - interp(q * t)) / ((1.0 - q) * t).powf(h);
            HqPoint { t, log_tc_minus_t: (tc - t).ln(), d }
        })
        .collect();
    if points.is_empty() {
        return Err(Error::InsufficientRange);
    }
    Ok(HqDerivative { h, q, points })
}
