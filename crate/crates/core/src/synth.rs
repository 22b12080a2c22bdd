//! Synthetic price series with a planted LPPLS bubble, optionally preceded
//! by a random walk, for validating every other stage end to end.

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lppls::{lppls_eval, LpplsParams};
use crate::surrogates::{ar1_series, levy_series, stream_rng, white_noise, FgnGenerator, NullModel};
use crate::timeseries::PriceSeries;

/// Additive log-price noise on the bubble segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    pub model: NullModel,
    /// Standard deviation (scale parameter for the stable model).
    pub sigma: f64,
    pub ar1_phi: f64,
    pub hurst: f64,
    pub alpha: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { model: NullModel::WhiteGaussian, sigma: 0.0, ar1_phi: 0.5, hurst: 0.7, alpha: 1.7 }
    }
}

/// Gaussian random walk in log-price joined continuously to the bubble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreBubble {
    pub length: usize,
    pub volatility: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    /// `tc` relative to the first bubble observation.
    pub params: LpplsParams,
    pub n_bubble: usize,
    pub noise: NoiseSpec,
    pub pre_bubble: Option<PreBubble>,
    pub start_date: NaiveDate,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub series: PriceSeries,
    /// Index of the first bubble observation.
    pub bubble_start: usize,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidPlantedParams(m));
        let p = &self.params;
        if self.n_bubble < 2 {
            return bad("bubble needs at least two observations".into());
        }
        if let Err(e) = p.validate_nonlinear() {
            return bad(e.to_string());
        }
        if !(p.tc > (self.n_bubble - 1) as f64) {
            return bad(format!("tc = {} must exceed the last bubble time {}", p.tc, self.n_bubble - 1));
        }
        if [p.a, p.b, p.c1, p.c2].iter().any(|v| !v.is_finite()) {
            return bad("linear parameters must be finite".into());
        }
        let n = &self.noise;
        if !(n.sigma >= 0.0) || !n.sigma.is_finite() {
            return bad(format!("noise sigma {} must be non-negative", n.sigma));
        }
        if !(n.ar1_phi.abs() < 1.0) || !(n.hurst > 0.0 && n.hurst < 1.0) || !(n.alpha > 0.0 && n.alpha <= 2.0) {
            return bad("noise model parameters out of range".into());
        }
        if let Some(pre) = self.pre_bubble {
            if !(pre.volatility >= 0.0) || !pre.volatility.is_finite() {
                return bad(format!("pre-bubble volatility {} must be non-negative", pre.volatility));
            }
        }
        Ok(())
    }
}

/// Monday-to-Friday dates starting at the first weekday on or after `start`.
pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

fn noise(spec: &SynthSpec) -> Result<Vec<f64>> {
    let n = spec.n_bubble;
    let ns = &spec.noise;
    if ns.sigma == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut rng = stream_rng(spec.seed, 0);
    let unit = match ns.model {
        NullModel::WhiteGaussian => white_noise(&mut rng, n),
        NullModel::Ar1 => ar1_series(&mut rng, n, ns.ar1_phi),
        NullModel::Fgn => FgnGenerator::new(n, ns.hurst)?.sample(&mut rng),
        NullModel::LevyStable => levy_series(&mut rng, n, ns.alpha),
    };
    Ok(unit.into_iter().map(|v| ns.sigma * v).collect())
}

pub fn generate(spec: &SynthSpec) -> Result<Synthetic> {
    spec.validate()?;
    let eps = noise(spec)?;
    let mut bubble = Vec::with_capacity(spec.n_bubble);
    for (t, e) in eps.iter().enumerate() {
        bubble.push(lppls_eval(&spec.params, t as f64)? + e);
    }

    let mut log_prices = Vec::new();
    let mut bubble_start = 0;
    if let Some(pre) = spec.pre_bubble {
        let mut rng = stream_rng(spec.seed, 1);
        let steps = white_noise(&mut rng, pre.length);
        let mut level = lppls_eval(&spec.params, 0.0)?;
        let mut walk = vec![0.0; pre.length];
        for j in (0..pre.length).rev() {
            level -= pre.volatility * steps[j];
            walk[j] = level;
        }
        log_prices.extend(walk);
        bubble_start = pre.length;
    }
    log_prices.extend(bubble);
    let dates = business_days(spec.start_date, log_prices.len());
    Ok(Synthetic { series: PriceSeries::from_log_prices(dates, log_prices)?, bubble_start })
}
