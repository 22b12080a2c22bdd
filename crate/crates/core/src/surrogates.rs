//! Surrogate residual series under four null models, and the empirical
//! p-value of an observed Lomb peak against them.
//!
//! Each surrogate index draws from its own ChaCha stream of the configured
//! seed, so results do not depend on how surrogates are scheduled.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::diagnostics::{LombPlan, Normalization, OmegaGrid, Residuals};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullModel {
    WhiteGaussian,
    Ar1,
    Fgn,
    LevyStable,
}

impl NullModel {
    pub const ALL: [NullModel; 4] = [NullModel::WhiteGaussian, NullModel::Ar1, NullModel::Fgn, NullModel::LevyStable];

    pub fn tag(&self) -> &'static str {
        match self {
            NullModel::WhiteGaussian => "white_gaussian",
            NullModel::Ar1 => "ar1",
            NullModel::Fgn => "fgn",
            NullModel::LevyStable => "levy_stable",
        }
    }
}

impl fmt::Display for NullModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for NullModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "white" | "white_gaussian" | "gaussian" => Ok(NullModel::WhiteGaussian),
            "ar1" => Ok(NullModel::Ar1),
            "fgn" => Ok(NullModel::Fgn),
            "levy" | "levy_stable" => Ok(NullModel::LevyStable),
            other => Err(Error::InvalidModelParams(format!("unknown null model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    pub model: NullModel,
    pub n_surrogates: usize,
    pub seed: u64,
    /// AR(1) coefficient; estimated from the calibration residuals when absent.
    pub ar1_phi: Option<f64>,
    pub hurst: f64,
    pub alpha: f64,
}

impl SurrogateConfig {
    pub fn new(model: NullModel, seed: u64) -> Self {
        Self { model, n_surrogates: 100, seed, ar1_phi: None, hurst: 0.7, alpha: 1.7 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidModelParams(m));
        if self.n_surrogates == 0 {
            return bad("n_surrogates must be at least 1".into());
        }
        if let Some(phi) = self.ar1_phi {
            if !(phi.abs() < 1.0) {
                return bad(format!("AR(1) coefficient {phi} must satisfy |phi| < 1"));
            }
        }
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return bad(format!("Hurst exponent {} outside (0, 1)", self.hurst));
        }
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return bad(format!("stability index {} outside (0, 2]", self.alpha));
        }
        Ok(())
    }
}

/// Independent RNG stream `index` of `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn white_noise<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// Stationary AR(1) with unit marginal variance.
pub fn ar1_series<R: Rng + ?Sized>(rng: &mut R, len: usize, phi: f64) -> Vec<f64> {
    let innov = (1.0 - phi * phi).sqrt();
    let mut out = Vec::with_capacity(len);
    let mut prev: f64 = 0.0;
    for i in 0..len {
        let z: f64 = rng.sample(StandardNormal);
        prev = if i == 0 { z } else { phi * prev + innov * z };
        out.push(prev);
    }
    out
}

/// Autocovariance of unit-variance fractional Gaussian noise at lag `k`.
pub fn fgn_autocovariance(hurst: f64, k: usize) -> f64 {
    let k = k as f64;
    let h2 = 2.0 * hurst;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// Exact fractional Gaussian noise by circulant embedding.
///
/// The `n x n` Toeplitz covariance is embedded in a `2n` circulant matrix
/// whose eigenvalues are the FFT of its first row; scaling complex white
/// noise by their square roots and transforming back gives a sample whose
/// real part has exactly the fGn covariance.
#[derive(Clone)]
pub struct FgnGenerator {
    n: usize,
    scale: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for FgnGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FgnGenerator").field("n", &self.n).finish()
    }
}

impl FgnGenerator {
    pub fn new(n: usize, hurst: f64) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::InvalidModelParams(format!("Hurst exponent {hurst} outside (0, 1)")));
        }
        if n == 0 {
            return Err(Error::InvalidModelParams("fGn length must be positive".into()));
        }
        let m = 2 * n;
        let mut row: Vec<Complex<f64>> = (0..m)
            .map(|k| {
                let lag = if k <= n { k } else { m - k };
                Complex::new(fgn_autocovariance(hurst, lag), 0.0)
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut row);
        let max = row.iter().map(|c| c.re).fold(0.0f64, f64::max);
        let mut scale = Vec::with_capacity(m);
        for c in &row {
            if c.re < -1e-9 * max.max(1.0) {
                return Err(Error::InvalidModelParams(format!(
                    "circulant embedding has negative eigenvalue {} for H = {hurst}",
                    c.re
                )));
            }
            scale.push((c.re.max(0.0) / m as f64).sqrt());
        }
        Ok(Self { n, scale, fft })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = self
            .scale
            .iter()
            .map(|s| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex::new(s * re, s * im)
            })
            .collect();
        self.fft.process(&mut buf);
        buf[..self.n].iter().map(|c| c.re).collect()
    }
}

/// Standard symmetric α-stable draw by the Chambers–Mallows–Stuck transform.
pub fn symmetric_stable<R: Rng + ?Sized>(rng: &mut R, alpha: f64) -> f64 {
    let v = loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            break PI * (u - 0.5);
        }
    };
    let w: f64 = rng.sample(Exp1);
    if (alpha - 1.0).abs() < 1e-12 {
        return v.tan();
    }
    (alpha * v).sin() / v.cos().powf(1.0 / alpha) * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

pub fn levy_series<R: Rng + ?Sized>(rng: &mut R, len: usize, alpha: f64) -> Vec<f64> {
    (0..len).map(|_| symmetric_stable(rng, alpha)).collect()
}

pub fn lag1_autocorrelation(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let den: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    if den == 0.0 {
        return 0.0;
    }
    let num: f64 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    num / den
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(x: &[f64], p: f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let h = (s.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

pub fn interquartile_range(x: &[f64]) -> f64 {
    quantile(x, 0.75) - quantile(x, 0.25)
}

/// Moments of the observed residuals that surrogates are matched to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub sd: f64,
    pub lag1: f64,
    pub iqr: f64,
}

impl Calibration {
    pub fn from_values(r: &[f64]) -> Result<Self> {
        if r.len() < 2 {
            return Err(Error::InvalidModelParams("calibration needs at least two residuals".into()));
        }
        let n = r.len() as f64;
        let mean = r.iter().sum::<f64>() / n;
        let sd = (r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        if !(sd > 0.0) {
            return Err(Error::InvalidModelParams("calibration residuals have zero variance".into()));
        }
        Ok(Self { sd, lag1: lag1_autocorrelation(r), iqr: interquartile_range(r) })
    }
}

/// Prepared generator for one null model and one calibration.
#[derive(Debug, Clone)]
pub struct SurrogateSource {
    config: SurrogateConfig,
    length: usize,
    calibration: Calibration,
    ar1_phi: f64,
    fgn: Option<FgnGenerator>,
}

impl SurrogateSource {
    pub fn new(config: &SurrogateConfig, length: usize, calibration: &[f64]) -> Result<Self> {
        config.validate()?;
        if length < 10 {
            return Err(Error::InvalidModelParams(format!("surrogate length {length} below 10")));
        }
        let cal = Calibration::from_values(calibration)?;
        let ar1_phi = config.ar1_phi.unwrap_or(cal.lag1).clamp(-0.99, 0.99);
        let fgn = match config.model {
            NullModel::Fgn => Some(FgnGenerator::new(length, config.hurst)?),
            _ => None,
        };
        Ok(Self { config: *config, length, calibration: cal, ar1_phi, fgn })
    }

    pub fn calibration(&self) -> Calibration {
        self.calibration
    }

    /// AR(1) coefficient in use (estimated or configured).
    pub fn ar1_phi(&self) -> f64 {
        self.ar1_phi
    }

    pub fn sample(&self, index: u64) -> Vec<f64> {
        let mut rng = stream_rng(self.config.seed, index);
        let sd = self.calibration.sd;
        match self.config.model {
            NullModel::WhiteGaussian => white_noise(&mut rng, self.length).into_iter().map(|v| sd * v).collect(),
            NullModel::Ar1 => ar1_series(&mut rng, self.length, self.ar1_phi).into_iter().map(|v| sd * v).collect(),
            NullModel::Fgn => {
                let g = self.fgn.as_ref().expect("fGn generator prepared for fGn model");
                g.sample(&mut rng).into_iter().map(|v| sd * v).collect()
            }
            NullModel::LevyStable => {
                let draws = levy_series(&mut rng, self.length, self.config.alpha);
                let iqr = interquartile_range(&draws);
                let k = if iqr > 0.0 { self.calibration.iqr / iqr } else { 1.0 };
                draws.into_iter().map(|v| k * v).collect()
            }
        }
    }
}

/// One surrogate realisation (stream 0 of the configured seed).
pub fn gen_surrogate(config: &SurrogateConfig, length: usize, calibration: &Residuals) -> Result<Vec<f64>> {
    Ok(SurrogateSource::new(config, length, &calibration.r)?.sample(0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub model: NullModel,
    pub n: usize,
    pub observed_peak_power: f64,
    pub observed_peak_omega: f64,
    pub p_value: f64,
    pub surrogate_peak_powers: Vec<f64>,
}

/// `(1/N) Σ 1[P_surrogate >= P_observed]`.
pub fn empirical_p_value(observed: f64, surrogate_peaks: &[f64]) -> f64 {
    if surrogate_peaks.is_empty() {
        return 1.0;
    }
    let hits = surrogate_peaks.iter().filter(|p| **p >= observed).count();
    hits as f64 / surrogate_peaks.len() as f64
}

/// Scores the observed Lomb peak against surrogates drawn on the same log-times.
pub fn significance_test(
    residuals: &Residuals,
    omega_grid: &OmegaGrid,
    config: &SurrogateConfig,
) -> Result<SignificanceResult> {
    let plan = LombPlan::new(&residuals.x, &omega_grid.values()?)?;
    significance_with_plan(residuals, &plan, config)
}

pub fn significance_with_plan(
    residuals: &Residuals,
    plan: &LombPlan,
    config: &SurrogateConfig,
) -> Result<SignificanceResult> {
    let observed = plan.periodogram(&residuals.r, Normalization::Standardize)?;
    let source = SurrogateSource::new(config, residuals.len(), &residuals.r)?;
    let peaks: Vec<f64> = (0..config.n_surrogates as u64)
        .into_par_iter()
        .map(|j| {
            let s = source.sample(j);
            plan.power(&s, Normalization::Standardize).map(|p| p.into_iter().fold(f64::NEG_INFINITY, f64::max))
        })
        .collect::<Result<_>>()?;
    Ok(SignificanceResult {
        model: config.model,
        n: config.n_surrogates,
        observed_peak_power: observed.peak_power,
        observed_peak_omega: observed.peak_omega,
        p_value: empirical_p_value(observed.peak_power, &peaks),
        surrogate_peak_powers: peaks,
    })
}
