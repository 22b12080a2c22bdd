use serde::{Deserialize, Serialize};

use crate::diagnostics::detrend::Residuals;
use crate::error::{Error, Result};

pub const MIN_PERIODOGRAM_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

/// Angular log-frequency grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OmegaGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Default for OmegaGrid {
    fn default() -> Self {
        Self { min: 0.2, max: 20.0, count: 1000, spacing: Spacing::Log }
    }
}

impl OmegaGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.count == 0 || !(self.min > 0.0) || !(self.max >= self.min) || !self.max.is_finite() {
            return Err(Error::InvalidPeriodogram(format!(
                "bad frequency grid [{}, {}] x {}",
                self.min, self.max, self.count
            )));
        }
        if self.count == 1 {
            return Ok(vec![self.min]);
        }
        let last = self.count - 1;
        Ok(match self.spacing {
            Spacing::Linear => {
                let step = (self.max - self.min) / last as f64;
                (0..self.count).map(|i| if i == last { self.max } else { self.min + i as f64 * step }).collect()
            }
            Spacing::Log => {
                let (lo, hi) = (self.min.ln(), self.max.ln());
                let step = (hi - lo) / last as f64;
                (0..self.count)
                    .map(|i| if i == last { self.max } else { (lo + i as f64 * step).exp() })
                    .collect()
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Mean-centre and scale to unit (population) variance first.
    Standardize,
    /// Use the residual values as given.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodogramResult {
    pub omegas: Vec<f64>,
    pub power: Vec<f64>,
    pub peak_omega: f64,
    pub peak_power: f64,
}

/// Trigonometric tables for a fixed set of log-times and frequencies, so
/// many residual series on the same sampling can be scored cheaply.
#[derive(Debug, Clone)]
pub struct LombPlan {
    omegas: Vec<f64>,
    n: usize,
    /// Per frequency: `cos ω(x - τ)` then `sin ω(x - τ)`, each of length n.
    tables: Vec<f64>,
    /// Per frequency: `Σ cos²`, `Σ sin²`.
    denoms: Vec<(f64, f64)>,
}

impl LombPlan {
    pub fn new(x: &[f64], omegas: &[f64]) -> Result<Self> {
        if x.len() < MIN_PERIODOGRAM_POINTS {
            return Err(Error::InvalidPeriodogram(format!(
                "{} points, at least {MIN_PERIODOGRAM_POINTS} required",
                x.len()
            )));
        }
        if omegas.is_empty() {
            return Err(Error::InvalidPeriodogram("empty frequency grid".into()));
        }
        let n = x.len();
        let mut tables = Vec::with_capacity(2 * n * omegas.len());
        let mut denoms = Vec::with_capacity(omegas.len());
        for &w in omegas {
            // tan(2ωτ) = Σ sin 2ωx / Σ cos 2ωx
            let (s2, c2) = x.iter().fold((0.0, 0.0), |(s, c), xi| {
                let (si, ci) = (2.0 * w * xi).sin_cos();
                (s + si, c + ci)
            });
            let tau = s2.atan2(c2) / (2.0 * w);
            let start = tables.len();
            tables.extend(x.iter().map(|xi| (w * (xi - tau)).cos()));
            tables.extend(x.iter().map(|xi| (w * (xi - tau)).sin()));
            let cc: f64 = tables[start..start + n].iter().map(|v| v * v).sum();
            let ss: f64 = tables[start + n..start + 2 * n].iter().map(|v| v * v).sum();
            denoms.push((cc, ss));
        }
        Ok(Self { omegas: omegas.to_vec(), n, tables, denoms })
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn power(&self, r: &[f64], normalization: Normalization) -> Result<Vec<f64>> {
        if r.len() != self.n {
            return Err(Error::InvalidPeriodogram(format!("expected {} values, got {}", self.n, r.len())));
        }
        let n = self.n as f64;
        let mean = r.iter().sum::<f64>() / n;
        let var = r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        if !(var > 0.0) {
            return Err(Error::ZeroVarianceResiduals);
        }
        let vals: Vec<f64> = match normalization {
            Normalization::Standardize => {
                let sd = var.sqrt();
                r.iter().map(|v| (v - mean) / sd).collect()
            }
            Normalization::Raw => r.to_vec(),
        };
        let out = self
            .denoms
            .iter()
            .enumerate()
            .map(|(k, &(cc, ss))| {
                let base = 2 * self.n * k;
                let cos = &self.tables[base..base + self.n];
                let sin = &self.tables[base + self.n..base + 2 * self.n];
                let yc: f64 = vals.iter().zip(cos).map(|(a, b)| a * b).sum();
                let ys: f64 = vals.iter().zip(sin).map(|(a, b)| a * b).sum();
                let term = |num: f64, den: f64| if den > 0.0 { num * num / den } else { 0.0 };
                0.5 * (term(yc, cc) + term(ys, ss))
            })
            .collect();
        Ok(out)
    }

    pub fn periodogram(&self, r: &[f64], normalization: Normalization) -> Result<PeriodogramResult> {
        let power = self.power(r, normalization)?;
        let (peak_idx, peak_power) = peak(&power);
        Ok(PeriodogramResult { omegas: self.omegas.clone(), peak_omega: self.omegas[peak_idx], peak_power, power })
    }
}

/// First index of the maximum.
pub(crate) fn peak(power: &[f64]) -> (usize, f64) {
    power.iter().enumerate().fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best })
}

/// Lomb periodogram of standardised residuals against log-time.
pub fn lomb_periodogram(residuals: &Residuals, grid: &OmegaGrid) -> Result<PeriodogramResult> {
    lomb_periodogram_with(residuals, &grid.values()?, Normalization::Standardize)
}

pub fn lomb_periodogram_with(
    residuals: &Residuals,
    omegas: &[f64],
    normalization: Normalization,
) -> Result<PeriodogramResult> {
    LombPlan::new(&residuals.x, omegas)?.periodogram(&residuals.r, normalization)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_times(n: usize, tc: f64) -> Vec<f64> {
        (0..n).map(|t| (tc - t as f64).ln()).collect()
    }

    #[test]
    fn planted_frequency_found() {
        let x = log_times(500, 519.0);
        let r: Vec<f64> = x.iter().map(|v| (5.0 * v).cos()).collect();
        let grid = OmegaGrid { min: 0.1, max: 20.0, count: 200, spacing: Spacing::Linear };
        let res = lomb_periodogram(&Residuals::from_parts(x, r).unwrap(), &grid).unwrap();
        assert!((res.peak_omega - 5.0).abs() <= 0.1 + 1e-12, "peak {}", res.peak_omega);
        assert_eq!(res.peak_power, res.power.iter().cloned().fold(f64::MIN, f64::max));
        assert!(res.power.iter().all(|p| *p >= 0.0));
    }

    #[test]
    fn zero_residuals_rejected() {
        let res = Residuals::from_parts(log_times(20, 30.0), vec![0.0; 20]).unwrap();
        assert!(matches!(lomb_periodogram(&res, &OmegaGrid::default()), Err(Error::ZeroVarianceResiduals)));
    }

    #[test]
    fn too_few_points_rejected() {
        let res = Residuals::from_parts(log_times(5, 30.0), vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!(matches!(lomb_periodogram(&res, &OmegaGrid::default()), Err(Error::InvalidPeriodogram(_))));
    }

    #[test]
    fn raw_power_scales_quadratically() {
        let x = log_times(100, 130.0);
        let r: Vec<f64> = x.iter().enumerate().map(|(i, v)| (7.0 * v).sin() + 0.1 * ((i * 7919) % 13) as f64).collect();
        let omegas = OmegaGrid { count: 50, ..Default::default() }.values().unwrap();
        let plan = LombPlan::new(&x, &omegas).unwrap();
        let p1 = plan.power(&r, Normalization::Raw).unwrap();
        let scaled: Vec<f64> = r.iter().map(|v| 3.0 * v).collect();
        let p3 = plan.power(&scaled, Normalization::Raw).unwrap();
        for (a, b) in p1.iter().zip(&p3) {
            assert!((9.0 * a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
        let s1 = plan.power(&r, Normalization::Standardize).unwrap();
        let s3 = plan.power(&scaled, Normalization::Standardize).unwrap();
        for (a, b) in s1.iter().zip(&s3) {
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn grid_spacing() {
        let g = OmegaGrid { min: 1.0, max: 100.0, count: 3, spacing: Spacing::Log }.values().unwrap();
        assert!((g[1] - 10.0).abs() < 1e-12);
        let l = OmegaGrid { min: 1.0, max: 3.0, count: 3, spacing: Spacing::Linear }.values().unwrap();
        assert_eq!(l, vec![1.0, 2.0, 3.0]);
        assert!(OmegaGrid { count: 0, ..Default::default() }.values().is_err());
    }
}
