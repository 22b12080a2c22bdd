//! Bubble inception dating by Lagrange-regularised window scanning.
//!
//! For a fixed end `t2`, every candidate start `t1` gets its own LPPLS fit.
//! The normalised residual `χ²_np(t1)` drifts with window size, so the
//! candidates are compared on `χ²_λ(t1) = χ²_np(t1) - λ (t2 - t1)` where
//! `λ` is the slope of the linear trend of `χ²_np` against window size.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lppls::{self, lppls_eval, FitResult, GridSpec};
use crate::timeseries::{slice, PriceSeries, Window, MIN_WINDOW_OBS};

/// Free parameters of the LPPLS model: tc, β, ω, A, B, C1, C2.
pub const DEFAULT_K: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Fixed window end (trading-day index).
    pub t2: usize,
    pub t1_earliest: usize,
    pub t1_latest: usize,
    pub t1_step: usize,
    pub grid: GridSpec,
    pub k: usize,
}

impl ScanConfig {
    pub fn new(t2: usize, t1_earliest: usize, t1_latest: usize) -> Self {
        Self { t2, t1_earliest, t1_latest, t1_step: 5, grid: GridSpec::default(), k: DEFAULT_K }
    }

    pub fn validate(&self, series_len: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScanConfig(m));
        if self.t2 >= series_len {
            return bad(format!("t2 = {} beyond series of length {series_len}", self.t2));
        }
        if !(self.t1_earliest < self.t1_latest && self.t1_latest < self.t2) {
            return bad(format!(
                "need t1_earliest < t1_latest < t2, got {} / {} / {}",
                self.t1_earliest, self.t1_latest, self.t2
            ));
        }
        if self.t2 - self.t1_latest + 1 < MIN_WINDOW_OBS {
            return bad(format!("latest window [{}, {}] shorter than {MIN_WINDOW_OBS}", self.t1_latest, self.t2));
        }
        if self.t1_step == 0 || self.k == 0 {
            return bad("t1_step and k must be positive".into());
        }
        self.grid.validate()
    }

    /// Candidate starts in ascending order.
    pub fn candidate_starts(&self) -> Vec<usize> {
        (self.t1_earliest..=self.t1_latest).step_by(self.t1_step.max(1)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub t1: usize,
    /// `t2 - t1` in trading days.
    pub window_size: usize,
    pub chi2_np: f64,
    pub chi2_lambda: f64,
    pub fit: FitResult,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedCandidate {
    pub t1: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub t2: usize,
    pub t2_date: NaiveDate,
    /// Ordered by `t1`.
    pub candidates: Vec<Candidate>,
    pub dropped: Vec<DroppedCandidate>,
    pub lambda: f64,
    pub t1_star: usize,
    pub t1_star_date: NaiveDate,
}

/// `Σ (ln p - f̂)² / (N - k)` over the fitted window, with the fitted curve
/// evaluated from the fit's parameters.
pub fn chi2_np(series: &PriceSeries, fit: &FitResult, k: usize) -> Result<f64> {
    let sub = slice(series, fit.window)?;
    let n = sub.len();
    if n <= k {
        return Err(Error::DegenerateDof { n_obs: n, k });
    }
    let mut ss = 0.0;
    for (i, lp) in sub.log_prices().iter().enumerate() {
        let r = lp - lppls_eval(&fit.params, i as f64)?;
        ss += r * r;
    }
    Ok(ss / (n - k) as f64)
}

/// Slope of the least-squares line `χ²_np = a + b · window_size`.
///
/// The returned `λ` is that slope: subtracting `λ · window_size` removes
/// the linear drift of `χ²_np`, so short windows no longer win just by
/// being short.
pub fn estimate_lambda(points: &[(f64, f64)]) -> Result<f64> {
    let mut sizes: Vec<f64> = points.iter().map(|p| p.0).collect();
    sizes.sort_by(f64::total_cmp);
    sizes.dedup();
    if points.len() < 3 {
        return Err(Error::TooFewCandidates { got: points.len(), required: 3 });
    }
    if sizes.len() == 1 {
        return Err(Error::ZeroVariance);
    }
    if sizes.len() < 3 {
        return Err(Error::TooFewCandidates { got: sizes.len(), required: 3 });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(sxy / sxx)
}

/// Applies the penalty and returns the index of the minimising candidate
/// (earliest `t1` on ties).
pub fn apply_penalty(candidates: &mut [Candidate], lambda: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in candidates.iter_mut().enumerate() {
        c.chi2_lambda = c.chi2_np - lambda * c.window_size as f64;
        if best.map_or(true, |b| c.chi2_lambda < b.1) {
            best = Some((i, c.chi2_lambda));
        }
    }
    best.map(|b| b.0)
}

pub fn scan_bubble_start(series: &PriceSeries, config: &ScanConfig) -> Result<ScanResult> {
    config.validate(series.len())?;
    let starts = config.candidate_starts();
    // Largest window first in `starts`; the sweep wants ascending row counts.
    let checkpoints: Vec<usize> = starts.iter().rev().map(|t1| config.t2 - t1 + 1).collect();
    let y_rev: Vec<f64> = series.log_prices()[config.t1_earliest..=config.t2].iter().rev().copied().collect();
    let outcomes = lppls::sweep(&y_rev, &checkpoints, &config.grid);

    let mut candidates = Vec::with_capacity(starts.len());
    let mut dropped = Vec::new();
    for (&t1, outcome) in starts.iter().zip(outcomes.into_iter().rev()) {
        match fit_candidate(series, config, t1, outcome) {
            Ok(c) => candidates.push(c),
            Err(e) => dropped.push(DroppedCandidate { t1, reason: e.to_string() }),
        }
    }
    if candidates.is_empty() {
        return Err(Error::ScanEmpty);
    }
    let points: Vec<(f64, f64)> = candidates.iter().map(|c| (c.window_size as f64, c.chi2_np)).collect();
    let lambda = estimate_lambda(&points)?;
    let star = apply_penalty(&mut candidates, lambda).ok_or(Error::ScanEmpty)?;
    let t1_star = candidates[star].t1;
    Ok(ScanResult {
        t2: config.t2,
        t2_date: series.dates()[config.t2],
        candidates,
        dropped,
        lambda,
        t1_star,
        t1_star_date: series.dates()[t1_star],
    })
}

fn fit_candidate(
    series: &PriceSeries,
    config: &ScanConfig,
    t1: usize,
    outcome: lppls::CheckpointOutcome,
) -> Result<Candidate> {
    let window = Window::new(t1, config.t2, series.len())?;
    let winner = outcome.best.ok_or(Error::AllGridPointsDegenerate(config.grid.n_points()))?;
    let sub = slice(series, window)?;
    let fit = lppls::finish(&sub, window, &config.grid, winner, outcome.degenerate)?;
    let chi2 = chi2_np(series, &fit, config.k)?;
    Ok(Candidate { t1, window_size: config.t2 - t1, chi2_np: chi2, chi2_lambda: chi2, fit })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub shift: usize,
    pub t2: usize,
    pub result: Option<ScanResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessSweep {
    pub entries: Vec<SweepEntry>,
    /// `t1*` of every successful shift, in shift order.
    pub t1_stars: Vec<usize>,
    /// `max - min` of `t1_stars` in trading days.
    pub spread: Option<usize>,
}

pub const DEFAULT_SHIFTS: [usize; 4] = [15, 30, 45, 60];

/// Reruns the scan with `t2` moved back by each shift; failures are recorded per shift.
pub fn robustness_sweep(series: &PriceSeries, config: &ScanConfig, shifts: &[usize]) -> RobustnessSweep {
    let entries: Vec<SweepEntry> = shifts
        .iter()
        .map(|&shift| {
            let t2 = config.t2.checked_sub(shift);
            let outcome = match t2 {
                Some(t2) => scan_bubble_start(series, &ScanConfig { t2, ..*config }),
                None => Err(Error::InvalidScanConfig(format!("shift {shift} moves t2 before the series start"))),
            };
            match outcome {
                Ok(r) => SweepEntry { shift, t2: r.t2, result: Some(r), error: None },
                Err(e) => SweepEntry { shift, t2: t2.unwrap_or(0), result: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    let t1_stars: Vec<usize> = entries.iter().filter_map(|e| e.result.as_ref().map(|r| r.t1_star)).collect();
    let spread = match (t1_stars.iter().min(), t1_stars.iter().max()) {
        (Some(lo), Some(hi)) => Some(hi - lo),
        _ => None,
    };
    RobustnessSweep { entries, t1_stars, spread }
}
