//! Effective per-command configuration: defaults, then flags, then the
//! optional JSON file.

use std::path::PathBuf;

use bubble_lens::bubble_start::{DEFAULT_K, DEFAULT_SHIFTS};
use bubble_lens::diagnostics::{OmegaGrid, DEFAULT_H, DEFAULT_Q};
use bubble_lens::lppls::{GridSpec, LpplsParams};
use bubble_lens::surrogates::NullModel;
use bubble_lens::synth::{NoiseSpec, PreBubble};
use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::output::Failure;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub input: Option<PathBuf>,
    pub date_col: String,
    pub price_col: String,
    /// `START:END` date pairs; empty means the whole series.
    pub windows: Vec<String>,
    pub grid: GridSpec,
    pub polish: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanCfg {
    pub input: Option<PathBuf>,
    pub date_col: String,
    pub price_col: String,
    pub t2: Option<NaiveDate>,
    pub t1_from: Option<NaiveDate>,
    pub t1_to: Option<NaiveDate>,
    pub step: usize,
    pub shifts: Vec<usize>,
    pub k: usize,
    pub grid: GridSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseConfig {
    pub input: Option<PathBuf>,
    pub date_col: String,
    pub price_col: String,
    pub window: Option<String>,
    pub tc_from_fit: Option<PathBuf>,
    pub h: f64,
    pub q: f64,
    pub omega_grid: OmegaGrid,
    /// Used only when tc is not taken from a fit report.
    pub fit_grid: GridSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigtestConfig {
    pub residuals: Option<PathBuf>,
    pub models: Vec<NullModel>,
    pub n: usize,
    pub seed: u64,
    pub hurst: f64,
    pub alpha: f64,
    pub ar1_phi: Option<f64>,
    pub omega_grid: OmegaGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub params: LpplsParams,
    pub n_bubble: usize,
    pub noise: NoiseSpec,
    pub pre_bubble: Option<PreBubble>,
    pub start_date: NaiveDate,
    pub seed: u64,
}

impl FitConfig {
    pub fn defaults() -> Self {
        Self {
            input: None,
            date_col: "date".into(),
            price_col: "adj_close".into(),
            windows: Vec::new(),
            grid: GridSpec::default(),
            polish: false,
        }
    }
}

impl ScanCfg {
    pub fn defaults() -> Self {
        Self {
            input: None,
            date_col: "date".into(),
            price_col: "adj_close".into(),
            t2: None,
            t1_from: None,
            t1_to: None,
            step: 5,
            shifts: DEFAULT_SHIFTS.to_vec(),
            k: DEFAULT_K,
            grid: GridSpec::default(),
        }
    }
}

impl DiagnoseConfig {
    pub fn defaults() -> Self {
        Self {
            input: None,
            date_col: "date".into(),
            price_col: "adj_close".into(),
            window: None,
            tc_from_fit: None,
            h: DEFAULT_H,
            q: DEFAULT_Q,
            omega_grid: OmegaGrid::default(),
            fit_grid: GridSpec::default(),
        }
    }
}

impl SigtestConfig {
    pub fn defaults() -> Self {
        Self {
            residuals: None,
            models: NullModel::ALL.to_vec(),
            n: 100,
            seed: DEFAULT_SEED,
            hurst: 0.7,
            alpha: 1.7,
            ar1_phi: None,
            omega_grid: OmegaGrid::default(),
        }
    }
}

impl SynthConfig {
    pub fn defaults() -> Self {
        Self {
            params: LpplsParams { tc: 240.0, beta: 0.3, omega: 8.0, a: 5.0, b: -0.1, c1: 0.01, c2: 0.005 },
            n_bubble: 200,
            noise: NoiseSpec::default(),
            pre_bubble: None,
            start_date: NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date"),
            seed: DEFAULT_SEED,
        }
    }
}

/// Recursively overlays `over` onto `base`; objects merge key by key,
/// anything else replaces.
pub fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}

pub fn apply_file<T: Serialize + DeserializeOwned>(cfg: T, file: Option<&Value>) -> Result<T, Failure> {
    let Some(over) = file else { return Ok(cfg) };
    let mut v = serde_json::to_value(&cfg).map_err(|e| Failure::compute(e.into()))?;
    merge(&mut v, over);
    serde_json::from_value(v).map_err(|e| Failure::input(anyhow::anyhow!("invalid config file: {e}")))
}
