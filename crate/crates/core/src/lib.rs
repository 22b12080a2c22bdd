//! Detection and characterisation of speculative bubbles with the
//! log-periodic power law singularity (LPPLS) model.
//!
//! * [`timeseries`]: CSV ingestion and the trading-day time axis.
//! * [`lppls`]: the model and its two-step grid/OLS calibration.
//! * [`bubble_start`]: inception dating with Lagrange-regularised scans.
//! * [`diagnostics`]: power-law detrending, Lomb periodogram, (H,q)-derivative.
//! * [`surrogates`]: null-model surrogates and empirical p-values.
//! * [`report`]: JSON and CSV output formats.
//! * [`synth`]: synthetic bubbles for validation.

pub mod bubble_start;
pub mod diagnostics;
pub mod error;
pub mod lppls;
pub mod report;
pub mod surrogates;
pub mod synth;
pub mod timeseries;

pub use error::{Error, Result};
