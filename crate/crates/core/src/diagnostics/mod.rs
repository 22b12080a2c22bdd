//! Non-parametric checks for log-periodicity.

mod detrend;
mod hq;
mod lomb;

pub use detrend::{
    detrend_power_law, PowerLawTrend, Residuals, DETREND_BETA_COUNT, DETREND_BETA_MAX, DETREND_BETA_MIN,
};
pub use hq::{hq_derivative, HqDerivative, HqPoint, DEFAULT_H, DEFAULT_Q};
pub use lomb::{
    lomb_periodogram, lomb_periodogram_with, LombPlan, Normalization, OmegaGrid, PeriodogramResult, Spacing,
    MIN_PERIODOGRAM_POINTS,
};
