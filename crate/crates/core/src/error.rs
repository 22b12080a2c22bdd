use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("non-positive price {value} on row {row}")]
    NonPositivePrice { row: usize, value: f64 },
    #[error("series has {valid_rows} valid rows, at least {required} required")]
    EmptySeries { valid_rows: usize, required: usize },
    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("window [{t1}, {t2}] out of range for series of length {len}")]
    WindowOutOfRange { t1: usize, t2: usize, len: usize },
    #[error("window has {n_obs} observations, at least {required} required")]
    WindowTooShort { n_obs: usize, required: usize },

    #[error("t = {t} is at or past the critical time tc = {tc}")]
    TimeAtOrPastCritical { t: f64, tc: f64 },
    #[error("invalid nonlinear parameters: {0}")]
    InvalidNonlinearParams(String),
    #[error("design matrix is rank deficient (column {column})")]
    RankDeficient { column: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("all {0} grid points were degenerate")]
    AllGridPointsDegenerate(usize),

    #[error("N = {n_obs} does not exceed k = {k}")]
    DegenerateDof { n_obs: usize, k: usize },
    #[error("need at least {required} candidates with distinct window sizes, got {got}")]
    TooFewCandidates { got: usize, required: usize },
    #[error("window sizes have zero variance")]
    ZeroVariance,
    #[error("invalid scan configuration: {0}")]
    InvalidScanConfig(String),
    #[error("every candidate window failed to fit")]
    ScanEmpty,

    #[error("invalid critical time tc = {tc} for series ending at t = {t_max}")]
    InvalidTc { tc: f64, t_max: f64 },
    #[error("power-law trend is degenerate for every beta")]
    DegenerateTrend,
    #[error("residuals have zero variance")]
    ZeroVarianceResiduals,
    #[error("invalid periodogram input: {0}")]
    InvalidPeriodogram(String),
    #[error("q = {0} must lie in (0, 1)")]
    InvalidQ(f64),
    #[error("no valid t for the (H,q)-derivative")]
    InsufficientRange,

    #[error("invalid null-model parameters: {0}")]
    InvalidModelParams(String),
    #[error("invalid planted parameters: {0}")]
    InvalidPlantedParams(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by the caller's input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::MalformedRow { .. }
                | Error::NonPositivePrice { .. }
                | Error::EmptySeries { .. }
                | Error::DuplicateDate(_)
                | Error::MissingColumn(_)
                | Error::WindowOutOfRange { .. }
                | Error::WindowTooShort { .. }
                | Error::InvalidGrid(_)
                | Error::InvalidScanConfig(_)
                | Error::InvalidQ(_)
                | Error::InvalidModelParams(_)
                | Error::InvalidPlantedParams(_)
                | Error::InvalidTc { .. }
                | Error::InvalidPeriodogram(_)
                | Error::Io(_)
                | Error::Csv(_)
        )
    }
}
