use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "bubble-lens", version, about = "LPPLS bubble calibration, inception dating and diagnostics")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Price CSV with `date` and `adj_close` columns.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// JSON file whose keys override the command-line settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibrate LPPLS on one or more windows.
    Fit(FitArgs),
    /// Date the bubble start by scanning window starts.
    Scan(ScanArgs),
    /// Detrended residuals, Lomb periodogram and (H,q)-derivative.
    Diagnose(DiagnoseArgs),
    /// Surrogate significance of the Lomb peak of saved residuals.
    Sigtest(SigtestArgs),
    /// Write a synthetic price series with a planted bubble.
    Synth(SynthArgs),
    /// Print the tool version.
    Version,
}

#[derive(Debug, Clone, Args)]
pub struct CsvArgs {
    #[arg(long)]
    pub date_col: Option<String>,
    #[arg(long)]
    pub price_col: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// `START:END` in ISO dates; repeatable. Defaults to the whole series.
    #[arg(long = "window")]
    pub windows: Vec<String>,
    /// Refine the winning grid cell with Nelder–Mead.
    #[arg(long)]
    pub polish: bool,
    #[command(flatten)]
    pub csv: CsvArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    /// Fixed window end (defaults to the last date).
    #[arg(long)]
    pub t2: Option<String>,
    #[arg(long)]
    pub t1_from: Option<String>,
    #[arg(long)]
    pub t1_to: Option<String>,
    #[arg(long)]
    pub step: Option<usize>,
    /// Comma-separated backward shifts of t2 in trading days.
    #[arg(long, value_delimiter = ',')]
    pub shifts: Option<Vec<usize>>,
    #[arg(long, default_value = "scan.json")]
    pub out: PathBuf,
    #[command(flatten)]
    pub csv: CsvArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    /// `START:END` in ISO dates. Defaults to the whole series.
    #[arg(long)]
    pub window: Option<String>,
    /// Take tc from a JSON written by `fit`; otherwise the window is fitted first.
    #[arg(long)]
    pub tc_from_fit: Option<PathBuf>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    /// Output directory (relative paths resolve under --out-dir).
    #[arg(long, default_value = "diag")]
    pub out: PathBuf,
    #[command(flatten)]
    pub csv: CsvArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SigtestArgs {
    /// Residual CSV with columns `x,r`, as written by `diagnose`.
    #[arg(long)]
    pub residuals: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    /// Surrogates per model.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub hurst: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub ar1_phi: Option<f64>,
    #[arg(long, default_value = "sigtest.json")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Critical time in trading days from the first bubble observation.
    #[arg(long)]
    pub tc: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    /// Bubble length in trading days.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Random-walk segment prepended to the bubble.
    #[arg(long)]
    pub pre_length: Option<usize>,
    #[arg(long)]
    pub pre_vol: Option<f64>,
    #[arg(long)]
    pub start_date: Option<String>,
    #[arg(long, default_value = "synth.csv")]
    pub out: PathBuf,
}
