use std::path::PathBuf;

use bubble_lens::bubble_start::{robustness_sweep, scan_bubble_start, RobustnessSweep, ScanConfig, ScanResult};
use bubble_lens::diagnostics::{detrend_power_law, hq_derivative, LombPlan, Normalization, PowerLawTrend};
use bubble_lens::lppls::{fit_window_with, FitOptions};
use bubble_lens::report::{
    read_residuals_csv, write_fit_table, write_hq_csv, write_periodogram_csv, write_residuals_csv, write_scan_csv,
    FitReport,
};
use bubble_lens::surrogates::{significance_with_plan, NullModel, SignificanceResult, SurrogateConfig};
use bubble_lens::synth::{generate, PreBubble, SynthSpec};
use bubble_lens::timeseries::{read_csv, slice, CsvOptions, PriceSeries, Window, MIN_WINDOW_OBS};
use chrono::NaiveDate;
use serde::Serialize;
use serde_json::Value;

use crate::args::{Cli, Command, CsvArgs, DiagnoseArgs, FitArgs, Global, ScanArgs, SigtestArgs, SynthArgs};
use crate::bad_input;
use crate::config::{apply_file, DiagnoseConfig, FitConfig, ScanCfg, SigtestConfig, SynthConfig};
use crate::output::{read_input, sha256_hex, Failure, Outputs};

pub fn run(cli: Cli) -> Result<(), Failure> {
    let g = cli.global;
    if g.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(g.threads)
            .build_global()
            .map_err(|e| Failure::compute(e.into()))?;
    }
    let file = match &g.config {
        Some(path) => {
            let bytes = read_input(path)?;
            let v: Value = serde_json::from_slice(&bytes)
                .map_err(|e| bad_input!("config {} is not valid JSON: {e}", path.display()))?;
            if !v.is_object() {
                return Err(bad_input!("config {} must hold a JSON object", path.display()));
            }
            Some(v)
        }
        None => None,
    };
    let file = file.as_ref();
    match cli.command {
        Command::Fit(a) => fit(&g, a, file),
        Command::Scan(a) => scan(&g, a, file),
        Command::Diagnose(a) => diagnose(&g, a, file),
        Command::Sigtest(a) => sigtest(&g, a, file),
        Command::Synth(a) => synth(&g, a, file),
        Command::Version => {
            println!("bubble-lens {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}

fn parse_date(s: &str) -> Result<NaiveDate, Failure> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|_| bad_input!("`{s}` is not an ISO date (YYYY-MM-DD)"))
}

fn parse_window(series: &PriceSeries, spec: &str) -> Result<Window, Failure> {
    let (a, b) = spec.split_once(':').ok_or_else(|| bad_input!("window `{spec}` must look like START:END"))?;
    Ok(series.window_for_dates(parse_date(a)?, parse_date(b)?)?)
}

fn apply_csv(args: &CsvArgs, date_col: &mut String, price_col: &mut String) {
    if let Some(c) = &args.date_col {
        date_col.clone_from(c);
    }
    if let Some(c) = &args.price_col {
        price_col.clone_from(c);
    }
}

/// Reads and hashes the price CSV.
fn load_series(input: &Option<PathBuf>, date_col: &str, price_col: &str) -> Result<(PriceSeries, String), Failure> {
    let path = input.as_ref().ok_or_else(|| bad_input!("--input is required"))?;
    let bytes = read_input(path)?;
    let opts = CsvOptions { date_col: date_col.into(), price_col: price_col.into(), min_rows: MIN_WINDOW_OBS };
    let loaded = read_csv(bytes.as_slice(), &opts)?;
    if loaded.dropped_rows > 0 {
        eprintln!("note: {} rows without a price were skipped", loaded.dropped_rows);
    }
    Ok((loaded.series, sha256_hex(&bytes)))
}

fn to_value<T: Serialize>(cfg: &T) -> Result<Value, Failure> {
    serde_json::to_value(cfg).map_err(|e| Failure::compute(e.into()))
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> bubble_lens::Result<()>) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn report_written(paths: &[PathBuf]) {
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
}

fn fit(g: &Global, a: FitArgs, file: Option<&Value>) -> Result<(), Failure> {
    let mut cfg = FitConfig::defaults();
    cfg.input.clone_from(&g.input);
    apply_csv(&a.csv, &mut cfg.date_col, &mut cfg.price_col);
    if !a.windows.is_empty() {
        cfg.windows = a.windows;
    }
    cfg.polish |= a.polish;
    let cfg = apply_file(cfg, file)?;

    let (series, hash) = load_series(&cfg.input, &cfg.date_col, &cfg.price_col)?;
    let windows = if cfg.windows.is_empty() {
        vec![Window::full(&series)?]
    } else {
        cfg.windows.iter().map(|w| parse_window(&series, w)).collect::<Result<Vec<_>, _>>()?
    };
    let mut reports = Vec::with_capacity(windows.len());
    let mut out = Outputs::new(&g.out_dir);
    let mut names = Vec::new();
    for w in &windows {
        let fit = fit_window_with(&series, *w, &cfg.grid, &FitOptions { polish: cfg.polish })?;
        let report = FitReport::new(&series, &fit);
        let name = format!("fit_{}_{}.json", report.window.t1_date, report.window.t2_date);
        if names.contains(&name) {
            return Err(bad_input!("window {}:{} requested twice", report.window.t1_date, report.window.t2_date));
        }
        out.add_json(&name, &report)?;
        names.push(name);
        reports.push(report);
    }
    out.add("fit_table.csv", csv_bytes(|b| write_fit_table(b, &reports))?);
    report_written(&out.commit("fit", Some(hash), to_value(&cfg)?)?);
    Ok(())
}

#[derive(Serialize)]
struct ScanOutput<'a> {
    scan: &'a ScanResult,
    sweep: Option<&'a RobustnessSweep>,
}

fn scan(g: &Global, a: ScanArgs, file: Option<&Value>) -> Result<(), Failure> {
    let mut cfg = ScanCfg::defaults();
    cfg.input.clone_from(&g.input);
    apply_csv(&a.csv, &mut cfg.date_col, &mut cfg.price_col);
    let opt_date = |s: &Option<String>| s.as_deref().map(parse_date).transpose();
    cfg.t2 = opt_date(&a.t2)?.or(cfg.t2);
    cfg.t1_from = opt_date(&a.t1_from)?.or(cfg.t1_from);
    cfg.t1_to = opt_date(&a.t1_to)?.or(cfg.t1_to);
    if let Some(s) = a.step {
        cfg.step = s;
    }
    if let Some(s) = a.shifts {
        cfg.shifts = s;
    }
    let cfg = apply_file(cfg, file)?;

    let (series, hash) = load_series(&cfg.input, &cfg.date_col, &cfg.price_col)?;
    let t2 = match cfg.t2 {
        Some(d) => series.index_on_or_before(d).ok_or_else(|| bad_input!("t2 {d} precedes the series"))?,
        None => series.len() - 1,
    };
    let from = cfg.t1_from.ok_or_else(|| bad_input!("--t1-from is required"))?;
    let to = cfg.t1_to.ok_or_else(|| bad_input!("--t1-to is required"))?;
    let t1_earliest = series.index_on_or_after(from).ok_or_else(|| bad_input!("t1-from {from} is after the series"))?;
    let t1_latest = series.index_on_or_before(to).ok_or_else(|| bad_input!("t1-to {to} precedes the series"))?;
    let sc = ScanConfig { t2, t1_earliest, t1_latest, t1_step: cfg.step, grid: cfg.grid, k: cfg.k };

    let result = scan_bubble_start(&series, &sc)?;
    let sweep = (!cfg.shifts.is_empty()).then(|| robustness_sweep(&series, &sc, &cfg.shifts));

    let mut out = Outputs::new(&g.out_dir);
    out.add_json(&a.out, &ScanOutput { scan: &result, sweep: sweep.as_ref() })?;
    out.add(a.out.with_extension("csv"), csv_bytes(|b| write_scan_csv(b, &series, &result))?);
    if let Some(sw) = &sweep {
        for e in &sw.entries {
            if let Some(r) = &e.result {
                let stem = a.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                let rel = a.out.with_file_name(format!("{stem}_shift{}.csv", e.shift));
                out.add(rel, csv_bytes(|b| write_scan_csv(b, &series, r))?);
            }
        }
    }
    eprintln!("t1* = {} (lambda = {:e})", result.t1_star_date, result.lambda);
    report_written(&out.commit("scan", Some(hash), to_value(&cfg)?)?);
    Ok(())
}

#[derive(Serialize)]
struct DiagnoseSummary {
    t1_date: NaiveDate,
    t2_date: NaiveDate,
    tc_days_from_start: f64,
    tc_source: String,
    trend: Option<PowerLawTrend>,
    peak_omega: f64,
    peak_power: f64,
    h: f64,
    q: f64,
}

fn diagnose(g: &Global, a: DiagnoseArgs, file: Option<&Value>) -> Result<(), Failure> {
    let mut cfg = DiagnoseConfig::defaults();
    cfg.input.clone_from(&g.input);
    apply_csv(&a.csv, &mut cfg.date_col, &mut cfg.price_col);
    if a.window.is_some() {
        cfg.window = a.window;
    }
    if a.tc_from_fit.is_some() {
        cfg.tc_from_fit = a.tc_from_fit;
    }
    cfg.h = a.h.unwrap_or(cfg.h);
    cfg.q = a.q.unwrap_or(cfg.q);
    let cfg = apply_file(cfg, file)?;

    let (series, hash) = load_series(&cfg.input, &cfg.date_col, &cfg.price_col)?;
    let window = match &cfg.window {
        Some(w) => parse_window(&series, w)?,
        None => Window::full(&series)?,
    };
    let (tc, tc_source) = match &cfg.tc_from_fit {
        Some(path) => {
            let report: FitReport = serde_json::from_slice(&read_input(path)?)
                .map_err(|e| bad_input!("{} is not a fit report: {e}", path.display()))?;
            if series.dates().get(report.window.t1) != Some(&report.window.t1_date) {
                return Err(bad_input!("{} was produced from a different price series", path.display()));
            }
            (report.tc_index - window.t1 as f64, path.display().to_string())
        }
        None => {
            let fit = fit_window_with(&series, window, &cfg.fit_grid, &FitOptions::default())?;
            (fit.params.tc, "fit".to_string())
        }
    };
    let sub = slice(&series, window)?;
    let residuals = detrend_power_law(&sub, tc)?;
    let plan = LombPlan::new(&residuals.x, &cfg.omega_grid.values()?)?;
    let pg = plan.periodogram(&residuals.r, Normalization::Standardize)?;
    let hq = hq_derivative(&sub, tc, cfg.h, cfg.q)?;

    let dir = a.out;
    let mut out = Outputs::new(&g.out_dir);
    out.add(dir.join("residuals.csv"), csv_bytes(|b| write_residuals_csv(b, &residuals))?);
    out.add(dir.join("periodogram.csv"), csv_bytes(|b| write_periodogram_csv(b, &pg))?);
    out.add(dir.join("hq.csv"), csv_bytes(|b| write_hq_csv(b, &hq))?);
    let summary = DiagnoseSummary {
        t1_date: series.dates()[window.t1],
        t2_date: series.dates()[window.t2],
        tc_days_from_start: tc,
        tc_source,
        trend: residuals.trend,
        peak_omega: pg.peak_omega,
        peak_power: pg.peak_power,
        h: cfg.h,
        q: cfg.q,
    };
    out.add_json(dir.join("diagnose.json"), &summary)?;
    eprintln!("Lomb peak at omega = {} (power {})", pg.peak_omega, pg.peak_power);
    report_written(&out.commit("diagnose", Some(hash), to_value(&cfg)?)?);
    Ok(())
}

#[derive(Serialize)]
struct SigtestOutput {
    results: Vec<SignificanceResult>,
}

fn sigtest(g: &Global, a: SigtestArgs, file: Option<&Value>) -> Result<(), Failure> {
    let mut cfg = SigtestConfig::defaults();
    if a.residuals.is_some() {
        cfg.residuals = a.residuals;
    }
    if let Some(models) = a.models {
        cfg.models = models.iter().map(|m| m.parse::<NullModel>()).collect::<Result<_, _>>()?;
    }
    cfg.n = a.n.unwrap_or(cfg.n);
    cfg.seed = g.seed.unwrap_or(cfg.seed);
    cfg.hurst = a.hurst.unwrap_or(cfg.hurst);
    cfg.alpha = a.alpha.unwrap_or(cfg.alpha);
    cfg.ar1_phi = a.ar1_phi.or(cfg.ar1_phi);
    let cfg = apply_file(cfg, file)?;

    let path = cfg.residuals.as_ref().ok_or_else(|| bad_input!("--residuals is required"))?;
    let bytes = read_input(path)?;
    let residuals = read_residuals_csv(bytes.as_slice())?;
    let plan = LombPlan::new(&residuals.x, &cfg.omega_grid.values()?)?;
    let mut results = Vec::with_capacity(cfg.models.len());
    for &model in &cfg.models {
        let sc = SurrogateConfig {
            model,
            n_surrogates: cfg.n,
            seed: cfg.seed,
            ar1_phi: cfg.ar1_phi,
            hurst: cfg.hurst,
            alpha: cfg.alpha,
        };
        let r = significance_with_plan(&residuals, &plan, &sc)?;
        eprintln!("{model}: p = {}", r.p_value);
        results.push(r);
    }
    let mut out = Outputs::new(&g.out_dir);
    out.add_json(&a.out, &SigtestOutput { results })?;
    report_written(&out.commit("sigtest", Some(sha256_hex(&bytes)), to_value(&cfg)?)?);
    Ok(())
}

fn synth(g: &Global, a: SynthArgs, file: Option<&Value>) -> Result<(), Failure> {
    let mut cfg = SynthConfig::defaults();
    let p = &mut cfg.params;
    for (slot, v) in [
        (&mut p.tc, a.tc),
        (&mut p.beta, a.beta),
        (&mut p.omega, a.omega),
        (&mut p.a, a.a),
        (&mut p.b, a.b),
        (&mut p.c1, a.c1),
        (&mut p.c2, a.c2),
        (&mut cfg.noise.sigma, a.sigma),
    ] {
        if let Some(v) = v {
            *slot = v;
        }
    }
    cfg.n_bubble = a.n.unwrap_or(cfg.n_bubble);
    if let Some(m) = &a.noise {
        cfg.noise.model = m.parse()?;
    }
    if a.pre_length.is_some() || a.pre_vol.is_some() {
        cfg.pre_bubble = Some(PreBubble { length: a.pre_length.unwrap_or(300), volatility: a.pre_vol.unwrap_or(0.01) });
    }
    if let Some(d) = &a.start_date {
        cfg.start_date = parse_date(d)?;
    }
    cfg.seed = g.seed.unwrap_or(cfg.seed);
    let cfg = apply_file(cfg, file)?;

    let spec = SynthSpec {
        params: cfg.params,
        n_bubble: cfg.n_bubble,
        noise: cfg.noise,
        pre_bubble: cfg.pre_bubble,
        start_date: cfg.start_date,
        seed: cfg.seed,
    };
    let synthetic = generate(&spec)?;
    let mut out = Outputs::new(&g.out_dir);
    out.add(&a.out, csv_bytes(|b| synthetic.series.write_csv(b))?);
    let mut config = to_value(&cfg)?;
    if let Value::Object(m) = &mut config {
        m.insert("bubble_start_index".into(), synthetic.bubble_start.into());
    }
    report_written(&out.commit("synth", None, config)?);
    Ok(())
}
