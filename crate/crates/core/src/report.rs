//! JSON and CSV serialisations of fits, scans and diagnostics.

use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::bubble_start::ScanResult;
use crate::diagnostics::{HqDerivative, PeriodogramResult, Residuals};
use crate::error::{Error, Result};
use crate::lppls::{BoundaryFlags, FitResult, GridSpec};
use crate::timeseries::{PriceSeries, TradingCalendar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowDates {
    pub t1_date: NaiveDate,
    pub t2_date: NaiveDate,
    pub t1: usize,
    pub t2: usize,
}

/// Critical time expressed as a calendar date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcDate {
    pub date: NaiveDate,
    /// `tc` on the trading-day axis of the whole series.
    pub index: f64,
    pub beyond_data: bool,
}

/// Maps a fractional trading-day index onto a date, extending the calendar
/// past the last observation when needed.
pub fn tc_to_date(series: &PriceSeries, tc_index: f64) -> TcDate {
    let dates = series.dates();
    let last = dates.len() - 1;
    let k = tc_index.round().max(0.0) as usize;
    if k <= last {
        return TcDate { date: dates[k], index: tc_index, beyond_data: false };
    }
    let cal = TradingCalendar::from_dates(dates);
    TcDate { date: cal.advance(dates[last], k - last), index: tc_index, beyond_data: true }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub window: WindowDates,
    pub tc_date: NaiveDate,
    pub tc_index: f64,
    /// `tc` in trading days from the window start.
    pub tc_days_from_start: f64,
    pub tc_beyond_data: bool,
    pub tc_convention: String,
    pub beta: f64,
    pub omega: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub phi: f64,
    pub tau: f64,
    pub tau_exceeds_one: bool,
    pub rmse: f64,
    pub rss: f64,
    pub n_obs: usize,
    pub boundary_flags: BoundaryFlags,
    pub degenerate_points: usize,
    pub polished: bool,
    pub grid_spec: GridSpec,
}

impl FitReport {
    pub fn new(series: &PriceSeries, fit: &FitResult) -> Self {
        let w = fit.window;
        let tc = tc_to_date(series, fit.tc_absolute());
        let p = &fit.params;
        Self {
            window: WindowDates { t1_date: series.dates()[w.t1], t2_date: series.dates()[w.t2], t1: w.t1, t2: w.t2 },
            tc_date: tc.date,
            tc_index: tc.index,
            tc_days_from_start: p.tc,
            tc_beyond_data: tc.beyond_data,
            tc_convention: TradingCalendar::CONVENTION.to_string(),
            beta: p.beta,
            omega: p.omega,
            a: p.a,
            b: p.b,
            c1: p.c1,
            c2: p.c2,
            c: fit.canonical.c,
            phi: fit.canonical.phi,
            tau: fit.canonical.tau,
            tau_exceeds_one: fit.canonical.tau_exceeds_one(),
            rmse: fit.rmse,
            rss: fit.rss,
            n_obs: fit.n_obs,
            boundary_flags: fit.boundary,
            degenerate_points: fit.degenerate_points,
            polished: fit.polished,
            grid_spec: fit.grid,
        }
    }
}

pub const FIT_TABLE_HEADER: [&str; 11] =
    ["window_start", "window_end", "A", "B", "C", "beta", "omega", "phi", "tc_date", "tc_days_from_start", "rmse"];

/// One row per fit, in the order given.
pub fn write_fit_table<W: Write>(writer: W, reports: &[FitReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(FIT_TABLE_HEADER)?;
    for r in reports {
        w.write_record([
            r.window.t1_date.to_string(),
            r.window.t2_date.to_string(),
            r.a.to_string(),
            r.b.to_string(),
            r.c.to_string(),
            r.beta.to_string(),
            r.omega.to_string(),
            r.phi.to_string(),
            r.tc_date.to_string(),
            r.tc_days_from_start.to_string(),
            r.rmse.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `t1_date, window_size, chi2_np, chi2_lambda` per candidate.
pub fn write_scan_csv<W: Write>(writer: W, series: &PriceSeries, scan: &ScanResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t1_date", "window_size", "chi2_np", "chi2_lambda"])?;
    for c in &scan.candidates {
        w.write_record([
            series.dates()[c.t1].to_string(),
            c.window_size.to_string(),
            c.chi2_np.to_string(),
            c.chi2_lambda.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_periodogram_csv<W: Write>(writer: W, result: &PeriodogramResult) -> Result<()> {
    write_pairs(writer, ["omega", "power"], result.omegas.iter().zip(&result.power))
}

pub fn write_hq_csv<W: Write>(writer: W, hq: &HqDerivative) -> Result<()> {
    write_pairs(writer, ["log_tc_minus_t", "D"], hq.points.iter().map(|p| (&p.log_tc_minus_t, &p.d)))
}

/// Log-time `x = ln(tc - t)` and residual `r`.
pub fn write_residuals_csv<W: Write>(writer: W, residuals: &Residuals) -> Result<()> {
    write_pairs(writer, ["x", "r"], residuals.x.iter().zip(&residuals.r))
}

pub fn read_residuals_csv<R: Read>(reader: R) -> Result<Residuals> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (xi, ri) = (col("x")?, col("r")?);
    let (mut x, mut r) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let num = |j: usize| -> Result<f64> {
            let s = rec.get(j).unwrap_or("").trim();
            s.parse::<f64>().map_err(|_| Error::MalformedRow { row, reason: format!("`{s}` is not a number") })
        };
        x.push(num(xi)?);
        r.push(num(ri)?);
    }
    Residuals::from_parts(x, r)
}

fn write_pairs<'a, W: Write>(
    writer: W,
    header: [&str; 2],
    rows: impl Iterator<Item = (&'a f64, &'a f64)>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)?;
    for (a, b) in rows {
        w.write_record([a.to_string(), b.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lppls::{fit_window, lppls_eval, LpplsParams};
    use crate::synth::business_days;
    use crate::timeseries::Window;

    fn series(n: usize) -> PriceSeries {
        let p = LpplsParams::from_amplitude_phase(n as f64 + 20.0, 0.5, 8.0, 3.0, -0.1, 0.01, 0.4);
        let lp = (0..n).map(|t| lppls_eval(&p, t as f64).unwrap()).collect();
        PriceSeries::from_log_prices(business_days(NaiveDate::from_ymd_opt(2021, 3, 1).unwrap(), n), lp).unwrap()
    }

    #[test]
    fn tc_date_inside_and_beyond() {
        let s = series(40);
        let inside = tc_to_date(&s, 10.4);
        assert_eq!(inside.date, s.dates()[10]);
        assert!(!inside.beyond_data);
        // Last observation is a Friday; 3 trading days later is Wednesday.
        let last = s.dates()[39];
        assert_eq!(last.format("%a").to_string(), "Fri");
        let beyond = tc_to_date(&s, 42.0);
        assert_eq!(beyond.date, last + chrono::Duration::days(5));
        assert!(beyond.beyond_data);
    }

    #[test]
    fn fit_table_header_and_order() {
        let s = series(80);
        let grid = GridSpec { beta_count: 4, omega_count: 4, tc_step: 20.0, ..GridSpec::default() };
        let reports: Vec<FitReport> = [(0, 79), (20, 79)]
            .iter()
            .map(|&(a, b)| FitReport::new(&s, &fit_window(&s, Window::new(a, b, 80).unwrap(), &grid).unwrap()))
            .collect();
        let mut buf = Vec::new();
        write_fit_table(&mut buf, &reports).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "window_start,window_end,A,B,C,beta,omega,phi,tc_date,tc_days_from_start,rmse");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with(&s.dates()[0].to_string()));
        assert!(lines[2].starts_with(&s.dates()[20].to_string()));

        let json = serde_json::to_string(&reports[0]).unwrap();
        assert!(json.contains("\"A\":") && json.contains("\"tc_date\":"));
        assert_eq!(serde_json::from_str::<FitReport>(&json).unwrap(), reports[0]);
    }

    #[test]
    fn residuals_roundtrip() {
        let res = Residuals::from_parts(vec![3.0, 2.5, 0.1], vec![0.25, -1e-17, 1.0 / 3.0]).unwrap();
        let mut buf = Vec::new();
        write_residuals_csv(&mut buf, &res).unwrap();
        let back = read_residuals_csv(buf.as_slice()).unwrap();
        assert_eq!(back.x, res.x);
        assert_eq!(back.r, res.r);
        assert!(matches!(read_residuals_csv("x,y\n1,2\n".as_bytes()), Err(Error::MissingColumn(_))));
        assert!(matches!(read_residuals_csv("x,r\n1,abc\n".as_bytes()), Err(Error::MalformedRow { row: 1, .. })));
    }
}
