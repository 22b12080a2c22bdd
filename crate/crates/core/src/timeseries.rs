//! Daily price series on a trading-day time axis.
//!
//! Time is the trading-day index: the first observation is `t = 0` and every
//! following observation adds one, whatever the calendar gap between them.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of observations in a fitting window.
pub const MIN_WINDOW_OBS: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    dates: Vec<NaiveDate>,
    prices: Vec<f64>,
    log_prices: Vec<f64>,
}

impl PriceSeries {
    /// Builds a series from date/price pairs that are already in ascending date order.
    pub fn new(dates: Vec<NaiveDate>, prices: Vec<f64>) -> Result<Self> {
        if dates.len() != prices.len() {
            return Err(Error::MalformedRow {
                row: dates.len().min(prices.len()) + 1,
                reason: "dates and prices differ in length".into(),
            });
        }
        if dates.is_empty() {
            return Err(Error::EmptySeries { valid_rows: 0, required: 1 });
        }
        for (i, &p) in prices.iter().enumerate() {
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::NonPositivePrice { row: i + 1, value: p });
            }
        }
        for w in dates.windows(2) {
            if w[1] == w[0] {
                return Err(Error::DuplicateDate(w[1]));
            }
            if w[1] < w[0] {
                return Err(Error::MalformedRow {
                    row: 0,
                    reason: format!("dates not ascending at {}", w[1]),
                });
            }
        }
        let log_prices = prices.iter().map(|p| p.ln()).collect();
        Ok(Self { dates, prices, log_prices })
    }

    /// Builds a series directly from log-prices (used by synthetic generators).
    pub fn from_log_prices(dates: Vec<NaiveDate>, log_prices: Vec<f64>) -> Result<Self> {
        let prices = log_prices.iter().map(|lp| lp.exp()).collect();
        Self::new(dates, prices)
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn log_prices(&self) -> &[f64] {
        &self.log_prices
    }

    /// Trading-day indices `0..N`.
    pub fn t_index(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }

    /// Trading-day times as reals, `0.0, 1.0, ..`.
    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| i as f64).collect()
    }

    pub fn last_t(&self) -> f64 {
        (self.len() - 1) as f64
    }

    /// Index of the first observation dated on or after `date`.
    pub fn index_on_or_after(&self, date: NaiveDate) -> Option<usize> {
        let i = self.dates.partition_point(|d| *d < date);
        (i < self.len()).then_some(i)
    }

    /// Index of the last observation dated on or before `date`.
    pub fn index_on_or_before(&self, date: NaiveDate) -> Option<usize> {
        self.dates.partition_point(|d| *d <= date).checked_sub(1)
    }

    /// Resolves an inclusive date range to a trading-day window.
    pub fn window_for_dates(&self, start: NaiveDate, end: NaiveDate) -> Result<Window> {
        let len = self.len();
        let t1 = self.index_on_or_after(start);
        let t2 = self.index_on_or_before(end);
        match (t1, t2) {
            (Some(t1), Some(t2)) => Window::new(t1, t2, len),
            _ => Err(Error::WindowOutOfRange { t1: 0, t2: 0, len }),
        }
    }

    /// Writes `date,adj_close,t_index,log_price`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["date", "adj_close", "t_index", "log_price"])?;
        for i in 0..self.len() {
            w.write_record([
                self.dates[i].to_string(),
                self.prices[i].to_string(),
                i.to_string(),
                self.log_prices[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Inclusive trading-day window `[t1, t2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub t1: usize,
    pub t2: usize,
}

impl Window {
    /// Validates `0 <= t1 < t2 <= len - 1`.
    pub fn new(t1: usize, t2: usize, len: usize) -> Result<Self> {
        if t1 >= t2 || t2 >= len {
            return Err(Error::WindowOutOfRange { t1, t2, len });
        }
        Ok(Self { t1, t2 })
    }

    pub fn n_obs(&self) -> usize {
        self.t2 - self.t1 + 1
    }

    pub fn full(series: &PriceSeries) -> Result<Self> {
        Self::new(0, series.len().saturating_sub(1), series.len())
    }

    pub(crate) fn require_min_len(&self) -> Result<()> {
        if self.n_obs() < MIN_WINDOW_OBS {
            return Err(Error::WindowTooShort { n_obs: self.n_obs(), required: MIN_WINDOW_OBS });
        }
        Ok(())
    }
}

/// Sub-series over `[t1, t2]`, re-indexed so that `t1` becomes `t = 0`.
pub fn slice(series: &PriceSeries, window: Window) -> Result<PriceSeries> {
    let window = Window::new(window.t1, window.t2, series.len())?;
    let r = window.t1..=window.t2;
    Ok(PriceSeries {
        dates: series.dates[r.clone()].to_vec(),
        prices: series.prices[r.clone()].to_vec(),
        log_prices: series.log_prices[r].to_vec(),
    })
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub date_col: String,
    pub price_col: String,
    pub min_rows: usize,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { date_col: "date".into(), price_col: "adj_close".into(), min_rows: MIN_WINDOW_OBS }
    }
}

/// Outcome of CSV ingestion: the series and the number of rows dropped for a missing price.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub series: PriceSeries,
    pub dropped_rows: usize,
}

/// Loads `path` with the named columns; see [`read_csv`].
pub fn load_csv(path: impl AsRef<Path>, date_col: &str, price_col: &str) -> Result<PriceSeries> {
    let opts = CsvOptions { date_col: date_col.into(), price_col: price_col.into(), ..Default::default() };
    Ok(load_csv_with(path, &opts)?.series)
}

pub fn load_csv_with(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Loaded> {
    let file = std::fs::File::open(path)?;
    read_csv(file, opts)
}

/// Parses a headed CSV. Row numbers in errors count data rows from 1.
/// Rows with an empty price are dropped; the rest are sorted by date.
pub fn read_csv<R: Read>(reader: R, opts: &CsvOptions) -> Result<Loaded> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn(name.into()))
    };
    let date_idx = col(&opts.date_col)?;
    let price_idx = col(&opts.price_col)?;

    let mut rows: Vec<(NaiveDate, f64)> = Vec::new();
    let mut dropped_rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::MalformedRow { row, reason: e.to_string() })?;
        let date_field = rec.get(date_idx).unwrap_or("");
        let price_field = rec.get(price_idx).unwrap_or("");
        let date = NaiveDate::parse_from_str(date_field, "%Y-%m-%d").map_err(|e| Error::MalformedRow {
            row,
            reason: format!("date `{date_field}`: {e}"),
        })?;
        if price_field.is_empty() {
            dropped_rows += 1;
            continue;
        }
        let price: f64 = price_field.parse().map_err(|_| Error::MalformedRow {
            row,
            reason: format!("price `{price_field}` is not a number"),
        })?;
        if !(price > 0.0) || !price.is_finite() {
            return Err(Error::NonPositivePrice { row, value: price });
        }
        rows.push((date, price));
    }
    if rows.len() < opts.min_rows.max(1) {
        return Err(Error::EmptySeries { valid_rows: rows.len(), required: opts.min_rows.max(1) });
    }
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateDate(w[0].0));
    }
    let (dates, prices) = rows.into_iter().unzip();
    Ok(Loaded { series: PriceSeries::new(dates, prices)?, dropped_rows })
}

/// Extends a trading calendar past its last date using the weekdays of a
/// median trading week.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradingCalendar {
    weekdays: Vec<Weekday>,
}

impl TradingCalendar {
    pub const CONVENTION: &'static str =
        "trading days beyond the last observation follow the weekdays of the series' median trading week; tc rounded to the nearest trading day";

    pub fn from_dates(dates: &[NaiveDate]) -> Self {
        let mut per_week: BTreeMap<(i32, u32), usize> = BTreeMap::new();
        let mut per_weekday = [0usize; 7];
        for d in dates {
            let w = d.iso_week();
            *per_week.entry((w.year(), w.week())).or_default() += 1;
            per_weekday[d.weekday().num_days_from_monday() as usize] += 1;
        }
        let mut counts: Vec<usize> = per_week.into_values().collect();
        counts.sort_unstable();
        let median = counts.get(counts.len() / 2).copied().unwrap_or(5).clamp(1, 7);

        let mut order: Vec<usize> = (0..7).collect();
        // Stable sort keeps Monday-first order among equally frequent weekdays.
        order.sort_by(|a, b| per_weekday[*b].cmp(&per_weekday[*a]));
        let mut chosen: Vec<usize> = order.into_iter().take(median).collect();
        chosen.sort_unstable();
        let weekdays = chosen
            .into_iter()
            .map(|i| Weekday::try_from(i as u8).unwrap_or(Weekday::Mon))
            .collect();
        Self { weekdays }
    }

    pub fn weekdays(&self) -> &[Weekday] {
        &self.weekdays
    }

    pub fn is_trading_day(&self, d: NaiveDate) -> bool {
        self.weekdays.contains(&d.weekday())
    }

    /// Date of the `n`-th trading day after `from` (`n = 0` returns `from`).
    pub fn advance(&self, from: NaiveDate, n: usize) -> NaiveDate {
        let mut d = from;
        let mut left = n;
        while left > 0 {
            d += Duration::days(1);
            if self.is_trading_day(d) {
                left -= 1;
            }
        }
        d
    }
}
