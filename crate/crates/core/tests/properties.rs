use bubble_lens::diagnostics::{
    detrend_power_law, hq_derivative, lomb_periodogram, LombPlan, Normalization, OmegaGrid, Residuals,
};
use bubble_lens::lppls::{lppls_eval, LpplsParams};
use bubble_lens::surrogates::{
    empirical_p_value, gen_surrogate, stream_rng, white_noise, NullModel, SurrogateConfig,
};
use bubble_lens::timeseries::{read_csv, slice, CsvOptions, PriceSeries, Window};
use chrono::{Duration, NaiveDate};
use proptest::prelude::*;

fn dates(n: usize) -> Vec<NaiveDate> {
    let d0 = NaiveDate::from_ymd_opt(2017, 2, 1).unwrap();
    (0..n).map(|i| d0 + Duration::days(i as i64)).collect()
}

fn series_from(log_prices: Vec<f64>) -> PriceSeries {
    PriceSeries::from_log_prices(dates(log_prices.len()), log_prices).unwrap()
}

fn log_times(n: usize, tc: f64) -> Vec<f64> {
    (0..n).map(|t| (tc - t as f64).ln()).collect()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn csv_export_round_trips() {
    let prices: Vec<f64> = (0..60).map(|i| 100.0 * (1.0 + 0.01 * (i as f64).sin())).collect();
    let s = PriceSeries::new(dates(60), prices).unwrap();
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("date,adj_close,t_index,log_price\n"));
    let back = read_csv(buf.as_slice(), &CsvOptions::default()).unwrap();
    assert_eq!(back.series, s);
    assert_eq!(read_csv(buf.as_slice(), &CsvOptions::default()).unwrap().series, back.series);
}

#[test]
fn hq_matches_closed_form_on_a_parabola() {
    // ln p = 1e-4 t², q = 1/2: at even t the point qt is a trading day.
    let s = series_from((0..80).map(|t| 1e-4 * (t * t) as f64).collect());
    let (h, q) = (0.5, 0.5);
    let d = hq_derivative(&s, 100.0, h, q).unwrap();
    for p in d.points.iter().filter(|p| p.t as usize % 2 == 0) {
        let want = 1e-4 * p.t * p.t * (1.0 - q * q) / ((1.0 - q) * p.t).powf(h);
        assert!((p.d - want).abs() < 1e-14, "t = {}", p.t);
        assert!((p.log_tc_minus_t - (100.0 - p.t).ln()).abs() < 1e-15);
    }
}

#[test]
fn detrended_residuals_are_orthogonal_to_the_trend() {
    let p = LpplsParams::from_amplitude_phase(230.0, 0.45, 9.0, 6.0, -0.3, 0.02, 0.5);
    let eps = white_noise(&mut stream_rng(3, 0), 200);
    let s = series_from((0..200).map(|t| lppls_eval(&p, t as f64).unwrap() + 0.003 * eps[t]).collect());
    let res = detrend_power_law(&s, 230.0).unwrap();
    let beta = res.trend.unwrap().beta;
    let sum: f64 = res.r.iter().sum();
    let dot: f64 = res.r.iter().enumerate().map(|(t, r)| r * (230.0 - t as f64).powf(beta)).sum();
    assert!(sum.abs() < 1e-9 && dot.abs() < 1e-9, "{sum} {dot}");

    // The remaining residual is dominated by the log-periodic term.
    let osc: Vec<f64> = (0..200)
        .map(|t| {
            let dt = 230.0 - t as f64;
            dt.powf(0.45) * (p.c1 * (9.0 * dt.ln()).cos() + p.c2 * (9.0 * dt.ln()).sin())
        })
        .collect();
    assert!(pearson(&res.r, &osc) > 0.95, "correlation {}", pearson(&res.r, &osc));
}

proptest! {
    #[test]
    fn slices_compose(n in 40usize..120, a in 0usize..30, len in 2usize..40) {
        let s = series_from((0..n).map(|t| (t as f64 * 0.37).cos()).collect());
        let b = (a + len).min(n - 1);
        prop_assume!(a < b);
        let outer = slice(&s, Window::new(a, b, n).unwrap()).unwrap();
        let inner = slice(&outer, Window::new(0, b - a, outer.len()).unwrap()).unwrap();
        prop_assert_eq!(&inner, &outer);
        prop_assert_eq!(outer.dates()[0], s.dates()[a]);
        prop_assert_eq!(outer.log_prices(), &s.log_prices()[a..=b]);
    }

    #[test]
    fn parameterizations_agree(
        dt in 0.5f64..400.0, beta in 0.05f64..1.0, omega in 1.0f64..20.0,
        a in -5.0f64..10.0, b in -2.0f64..0.0, c in 0.0f64..0.3, phi in -3.14159f64..3.14159,
    ) {
        let p = LpplsParams::from_amplitude_phase(dt + 10.0, beta, omega, a, b, c, phi);
        let f = dt.powf(beta);
        let closed = a + b * f + c * f * (omega * dt.ln() + phi).cos();
        prop_assert!((lppls_eval(&p, 10.0).unwrap() - closed).abs() <= 1e-12);
        let can = p.canonical();
        prop_assert!((can.c - c).abs() <= 1e-12);
        if c > 1e-6 {
            prop_assert!((can.phi - phi).abs() <= 1e-9);
        }
    }

    #[test]
    fn lomb_ignores_time_shift(seed in 0u64..500, shift in -50.0f64..50.0) {
        let x = log_times(120, 140.0);
        let r = white_noise(&mut stream_rng(seed, 0), 120);
        let grid = OmegaGrid { count: 200, ..OmegaGrid::default() };
        let base = lomb_periodogram(&Residuals::from_parts(x.clone(), r.clone()).unwrap(), &grid).unwrap();
        let moved = Residuals::from_parts(x.iter().map(|v| v + shift).collect(), r).unwrap();
        let other = lomb_periodogram(&moved, &grid).unwrap();
        for (p, q) in base.power.iter().zip(&other.power) {
            prop_assert!((p - q).abs() <= 1e-9, "{} vs {}", p, q);
        }
    }

    #[test]
    fn raw_power_is_quadratic_in_scale(seed in 0u64..500, c in 0.01f64..100.0) {
        let x = log_times(80, 95.0);
        let r = white_noise(&mut stream_rng(seed, 1), 80);
        let omegas = OmegaGrid { count: 60, ..OmegaGrid::default() }.values().unwrap();
        let plan = LombPlan::new(&x, &omegas).unwrap();
        let scaled: Vec<f64> = r.iter().map(|v| c * v).collect();
        let (p1, p2) = (plan.power(&r, Normalization::Raw).unwrap(), plan.power(&scaled, Normalization::Raw).unwrap());
        for (a, b) in p1.iter().zip(&p2) {
            prop_assert!((c * c * a - b).abs() <= 1e-9 * b.abs().max(1e-12));
        }
    }

    #[test]
    fn p_values_are_bounded_and_monotone(
        peaks in prop::collection::vec(0.0f64..50.0, 1..200),
        lo in 0.0f64..60.0,
        step in 0.0f64..10.0,
    ) {
        let n = peaks.len() as f64;
        let (p_lo, p_hi) = (empirical_p_value(lo, &peaks), empirical_p_value(lo + step, &peaks));
        prop_assert!((0.0..=1.0).contains(&p_lo));
        prop_assert!(((p_lo * n).round() - p_lo * n).abs() < 1e-9);
        prop_assert!(p_hi <= p_lo);
    }

    #[test]
    fn surrogates_reproducible(seed in 0u64..1000, model in 0usize..4) {
        let x = log_times(64, 80.0);
        let r = white_noise(&mut stream_rng(seed, 3), 64);
        let cal = Residuals::from_parts(x, r).unwrap();
        let cfg = SurrogateConfig::new(NullModel::ALL[model], seed);
        prop_assert_eq!(gen_surrogate(&cfg, 64, &cal).unwrap(), gen_surrogate(&cfg, 64, &cal).unwrap());
    }
}
