use bubble_lens::lppls::{fit_window, lppls_eval, GridSpec, LpplsParams};
use bubble_lens::surrogates::{stream_rng, white_noise};
use bubble_lens::timeseries::{PriceSeries, Window};
use bubble_lens::Error;
use chrono::{Duration, NaiveDate};
use proptest::prelude::*;

fn series_from(log_prices: Vec<f64>) -> PriceSeries {
    let d0 = NaiveDate::from_ymd_opt(2019, 6, 3).unwrap();
    let dates = (0..log_prices.len()).map(|i| d0 + Duration::days(i as i64)).collect();
    PriceSeries::from_log_prices(dates, log_prices).unwrap()
}

fn planted() -> LpplsParams {
    LpplsParams { tc: 240.0, beta: 0.3, omega: 8.0, a: 16.0, b: -0.6, c1: 0.01, c2: 0.005 }
}

fn generate(p: &LpplsParams, n: usize, sigma: f64, seed: u64) -> PriceSeries {
    let eps = white_noise(&mut stream_rng(seed, 0), n);
    series_from((0..n).map(|t| lppls_eval(p, t as f64).unwrap() + sigma * eps[t]).collect())
}

/// Contains (tc = 240, β = 0.3, ω = 8) exactly for a 200-point window.
fn grid_with_truth() -> GridSpec {
    GridSpec {
        tc_offset_min: 11.0,
        tc_offset_max: 61.0,
        tc_step: 5.0,
        beta_min: 0.1,
        beta_max: 0.3,
        beta_count: 5,
        omega_min: 6.0,
        omega_max: 8.0,
        omega_count: 5,
    }
}

fn rss_of(s: &PriceSeries, p: &LpplsParams) -> f64 {
    s.log_prices().iter().enumerate().map(|(t, y)| (y - lppls_eval(p, t as f64).unwrap()).powi(2)).sum()
}

#[test]
fn noiseless_plant_recovered() {
    let p = planted();
    let s = generate(&p, 200, 0.0, 0);
    let fit = fit_window(&s, Window::full(&s).unwrap(), &grid_with_truth()).unwrap();
    let q = fit.params;
    assert_eq!((q.tc, q.beta, q.omega), (240.0, 0.3, 8.0));
    for (a, b) in [(p.a, q.a), (p.b, q.b), (p.c1, q.c1), (p.c2, q.c2)] {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
    assert!(fit.rmse <= 1e-10, "rmse {}", fit.rmse);
    assert!(fit.boundary.beta && fit.boundary.omega && !fit.boundary.tc);
    assert!((fit.canonical.c - (0.01f64.powi(2) + 0.005f64.powi(2)).sqrt()).abs() < 1e-8);
}

#[test]
fn refining_the_grid_never_hurts() {
    let s = generate(&planted(), 150, 0.01, 4);
    let coarse = GridSpec { tc_step: 8.0, beta_count: 6, omega_count: 5, ..GridSpec::default() };
    let fine = GridSpec { tc_step: 4.0, beta_count: 11, omega_count: 9, ..GridSpec::default() };
    let w = Window::full(&s).unwrap();
    let a = fit_window(&s, w, &coarse).unwrap();
    let b = fit_window(&s, w, &fine).unwrap();
    assert!(b.rmse <= a.rmse * (1.0 + 1e-12), "{} > {}", b.rmse, a.rmse);
}

#[test]
fn linear_coefficients_are_least_squares() {
    let s = generate(&planted(), 120, 0.01, 9);
    let fit = fit_window(&s, Window::full(&s).unwrap(), &grid_with_truth()).unwrap();
    let base = rss_of(&s, &fit.params);
    assert!((base - fit.rss).abs() <= 1e-10 * base);
    for k in 0..4 {
        for d in [-1e-3, 1e-3] {
            let mut p = fit.params;
            match k {
                0 => p.a += d,
                1 => p.b += d,
                2 => p.c1 += d,
                _ => p.c2 += d,
            }
            assert!(rss_of(&s, &p) > base);
        }
    }
}

#[test]
fn thread_count_does_not_change_the_fit() {
    let s = generate(&planted(), 180, 0.01, 2);
    let grid = GridSpec { beta_count: 8, omega_count: 6, ..GridSpec::default() };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| fit_window(&s, Window::full(&s).unwrap(), &grid).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(1));
}

#[test]
fn short_windows_rejected() {
    let s = generate(&planted(), 100, 0.0, 0);
    let w = Window::new(10, 30, 100).unwrap();
    assert!(matches!(fit_window(&s, w, &GridSpec::default()), Err(Error::WindowTooShort { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn tc_respects_lower_bound(seed in 0u64..1000, n in 40usize..120, off in 0usize..40) {
        let s = generate(&planted(), n + off, 0.02, seed);
        let w = Window::new(off, off + n - 1, s.len()).unwrap();
        let grid = GridSpec { tc_step: 10.0, beta_count: 4, omega_count: 4, ..GridSpec::default() };
        let fit = fit_window(&s, w, &grid).unwrap();
        prop_assert!(fit.params.tc >= (n - 1) as f64 + 10.0);
        prop_assert!(fit.tc_absolute() >= w.t2 as f64 + 10.0);
        prop_assert!(fit.params.beta > 0.0 && fit.params.beta <= 1.0);
        prop_assert!((6.0..=13.0).contains(&fit.params.omega));
    }
}
