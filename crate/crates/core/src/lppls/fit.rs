use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lppls::engine::{self, GridWinner};
use crate::lppls::grid::GridSpec;
use crate::lppls::model::{Canonical, LpplsParams};
use crate::lppls::ols::{design_matrix, ols_solve};
use crate::lppls::polish;
use crate::timeseries::{slice, PriceSeries, Window};

/// Whether the winning grid point sits on the first or last value of each axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryFlags {
    pub tc: bool,
    pub beta: bool,
    pub omega: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// `tc` is local to the window: `t = 0` at `window.t1`.
    pub params: LpplsParams,
    pub canonical: Canonical,
    pub window: Window,
    pub rmse: f64,
    pub rss: f64,
    pub n_obs: usize,
    pub boundary: BoundaryFlags,
    /// Grid points skipped because the design matrix was rank deficient.
    pub degenerate_points: usize,
    pub grid: GridSpec,
    pub polished: bool,
}

impl FitResult {
    /// Days from the last observation of the window to `tc`.
    pub fn tc_beyond_end(&self) -> f64 {
        self.params.tc - (self.n_obs - 1) as f64
    }

    /// `tc` on the absolute trading-day axis of the parent series.
    pub fn tc_absolute(&self) -> f64 {
        self.window.t1 as f64 + self.params.tc
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Nelder–Mead polish of `(tc, β, ω)` inside the winning grid cell.
    pub polish: bool,
}

/// Two-step calibration over `window`: grid search over `(tc, β, ω)`,
/// OLS for `(A, B, C1, C2)`, lowest RMSE wins.
pub fn fit_window(series: &PriceSeries, window: Window, grid: &GridSpec) -> Result<FitResult> {
    fit_window_with(series, window, grid, &FitOptions::default())
}

pub fn fit_window_with(
    series: &PriceSeries,
    window: Window,
    grid: &GridSpec,
    options: &FitOptions,
) -> Result<FitResult> {
    let window = Window::new(window.t1, window.t2, series.len())?;
    window.require_min_len()?;
    grid.validate()?;
    let sub = slice(series, window)?;
    let y_rev: Vec<f64> = sub.log_prices().iter().rev().copied().collect();
    let n = sub.len();
    let outcome = engine::sweep(&y_rev, &[n], grid).pop().unwrap_or_default();
    let winner = outcome.best.ok_or(Error::AllGridPointsDegenerate(grid.n_points()))?;
    let fit = finish(&sub, window, grid, winner, outcome.degenerate)?;
    if options.polish {
        Ok(polish::polish(&sub, fit))
    } else {
        Ok(fit)
    }
}

/// Refits the winning grid point with Householder OLS and packages the result.
pub(crate) fn finish(
    sub: &PriceSeries,
    window: Window,
    grid: &GridSpec,
    winner: GridWinner,
    degenerate_points: usize,
) -> Result<FitResult> {
    let offsets = grid.tc_offsets();
    let betas = grid.betas();
    let omegas = grid.omegas();
    let n = sub.len();
    let tc = (n - 1) as f64 + offsets[winner.tc_idx];
    let beta = betas[winner.beta_idx];
    let omega = omegas[winner.omega_idx];
    let edge = |i: usize, len: usize| i == 0 || i + 1 == len;
    let boundary = BoundaryFlags {
        tc: edge(winner.tc_idx, offsets.len()),
        beta: edge(winner.beta_idx, betas.len()),
        omega: edge(winner.omega_idx, omegas.len()),
    };
    from_nonlinear(sub, window, grid, tc, beta, omega, boundary, degenerate_points)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn from_nonlinear(
    sub: &PriceSeries,
    window: Window,
    grid: &GridSpec,
    tc: f64,
    beta: f64,
    omega: f64,
    boundary: BoundaryFlags,
    degenerate_points: usize,
) -> Result<FitResult> {
    let x = design_matrix(sub, tc, beta, omega)?;
    let sol = ols_solve(&x, sub.log_prices())?;
    let [a, b, c1, c2] = sol.coef;
    let params = LpplsParams { tc, beta, omega, a, b, c1, c2 };
    let n = sub.len();
    Ok(FitResult {
        params,
        canonical: params.canonical(),
        window,
        rmse: (sol.rss / n as f64).sqrt(),
        rss: sol.rss,
        n_obs: n,
        boundary,
        degenerate_points,
        grid: *grid,
        polished: false,
    })
}
