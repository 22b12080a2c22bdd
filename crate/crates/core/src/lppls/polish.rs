//! Optional Nelder–Mead refinement of the grid winner within one grid cell.

use crate::lppls::fit::{from_nonlinear, FitResult};
use crate::lppls::ols::{design_matrix, ols_solve};
use crate::timeseries::PriceSeries;

const MAX_ITER: usize = 300;
const F_TOL: f64 = 1e-14;

struct Cell {
    lo: [f64; 3],
    hi: [f64; 3],
}

impl Cell {
    fn clamp(&self, p: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|i| p[i].clamp(self.lo[i], self.hi[i]))
    }
}

pub(crate) fn polish(sub: &PriceSeries, fit: FitResult) -> FitResult {
    let g = &fit.grid;
    let beta_step = if g.beta_count > 1 { (g.beta_max - g.beta_min) / (g.beta_count - 1) as f64 } else { 0.0 };
    let omega_step =
        if g.omega_count > 1 { (g.omega_max - g.omega_min) / (g.omega_count - 1) as f64 } else { 0.0 };
    let last_t = (sub.len() - 1) as f64;
    let p = fit.params;
    let cell = Cell {
        lo: [
            (p.tc - g.tc_step).max(last_t + g.tc_offset_min),
            (p.beta - beta_step).max(g.beta_min),
            (p.omega - omega_step).max(g.omega_min),
        ],
        hi: [
            (p.tc + g.tc_step).min(last_t + g.tc_offset_max),
            (p.beta + beta_step).min(g.beta_max),
            (p.omega + omega_step).min(g.omega_max),
        ],
    };
    let objective = |q: [f64; 3]| -> f64 {
        design_matrix(sub, q[0], q[1], q[2])
            .and_then(|x| ols_solve(&x, sub.log_prices()))
            .map(|s| s.rss)
            .unwrap_or(f64::INFINITY)
    };

    let start = [p.tc, p.beta, p.omega];
    let steps = [g.tc_step * 0.5, beta_step * 0.5, omega_step * 0.5];
    let mut simplex: Vec<([f64; 3], f64)> = (0..4)
        .map(|i| {
            let mut v = start;
            if i > 0 {
                v[i - 1] += steps[i - 1];
                if v[i - 1] > cell.hi[i - 1] {
                    v[i - 1] = start[i - 1] - steps[i - 1];
                }
            }
            let v = cell.clamp(v);
            (v, objective(v))
        })
        .collect();

    for _ in 0..MAX_ITER {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[3].1);
        if (worst - best).abs() <= F_TOL * best.abs().max(1e-300) {
            break;
        }
        let centroid: [f64; 3] = std::array::from_fn(|i| simplex[..3].iter().map(|v| v.0[i]).sum::<f64>() / 3.0);
        let along = |t: f64| cell.clamp(std::array::from_fn(|i| centroid[i] + t * (simplex[3].0[i] - centroid[i])));
        let xr = along(-1.0);
        let fr = objective(xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = objective(xe);
            simplex[3] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[2].1 {
            simplex[3] = (xr, fr);
        } else {
            let xc = along(0.5);
            let fc = objective(xc);
            if fc < simplex[3].1 {
                simplex[3] = (xc, fc);
            } else {
                let b0 = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    let shrunk = cell.clamp(std::array::from_fn(|i| b0[i] + 0.5 * (v.0[i] - b0[i])));
                    *v = (shrunk, objective(shrunk));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (q, rss) = simplex[0];
    if !(rss < fit.rss) {
        return FitResult { polished: true, ..fit };
    }
    match from_nonlinear(sub, fit.window, &fit.grid, q[0], q[1], q[2], fit.boundary, fit.degenerate_points) {
        Ok(refined) if refined.rss < fit.rss => FitResult { polished: true, ..refined },
        _ => FitResult { polished: true, ..fit },
    }
}
