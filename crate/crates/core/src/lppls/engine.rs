//! Grid sweep with sequential Givens QR.
//!
//! Rows enter the triangular factor one at a time, starting at the window
//! end `t2` and moving back in time. The residual sum of squares after `n`
//! rows is therefore available for every window `[t2 - n + 1, t2]` in a
//! single pass, which is what the inception scan needs. Every row shares
//! the same distance to the critical time across windows with the same
//! `t2`, so the design rows do not depend on the window start.

use rayon::prelude::*;

use crate::lppls::grid::GridSpec;
use crate::lppls::ols::RANK_TOL;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct GridWinner {
    pub tc_idx: usize,
    pub beta_idx: usize,
    pub omega_idx: usize,
    pub rss: f64,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct CheckpointOutcome {
    pub best: Option<GridWinner>,
    pub degenerate: usize,
}

#[derive(Clone, Copy)]
struct Givens {
    r: [[f64; 4]; 4],
    z: [f64; 4],
    rss: f64,
    col_norm2: [f64; 4],
}

impl Givens {
    fn new() -> Self {
        Self { r: [[0.0; 4]; 4], z: [0.0; 4], rss: 0.0, col_norm2: [0.0; 4] }
    }

    #[inline(always)]
    fn push(&mut self, mut x: [f64; 4], mut y: f64) {
        for k in 0..4 {
            self.col_norm2[k] += x[k] * x[k];
        }
        for k in 0..4 {
            let xk = x[k];
            if xk == 0.0 {
                continue;
            }
            let rkk = self.r[k][k];
            let h = (rkk * rkk + xk * xk).sqrt();
            let c = rkk / h;
            let s = xk / h;
            self.r[k][k] = h;
            for j in k + 1..4 {
                let rj = self.r[k][j];
                let xj = x[j];
                self.r[k][j] = c * rj + s * xj;
                x[j] = c * xj - s * rj;
            }
            let zk = self.z[k];
            self.z[k] = c * zk + s * y;
            y = c * y - s * zk;
        }
        self.rss += y * y;
    }

    fn degenerate(&self) -> bool {
        (0..4).any(|k| {
            let d = self.r[k][k];
            self.col_norm2[k] == 0.0 || d * d <= RANK_TOL * RANK_TOL * self.col_norm2[k]
        })
    }
}

/// Sweeps every grid point over rows `y_rev[0..]` (`y_rev[0]` observed at
/// the window end) and reports the best grid point after each checkpoint
/// row count. Checkpoints must be ascending and at most `y_rev.len()`.
///
/// Ties resolve to the smallest `tc`, then `β`, then `ω`.
pub(crate) fn sweep(y_rev: &[f64], checkpoints: &[usize], grid: &GridSpec) -> Vec<CheckpointOutcome> {
    debug_assert!(checkpoints.windows(2).all(|w| w[0] < w[1]));
    let n_max = checkpoints.last().copied().unwrap_or(0);
    debug_assert!(n_max <= y_rev.len());
    let offsets = grid.tc_offsets();
    let betas = grid.betas();
    let omegas = grid.omegas();

    let per_tc: Vec<Vec<CheckpointOutcome>> = offsets
        .par_iter()
        .enumerate()
        .map(|(tc_idx, &off)| sweep_tc(tc_idx, off, &y_rev[..n_max], checkpoints, &betas, &omegas))
        .collect();

    let mut out = vec![CheckpointOutcome::default(); checkpoints.len()];
    for outcomes in per_tc {
        for (acc, o) in out.iter_mut().zip(outcomes) {
            acc.degenerate += o.degenerate;
            if let Some(w) = o.best {
                if acc.best.map_or(true, |b| w.rss < b.rss) {
                    acc.best = Some(w);
                }
            }
        }
    }
    out
}

fn sweep_tc(
    tc_idx: usize,
    offset: f64,
    y: &[f64],
    checkpoints: &[usize],
    betas: &[f64],
    omegas: &[f64],
) -> Vec<CheckpointOutcome> {
    let n = y.len();
    let ln_dt: Vec<f64> = (0..n).map(|i| (offset + i as f64).ln()).collect();
    let trig: Vec<(Vec<f64>, Vec<f64>)> = omegas
        .iter()
        .map(|&w| ln_dt.iter().map(|l| (w * l).sin_cos()).map(|(s, c)| (c, s)).unzip())
        .collect();
    let mut out = vec![CheckpointOutcome::default(); checkpoints.len()];
    let mut f = vec![0.0; n];

    for (beta_idx, &beta) in betas.iter().enumerate() {
        for (fi, l) in f.iter_mut().zip(&ln_dt) {
            *fi = (beta * l).exp();
        }
        for (omega_idx, (cos, sin)) in trig.iter().enumerate() {
            let mut g = Givens::new();
            let mut row = 0;
            for (cp_idx, &cp) in checkpoints.iter().enumerate() {
                while row < cp {
                    let fr = f[row];
                    g.push([1.0, fr, fr * cos[row], fr * sin[row]], y[row]);
                    row += 1;
                }
                let slot = &mut out[cp_idx];
                if g.degenerate() || !g.rss.is_finite() {
                    slot.degenerate += 1;
                    continue;
                }
                if slot.best.map_or(true, |b| g.rss < b.rss) {
                    slot.best = Some(GridWinner { tc_idx, beta_idx, omega_idx, rss: g.rss });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lppls::ols::{design_matrix_at, ols_solve};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_grid() -> GridSpec {
        GridSpec {
            tc_offset_min: 5.0,
            tc_offset_max: 25.0,
            tc_step: 5.0,
            beta_min: 0.2,
            beta_max: 0.8,
            beta_count: 4,
            omega_min: 6.0,
            omega_max: 12.0,
            omega_count: 4,
        }
    }

    #[test]
    fn givens_matches_householder_for_every_suffix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y: Vec<f64> = (0..80).map(|i| 2.0 + 0.01 * i as f64 + rng.gen_range(-0.05..0.05)).collect();
        let grid = small_grid();
        let checkpoints = [40, 60, 80];
        let out = sweep(&y, &checkpoints, &grid);
        for (cp, o) in checkpoints.iter().zip(&out) {
            let best = o.best.unwrap();
            // Brute force over the grid with Householder on the same rows.
            let mut brute: Option<(f64, usize, usize, usize)> = None;
            for (i, off) in grid.tc_offsets().into_iter().enumerate() {
                for (j, beta) in grid.betas().into_iter().enumerate() {
                    for (k, omega) in grid.omegas().into_iter().enumerate() {
                        // Window-local time: row r sits at t = cp - 1 - r.
                        let times: Vec<f64> = (0..*cp).map(|r| (cp - 1 - r) as f64).collect();
                        let tc = (*cp - 1) as f64 + off;
                        let x = design_matrix_at(&times, tc, beta, omega).unwrap();
                        let rss = ols_solve(&x, &y[..*cp]).unwrap().rss;
                        if brute.map_or(true, |b| rss < b.0) {
                            brute = Some((rss, i, j, k));
                        }
                    }
                }
            }
            let brute = brute.unwrap();
            assert_eq!((best.tc_idx, best.beta_idx, best.omega_idx), (brute.1, brute.2, brute.3));
            assert!((best.rss - brute.0).abs() <= 1e-10 * brute.0.max(1e-12));
        }
    }

    #[test]
    fn constant_column_counts_as_degenerate() {
        let mut g = Givens::new();
        for i in 0..10 {
            g.push([1.0, 2.0, (i as f64).cos(), (i as f64).sin()], 1.0);
        }
        assert!(g.degenerate());
    }
}
