//! Linear stage of the two-step calibration: for fixed `(tc, β, ω)` the
//! model is linear in `(A, B, C1, C2)`.

use crate::error::{Error, Result};
use crate::lppls::model::validate_nonlinear;
use crate::timeseries::PriceSeries;

/// Relative size below which a triangular pivot marks a dependent column.
pub(crate) const RANK_TOL: f64 = 1e-9;

/// Row-major `N x 4` matrix with columns `[1, f, f cos, f sin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: Vec<[f64; 4]>,
}

impl DesignMatrix {
    pub fn from_rows(rows: Vec<[f64; 4]>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[[f64; 4]] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// `X θ`.
    pub fn apply(&self, coef: &[f64; 4]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().zip(coef).map(|(x, c)| x * c).sum()).collect()
    }
}

/// Design matrix at the series' own (window-local) times.
pub fn design_matrix(series: &PriceSeries, tc: f64, beta: f64, omega: f64) -> Result<DesignMatrix> {
    design_matrix_at(&series.times(), tc, beta, omega)
}

pub fn design_matrix_at(times: &[f64], tc: f64, beta: f64, omega: f64) -> Result<DesignMatrix> {
    validate_nonlinear(tc, beta, omega)?;
    let t_max = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(tc > t_max) {
        return Err(Error::InvalidNonlinearParams(format!("tc = {tc} not after last time {t_max}")));
    }
    let rows = times
        .iter()
        .map(|&t| {
            let dt = tc - t;
            let f = dt.powf(beta);
            let (s, c) = (omega * dt.ln()).sin_cos();
            [1.0, f, f * c, f * s]
        })
        .collect();
    Ok(DesignMatrix { rows })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OlsSolution {
    /// `[A, B, C1, C2]`.
    pub coef: [f64; 4],
    pub rss: f64,
}

/// Least squares by Householder QR. The residual sum of squares is the
/// squared norm of the part of `Qᵀy` outside the column space.
pub fn ols_solve(x: &DesignMatrix, y: &[f64]) -> Result<OlsSolution> {
    let n = x.n_rows();
    if n < 5 || y.len() != n {
        return Err(Error::InvalidNonlinearParams(format!(
            "need at least 5 rows and matching y (rows = {n}, y = {})",
            y.len()
        )));
    }
    let cols: Vec<Vec<f64>> = (0..4).map(|j| x.column(j)).collect();
    let (coef, rss) = lstsq(cols, y)?;
    Ok(OlsSolution { coef: [coef[0], coef[1], coef[2], coef[3]], rss })
}

/// Householder least squares for a few dense columns. Returns the
/// coefficients and the residual sum of squares.
pub(crate) fn lstsq(mut cols: Vec<Vec<f64>>, y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let p = cols.len();
    let n = y.len();
    if n < p || cols.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidNonlinearParams(format!("{n} rows cannot determine {p} coefficients")));
    }
    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let mut b = y.to_vec();
    let mut r = vec![vec![0.0f64; p]; p];

    for k in 0..p {
        let sub_norm = cols[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norms[k] == 0.0 || sub_norm <= RANK_TOL * norms[k] {
            return Err(Error::RankDeficient { column: k });
        }
        let alpha = if cols[k][k] > 0.0 { -sub_norm } else { sub_norm };
        let mut v = cols[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|e| e * e).sum();
        let reflect = |target: &mut [f64]| {
            let s: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
            let scale = 2.0 * s / vnorm2;
            for (t, vi) in target.iter_mut().zip(&v) {
                *t -= scale * vi;
            }
        };
        for j in k + 1..p {
            reflect(&mut cols[j][k..]);
            r[k][j] = cols[j][k];
        }
        reflect(&mut b[k..]);
        r[k][k] = alpha;
    }

    let mut coef = vec![0.0; p];
    for k in (0..p).rev() {
        let s: f64 = (k + 1..p).map(|j| r[k][j] * coef[j]).sum();
        coef[k] = (b[k] - s) / r[k][k];
    }
    let rss = b[p..].iter().map(|v| v * v).sum();
    Ok((coef, rss))
}
