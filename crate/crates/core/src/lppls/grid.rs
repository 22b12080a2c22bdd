use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Search grid over the nonlinear parameters.
///
/// Critical times are offsets past the last observation of the window:
/// `tc = t2 + tc_offset_min + i * tc_step` up to `t2 + tc_offset_max`.
/// β and ω are uniform grids including both end points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub tc_offset_min: f64,
    pub tc_offset_max: f64,
    pub tc_step: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    pub beta_count: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub omega_count: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            tc_offset_min: 10.0,
            tc_offset_max: 200.0,
            tc_step: 2.0,
            beta_min: 0.1,
            beta_max: 1.0,
            beta_count: 30,
            omega_min: 6.0,
            omega_max: 13.0,
            omega_count: 20,
        }
    }
}

fn uniform(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (count - 1) as f64;
    (0..count).map(|i| if i + 1 == count { hi } else { lo + i as f64 * step }).collect()
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidGrid(m.into()));
        let finite = [
            self.tc_offset_min,
            self.tc_offset_max,
            self.tc_step,
            self.beta_min,
            self.beta_max,
            self.omega_min,
            self.omega_max,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("non-finite bound");
        }
        if !(self.tc_offset_min > 0.0) {
            return bad("tc lower bound must lie after the last observation");
        }
        if self.tc_offset_max < self.tc_offset_min || !(self.tc_step > 0.0) {
            return bad("empty tc range or non-positive tc step");
        }
        if self.beta_count == 0 || self.omega_count == 0 {
            return bad("beta and omega counts must be positive");
        }
        if !(self.beta_min > 0.0) || self.beta_max > 1.0 || self.beta_max < self.beta_min {
            return bad("beta range must lie in (0, 1]");
        }
        if !(self.omega_min > 0.0) || self.omega_max < self.omega_min {
            return bad("omega range must be positive and non-empty");
        }
        Ok(())
    }

    /// Offsets `tc - t2`, ascending.
    pub fn tc_offsets(&self) -> Vec<f64> {
        let n = ((self.tc_offset_max - self.tc_offset_min) / self.tc_step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.tc_offset_min + i as f64 * self.tc_step).collect()
    }

    pub fn betas(&self) -> Vec<f64> {
        uniform(self.beta_min, self.beta_max, self.beta_count)
    }

    pub fn omegas(&self) -> Vec<f64> {
        uniform(self.omega_min, self.omega_max, self.omega_count)
    }

    pub fn n_points(&self) -> usize {
        self.tc_offsets().len() * self.beta_count * self.omega_count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let g = GridSpec::default();
        g.validate().unwrap();
        let tcs = g.tc_offsets();
        assert_eq!(tcs.len(), 96);
        assert_eq!(tcs[0], 10.0);
        assert_eq!(*tcs.last().unwrap(), 200.0);
        let b = g.betas();
        assert_eq!((b[0], b[29]), (0.1, 1.0));
        let w = g.omegas();
        assert_eq!((w[0], w[19]), (6.0, 13.0));
        assert_eq!(g.n_points(), 96 * 30 * 20);
    }

    #[test]
    fn rejects_bad_ranges() {
        let g = GridSpec { tc_offset_min: 0.0, ..Default::default() };
        assert!(g.validate().is_err());
        let g = GridSpec { beta_max: 1.5, ..Default::default() };
        assert!(g.validate().is_err());
        let g = GridSpec { omega_count: 0, ..Default::default() };
        assert!(g.validate().is_err());
        let g = GridSpec { tc_step: -1.0, ..Default::default() };
        assert!(g.validate().is_err());
    }

    #[test]
    fn single_point_axes() {
        let g = GridSpec { beta_min: 0.3, beta_max: 0.3, beta_count: 1, ..Default::default() };
        assert_eq!(g.betas(), vec![0.3]);
    }
}
