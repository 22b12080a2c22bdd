use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// LPPLS parameters in the linearised form
///
/// ```text
/// ln p(t) = A + B f + C1 f cos(ω ln(tc - t)) + C2 f sin(ω ln(tc - t)),   f = (tc - t)^β
/// ```
///
/// `tc` is measured in window-local trading days.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpplsParams {
    pub tc: f64,
    pub beta: f64,
    pub omega: f64,
    pub a: f64,
    pub b: f64,
    pub c1: f64,
    pub c2: f64,
}

/// Amplitude/phase form of the oscillation plus the characteristic time scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Canonical {
    pub c: f64,
    pub phi: f64,
    pub tau: f64,
}

impl Canonical {
    /// τ above one has no reading as a fraction of the interval to tc.
    pub fn tau_exceeds_one(&self) -> bool {
        self.tau > 1.0
    }
}

impl LpplsParams {
    /// Builds linear coefficients from the amplitude/phase form: `C1 = C cos φ`, `C2 = -C sin φ`.
    pub fn from_amplitude_phase(tc: f64, beta: f64, omega: f64, a: f64, b: f64, c: f64, phi: f64) -> Self {
        Self { tc, beta, omega, a, b, c1: c * phi.cos(), c2: -c * phi.sin() }
    }

    pub fn canonical(&self) -> Canonical {
        derive_canonical(self.c1, self.c2, self.omega)
    }

    /// Checks `0 < β <= 1`, `ω > 0` and finiteness of every field.
    pub fn validate_nonlinear(&self) -> Result<()> {
        validate_nonlinear(self.tc, self.beta, self.omega)
    }
}

pub(crate) fn validate_nonlinear(tc: f64, beta: f64, omega: f64) -> Result<()> {
    if !tc.is_finite() {
        return Err(Error::InvalidNonlinearParams(format!("tc = {tc} is not finite")));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidNonlinearParams(format!("beta = {beta} outside (0, 1]")));
    }
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::InvalidNonlinearParams(format!("omega = {omega} must be positive")));
    }
    Ok(())
}

/// LPPLS log-price at window-local time `t`.
pub fn lppls_eval(params: &LpplsParams, t: f64) -> Result<f64> {
    let dt = params.tc - t;
    if !(dt > 0.0) {
        return Err(Error::TimeAtOrPastCritical { t, tc: params.tc });
    }
    let f = dt.powf(params.beta);
    let (s, c) = (params.omega * dt.ln()).sin_cos();
    Ok(params.a + params.b * f + f * (params.c1 * c + params.c2 * s))
}

/// `C = sqrt(C1² + C2²)`, `φ = atan2(-C2, C1)`, `τ = exp(-φ/ω)`.
pub fn derive_canonical(c1: f64, c2: f64, omega: f64) -> Canonical {
    let c = c1.hypot(c2);
    // atan2(-0.0, x) would give -0.0 for C2 = 0; keep the phase at +0.
    let phi = if c2 == 0.0 && c1 >= 0.0 { 0.0 } else { (-c2).atan2(c1) };
    Canonical { c, phi, tau: (-phi / omega).exp() }
}
