//! Shared kinetic scaling parameters and derived quantities.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("parameter {name} = {value} violates: {constraint}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
}

/// Scaling parameters of the slab problem.
///
/// * `epsilon` — obstacle radius; couples the potential as `epsilon^alpha`
///   and the obstacle intensity as `mu_eps = epsilon^{-(2 alpha + lambda + 1)} mu`.
/// * `alpha` — potential-strength exponent; the proven diffusive regime is
///   `alpha in (0, 1/8)`, larger values up to 1/2 are accepted with a flag.
/// * `lambda` — time-scale exponent; the macroscopic time unit is
///   `epsilon^{-lambda}` and `delta = epsilon^lambda`.
/// * `mu` — reference obstacle intensity.
/// * `slab_width` — L, the width of the slab in macroscopic units.
/// * `rho_left`, `rho_right` — reservoir densities at `x1 = 0` and `x1 = L`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct KineticParams {
    pub epsilon: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub mu: f64,
    pub slab_width: f64,
    pub rho_left: f64,
    pub rho_right: f64,
}

impl KineticParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let checks: [(&'static str, f64, bool, &'static str); 7] = [
            ("epsilon", self.epsilon, self.epsilon > 0.0 && self.epsilon < 1.0, "0 < epsilon < 1"),
            ("alpha", self.alpha, self.alpha > 0.0 && self.alpha < 0.5, "0 < alpha < 1/2"),
            ("lambda", self.lambda, self.lambda >= 0.0, "lambda >= 0"),
            ("mu", self.mu, self.mu > 0.0, "mu > 0"),
            ("slab_width", self.slab_width, self.slab_width > 0.0, "L > 0"),
            ("rho_left", self.rho_left, self.rho_left >= 0.0, "rho_left >= 0"),
            ("rho_right", self.rho_right, self.rho_right >= 0.0, "rho_right >= 0"),
        ];
        for (name, value, ok, constraint) in checks {
            if !ok {
                return Err(ParamError::OutOfRange { name, value, constraint });
            }
        }
        Ok(())
    }

    /// Potential coupling strength `epsilon^alpha`.
    pub fn coupling(&self) -> f64 {
        self.epsilon.powf(self.alpha)
    }

    /// Obstacle intensity `mu_eps = epsilon^{-(2 alpha + lambda + 1)} mu`.
    pub fn mu_eps(&self) -> f64 {
        self.epsilon.powf(-(2.0 * self.alpha + self.lambda + 1.0)) * self.mu
    }

    /// Total collision rate of the jump process at unit speed:
    /// `2 mu_eps epsilon = 2 mu epsilon^{-2 alpha - lambda}`.
    pub fn jump_rate(&self) -> f64 {
        2.0 * self.mu * self.epsilon.powf(-2.0 * self.alpha - self.lambda)
    }

    /// Macroscopic time unit `epsilon^{-lambda}`.
    pub fn time_scale(&self) -> f64 {
        self.epsilon.powf(-self.lambda)
    }

    /// Diffusive small parameter `delta = epsilon^lambda`.
    pub fn delta(&self) -> f64 {
        self.epsilon.powf(self.lambda)
    }

    /// True when `(alpha, lambda)` sits inside the standing-assumption
    /// regime `lambda < (1 - 8 alpha) / 8` (requires `alpha < 1/8`).
    pub fn in_assumption_regime(&self) -> bool {
        self.alpha < 0.125 && self.lambda < (1.0 - 8.0 * self.alpha) / 8.0
    }

    /// True under the weaker constraint `lambda < (1 - 8 alpha) / 7`
    /// sufficient for the kinetic-limit statement alone.
    pub fn in_kinetic_limit_regime(&self) -> bool {
        self.alpha < 0.125 && self.lambda < (1.0 - 8.0 * self.alpha) / 7.0
    }

    /// Both candidate remainder exponents `gamma = 1 - 8(alpha ± lambda/2)`.
    /// The two sign readings bracket the ambiguity in the published rate;
    /// diagnostics report both rather than preferring one.
    pub fn gamma_candidates(&self) -> (f64, f64) {
        (
            1.0 - 8.0 * (self.alpha + self.lambda / 2.0),
            1.0 - 8.0 * (self.alpha - self.lambda / 2.0),
        )
    }
}

impl Default for KineticParams {
    fn default() -> Self {
        KineticParams {
            epsilon: 0.05,
            alpha: 0.05,
            lambda: 0.05,
            mu: 1.0,
            slab_width: 1.0,
            rho_left: 1.0,
            rho_right: 2.0,
        }
    }
}
