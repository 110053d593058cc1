//! Radial obstacle profiles.
//!
//! A profile `phi` lives on `[0, 1]`, is C^2, strictly decreasing, positive at
//! the origin and vanishes together with its derivative at the support edge,
//! so that the rescaled force field is globally continuous.

use serde::{Deserialize, Serialize};

/// A radial potential profile on `[0, 1]`. Implementors must satisfy
/// `value(0) > 0`, `value(1) = 0`, `derivative(1) = 0` and
/// `derivative(r) < 0` on `(0, 1)`.
pub trait Profile: Send + Sync {
    fn value(&self, r: f64) -> f64;
    fn derivative(&self, r: f64) -> f64;
    /// `sup_{r in [0,1]} |r * phi'(r)|`, used by the deflection-angle bound.
    fn sup_r_dphi(&self) -> f64 {
        (0..=4096)
            .map(|i| {
                let r = i as f64 / 4096.0;
                (r * self.derivative(r)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// The canonical profile `phi(r) = h (1 - r^2)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticBump {
    pub h: f64,
}

impl QuarticBump {
    pub fn new(h: f64) -> Self {
        assert!(h > 0.0, "profile height must be positive");
        Self { h }
    }

    /// Exact grazing-limit Landau coefficient for this profile at base
    /// intensity `mu`: `B = 4096/2835 * mu * h^2`.
    ///
    /// From the small-coupling deflection `theta(b) = (16/3) c h b (1-b^2)^{3/2}`
    /// at unit speed: `(1/2) int theta^2 db = c^2 h^2 4096/2835`.
    pub fn landau_limit_coefficient(&self, mu: f64) -> f64 {
        4096.0 / 2835.0 * mu * self.h * self.h
    }
}

impl Default for QuarticBump {
    fn default() -> Self {
        Self { h: 1.0 }
    }
}

impl Profile for QuarticBump {
    fn value(&self, r: f64) -> f64 {
        if r >= 1.0 {
            0.0
        } else {
            let s = 1.0 - r * r;
            self.h * s * s
        }
    }

    fn derivative(&self, r: f64) -> f64 {
        if r >= 1.0 {
            0.0
        } else {
            -4.0 * self.h * r * (1.0 - r * r)
        }
    }

    fn sup_r_dphi(&self) -> f64 {
        // |r phi'| = 4h r^2 (1 - r^2), maximal at r^2 = 1/2
        self.h
    }
}

/// Sampled validity check of the profile invariants: positivity at the
/// origin, vanishing value and slope at the edge, strict monotonicity.
pub fn validate_profile<P: Profile + ?Sized>(p: &P) -> Result<(), String> {
    if p.value(0.0) <= 0.0 {
        return Err("profile value at r=0 must be positive".into());
    }
    if p.value(1.0).abs() > 1e-12 || p.derivative(1.0).abs() > 1e-12 {
        return Err("profile and its derivative must vanish at r=1".into());
    }
    for i in 1..512 {
        let r = i as f64 / 512.0;
        if p.derivative(r) >= 0.0 && r < 1.0 - 1e-9 {
            return Err(format!("profile must be strictly decreasing (violated at r={r})"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quartic_bump_satisfies_profile_invariants() {
        validate_profile(&QuarticBump::new(1.0)).unwrap();
        validate_profile(&QuarticBump::new(0.3)).unwrap();
    }

    #[test]
    fn sup_r_dphi_matches_sampled_maximum() {
        let p = QuarticBump::new(2.5);
        let sampled = (0..=100_000)
            .map(|i| {
                let r = i as f64 / 100_000.0;
                (r * p.derivative(r)).abs()
            })
            .fold(0.0, f64::max);
        assert_abs_diff_eq!(p.sup_r_dphi(), sampled, epsilon = 1e-6);
        assert_abs_diff_eq!(p.sup_r_dphi(), 2.5, epsilon = 1e-12);
    }

    #[test]
    fn derivative_is_consistent_with_value() {
        let p = QuarticBump::new(1.7);
        let h = 1e-6;
        for i in 1..20 {
            let r = i as f64 / 21.0;
            let fd = (p.value(r + h) - p.value(r - h)) / (2.0 * h);
            assert_abs_diff_eq!(fd, p.derivative(r), epsilon = 1e-8);
        }
    }
}
