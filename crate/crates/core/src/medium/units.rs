use crate::error::{invalid, Result};

/// Natural units with `ħ = ε₀ = μ₀ = c = 1`; times are measured in `1/omega_ref`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitsSystem {
    omega_ref: f64,
}

impl UnitsSystem {
    pub fn new(omega_ref: f64) -> Result<Self> {
        if omega_ref > 0.0 && omega_ref.is_finite() {
            Ok(UnitsSystem { omega_ref })
        } else {
            Err(invalid(format!("omega_ref must be positive and finite, got {omega_ref}")))
        }
    }

    pub fn omega_ref(&self) -> f64 {
        self.omega_ref
    }

    /// Dimensionless time to seconds.
    pub fn seconds(&self, t: f64) -> f64 {
        t / self.omega_ref
    }

    /// Dimensionless frequency to rad/s.
    pub fn rad_per_second(&self, omega: f64) -> f64 {
        omega * self.omega_ref
    }
}

impl Default for UnitsSystem {
    fn default() -> Self {
        UnitsSystem { omega_ref: 1.0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive_reference() {
        assert!(UnitsSystem::new(0.0).is_err());
        assert!(UnitsSystem::new(f64::NAN).is_err());
        let u = UnitsSystem::new(2.0e15).unwrap();
        assert_eq!(u.seconds(4.0e15), 2.0);
        assert_eq!(u.rad_per_second(0.5), 1.0e15);
    }
}
