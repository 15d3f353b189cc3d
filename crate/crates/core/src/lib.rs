//! Mode kernels, coupling spectra and consistency checks for the quantized
//! electromagnetic field in homogeneous, linear, dispersive and absorptive media.
//!
//! Natural units are used throughout (`ħ = ε₀ = μ₀ = c = 1`). Time arguments are
//! elapsed times `|t| >= 0`; the half of the time axis is selected by [`Branch`].

pub mod error;
pub mod field;
pub mod kernels;
pub mod laplace;
pub mod medium;
pub mod quad;
pub mod report;

pub use error::{Error, Result};
pub use laplace::Branch;
pub use num_complex::Complex64;
pub use report::CheckReport;

use medium::{MediumModel, SusceptibilityKernel};

/// Compact human-readable label, e.g. `chi_e=step(beta=0.2); chi_m=zero`.
pub fn describe_kernel(k: &SusceptibilityKernel) -> String {
    use SusceptibilityKernel::*;
    match k {
        Zero => "zero".into(),
        Instantaneous { chi0 } => format!("instantaneous(chi0={chi0})"),
        Box { chi0, delta } => format!("box(chi0={chi0}, delta={delta})"),
        Step { beta } => format!("step(beta={beta})"),
        Lorentz { omega0, gamma, omega_p } => format!("lorentz(omega0={omega0}, gamma={gamma}, omega_p={omega_p})"),
        Tabulated(t) => format!("tabulated(n={}, dt={})", t.samples().len(), t.dt()),
    }
}

pub fn describe_medium(m: &MediumModel) -> String {
    format!("chi_e={}; chi_m={}", describe_kernel(&m.chi_e), describe_kernel(&m.chi_m))
}
