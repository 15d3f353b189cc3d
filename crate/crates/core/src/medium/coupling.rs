use super::{chi_time, FrequencyGrid, QuadratureRule, SusceptibilityKernel};
use crate::error::{Error, Result};
use crate::quad::{sine_over_omega_tail, sine_transform};
use std::f64::consts::PI;

/// Round-trip tolerance for spectra whose generating kernel is known.
pub const ROUND_TRIP_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    Electric,
    Magnetic,
}

impl CouplingKind {
    pub fn name(self) -> &'static str {
        match self {
            CouplingKind::Electric => "electric",
            CouplingKind::Magnetic => "magnetic",
        }
    }
}

/// Discrete spectral line `weight · δ(ω - center)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaPeak {
    pub weight: f64,
    pub center: f64,
}

/// `|f(ω)|²` or `|g(ω)|²` sampled on a grid, plus an optional spectral line.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSpectrum {
    kind: CouplingKind,
    grid: FrequencyGrid,
    values: Vec<f64>,
    delta: Option<DeltaPeak>,
    jumps: Vec<(f64, f64)>,
    generator: Option<SusceptibilityKernel>,
}

impl CouplingSpectrum {
    /// Spectrum from externally supplied samples; no generator and no tail model.
    pub fn from_samples(kind: CouplingKind, grid: FrequencyGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(crate::error::invalid("one spectral value per grid node is required"));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(crate::error::invalid("spectral values must be non-negative"));
        }
        Ok(CouplingSpectrum { kind, grid, values, delta: None, jumps: Vec::new(), generator: None })
    }

    pub fn kind(&self) -> CouplingKind {
        self.kind
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn delta(&self) -> Option<DeltaPeak> {
        self.delta
    }

    pub fn generator(&self) -> Option<&SusceptibilityKernel> {
        self.generator.as_ref()
    }

    pub fn is_zero(&self) -> bool {
        self.delta.is_none() && self.values.iter().all(|v| *v == 0.0)
    }
}

/// `S(ω) = ∫ χ(t) sin(ωt) dt` from the closed form, when one exists.
fn closed_sine_transform(kernel: &SusceptibilityKernel, omega: f64) -> Option<f64> {
    use SusceptibilityKernel::*;
    match *kernel {
        Zero | Instantaneous { .. } => Some(0.0),
        Step { beta } => Some(beta / omega),
        Box { chi0, delta } => {
            let x = 0.5 * omega * delta;
            Some(chi0 * x.sin() * x.sin() / x)
        }
        Lorentz { omega0, gamma, omega_p } if gamma > 0.0 => {
            let nu0 = (omega0 * omega0 - gamma * gamma / 4.0).sqrt();
            let g2 = gamma * gamma / 4.0;
            let a = g2 + (nu0 - omega) * (nu0 - omega);
            let b = g2 + (nu0 + omega) * (nu0 + omega);
            Some(omega_p * omega_p * gamma * omega / (a * b))
        }
        Lorentz { .. } => Some(0.0),
        Tabulated(_) => None,
    }
}

fn to_strength(sine: f64, omega: f64) -> f64 {
    sine / (4.0 * PI * PI * omega * omega)
}

/// Sine transform by oscillatory quadrature, for any variant.
pub fn numeric_sine_transform(kernel: &SusceptibilityKernel, omega: f64) -> Result<f64> {
    let horizon = match kernel {
        SusceptibilityKernel::Lorentz { omega0, gamma, .. } if *gamma == 0.0 => 64.0 * PI / omega0,
        k => k.horizon(),
    };
    sine_transform(&|t| chi_time(kernel, t), omega, horizon, &kernel.breakpoints())
}

/// Continuous part of `|f(ω)|²` at one frequency (closed form when available).
///
/// Zero at `ω = 0`; a lossless Lorentz kernel has no continuous part.
pub fn coupling_strength(kernel: &SusceptibilityKernel, omega: f64) -> Result<f64> {
    if omega == 0.0 {
        return Ok(0.0);
    }
    let sine = match closed_sine_transform(kernel, omega) {
        Some(v) => v,
        None => numeric_sine_transform(kernel, omega)?,
    };
    Ok(to_strength(sine, omega).max(0.0))
}

/// Numerical `|f(ω)|²` regardless of whether a closed form exists.
pub fn numeric_coupling_strength(kernel: &SusceptibilityKernel, omega: f64) -> Result<f64> {
    Ok(to_strength(numeric_sine_transform(kernel, omega)?, omega))
}

fn delta_peak(kernel: &SusceptibilityKernel) -> Option<DeltaPeak> {
    match *kernel {
        SusceptibilityKernel::Lorentz { omega0, gamma, omega_p } if gamma == 0.0 => {
            Some(DeltaPeak { weight: omega_p * omega_p / (8.0 * PI * omega0.powi(3)), center: omega0 })
        }
        _ => None,
    }
}

/// Samples the coupling spectrum generated by `kernel` on `grid`.
pub fn coupling_from_chi(kernel: &SusceptibilityKernel, kind: CouplingKind, grid: &FrequencyGrid) -> Result<CouplingSpectrum> {
    let values = grid
        .nodes()
        .iter()
        .map(|&w| coupling_strength(kernel, w))
        .collect::<Result<Vec<_>>>()?;
    Ok(CouplingSpectrum {
        kind,
        grid: grid.clone(),
        values,
        delta: delta_peak(kernel),
        jumps: kernel.jumps(),
        generator: Some(kernel.clone()),
    })
}

/// `χ(t) = 8π ∫ ω² |f|² sin(ωt) dω` on the spectrum's grid.
///
/// Beyond the top of a grid that starts at zero, the spectrum is continued by
/// the `1/ω` behaviour produced by the kernel's jump discontinuities.
pub fn chi_from_coupling(spectrum: &CouplingSpectrum, times: &[f64]) -> Result<Vec<f64>> {
    let out = reconstruct_chi(spectrum, times);
    if let Some(k) = &spectrum.generator {
        let residual = round_trip_residual(k, times, &out);
        if residual > ROUND_TRIP_TOLERANCE {
            return Err(Error::GridTooCoarse { residual, tolerance: ROUND_TRIP_TOLERANCE });
        }
    }
    Ok(out)
}

/// Largest deviation of `values` from `χ(times)`, relative to `max |χ|`.
pub fn round_trip_residual(kernel: &SusceptibilityKernel, times: &[f64], values: &[f64]) -> f64 {
    let exact: Vec<f64> = times.iter().map(|&t| chi_time(kernel, t)).collect();
    let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let err = values.iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

/// [`chi_from_coupling`] without the comparison against the generating kernel.
pub fn reconstruct_chi(spectrum: &CouplingSpectrum, times: &[f64]) -> Vec<f64> {
    let grid = &spectrum.grid;
    let covers_origin = grid.rule() != QuadratureRule::Log;
    let top = grid.omega_max();
    let out: Vec<f64> = times
        .iter()
        .map(|&t| {
            let mut acc: f64 = grid
                .nodes()
                .iter()
                .zip(grid.weights())
                .zip(&spectrum.values)
                .map(|((w, q), v)| q * w * w * v * (w * t).sin())
                .sum::<f64>()
                * 8.0
                * PI;
            if let Some(d) = spectrum.delta {
                acc += 8.0 * PI * d.center * d.center * d.weight * (d.center * t).sin();
            }
            if covers_origin {
                for &(tau, jump) in &spectrum.jumps {
                    acc += jump / PI * (sine_over_omega_tail(t + tau, top) + sine_over_omega_tail(t - tau, top));
                }
            }
            if t <= 0.0 {
                0.0
            } else {
                acc
            }
        })
        .collect();
    out
}
