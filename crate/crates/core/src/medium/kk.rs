use super::{chi_on_axis, FrequencyGrid, MediumModel, QuadratureRule, SusceptibilityKernel};
use crate::error::{invalid, Error, Result};
use crate::laplace::Branch;
use crate::quad::{exp_integral_e1, gauss_legendre};
use num_complex::Complex64;
use crate::report::CheckReport;
use std::f64::consts::PI;

pub const KK_TOLERANCE: f64 = 2e-2;
pub const KK_TOLERANCE_STEP: f64 = 5e-2;

/// Dispersion recovered from absorption on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KkResiduals {
    pub omega: Vec<f64>,
    /// `Re ε - 1` evaluated directly.
    pub re_direct: Vec<f64>,
    /// `Re ε - 1` from the principal-value transform of `Im ε`.
    pub re_transform: Vec<f64>,
    /// `|ε|`, the scale of the relative residual.
    pub magnitude: Vec<f64>,
}

impl KkResiduals {
    pub fn relative(&self, j: usize) -> f64 {
        (self.re_transform[j] - self.re_direct[j]).abs() / self.magnitude[j]
    }
}

fn absorptive(kernel: &SusceptibilityKernel) -> bool {
    use SusceptibilityKernel::*;
    match kernel {
        Zero | Instantaneous { .. } => false,
        Lorentz { gamma, .. } => *gamma > 0.0,
        _ => true,
    }
}

/// `Re ε(ω) - 1 = (2/π) PV ∫ ω' Im ε(ω') / (ω'² - ω²) dω'` on the interior grid nodes.
///
/// The singular node is handled by subtracting its value and integrating the
/// remainder analytically; the spectrum is continued past both grid ends by a
/// power law fitted to the two outermost nodes.
pub fn kk_residuals(medium: &MediumModel, grid: &FrequencyGrid) -> Result<KkResiduals> {
    if !absorptive(&medium.chi_e) {
        return Err(Error::NotAbsorptive);
    }
    let w = grid.nodes();
    let n = w.len();
    if n < 5 {
        return Err(invalid("principal-value transform needs at least 5 nodes"));
    }
    let chi: Vec<_> = w
        .iter()
        .map(|&x| chi_on_axis(&medium.chi_e, x, Branch::Forward))
        .collect::<Result<_>>()?;
    let im: Vec<f64> = chi.iter().map(|e| e.im).collect();
    if im.iter().all(|v| *v == 0.0) {
        return Err(Error::NotAbsorptive);
    }
    let g: Vec<f64> = w.iter().zip(&im).map(|(x, v)| x * v).collect();
    let (lo, hi) = match grid.rule() {
        QuadratureRule::Log => (w[0], w[n - 1]),
        _ => (0.0, grid.omega_max()),
    };
    // Power-law exponents through the two outermost samples at each end.
    let low_q = (grid.rule() == QuadratureRule::Log).then(|| exponent(w[0], im[0], w[1], im[1])).flatten();
    let high_q = exponent(w[n - 1], im[n - 1], w[n - 2], im[n - 2]).filter(|q| (-4.0..0.0).contains(q));
    // Jumps J at τ give Im χ̃ → Σ J cos(ωτ)/ω.
    let jumps = medium.chi_e.jumps();

    let mut out = KkResiduals { omega: Vec::new(), re_direct: Vec::new(), re_transform: Vec::new(), magnitude: Vec::new() };
    for j in 1..n - 1 {
        let c = w[j];
        let (h1, h2) = (c - w[j - 1], w[j + 1] - c);
        let dg = (h1 * h1 * g[j + 1] - h2 * h2 * g[j - 1] + (h2 * h2 - h1 * h1) * g[j]) / (h1 * h2 * (h1 + h2));
        let regular: f64 = (0..n)
            .map(|i| {
                let r = if i == j { dg / (2.0 * c) } else { (g[i] - g[j]) / (w[i] * w[i] - c * c) };
                grid.weights()[i] * r
            })
            .sum();
        let pv = ((hi - c) * (lo + c) / ((hi + c) * (c - lo))).ln() / (2.0 * c);
        let mut total = regular + g[j] * pv;
        if let Some(q) = low_q.filter(|q| *q > -2.0) {
            // ∫_0^lo ω Im(lo) (ω/lo)^q / (ω² - c²) dω
            total -= im[0] * lo * lo / (c * c) * square_kernel(1.0 + q, lo / c);
        }
        if !jumps.is_empty() {
            total += jumps.iter().map(|&(tau, jump)| jump * cosine_tail(tau, c, hi)).sum::<f64>();
        } else if let Some(q) = high_q {
            // ∫_hi^∞ ω Im(hi) (ω/hi)^q / (ω² - c²) dω
            total += im[n - 1] * square_kernel(-q - 1.0, c / hi);
        }
        out.omega.push(c);
        out.re_direct.push(chi[j].re);
        out.re_transform.push(2.0 / PI * total);
        out.magnitude.push((1.0 + chi[j]).norm());
    }
    Ok(out)
}

/// `∫_hi^∞ cos(ωτ) / (ω² - c²) dω` for `0 < c < hi`.
fn cosine_tail(tau: f64, c: f64, hi: f64) -> f64 {
    if tau == 0.0 {
        return square_kernel(0.0, c / hi) / hi;
    }
    // ∫_a^∞ e^{iτu}/u du = E1(-iτa)
    let e1 = |a: f64| exp_integral_e1(Complex64::new(0.0, tau * a)).conj();
    let phase = Complex64::from_polar(1.0, tau * c);
    ((phase * e1(hi - c)).re - (phase.conj() * e1(hi + c)).re) / (2.0 * c)
}

/// `q` with `v ∝ ω^q` through two samples of one sign.
fn exponent(w0: f64, v0: f64, w1: f64, v1: f64) -> Option<f64> {
    if v0 == 0.0 || v1 == 0.0 || v0.signum() != v1.signum() {
        return None;
    }
    Some((v1 / v0).ln() / (w1 / w0).ln())
}

/// `∫_0^1 x^m / (1 - r² x²) dx` for `0 <= r < 1`, `m > -1`.
fn square_kernel(m: f64, r: f64) -> f64 {
    let lead = if r == 0.0 { 1.0 } else { r.atanh() / r };
    let (x, wt) = gauss_legendre(64);
    let rest: f64 = x
        .iter()
        .zip(&wt)
        .map(|(x, wt)| {
            let u = 0.5 * (x + 1.0);
            0.5 * wt * (u.powf(m) - 1.0) / (1.0 - r * r * u * u)
        })
        .sum();
    lead + rest
}

/// Hilbert-pair consistency of `ε(ω)` on `grid`; lossless media yield a skipped report.
pub fn kk_check(medium: &MediumModel, grid: &FrequencyGrid) -> Result<CheckReport> {
    let label = crate::describe_medium(medium);
    let base = CheckReport::new("kramers_kronig", label).grid(grid);
    let res = match kk_residuals(medium, grid) {
        Err(Error::NotAbsorptive) => return Ok(base.skip("medium is lossless; no absorption to transform")),
        other => other?,
    };
    let (tolerance, resonance) = match medium.chi_e {
        SusceptibilityKernel::Step { .. } => (KK_TOLERANCE_STEP, None),
        SusceptibilityKernel::Lorentz { omega0, gamma, .. } => {
            if grid.nodes()[0] > omega0 / 50.0 || grid.omega_max() < 50.0 * omega0 {
                return Err(invalid("grid must span [omega0/50, 50 omega0]"));
            }
            (KK_TOLERANCE, Some((omega0, gamma)))
        }
        _ => (KK_TOLERANCE, None),
    };
    let mut report = base;
    if let Some((w0, g)) = resonance {
        report = report.param("omega0", w0).param("gamma", g);
    }
    for j in 0..res.omega.len() {
        let w = res.omega[j];
        if resonance.is_some_and(|(w0, g)| (w - w0).abs() <= g) {
            continue;
        }
        report.push(w, res.re_transform[j], res.re_direct[j], res.relative(j));
    }
    Ok(report.finish(tolerance))
}
