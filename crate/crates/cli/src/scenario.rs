use crate::config::{ConfigError, ScenarioConfig, ScenarioKind};
use crate::output::Series;
use qedk_core::field::{commutator_report, energy_example2, instantaneous_fields};
use qedk_core::kernels::{kernel_consistency, make_kernels, stability_margin, KernelKind, ModeKernels};
use qedk_core::medium::{
    chi_time, coupling_from_chi, kk_check, reconstruct_chi, round_trip_residual, CouplingKind, MediumModel, SusceptibilityKernel,
    ROUND_TRIP_TOLERANCE,
};
use qedk_core::{Branch, CheckReport, Complex64};
use thiserror::Error;

pub const EXAMPLE_TOLERANCE: f64 = 1e-10;
pub const CRITICAL_TOLERANCE: f64 = 1e-8;
pub const VACUUM_TOLERANCE: f64 = 1e-12;
pub const ASYMPTOTIC_TOLERANCE: f64 = 1e-6;
/// Below this `|Ω|/ω_q` the step medium is treated as critically damped.
const CRITICAL_GAP: f64 = 1e-6;
/// Most times fed to the finite-difference consistency check.
const CONSISTENCY_SAMPLES: usize = 21;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerics(#[from] qedk_core::Error),
}

/// Reports of every embedded check plus the series to plot.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub reports: Vec<CheckReport>,
    pub series: Vec<Series>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        !self.reports.is_empty() && self.reports.iter().all(|r| r.pass)
    }
}

/// Runs the scenario; series are only assembled when `series` is set.
pub fn execute(cfg: &ScenarioConfig, series: bool) -> Result<Outcome, RunError> {
    let mut out = Outcome::default();
    match cfg.kind {
        ScenarioKind::Kernels => kernels(cfg, series, &mut out)?,
        ScenarioKind::Coupling => coupling(cfg, series, &mut out)?,
        ScenarioKind::Commutator => {
            let times = cfg.time()?.samples();
            out.reports.push(commutator_report(&cfg.medium.model, cfg.omega_q()?, &times, cfg.grid()?, cfg.branch)?);
        }
        ScenarioKind::Energy => out.reports.push(energy(cfg)?),
        ScenarioKind::Kk => out.reports.push(kk_check(&cfg.medium.model, cfg.grid()?)?),
        ScenarioKind::Example1 => example1(cfg, series, &mut out)?,
        ScenarioKind::Example2 => example2(cfg, series, &mut out)?,
        ScenarioKind::Example3 => example3(cfg, series, &mut out)?,
        ScenarioKind::Example4 => example4(cfg, series, &mut out)?,
    }
    Ok(out)
}

fn file_name(kind: &str, omega_k: Option<f64>, k: &ModeKernels) -> String {
    let wk = omega_k.map(|w| format!("_wk{w}")).unwrap_or_default();
    format!("{kind}{wk}_wq{}_{}.csv", k.omega_q(), k.branch().name())
}

fn kernel_series(k: &ModeKernels, kind: KernelKind, omega_k: Option<f64>, times: &[f64]) -> Result<Series, RunError> {
    let wk = omega_k.unwrap_or(0.0);
    let points = times.iter().map(|&t| Ok((t, k.eval(kind, wk, t)?))).collect::<qedk_core::Result<Vec<_>>>()?;
    Ok(Series::complex(file_name(kind.name(), omega_k, k), points))
}

/// At most `n` times spread evenly over `times`, ends included.
fn thinned(times: &[f64], n: usize) -> Vec<f64> {
    if times.len() <= n {
        return times.to_vec();
    }
    (0..n).map(|i| times[i * (times.len() - 1) / (n - 1)]).collect()
}

fn kernels(cfg: &ScenarioConfig, series: bool, out: &mut Outcome) -> Result<(), RunError> {
    let k = make_kernels(&cfg.medium.model, cfg.omega_q()?, cfg.branch)?;
    let times = cfg.time()?.samples();
    let omega_k = cfg.reservoir_frequencies()?;
    if series {
        for kind in KernelKind::ALL {
            if kind.needs_omega_k() {
                for &wk in &omega_k {
                    out.series.push(kernel_series(&k, kind, Some(wk), &times)?);
                }
            } else {
                out.series.push(kernel_series(&k, kind, None, &times)?);
            }
        }
    }
    out.reports.push(kernel_consistency(&k, &thinned(&times, CONSISTENCY_SAMPLES), &omega_k)?);
    Ok(())
}

fn coupling(cfg: &ScenarioConfig, series: bool, out: &mut Outcome) -> Result<(), RunError> {
    let grid = cfg.grid()?;
    let times: Vec<f64> = cfg.time()?.samples().into_iter().filter(|t| *t > 0.0).collect();
    if times.is_empty() {
        return Err(ConfigError { key: "scenario.time".into(), message: "coupling round trip needs t > 0".into() }.into());
    }
    let label = qedk_core::describe_medium(&cfg.medium.model);
    for (kernel, kind, symbol) in [
        (&cfg.medium.model.chi_e, CouplingKind::Electric, "f2"),
        (&cfg.medium.model.chi_m, CouplingKind::Magnetic, "g2"),
    ] {
        let spectrum = coupling_from_chi(kernel, kind, grid)?;
        if series {
            let rows = grid.nodes().iter().zip(spectrum.values()).map(|(w, v)| vec![*w, *v]).collect();
            out.series.push(Series { file: format!("coupling_{symbol}.csv"), columns: vec!["omega", "value"], rows });
        }
        let mut report = CheckReport::new(format!("chi_round_trip_{}", kind.name()), label.clone()).grid(grid);
        if matches!(kernel, SusceptibilityKernel::Zero | SusceptibilityKernel::Instantaneous { .. }) {
            // No memory, no reservoir: the spectrum itself must vanish.
            let largest = spectrum.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            report.push(0.0, largest, 0.0, largest);
            out.reports.push(report.note("kernel has no memory; spectrum must vanish").finish(0.0));
            continue;
        }
        let values = reconstruct_chi(&spectrum, &times);
        let scale = times.iter().fold(0.0f64, |m, &t| m.max(chi_time(kernel, t).abs()));
        for (&t, v) in times.iter().zip(&values) {
            let exact = chi_time(kernel, t);
            report.push(t, *v, exact, (v - exact).abs() / scale);
        }
        let residual = round_trip_residual(kernel, &times, &values);
        out.reports.push(report.param("round_trip_residual", residual).finish(ROUND_TRIP_TOLERANCE));
        if series {
            let rows = times.iter().zip(&values).map(|(t, v)| vec![*t, *v, chi_time(kernel, *t)]).collect();
            out.series.push(Series { file: format!("chi_round_trip_{}.csv", kind.name()), columns: vec!["t", "reconstructed", "exact"], rows });
        }
    }
    Ok(())
}

fn static_susceptibilities(cfg: &ScenarioConfig) -> Result<(f64, f64), ConfigError> {
    let get = |spec: &crate::config::KernelSpec, key: &str| {
        spec.static_chi().ok_or_else(|| ConfigError { key: key.into(), message: "needs a static susceptibility".into() })
    };
    Ok((get(&cfg.medium.chi_e, "medium.chi_e")?, get(&cfg.medium.chi_m, "medium.chi_m")?))
}

fn energy(cfg: &ScenarioConfig) -> Result<CheckReport, RunError> {
    let (chi_e0, chi_m0) = static_susceptibilities(cfg)?;
    Ok(energy_example2(chi_e0, chi_m0, cfg.omega_q()?, &cfg.time()?.samples())?)
}

/// Compares `Z` against `want(t)` with residual `|Z - want| / |want|`.
fn closed_form_report(
    name: &str,
    k: &ModeKernels,
    times: &[f64],
    tolerance: f64,
    want: impl Fn(f64) -> Complex64,
) -> Result<(CheckReport, Vec<(f64, Complex64)>), RunError> {
    let mut report = CheckReport::new(name, qedk_core::describe_medium(k.medium()))
        .param("omega_q", k.omega_q())
        .param("branch_sign", k.branch().sign());
    let mut z = Vec::with_capacity(times.len());
    for &t in times {
        let got = k.z(t)?;
        let w = want(t);
        report.push(t, got.norm(), w.norm(), (got - w).norm() / w.norm());
        z.push((t, got));
    }
    Ok((report.finish(tolerance), z))
}

fn example1(cfg: &ScenarioConfig, series: bool, out: &mut Outcome) -> Result<(), RunError> {
    let wq = cfg.omega_q()?;
    let k = make_kernels(&cfg.medium.model, wq, cfg.branch)?;
    let times = cfg.time()?.samples();
    let sign = cfg.branch.sign();
    let (report, z) = closed_form_report("example1_vacuum", &k, &times, VACUUM_TOLERANCE, |t| Complex64::from_polar(1.0, -sign * wq * t))?;
    out.reports.push(report);

    let mut reservoirs = CheckReport::new("example1_reservoirs", qedk_core::describe_medium(k.medium())).param("omega_q", wq);
    for wk in cfg.reservoir_frequencies()? {
        for &t in &times {
            let size = k.zeta(wk, t)?.norm() + k.eta(wk, t)?.norm();
            reservoirs.push(t, size, 0.0, size);
        }
    }
    out.reports.push(reservoirs.finish(0.0));
    if series {
        out.series.push(Series::complex(file_name("Z", None, &k), z));
    }
    Ok(())
}

fn example2(cfg: &ScenarioConfig, series: bool, out: &mut Outcome) -> Result<(), RunError> {
    let (chi_e0, chi_m0) = static_susceptibilities(cfg)?;
    let wq = cfg.omega_q()?;
    let times = cfg.time()?.samples();
    let limit = MediumModel::new(
        SusceptibilityKernel::Instantaneous { chi0: chi_e0 },
        SusceptibilityKernel::magnetic_instantaneous(chi_m0)?,
        cfg.medium.model.units,
    )?;
    let k = make_kernels(&limit, wq, cfg.branch)?;
    let forward = cfg.branch == Branch::Forward;
    let closed = |t: f64| {
        // α(t) = √(1/2ω_q) Z(t)
        let z = instantaneous_fields(chi_e0, chi_m0, wq, t).b / (wq * (0.5 / wq).sqrt());
        if forward {
            z
        } else {
            z.conj()
        }
    };
    let (report, z) = closed_form_report("example2_z", &k, &times, EXAMPLE_TOLERANCE, closed)?;
    out.reports.push(report.note("box kernels taken in the delta -> 0 limit"));
    out.reports.push(energy_example2(chi_e0, chi_m0, wq, &times)?);
    if series {
        out.series.push(Series::complex(file_name("Z", None, &k), z));
    }
    Ok(())
}

/// `Z` of the step medium: `e^{-βt/2}[cos Ωt + (β/2Ω) sin Ωt ∓ i(ω_q/Ω) sin Ωt]`, `Ω² = ω_q² - β²/4`.
pub fn step_closed_form(beta: f64, omega_q: f64, branch: Branch, t: f64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    let sign = branch.sign();
    let omega = Complex64::new(omega_q * omega_q - beta * beta / 4.0, 0.0).sqrt();
    let decay = (-beta * t / 2.0).exp();
    if omega.norm() < CRITICAL_GAP * omega_q {
        // sin Ωt / Ω → t
        return decay * (1.0 + beta * t / 2.0 - i * sign * omega_q * t);
    }
    let (c, s) = ((omega * t).cos(), (omega * t).sin() / omega);
    decay * (c + beta / 2.0 * s - i * sign * omega_q * s)
}

fn example3(cfg: &ScenarioConfig, series: bool, out: &mut Outcome) -> Result<(), RunError> {
    let SusceptibilityKernel::Step { beta } = cfg.medium.model.chi_e else {
        unreachable!("validated when loading")
    };
    let wq = cfg.omega_q()?;
    let k = make_kernels(&cfg.medium.model, wq, cfg.branch)?;
    let times = cfg.time()?.samples();
    let critical = (wq * wq - beta * beta / 4.0).abs().sqrt() < CRITICAL_GAP * wq;
    let tolerance = if critical { CRITICAL_TOLERANCE } else { EXAMPLE_TOLERANCE };
    let (report, z) = closed_form_report("example3_z", &k, &times, tolerance, |t| step_closed_form(beta, wq, cfg.branch, t))?;
    out.reports.push(report.param("beta", beta));

    let label = qedk_core::describe_medium(k.medium());
    let envelope = CheckReport::new("example3_envelope", label).param("beta", beta).param("omega_q", wq);
    if beta <= 3f64.sqrt() * wq {
        let omega = (wq * wq - beta * beta / 4.0).sqrt();
        let mut envelope = envelope;
        for (t, zt) in &z {
            let bound = (-beta * t / 2.0).exp() * (1.0 + beta / (2.0 * omega));
            envelope.push(*t, zt.norm(), bound, (zt.norm() - bound).max(0.0) / bound);
        }
        out.reports.push(envelope.finish(VACUUM_TOLERANCE));
    } else {
        out.reports.push(envelope.skip("envelope bound applies for beta <= sqrt(3) omega_q"));
    }
    if series {
        out.series.push(Series::complex(file_name("Z", None, &k), z));
    }
    Ok(())
}

/// `Ω₋ < Ω₊` with `Ω±² = (S ± √(S² - 4ω₀²ω_q²))/2`, `S = ω₀² + ω_q² + ω_p²`.
pub fn polariton_frequencies(omega0: f64, omega_q: f64, omega_p: f64) -> (f64, f64) {
    let s = omega0 * omega0 + omega_q * omega_q + omega_p * omega_p;
    let root = (s * s - 4.0 * omega0 * omega0 * omega_q * omega_q).sqrt();
    let plus2 = (s + root) / 2.0;
    // Ω₋² from the product, free of cancellation.
    let minus2 = omega0 * omega0 * omega_q * omega_q / plus2;
    (minus2.sqrt(), plus2.sqrt())
}

fn example4(cfg: &ScenarioConfig, series: bool, out: &mut Outcome) -> Result<(), RunError> {
    let SusceptibilityKernel::Lorentz { omega0, gamma, omega_p } = cfg.medium.model.chi_e else {
        unreachable!("validated when loading")
    };
    let wq = cfg.omega_q()?;
    let k = make_kernels(&cfg.medium.model, wq, cfg.branch)?;
    let label = qedk_core::describe_medium(k.medium());
    let omega_k = cfg.reservoir_frequencies()?;

    if gamma == 0.0 {
        let poles = k.mode_poles().expect("Lorentz media are rational");
        let mut freqs: Vec<f64> = poles.poles().iter().map(|p| p.location.im).filter(|im| *im > 0.0).collect();
        freqs.sort_by(f64::total_cmp);
        let (want_minus, want_plus) = polariton_frequencies(omega0, wq, omega_p);
        let mut report = CheckReport::new("example4_poles", label).param("omega_q", wq).poles(poles.records());
        if let [minus, plus] = freqs[..] {
            let sum = omega0 * omega0 + wq * wq + omega_p * omega_p;
            let product_residual = (plus * minus - omega0 * wq).abs() / (omega0 * wq);
            let sum_residual = (plus * plus + minus * minus - sum).abs() / sum;
            report.push(0.0, minus, want_minus, (minus - want_minus).abs() / want_minus);
            report.push(1.0, plus, want_plus, (plus - want_plus).abs() / want_plus);
            report.push(2.0, plus * minus, omega0 * wq, product_residual);
            report.push(3.0, plus * plus + minus * minus, sum, sum_residual);
            report = report
                .param("omega_minus", minus)
                .param("omega_plus", plus)
                .param("product_residual", product_residual)
                .param("sum_residual", sum_residual);
        } else {
            report = report.note(format!("expected two polariton frequencies, found {}", freqs.len()));
        }
        out.reports.push(report.note("samples: omega_minus, omega_plus, product, sum of squares").finish(EXAMPLE_TOLERANCE));
    } else {
        let margin = stability_margin(&cfg.medium.model, wq)?;
        let t = 10.0 / margin;
        let sign = cfg.branch.sign();
        let mut report = CheckReport::new("example4_asymptotic_q", label)
            .param("omega_q", wq)
            .param("margin", margin)
            .param("t", t);
        for &wk in &omega_k {
            let damping = Complex64::new(0.0, -sign * gamma * wk);
            let ratio = ((omega0 * omega0 - wk * wk + damping) / (omega0 * omega0 + omega_p * omega_p - wk * wk + damping)).norm();
            let q = k.q(wk, t)?.norm();
            report.push(t, q, ratio, (q - ratio).abs() / ratio);
        }
        out.reports.push(report.finish(ASYMPTOTIC_TOLERANCE));
    }

    if series {
        let times = cfg.time()?.samples();
        out.series.push(kernel_series(&k, KernelKind::Z, None, &times)?);
        for &wk in &omega_k {
            out.series.push(kernel_series(&k, KernelKind::Q, Some(wk), &times)?);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_oracle() {
        let (m, p) = polariton_frequencies(1.0, 1.0, 0.5);
        assert!((m - 0.78077).abs() < 1e-5 && (p - 1.28077).abs() < 1e-5);
        // roots of x⁴ - S x² + ω₀²ω_q²
        for x in [m, p] {
            assert!((x.powi(4) - 2.25 * x * x + 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn step_closed_form_limits() {
        assert_eq!(step_closed_form(0.3, 1.0, Branch::Forward, 0.0), Complex64::new(1.0, 0.0));
        let near = step_closed_form(2.0 - 1e-9, 1.0, Branch::Forward, 3.0);
        let at = step_closed_form(2.0, 1.0, Branch::Forward, 3.0);
        assert!((near - at).norm() < 1e-7);
        let over = step_closed_form(3.0, 1.0, Branch::Backward, 2.0);
        assert!(over.im.is_finite() && over.re.is_finite());
    }

    #[test]
    fn thinning_keeps_the_ends() {
        let t: Vec<f64> = (0..100).map(f64::from).collect();
        let s = thinned(&t, 5);
        assert_eq!(s.first(), Some(&0.0));
        assert_eq!(s.last(), Some(&99.0));
        assert_eq!(s.len(), 5);
    }
}
