//! Tabulated kernels against media with the same response in closed form.

use qedk_core::kernels::{make_kernels, ModeKernels};
use qedk_core::medium::{MediumModel, SusceptibilityKernel, TabulatedKernel, UnitsSystem};
use qedk_core::Branch;

/// `n` equal samples at `dt, 2dt, …` hold `χ` constant on `(0, n·dt]`: a box.
fn flat(height: f64, dt: f64, n: usize) -> SusceptibilityKernel {
    SusceptibilityKernel::Tabulated(TabulatedKernel::new(dt, vec![height; n]).unwrap())
}

fn compare(a: &ModeKernels, b: &ModeKernels, times: &[f64], omega_k: f64, tol: f64) {
    for &t in times {
        let pairs = [
            ("Z", a.z(t).unwrap(), b.z(t).unwrap()),
            ("h", a.h(t).unwrap(), b.h(t).unwrap()),
            ("xi", a.xi(omega_k, t).unwrap(), b.xi(omega_k, t).unwrap()),
            ("zeta", a.zeta_unit(omega_k, t).unwrap(), b.zeta_unit(omega_k, t).unwrap()),
            ("Q", a.q(omega_k, t).unwrap(), b.q(omega_k, t).unwrap()),
        ];
        for (name, x, y) in pairs {
            assert!((x - y).norm() < tol, "{name}(t={t}): {x} vs {y}");
        }
    }
}

#[test]
fn flat_table_is_a_box() {
    let (chi0, delta) = (3.0, 0.5);
    let n = 20;
    let table = MediumModel::electric(flat(chi0 / delta, delta / n as f64, n)).unwrap();
    let boxed = MediumModel::electric(SusceptibilityKernel::boxcar(chi0, delta).unwrap()).unwrap();
    let times = [0.1, 0.5, 0.9, 1.5, 2.75, 4.0, 6.3];
    for branch in [Branch::Forward, Branch::Backward] {
        let a = make_kernels(&table, 1.0, branch).unwrap();
        let b = make_kernels(&boxed, 1.0, branch).unwrap();
        compare(&a, &b, &times, 1.3, 1e-7);
    }
}

#[test]
fn flat_table_with_a_magnetic_box() {
    let units = UnitsSystem::default();
    let m = SusceptibilityKernel::magnetic_box(0.6, 0.7).unwrap();
    let table = MediumModel::new(flat(0.8 / 0.7, 0.05, 14), m.clone(), units).unwrap();
    let boxed = MediumModel::new(SusceptibilityKernel::boxcar(0.8, 0.7).unwrap(), m, units).unwrap();
    let a = make_kernels(&table, 1.5, Branch::Forward).unwrap();
    let b = make_kernels(&boxed, 1.5, Branch::Forward).unwrap();
    compare(&a, &b, &[0.35, 0.7, 1.4, 3.0, 5.5], 2.2, 1e-7);
}

#[test]
fn sampled_lorentz_approaches_the_rational_medium() {
    let (w0, gamma, wp) = (1.0, 1.0, 0.8);
    let nu = (w0 * w0 - gamma * gamma / 4.0f64).sqrt();
    let dt = 0.01;
    let samples: Vec<f64> = (1..=2500)
        .map(|i| {
            let t = i as f64 * dt;
            wp * wp * (-gamma * t / 2.0).exp() * (nu * t).sin() / nu
        })
        .collect();
    let table = MediumModel::electric(SusceptibilityKernel::Tabulated(TabulatedKernel::new(dt, samples).unwrap())).unwrap();
    let exact = MediumModel::electric(SusceptibilityKernel::lorentz(w0, gamma, wp).unwrap()).unwrap();
    let a = make_kernels(&table, 1.2, Branch::Forward).unwrap();
    let b = make_kernels(&exact, 1.2, Branch::Forward).unwrap();
    compare(&a, &b, &[0.5, 2.0, 5.0, 8.0], 0.7, 1e-4);
}

#[test]
fn magnetic_table_alone() {
    // a tabulated χ_m with zero χ_e against its box equivalent
    let units = UnitsSystem::default();
    let table = MediumModel::new(SusceptibilityKernel::Zero, flat(0.5 / 0.8, 0.1, 8), units).unwrap();
    let boxed = MediumModel::new(SusceptibilityKernel::Zero, SusceptibilityKernel::boxcar(0.5, 0.8).unwrap(), units).unwrap();
    let a = make_kernels(&table, 1.0, Branch::Backward).unwrap();
    let b = make_kernels(&boxed, 1.0, Branch::Backward).unwrap();
    compare(&a, &b, &[0.4, 0.8, 1.7, 4.2], 0.9, 1e-7);
}
