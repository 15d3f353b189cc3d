use crate::error::{invalid, Result};
use crate::quad::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    /// Equal weights `h = ω_max/n` at the cell midpoints `(i - ½)h`.
    Uniform,
    GaussLegendre,
    /// Trapezoid rule in `ln ω` between `ω_min` and `ω_max`.
    Log,
}

impl QuadratureRule {
    pub fn name(self) -> &'static str {
        match self {
            QuadratureRule::Uniform => "uniform",
            QuadratureRule::GaussLegendre => "gauss-legendre",
            QuadratureRule::Log => "log",
        }
    }
}

/// Positive quadrature nodes for integrals over reservoir frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    rule: QuadratureRule,
    omega_max: f64,
}

impl FrequencyGrid {
    pub fn uniform(n: usize, omega_max: f64) -> Result<Self> {
        check(n, omega_max)?;
        let h = omega_max / n as f64;
        let nodes = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
        Ok(FrequencyGrid { nodes, weights: vec![h; n], rule: QuadratureRule::Uniform, omega_max })
    }

    pub fn gauss_legendre(n: usize, omega_max: f64) -> Result<Self> {
        check(n, omega_max)?;
        let (x, w) = gauss_legendre(n);
        let half = 0.5 * omega_max;
        Ok(FrequencyGrid {
            nodes: x.iter().map(|x| half * (x + 1.0)).collect(),
            weights: w.iter().map(|w| half * w).collect(),
            rule: QuadratureRule::GaussLegendre,
            omega_max,
        })
    }

    pub fn log(n: usize, omega_min: f64, omega_max: f64) -> Result<Self> {
        check(n, omega_max)?;
        if !(omega_min > 0.0 && omega_min < omega_max) {
            return Err(invalid(format!("log grid needs 0 < omega_min < omega_max, got {omega_min}")));
        }
        let du = (omega_max / omega_min).ln() / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| omega_min * (i as f64 * du).exp()).collect();
        let weights = nodes
            .iter()
            .enumerate()
            .map(|(i, w)| if i == 0 || i == n - 1 { 0.5 * du * w } else { du * w })
            .collect();
        Ok(FrequencyGrid { nodes, weights, rule: QuadratureRule::Log, omega_max })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Same rule with twice the nodes over twice the range.
    pub fn doubled(&self) -> Result<Self> {
        let n = 2 * self.len();
        let w = 2.0 * self.omega_max;
        match self.rule {
            QuadratureRule::Uniform => Self::uniform(n, w),
            QuadratureRule::GaussLegendre => Self::gauss_legendre(n, w),
            QuadratureRule::Log => Self::log(n, self.nodes[0], w),
        }
    }
}

fn check(n: usize, omega_max: f64) -> Result<()> {
    if n < 2 {
        return Err(invalid(format!("grid needs at least 2 nodes, got {n}")));
    }
    if !(omega_max > 0.0 && omega_max.is_finite()) {
        return Err(invalid(format!("omega_max must be positive, got {omega_max}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gauss_legendre_grid_spans_the_interval() {
        let g = FrequencyGrid::gauss_legendre(64, 20.0).unwrap();
        let sum: f64 = g.weights().iter().sum();
        assert!((sum - 20.0).abs() < 1e-12);
        let cube: f64 = g.nodes().iter().zip(g.weights()).map(|(x, w)| w * x.powi(3)).sum();
        assert!((cube - 20f64.powi(4) / 4.0).abs() < 1e-9);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = FrequencyGrid::log(101, 0.01, 100.0).unwrap();
        assert!((g.nodes()[0] - 0.01).abs() < 1e-18);
        assert!((g.nodes()[100] - 100.0).abs() < 1e-11);
        assert!((g.nodes()[50] - 1.0).abs() < 1e-13);
    }

    proptest! {
        #[test]
        fn uniform_grid_invariants(n in 2usize..5000, wmax in 1e-3f64..1e4) {
            let g = FrequencyGrid::uniform(n, wmax).unwrap();
            let sum: f64 = g.weights().iter().sum();
            prop_assert!((sum - wmax).abs() <= 1e-12 * wmax);
            prop_assert!(g.nodes()[0] > 0.0);
            prop_assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
            prop_assert!(g.weights().iter().all(|w| *w > 0.0));
        }
    }
}
