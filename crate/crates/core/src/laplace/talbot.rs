use crate::error::{invalid, Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

pub type LaplaceFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// Relative change under node doubling that flags a failed inversion.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-6;
/// Relative change under node doubling accepted as converged.
const CONVERGED: f64 = 1e-12;
/// Node count beyond which refinement stops.
const MAX_NODES: usize = 1 << 14;

/// Transform given as a callable, possibly split into delayed parts
/// `F(s) = sum_j e^{-s d_j} F_j(s)`.
#[derive(Clone)]
pub struct GeneralLaplace {
    parts: Vec<(f64, LaplaceFn)>,
    sigma0: f64,
    scale: f64,
}

impl fmt::Debug for GeneralLaplace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let delays: Vec<f64> = self.parts.iter().map(|p| p.0).collect();
        f.debug_struct("GeneralLaplace")
            .field("delays", &delays)
            .field("sigma0", &self.sigma0)
            .field("scale", &self.scale)
            .finish()
    }
}

impl GeneralLaplace {
    /// `sigma0` bounds the real parts of all singularities; `scale` is the
    /// largest oscillation frequency expected in the time function.
    pub fn new<F>(f: F, sigma0: f64, scale: f64) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        GeneralLaplace { parts: vec![(0.0, Arc::new(f))], sigma0, scale: scale.max(0.0) }
    }

    /// Adds `e^{-s delay} f(s)`.
    pub fn with_delayed<F>(mut self, delay: f64, f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        self.parts.push((delay, Arc::new(f)));
        self
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.parts.iter().map(|(d, f)| (-s * *d).exp() * f(s)).sum()
    }
}

/// Time-domain value of `f` at `t > 0` from a Talbot-type contour.
///
/// The node count starts at `max(32, 10·t·scale)` and doubles until successive
/// sums agree to rounding; failing to reach [`DIVERGENCE_TOLERANCE`] is an error.
pub fn invert_numeric(f: &GeneralLaplace, t: f64) -> Result<Complex64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("contour inversion needs t > 0, got {t}")));
    }
    if !f.sigma0.is_finite() {
        return Err(invalid("abscissa of convergence is not finite"));
    }
    let mut total = Complex64::new(0.0, 0.0);
    for (delay, part) in &f.parts {
        let tau = t - delay;
        if tau > 0.0 {
            total += checked(part.as_ref(), tau, f.sigma0, f.scale)?;
        }
    }
    Ok(total)
}

fn checked(f: &dyn Fn(Complex64) -> Complex64, t: f64, sigma0: f64, scale: f64) -> Result<Complex64> {
    // An even count keeps the midpoint nodes off θ = 0.
    let mut n = 32usize.max((10.0 * t * scale).ceil() as usize);
    n += n % 2;
    if n > MAX_NODES {
        return Err(Error::ContourDivergence { t, change: f64::INFINITY });
    }
    let diverged = |change| Error::ContourDivergence { t, change };
    let (mut coarse, _) = contour_sum(f, t, n, sigma0, scale).ok_or(diverged(f64::INFINITY))?;
    let mut previous = f64::INFINITY;
    loop {
        let (fine, mass) = contour_sum(f, t, 2 * n, sigma0, scale).ok_or(diverged(f64::INFINITY))?;
        let change = (fine - coarse).norm() / fine.norm().max(1e-8 * mass).max(f64::MIN_POSITIVE);
        // past the rounding floor the change stops shrinking
        let stalled = change > 0.5 * previous;
        if change <= CONVERGED || (change <= DIVERGENCE_TOLERANCE && stalled) {
            return Ok(fine);
        }
        n *= 2;
        if n > MAX_NODES {
            return if change <= DIVERGENCE_TOLERANCE { Ok(fine) } else { Err(diverged(change)) };
        }
        coarse = fine;
        previous = change;
    }
}

/// Midpoint rule on `s(θ) = σ0 + μ(θ cot θ + iνθ)`, θ ∈ (-π, π).
fn contour_sum(f: &dyn Fn(Complex64) -> Complex64, t: f64, n: usize, sigma0: f64, scale: f64) -> Option<(Complex64, f64)> {
    let mu = 8.0 / t;
    let nu = (1.5 * scale / mu).max(1.0);
    let h = 2.0 * PI / n as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut mass = 0.0;
    for k in 0..n {
        let th = -PI + (k as f64 + 0.5) * h;
        let cot = th.cos() / th.sin();
        let s = Complex64::new(sigma0 + mu * th * cot, mu * nu * th);
        if s.re * t < -700.0 {
            continue;
        }
        let ds = Complex64::new(mu * (cot - th / (th.sin() * th.sin())), mu * nu);
        let term = (s * t).exp() * f(s) * ds;
        if !(term.re.is_finite() && term.im.is_finite()) {
            if s.re * t < -60.0 {
                continue;
            }
            return None;
        }
        mass += term.norm();
        sum += term;
    }
    let scale = h / (2.0 * PI);
    Some((sum * Complex64::new(0.0, -scale), mass * scale))
}
