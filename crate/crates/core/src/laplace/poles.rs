use super::poly::Poly;
use crate::error::{invalid, Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use std::cmp::Ordering;

/// Distinct poles closer than this (relative to `1 + |p|`) are never kept apart.
pub const MERGE_RADIUS: f64 = 1e-9;
/// Candidate clusters within this radius are merged when the expansion allows it.
const CLUSTER_RADIUS: f64 = 1e-4;
/// Coefficient residual a cached factorization must meet.
const CACHE_TOLERANCE: f64 = 1e-10;
/// Coefficient residual beyond which the polynomial is rejected.
const ILL_CONDITIONED: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    pub location: Complex64,
    pub multiplicity: usize,
}

impl Pole {
    pub fn simple(location: Complex64) -> Self {
        Pole { location, multiplicity: 1 }
    }
}

/// Factored denominator: `lead * prod (s - p)^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleSet {
    poles: Vec<Pole>,
    lead: Complex64,
    stable: bool,
}

/// Serializable `{re, im, multiplicity}` view of one pole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoleRecord {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
}

impl PoleSet {
    /// Builds a pole set from known factors, merging coincident locations.
    pub fn from_factors(lead: Complex64, poles: &[Pole]) -> Result<Self> {
        if lead == Complex64::new(0.0, 0.0) {
            return Err(invalid("leading coefficient is zero"));
        }
        let mut merged: Vec<Pole> = Vec::new();
        for p in poles {
            match merged.iter_mut().find(|q| close(q.location, p.location, MERGE_RADIUS)) {
                Some(q) => q.multiplicity += p.multiplicity,
                None => merged.push(*p),
            }
        }
        Ok(Self::assemble(lead, merged))
    }

    fn assemble(lead: Complex64, mut poles: Vec<Pole>) -> Self {
        for p in &mut poles {
            // Normalise signed zeros so ordering and output are stable.
            p.location = Complex64::new(p.location.re + 0.0, p.location.im + 0.0);
        }
        poles.sort_by(|a, b| cmp_location(a.location, b.location));
        let stable = poles.iter().all(|p| p.location.re < 0.0);
        PoleSet { poles, lead, stable }
    }

    /// Roots of `den` with multiplicities.
    pub fn find(den: &Poly) -> Result<Self> {
        let degree = den.degree().ok_or_else(|| invalid("denominator is zero"))?;
        if degree == 0 {
            return Ok(Self::assemble(den.leading(), Vec::new()));
        }
        let raw = raw_roots(den)?;
        let paired = if den.is_real() { pair_conjugates(raw) } else { raw };
        let poles = merge_clusters(den, paired);
        let set = Self::assemble(den.leading(), poles);
        let residual = expansion_residual(den, &set);
        if residual > ILL_CONDITIONED {
            return Err(Error::IllConditioned { residual, tolerance: ILL_CONDITIONED });
        }
        Ok(set)
    }

    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    pub fn lead(&self) -> Complex64 {
        self.lead
    }

    /// All poles strictly in the left half-plane.
    pub fn is_stable(&self) -> bool {
        self.stable
    }

    /// Stability margin `-max Re p`; negative or zero when not stable.
    pub fn margin(&self) -> f64 {
        -self.poles.iter().map(|p| p.location.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn degree(&self) -> usize {
        self.poles.iter().map(|p| p.multiplicity).sum()
    }

    pub fn expand(&self) -> Poly {
        let roots: Vec<_> = self.poles.iter().map(|p| (p.location, p.multiplicity)).collect();
        Poly::from_roots(self.lead, &roots)
    }

    /// Adds the simple factor `(s - p)`; a collision with an existing pole is an error.
    pub fn with_simple_pole(&self, p: Complex64) -> Result<Self> {
        if let Some(q) = self.poles.iter().find(|q| close(q.location, p, MERGE_RADIUS)) {
            return Err(Error::PoleOnAxis { re: q.location.re, im: q.location.im });
        }
        let mut poles = self.poles.clone();
        poles.push(Pole::simple(p));
        Ok(Self::assemble(self.lead, poles))
    }

    pub fn records(&self) -> Vec<PoleRecord> {
        self.poles
            .iter()
            .map(|p| PoleRecord { re: p.location.re, im: p.location.im, multiplicity: p.multiplicity })
            .collect()
    }
}

fn close(a: Complex64, b: Complex64, radius: f64) -> bool {
    (a - b).norm() <= radius * (1.0 + a.norm().max(b.norm()))
}

fn cmp_location(a: Complex64, b: Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Relative coefficient mismatch between `den` and the expanded factorization.
pub(crate) fn expansion_residual(den: &Poly, set: &PoleSet) -> f64 {
    let e = set.expand();
    let scale = den.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let n = den.coeffs().len().max(e.coeffs().len());
    let z = Complex64::new(0.0, 0.0);
    (0..n)
        .map(|i| {
            let a = den.coeffs().get(i).copied().unwrap_or(z);
            let b = e.coeffs().get(i).copied().unwrap_or(z);
            (a - b).norm()
        })
        .fold(0.0, f64::max)
        / scale
}

fn raw_roots(p: &Poly) -> Result<Vec<Complex64>> {
    let zeros = p.trailing_zeros();
    let q = p.shift_down(zeros);
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
    let d = q.degree().unwrap_or(0);
    if d == 0 {
        return Ok(roots);
    }
    if d >= 4 && q.is_even() {
        let u = q.even_part_in_square();
        let mut ur = raw_roots(&u)?;
        if u.is_real() {
            ur = pair_conjugates(ur);
        }
        for r in ur {
            let s = r.sqrt();
            roots.push(s);
            roots.push(-s);
        }
        return Ok(roots);
    }
    roots.extend(match d {
        1 => vec![-q.coeffs()[0] / q.coeffs()[1]],
        2 => quadratic(q.coeffs()[2], q.coeffs()[1], q.coeffs()[0]),
        _ => companion_roots(&q)?,
    });
    Ok(roots)
}

fn quadratic(a: Complex64, b: Complex64, c: Complex64) -> Vec<Complex64> {
    let sq = (b * b - 4.0 * a * c).sqrt();
    let sign = if (b.conj() * sq).re >= 0.0 { 1.0 } else { -1.0 };
    let q = -0.5 * (b + sign * sq);
    if q == Complex64::new(0.0, 0.0) {
        return vec![q, q];
    }
    vec![q / a, c / q]
}

fn companion_roots(q: &Poly) -> Result<Vec<Complex64>> {
    let d = q.degree().unwrap_or(0);
    let lead = q.leading();
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    for i in 1..d {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..d {
        m[(i, d - 1)] = -q.coeffs()[i] / lead;
    }
    let schur = m
        .try_schur(f64::EPSILON, 10_000)
        .ok_or(Error::IllConditioned { residual: f64::INFINITY, tolerance: ILL_CONDITIONED })?;
    let (_, t) = schur.unpack();
    let dq = q.derivative();
    Ok((0..d).map(|i| polish(q, &dq, t[(i, i)])).collect())
}

fn polish(p: &Poly, dp: &Poly, mut z: Complex64) -> Complex64 {
    let mut fz = p.eval(z).norm();
    for _ in 0..4 {
        let d = dp.eval(z);
        if d.norm() == 0.0 {
            break;
        }
        let next = z - p.eval(z) / d;
        let fnext = p.eval(next).norm();
        if !(fnext < fz) {
            break;
        }
        z = next;
        fz = fnext;
    }
    z
}

/// Forces exact conjugate symmetry on the roots of a real polynomial.
fn pair_conjugates(mut roots: Vec<Complex64>) -> Vec<Complex64> {
    let n = roots.len();
    let mut used = vec![false; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| roots[b].im.total_cmp(&roots[a].im));
    for &i in &order {
        if used[i] || roots[i].im <= 0.0 {
            continue;
        }
        let target = roots[i].conj();
        let partner = (0..n)
            .filter(|&j| j != i && !used[j] && roots[j].im <= 0.0)
            .min_by(|&a, &b| (roots[a] - target).norm().total_cmp(&(roots[b] - target).norm()));
        if let Some(j) = partner {
            let z = 0.5 * (roots[i] + roots[j].conj());
            roots[i] = z;
            roots[j] = z.conj();
            used[i] = true;
            used[j] = true;
        }
    }
    for (r, u) in roots.iter_mut().zip(&used) {
        if !u {
            r.im = 0.0;
        }
    }
    roots
}

fn merge_clusters(den: &Poly, mut roots: Vec<Complex64>) -> Vec<Pole> {
    roots.sort_by(|a, b| cmp_location(*a, *b));
    let mut clusters: Vec<Vec<Complex64>> = Vec::new();
    for r in roots {
        match clusters.iter_mut().find(|c| close(centroid(c), r, CLUSTER_RADIUS)) {
            Some(c) => c.push(r),
            None => clusters.push(vec![r]),
        }
    }
    let lead = den.leading();
    let mut poles: Vec<Pole> = clusters
        .iter()
        .flat_map(|c| c.iter().map(|&r| Pole::simple(r)))
        .collect();
    let multiple: Vec<(&Vec<Complex64>, Complex64)> =
        clusters.iter().filter(|c| c.len() > 1).map(|c| (c, refine_multiple(den, centroid(c), c.len()))).collect();
    // split neighbours spoil the residual of a single merge, so try all at once first
    let all: Vec<Pole> = clusters
        .iter()
        .map(|c| match multiple.iter().find(|(m, _)| std::ptr::eq(*m, c)) {
            Some((_, center)) => Pole { location: *center, multiplicity: c.len() },
            None => Pole::simple(c[0]),
        })
        .collect();
    if !multiple.is_empty() && expansion_residual(den, &PoleSet::assemble(lead, all.clone())) <= CACHE_TOLERANCE {
        return all;
    }
    for (c, center) in multiple {
        let forced = c.iter().all(|&r| close(center, r, MERGE_RADIUS));
        let mut trial: Vec<Pole> = poles.iter().filter(|p| !c.contains(&p.location)).copied().collect();
        trial.push(Pole { location: center, multiplicity: c.len() });
        let set = PoleSet::assemble(lead, trial.clone());
        if forced || expansion_residual(den, &set) <= CACHE_TOLERANCE {
            poles = trial;
        }
    }
    poles
}

/// Newton on the `(m-1)`-th derivative, where an `m`-fold root is simple.
fn refine_multiple(p: &Poly, start: Complex64, m: usize) -> Complex64 {
    let mut q = p.clone();
    for _ in 1..m {
        q = q.derivative();
    }
    let dq = q.derivative();
    polish(&q, &dq, start)
}

fn centroid(c: &[Complex64]) -> Complex64 {
    c.iter().sum::<Complex64>() / c.len() as f64
}
