use serde::Serialize;

use super::assemble::{assemble, Pencil};
use super::tridiag::{dot, matvec, sturm_count, Ldl};
use super::ProblemSpec;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::quadrature::GaussLegendre;

const MAX_INVERSE_ITERATIONS: usize = 50;
const DEGENERATE_AFTER: usize = 20;
const DEGENERATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenResult {
    pub lambda: f64,
    /// Eigenfunction at every mesh node, zero at Dirichlet ends.
    pub phi: Vec<f64>,
    /// `|K psi - mu M psi| / (||K| |psi|| + |mu| ||M| |psi||)` in the scaled unknowns, `mu` the pencil quotient.
    pub residual: f64,
    /// `∫ r^{d-1} e^{2sm} phi^2`.
    pub normalization: f64,
    pub iterations: usize,
    pub bisections: usize,
    pub min_interior_phi: f64,
}

impl EigenResult {
    /// Piecewise-linear interpolant of `phi` at `r`.
    pub fn value_at(&self, mesh: &Mesh, r: f64) -> f64 {
        let x = &mesh.nodes;
        let i = x.partition_point(|&v| v < r);
        if i == 0 {
            return self.phi[0];
        }
        if i >= x.len() {
            return self.phi[x.len() - 1];
        }
        if x[i] == r {
            return self.phi[i];
        }
        let t = (r - x[i - 1]) / (x[i] - x[i - 1]);
        self.phi[i - 1] * (1.0 - t) + self.phi[i] * t
    }

    pub fn max_phi(&self) -> f64 {
        self.phi.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Assemble and solve in one step.
///
/// The reported eigenvalue is the Rayleigh quotient of the computed vector,
/// accumulated element by element from nonnegative terms.
pub fn solve(spec: &ProblemSpec, mesh: &Mesh, tol: f64) -> Result<EigenResult> {
    let p = assemble(spec, mesh)?;
    let (lambda, x, iterations, bisections) = inverse_power(&p, spec.c.c_min(), spec.c.c_max(), tol)?;
    let q = scaled_quotient(spec, mesh, &p, &x);
    let lambda = if q.is_finite() { q } else { lambda };
    Ok(finish(&p, lambda, x, iterations, bisections))
}

/// Shifted Rayleigh quotient with per-element rescaling `exp(s (m_i + m_j) / 2)`.
fn scaled_quotient(spec: &ProblemSpec, mesh: &Mesh, p: &Pencil, x: &[f64]) -> f64 {
    let n = mesh.nodes.len();
    let mut psi = vec![0.0; n];
    let mut ls = vec![0.0; n];
    for (j, &node) in p.free.iter().enumerate() {
        psi[node] = x[j];
        ls[node] = p.log_scale[j];
    }
    for (i, &r) in mesh.nodes.iter().enumerate() {
        if !p.free.contains(&i) {
            ls[i] = spec.s * spec.m.value(r);
        }
    }
    let rule = GaussLegendre::new(mesh.quadrature_order);
    let mut energy = 0.0;
    let mut mass = 0.0;
    for e in 0..n - 1 {
        let (a, b) = (mesh.nodes[e], mesh.nodes[e + 1]);
        let h = b - a;
        let l = 0.5 * (ls[e] + ls[e + 1]);
        let ua = psi[e] * (l - ls[e]).exp();
        let ub = psi[e + 1] * (l - ls[e + 1]).exp();
        let g = (ub - ua) / h;
        for (xq, wq) in rule.mapped(a, b) {
            let t = (xq - a) / h;
            let v = ua * (1.0 - t) + ub * t;
            let w = wq * spec.radial_weight(xq) * (2.0 * spec.s * spec.m.value(xq) - 2.0 * l).exp();
            energy += w * (g * g + (spec.c.value(xq) + p.shift) * v * v);
            mass += w * v * v;
        }
    }
    energy / mass - p.shift
}

/// Smallest generalized eigenvalue by Sturm bisection to relative width `tol`,
/// polished by inverse iteration and the Rayleigh quotient.
///
/// `c_min` and `c_max` are the unshifted reaction bounds; they seed the bracket.
pub fn principal_eigenpair(p: &Pencil, c_min: f64, c_max: f64, tol: f64) -> Result<EigenResult> {
    let (lambda, x, iterations, bisections) = inverse_power(p, c_min, c_max, tol)?;
    Ok(finish(p, lambda - p.shift, x, iterations, bisections))
}

/// Shifted eigenvalue, M-normalized vector, inverse iterations and bisections.
fn inverse_power(p: &Pencil, c_min: f64, c_max: f64, tol: f64) -> Result<(f64, Vec<f64>, usize, usize)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} must be positive")));
    }
    let count = |sigma: f64| sturm_count(&p.k_diag, &p.k_off, &p.m_diag, &p.m_off, sigma);
    let mut lo = c_min + p.shift - 1.0;
    let mut step = 1.0;
    while count(lo) > 0 {
        step *= 2.0;
        lo = c_min + p.shift - step;
    }
    let mut hi = c_max + p.shift + 1.0;
    while count(hi) == 0 {
        hi = lo + 2.0 * (hi - lo);
        if !hi.is_finite() {
            return Err(Error::NoBracket { lo, hi });
        }
    }
    let mut bisections = 0;
    // a tight bracket lets the shift sit close enough to separate near-degenerate pairs
    while hi - lo > tol.min(1e-13) * hi.abs().max(1.0) && bisections < 200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count(mid) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
        bisections += 1;
    }
    // back off from lo so rounding cannot make the shifted matrix indefinite
    let mut backoff = 1e-12 * lo.abs().max(1.0);
    loop {
        let sigma = lo - backoff;
        if count(sigma) == 0 {
            match iterate(p, sigma, lo) {
                Err(Error::InverseIteration(k)) if k == 1 && backoff < 1e-6 * lo.abs().max(1.0) => {}
                other => return other.map(|(lambda, x, iterations)| (lambda, x, iterations, bisections)),
            }
        }
        backoff *= 10.0;
    }
}

/// Inverse iteration at the fixed shift `sigma`; `lo` is a certified lower bound.
fn iterate(p: &Pencil, sigma: f64, lo: f64) -> Result<(f64, Vec<f64>, usize)> {
    let n = p.size();
    let td: Vec<f64> = (0..n).map(|i| p.k_diag[i] - sigma * p.m_diag[i]).collect();
    let to: Vec<f64> = (0..n.saturating_sub(1)).map(|i| p.k_off[i] - sigma * p.m_off[i]).collect();
    let f = Ldl::new(&td, &to);
    let mut x = vec![1.0; n];
    let mut mx = vec![0.0; n];
    let mut kx = vec![0.0; n];
    let mut iterations = 0;
    while iterations < MAX_INVERSE_ITERATIONS {
        iterations += 1;
        matvec(&p.m_diag, &p.m_off, &x, &mut mx);
        let mut y = mx.clone();
        f.solve_in_place(&mut y);
        matvec(&p.m_diag, &p.m_off, &y, &mut mx);
        let norm = dot(&y, &mx).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InverseIteration(iterations));
        }
        y.iter_mut().for_each(|v| *v /= norm);
        matvec(&p.k_diag, &p.k_off, &y, &mut kx);
        matvec(&p.m_diag, &p.m_off, &y, &mut mx);
        let rq = dot(&y, &kx) / dot(&y, &mx);
        let flip = if dot(&x, &mx) < 0.0 { -1.0 } else { 1.0 };
        let top = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let change: f64 = x.iter().zip(&y).map(|(a, b)| (flip * a - b).abs()).fold(0.0, f64::max);
        x = y;
        // mirror-image wells can leave a pair closer than rounding resolves; the
        // quotient never drops below the bracketed eigenvalue, so it is certified once close
        let certified = iterations >= DEGENERATE_AFTER && rq - lo <= (DEGENERATE_TOL * lo.abs().max(1.0)).max(rounding(p, &x, &mx));
        if iterations > 1 && (change <= 1e-9 * top || certified) {
            return Ok((rq, x, iterations));
        }
    }
    Err(Error::InverseIteration(iterations))
}

/// Rounding level of the Rayleigh quotient at `y`: `8 eps |y|^T |K| |y| / y^T M y`.
fn rounding(p: &Pencil, y: &[f64], my: &[f64]) -> f64 {
    let n = p.size();
    let ay: Vec<f64> = y.iter().map(|v| v.abs()).collect();
    let kd: Vec<f64> = p.k_diag.iter().map(|v| v.abs()).collect();
    let ko: Vec<f64> = p.k_off.iter().map(|v| v.abs()).collect();
    let mut ky = vec![0.0; n];
    matvec(&kd, &ko, &ay, &mut ky);
    8.0 * f64::EPSILON * dot(&ay, &ky) / dot(y, my)
}

/// `lambda` is unshifted.
fn finish(p: &Pencil, lambda: f64, mut x: Vec<f64>, iterations: usize, bisections: usize) -> EigenResult {
    let n = p.size();
    let mut mx = vec![0.0; n];
    let mut kx = vec![0.0; n];
    if x.iter().sum::<f64>() < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    matvec(&p.k_diag, &p.k_off, &x, &mut kx);
    matvec(&p.m_diag, &p.m_off, &x, &mut mx);
    let normalization = dot(&x, &mx);
    let shifted = dot(&x, &kx) / dot(&x, &mx);
    let r: f64 = kx.iter().zip(&mx).map(|(k, m)| (k - shifted * m).powi(2)).sum::<f64>().sqrt();
    let ax: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let abs = |d: &[f64], o: &[f64]| {
        let da: Vec<f64> = d.iter().map(|v| v.abs()).collect();
        let oa: Vec<f64> = o.iter().map(|v| v.abs()).collect();
        let mut y = vec![0.0; n];
        matvec(&da, &oa, &ax, &mut y);
        dot(&y, &y).sqrt()
    };
    let scale = abs(&p.k_diag, &p.k_off) + shifted.abs() * abs(&p.m_diag, &p.m_off);
    let residual = r / scale;
    let mut phi = vec![0.0; p.n_nodes];
    for (j, &node) in p.free.iter().enumerate() {
        phi[node] = (-p.log_scale[j]).exp() * x[j];
    }
    let min_interior_phi = phi
        .iter()
        .enumerate()
        .filter(|(i, _)| *i > 0 && *i + 1 < p.n_nodes)
        .map(|(_, &v)| v)
        .fold(f64::INFINITY, f64::min);
    EigenResult {
        lambda,
        phi,
        residual,
        normalization,
        iterations,
        bisections,
        min_interior_phi,
    }
}

/// Numerator and denominator of the weighted Rayleigh quotient, held as
/// `mantissa * exp(log_scale)` so neither overflows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedForms {
    pub energy: f64,
    pub mass: f64,
    pub log_scale: f64,
}

impl WeightedForms {
    pub fn zero() -> Self {
        Self { energy: 0.0, mass: 0.0, log_scale: f64::NEG_INFINITY }
    }

    pub fn add(self, other: Self) -> Self {
        if other.log_scale == f64::NEG_INFINITY {
            return self;
        }
        if self.log_scale == f64::NEG_INFINITY {
            return other;
        }
        let l = self.log_scale.max(other.log_scale);
        let (a, b) = ((self.log_scale - l).exp(), (other.log_scale - l).exp());
        Self { energy: a * self.energy + b * other.energy, mass: a * self.mass + b * other.mass, log_scale: l }
    }

    pub fn quotient(&self) -> Result<f64> {
        if !(self.mass > 0.0) {
            return Err(Error::ZeroDenominator);
        }
        Ok(self.energy / self.mass)
    }

    /// Energy relative to the mass of `other`, i.e. `energy(self) / mass(other)`.
    pub fn energy_over(&self, other: &Self) -> Result<f64> {
        if !(other.mass > 0.0) {
            return Err(Error::ZeroDenominator);
        }
        Ok(self.energy / other.mass * (self.log_scale - other.log_scale).exp())
    }
}

/// Quadratic forms `∫ w (phi'^2 + c phi^2)` and `∫ w phi^2` of the nodal
/// interpolant over the elements inside `[a, b]`, using the assembly quadrature.
/// The reaction enters unshifted.
pub fn weighted_forms(phi: &[f64], spec: &ProblemSpec, mesh: &Mesh, range: (f64, f64)) -> WeightedForms {
    let rule = GaussLegendre::new(mesh.quadrature_order);
    let mut total = WeightedForms::zero();
    for (e, w) in mesh.nodes.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        if a < range.0 - 1e-15 || b > range.1 + 1e-15 {
            continue;
        }
        let (pa, pb) = (phi[e], phi[e + 1]);
        if pa == 0.0 && pb == 0.0 {
            continue;
        }
        let h = b - a;
        let slope = (pb - pa) / h;
        let pts: Vec<(f64, f64, f64)> = rule
            .mapped(a, b)
            .map(|(x, wq)| (x, wq, 2.0 * spec.s * spec.m.value(x)))
            .collect();
        let l = pts.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max);
        let mut en = 0.0;
        let mut ma = 0.0;
        for (x, wq, ex) in pts {
            let v = pa + slope * (x - a);
            let wt = wq * spec.radial_weight(x) * (ex - l).exp();
            en += wt * (slope * slope + spec.c.value(x) * v * v);
            ma += wt * v * v;
        }
        total = total.add(WeightedForms { energy: en, mass: ma, log_scale: l });
    }
    total
}

/// Weighted Rayleigh quotient of nodal samples over the whole problem domain.
pub fn rayleigh_quotient(phi: &[f64], spec: &ProblemSpec, mesh: &Mesh) -> Result<f64> {
    if phi.len() != mesh.nodes.len() {
        return Err(Error::InvalidParameter("phi must have one sample per mesh node".into()));
    }
    weighted_forms(phi, spec, mesh, spec.domain).quotient()
}

#[cfg(test)]
mod tests {
    use super::super::Bc;
    use super::*;
    use crate::coefficients::{Potential, Reaction};
    use std::f64::consts::PI;

    #[test]
    fn neumann_constant_reaction() {
        let spec = ProblemSpec::full(1, 0.0, Potential::zero(), Reaction::constant(7.0).unwrap()).unwrap();
        let mesh = Mesh::uniform((0.0, 1.0), 50).unwrap();
        let r = solve(&spec, &mesh, 1e-13).unwrap();
        assert!((r.lambda - 7.0).abs() < 1e-10);
        assert!(r.phi.iter().all(|&v| (v - 1.0).abs() < 1e-8));
        assert!((r.normalization - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_and_quarter_wave() {
        let c = Reaction::constant(1.0).unwrap();
        let mesh = Mesh::uniform((1.0 / 3.0, 2.0 / 3.0), 2000).unwrap();
        let dd = solve(&ProblemSpec::middle(1, c.clone(), (Bc::Dirichlet, Bc::Dirichlet)).unwrap(), &mesh, 1e-14).unwrap();
        let want = 1.0 + 9.0 * PI * PI;
        assert!((dd.lambda - want).abs() / want < 1e-6);
        let nd = solve(&ProblemSpec::middle(1, c, (Bc::Neumann, Bc::Dirichlet)).unwrap(), &mesh, 1e-14).unwrap();
        let want = 1.0 + 9.0 * PI * PI / 4.0;
        assert!((nd.lambda - want).abs() / want < 1e-6);
        assert!(nd.min_interior_phi > 0.0);
        assert!(nd.residual < 1e-10, "{}", nd.residual);
    }

    #[test]
    fn quotient_of_eigenfunction() {
        let c = Reaction::plateau(1.0, 10.0, 0.05).unwrap();
        let spec = ProblemSpec::full(2, 3.0, Potential::bump(0.2).unwrap(), c).unwrap();
        let mesh = Mesh::uniform((0.0, 1.0), 400).unwrap();
        let r = solve(&spec, &mesh, 1e-13).unwrap();
        let q = rayleigh_quotient(&r.phi, &spec, &mesh).unwrap();
        assert!((q - r.lambda).abs() < 1e-9 * r.lambda.abs());
    }
}
