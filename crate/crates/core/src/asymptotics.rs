//! Ladder coefficients, explicit test-function bounds and trend analysis for
//! eigenvalue sweeps at large advection.

use serde::Serialize;

use crate::coefficients::{Family, Potential, H, ONE_THIRD, TWO_THIRDS};
use crate::eigensolver::{weighted_forms, ProblemSpec, ReferenceEigenvalues, WeightedForms};
use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Levels past the retained ladder whose `sigma` is still tabulated.
const MIN_LEVELS: usize = 24;

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln(e^a + e^b)`.
fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `sigma_n(s) = scale * alpha^n exp(3 (1/6)^n s)` and `l_n(s) = 1 / prod_{k >= n} (1 + sigma_k)`,
/// both held in log space. Index 0 of each vector is unused.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderCoefficients {
    pub alpha: f64,
    pub s: f64,
    pub scale: f64,
    pub tail_tol: f64,
    pub ln_sigma: Vec<f64>,
    pub ln_ell: Vec<f64>,
}

impl LadderCoefficients {
    /// Largest tabulated index.
    pub fn n_max(&self) -> usize {
        self.ln_sigma.len() - 1
    }

    pub fn sigma(&self, n: usize) -> f64 {
        self.ln_sigma[n].exp()
    }

    pub fn ell(&self, n: usize) -> f64 {
        self.ln_ell[n].exp()
    }

    /// `l_n` with the product cut after index `depth`, so that `l_{depth+1} = 1`.
    pub fn finite_ell(&self, depth: usize) -> Result<Vec<f64>> {
        if depth + 1 > self.n_max() {
            return Err(Error::InvalidParameter(format!("ladder tabulated only to n = {}", self.n_max())));
        }
        let mut ln = vec![0.0; depth + 2];
        for n in (1..=depth).rev() {
            ln[n] = ln[n + 1] - softplus(self.ln_sigma[n]);
        }
        Ok(ln.into_iter().map(f64::exp).collect())
    }
}

pub fn ladder(alpha: f64, s: f64, tail_tol: f64) -> Result<LadderCoefficients> {
    ladder_with(alpha, s, tail_tol, 1.0, MIN_LEVELS)
}

/// Ladder for a schedule whose interval lengths are `scale * alpha^n`, tabulated at least up to `n_min`.
pub fn ladder_with(alpha: f64, s: f64, tail_tol: f64, scale: f64, n_min: usize) -> Result<LadderCoefficients> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter(format!("s = {s} must be finite and non-negative")));
    }
    if !(tail_tol > 0.0) || !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::InvalidParameter("tail_tol must be positive and scale must lie in (0, 1]".into()));
    }
    let ln_a = alpha.ln();
    let ln_sigma_at = |n: usize| scale.ln() + n as f64 * ln_a + 3.0 * H.powi(n as i32) * s;
    let mut ln_sigma = vec![f64::NAN];
    let mut n = 1;
    loop {
        let v = ln_sigma_at(n);
        ln_sigma.push(v);
        // sigma_{k+1} / sigma_k <= alpha, so the remaining log-tail is below sigma_{n+1} / (1 - alpha)
        let tail = (ln_sigma_at(n + 1) - (1.0 - alpha).ln()).exp();
        if n >= n_min && tail < 0.5 * tail_tol {
            break;
        }
        n += 1;
    }
    let top = ln_sigma.len();
    let mut ln_ell = vec![0.0; top + 1];
    ln_ell[top] = -(ln_sigma_at(top) - (1.0 - alpha).ln()).exp();
    for k in (1..top).rev() {
        ln_ell[k] = ln_ell[k + 1] - softplus(ln_sigma[k]);
    }
    ln_ell[0] = f64::NAN;
    ln_ell.pop();
    Ok(LadderCoefficients { alpha, s, scale, tail_tol, ln_sigma, ln_ell })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Window {
    pub k1: usize,
    pub k2: usize,
    /// False if `sigma_n` fails to decrease somewhere in the scanned range.
    pub monotone: bool,
}

/// `K1` = last `n` with `sigma_n > 1/eps`, `K2` = last `n` with `sigma_n > eps`.
pub fn window_indices(lad: &LadderCoefficients, eps: f64) -> Result<Window> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must lie in (0, 1)")));
    }
    let (hi, lo) = (-eps.ln(), eps.ln());
    let mut w = Window { k1: 0, k2: 0, monotone: true };
    for n in 1..=lad.n_max() {
        let v = lad.ln_sigma[n];
        if v > hi {
            w.k1 = n;
        }
        if v > lo {
            w.k2 = n;
        }
        if n > 1 && v >= lad.ln_sigma[n - 1] {
            w.monotone = false;
        }
    }
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Efg {
    pub e: f64,
    pub f: f64,
    pub g: f64,
}

impl Efg {
    pub fn total(&self) -> f64 {
        self.e + self.f + self.g
    }
}

/// `E = e^{s/2} l_1^2`, `F = sum alpha^n e^{2 (1/6)^n s} l_n^2`, `G = sum alpha^n e^{-4 (1/6)^n s} l_{n+1}^2`.
pub fn efg(lad: &LadderCoefficients) -> Efg {
    let (s, ln_a) = (lad.s, lad.alpha.ln());
    let ln_e = 0.5 * s + 2.0 * lad.ln_ell[1];
    let ln_l = |n: usize| if n <= lad.n_max() { lad.ln_ell[n] } else { 0.0 };
    let mut ln_f = f64::NEG_INFINITY;
    let mut ln_g = f64::NEG_INFINITY;
    let mut n = 1usize;
    loop {
        let hn = H.powi(n as i32) * s;
        ln_f = log_add(ln_f, n as f64 * ln_a + 2.0 * hn + 2.0 * ln_l(n));
        ln_g = log_add(ln_g, n as f64 * ln_a - 4.0 * hn + 2.0 * ln_l(n + 1));
        // remaining terms of both series are below alpha^{n+1} e^{2 (1/6)^{n+1} s} / (1 - alpha)
        let tail = (n + 1) as f64 * ln_a + 2.0 * H.powi(n as i32 + 1) * s - (1.0 - lad.alpha).ln();
        if n >= lad.n_max() && tail < ln_f.min(ln_g) - 40.0 {
            break;
        }
        n += 1;
    }
    Efg { e: ln_e.exp(), f: ln_f.exp(), g: ln_g.exp() }
}

/// Kinks of the Neumann test function: `delta - delta_1`, the hill/valley edges of
/// the retained ladder, and their mirror images.
pub fn neumann_test_nodes(m: &Potential, delta_1: f64) -> Result<Vec<f64>> {
    let sched = m
        .schedule()
        .filter(|s| s.family == Family::NN)
        .ok_or(Error::FamilyMismatch { expected: Family::NN })?;
    let mut pts = vec![sched.delta - delta_1, sched.delta];
    for l in sched.levels() {
        pts.extend([l.gate.1, l.hold.1]);
    }
    pts.push(ONE_THIRD);
    let mirrored: Vec<f64> = pts.iter().map(|p| 1.0 - p).collect();
    pts.extend(mirrored);
    Ok(pts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeumannBound {
    pub s: f64,
    /// Rayleigh quotient of the test function.
    pub bound: f64,
    /// Outer energy integral relative to the mass on `[1/3, 2/3]`.
    pub outer_ratio: f64,
    pub efg: Efg,
}

fn interp(xs: &[f64], ys: &[f64], r: f64) -> f64 {
    let i = xs.partition_point(|&x| x < r).clamp(1, xs.len() - 1);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let t = ((r - x0) / (x1 - x0)).clamp(0.0, 1.0);
    ys[i - 1] + t * (ys[i] - ys[i - 1])
}

/// Nodal values of the explicit Neumann test function on `mesh`.
pub fn neumann_test_function(
    spec: &ProblemSpec,
    mesh: &Mesh,
    refvals: &ReferenceEigenvalues,
    lad: &LadderCoefficients,
    delta_1: f64,
) -> Result<Vec<f64>> {
    let sched = spec
        .m
        .schedule()
        .filter(|s| s.family == Family::NN)
        .ok_or(Error::FamilyMismatch { expected: Family::NN })?;
    let delta = sched.delta;
    if !(delta_1 > 0.0 && delta_1 < delta) {
        return Err(Error::InvalidParameter(format!("delta_1 = {delta_1} must lie in (0, delta)")));
    }
    let (hi, _) = spec.m.range_on(delta - delta_1, delta);
    if hi > 0.25 {
        return Err(Error::InvalidParameter(format!(
            "m reaches {hi} > 1/4 on (delta - delta_1, delta]"
        )));
    }
    for p in neumann_test_nodes(&spec.m, delta_1)? {
        if !mesh.has_node(p, 1e-13) {
            return Err(Error::InvalidParameter(format!("mesh lacks the test-function node {p}")));
        }
    }
    let levels = sched.levels();
    let ell = lad.finite_ell(levels.len())?;
    let left_end = interp(&refvals.nodes, &refvals.phi_nn, ONE_THIRD);
    let right_end = interp(&refvals.nodes, &refvals.phi_nn, TWO_THIRDS);
    let left = |q: f64| -> f64 {
        if q < delta - delta_1 {
            return 0.0;
        }
        if q < delta {
            return ell[1] * (q - delta + delta_1) / delta_1;
        }
        let i = levels.partition_point(|l| l.hold.1 <= q);
        if i == levels.len() {
            return 1.0;
        }
        let l = &levels[i];
        let n = i + 1;
        if q < l.gate.1 {
            ell[n]
        } else {
            ell[n] + (ell[n + 1] - ell[n]) * (q - l.hold.0) / (l.hold.1 - l.hold.0)
        }
    };
    Ok(mesh
        .nodes
        .iter()
        .map(|&r| {
            if r < ONE_THIRD {
                left_end * left(r)
            } else if r > TWO_THIRDS {
                right_end * left(1.0 - r)
            } else {
                interp(&refvals.nodes, &refvals.phi_nn, r)
            }
        })
        .collect())
}

/// Rayleigh quotient of the explicit Neumann test function on `mesh`.
///
/// When `mesh` is the one used by the solver, the result dominates the discrete
/// principal eigenvalue exactly.
pub fn neumann_test_upper_bound(
    spec: &ProblemSpec,
    mesh: &Mesh,
    refvals: &ReferenceEigenvalues,
    lad: &LadderCoefficients,
    delta_1: f64,
) -> Result<NeumannBound> {
    let phi = neumann_test_function(spec, mesh, refvals, lad, delta_1)?;
    let mid = weighted_forms(&phi, spec, mesh, (ONE_THIRD, TWO_THIRDS));
    let outer = weighted_forms(&phi, spec, mesh, (spec.domain.0, ONE_THIRD))
        .add(weighted_forms(&phi, spec, mesh, (TWO_THIRDS, spec.domain.1)));
    let bound = mid.add(outer).quotient()?;
    Ok(NeumannBound { s: spec.s, bound, outer_ratio: outer.energy_over(&mid)?, efg: efg(lad) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirichletBound {
    pub lambda_dd: f64,
    /// Rayleigh quotient of the zero-extended `phi_DD` on the full mesh.
    pub quotient: f64,
}

/// `lambda^DD` together with the Rayleigh quotient of `phi_DD` extended by zero to `mesh`.
pub fn dirichlet_test_upper_bound(spec: &ProblemSpec, mesh: &Mesh, refvals: &ReferenceEigenvalues) -> Result<DirichletBound> {
    let phi: Vec<f64> = mesh
        .nodes
        .iter()
        .map(|&r| {
            if (ONE_THIRD..=TWO_THIRDS).contains(&r) {
                interp(&refvals.nodes, &refvals.phi_dd, r)
            } else {
                0.0
            }
        })
        .collect();
    let forms: WeightedForms = weighted_forms(&phi, spec, mesh, spec.domain);
    Ok(DirichletBound { lambda_dd: refvals.lambda_dd, quotient: forms.quotient()? })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendReport {
    pub s_grid: Vec<f64>,
    pub lambda_values: Vec<f64>,
    pub tail_start: usize,
    pub liminf_estimate: f64,
    pub limsup_estimate: f64,
    pub oscillation_amplitude: f64,
    pub converged: bool,
}

pub const MIN_TREND_SAMPLES: usize = 8;

/// Min and max of `lambda` over the trailing `tail_fraction` of the samples.
pub fn trend(s_grid: &[f64], lambda: &[f64], tail_fraction: f64, tol: f64) -> Result<TrendReport> {
    if s_grid.len() != lambda.len() {
        return Err(Error::InvalidParameter("s grid and eigenvalues differ in length".into()));
    }
    if s_grid.len() < MIN_TREND_SAMPLES {
        return Err(Error::TooFewSamples { need: MIN_TREND_SAMPLES, got: s_grid.len() });
    }
    if s_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("s grid must be strictly increasing".into()));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!("tail fraction {tail_fraction} must lie in (0, 1]")));
    }
    let n = s_grid.len();
    let take = ((n as f64 * tail_fraction).ceil() as usize).clamp(1, n);
    let tail = &lambda[n - take..];
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(TrendReport {
        s_grid: s_grid.to_vec(),
        lambda_values: lambda.to_vec(),
        tail_start: n - take,
        liminf_estimate: lo,
        limsup_estimate: hi,
        oscillation_amplitude: hi - lo,
        converged: hi - lo < tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_at_zero() {
        let l = ladder(0.25, 0.0, 1e-14).unwrap();
        assert!((l.sigma(1) - 0.25).abs() < 1e-15);
        assert!((l.sigma(3) - 0.25f64.powi(3)).abs() < 1e-17);
    }

    #[test]
    fn ell_increasing_to_one() {
        for s in [0.0, 10.0, 1000.0] {
            let l = ladder(0.25, s, 1e-14).unwrap();
            for n in 1..l.n_max() {
                assert!(l.ln_ell[n] < l.ln_ell[n + 1]);
            }
            assert!(l.ell(l.n_max()) > 1.0 - 1e-13);
        }
    }

    #[test]
    fn no_overflow_at_huge_s() {
        let l = ladder(0.25, 1e5, 1e-14).unwrap();
        assert!(l.ln_ell[1].is_finite());
        let v = efg(&l);
        assert!(v.e.is_finite() && v.f.is_finite() && v.g.is_finite());
    }

    #[test]
    fn finite_product_ends_at_one() {
        let l = ladder(0.5, 20.0, 1e-14).unwrap();
        let e = l.finite_ell(4).unwrap();
        assert_eq!(e[5], 1.0);
        assert!((e[5] - e[4] - l.sigma(4) * e[4]).abs() < 1e-15);
    }

    #[test]
    fn trend_constant() {
        let s: Vec<f64> = (1..=10).map(f64::from).collect();
        let r = trend(&s, &[3.0; 10], 0.25, 1e-9).unwrap();
        assert_eq!(r.oscillation_amplitude, 0.0);
        assert!(r.converged);
        assert!(matches!(trend(&s[..5], &[1.0; 5], 0.25, 1e-9), Err(Error::TooFewSamples { .. })));
    }
}
