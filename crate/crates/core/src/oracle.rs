//! Independent eigenvalue oracle: Prüfer-angle shooting on the radial ODE.
//!
//! With `phi = rho sin(theta)`, `phi' = rho cos(theta)` the equation becomes
//! `theta' = cos² + b sin cos + (lambda - c) sin²`, `b = (d-1)/r + 2 s m'(r)`,
//! and the principal eigenvalue is the unique root of the endpoint angle miss.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::coefficients::{PotentialKind, Profile};
use crate::eigensolver::{solve, Bc, ProblemSpec};
use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Starting radius off the coordinate singularity at `r = 0`.
pub const R0: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Relative width at which bisection on `lambda` stops.
    pub lambda_tol: f64,
    pub max_bisections: usize,
    pub max_steps: usize,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-13, lambda_tol: 1e-13, max_bisections: 200, max_steps: 2_000_000 }
    }
}

struct Rhs<'a> {
    spec: &'a ProblemSpec,
    lambda: f64,
}

impl Rhs<'_> {
    fn eval(&self, r: f64, th: f64) -> f64 {
        let sp = self.spec;
        let geo = if sp.d == 1 { 0.0 } else { (sp.d as f64 - 1.0) / r };
        let b = geo + 2.0 * sp.s * sp.m.deriv(r);
        let (sn, cs) = th.sin_cos();
        cs * cs + b * sn * cs + (self.lambda - sp.c.value(r)) * sn * sn
    }
}

// Dormand–Prince 5(4) tableau
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive integration over `[t0, t1]`, one segment without interior breakpoints.
fn integrate(f: &Rhs, t0: f64, t1: f64, y0: f64, h0: f64, cfg: &ShootingConfig, steps: &mut usize) -> Result<(f64, f64)> {
    let mut t = t0;
    let mut y = y0;
    let span = t1 - t0;
    let mut h = h0.min(span);
    let mut k = [0.0; 7];
    k[0] = f.eval(t, y);
    while t < t1 {
        if *steps >= cfg.max_steps {
            return Err(Error::Integration { r: t, reason: "step budget exhausted".into() });
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        for i in 1..7 {
            let mut acc = y;
            for j in 0..i {
                acc += h * A[i][j] * k[j];
            }
            k[i] = f.eval(t + C[i] * h, acc);
        }
        let y5 = y + h * (0..7).map(|i| B5[i] * k[i]).sum::<f64>();
        let y4 = y + h * (0..7).map(|i| B4[i] * k[i]).sum::<f64>();
        let err = (y5 - y4).abs() / (cfg.atol + cfg.rtol * y.abs().max(y5.abs()));
        *steps += 1;
        if !y5.is_finite() {
            return Err(Error::Integration { r: t, reason: "non-finite angle".into() });
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            y = y5;
            k[0] = k[6];
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).min(5.0) };
            h *= grow;
        } else {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            if h < 1e-15 * span.abs().max(t.abs()) {
                return Err(Error::Integration { r: t, reason: "step size underflow".into() });
            }
        }
    }
    Ok((y, h))
}

fn knots(spec: &ProblemSpec) -> Vec<f64> {
    let (a, b) = spec.domain;
    let start = if a == 0.0 && spec.d > 1 { R0 } else { a };
    let mut pts: Vec<f64> = spec.m.breakpoints();
    pts.extend(spec.c.breakpoints());
    let mut pts: Vec<f64> = pts.into_iter().filter(|&p| p > start && p < b).collect();
    pts.push(start);
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Endpoint angle minus its principal target; increasing in `lambda`.
pub fn miss(spec: &ProblemSpec, lambda: f64, cfg: &ShootingConfig) -> Result<f64> {
    let f = Rhs { spec, lambda };
    let pts = knots(spec);
    let mut th = match (spec.bc_left, spec.domain.0 == 0.0 && spec.d > 1) {
        (_, true) => {
            let c0 = spec.c.value(R0);
            1f64.atan2((c0 - lambda) * R0 / spec.d as f64)
        }
        (Bc::Neumann, false) => FRAC_PI_2,
        (Bc::Dirichlet, false) => 0.0,
    };
    let target = match spec.bc_right {
        Bc::Neumann => FRAC_PI_2,
        Bc::Dirichlet => PI,
    };
    let mut steps = 0;
    let mut h: f64 = 1e-4;
    for w in pts.windows(2) {
        let (y, hn) = integrate(&f, w[0], w[1], th, h.min(w[1] - w[0]), cfg, &mut steps)?;
        th = y;
        h = hn.max(1e-12);
    }
    Ok(th - target)
}

/// Principal eigenvalue by bisection on the miss function.
pub fn shoot_principal(spec: &ProblemSpec, cfg: &ShootingConfig) -> Result<f64> {
    spec.validate()?;
    if let PotentialKind::Ladder { profile: Profile::EnvelopeStep, .. } = spec.m.kind() {
        return Err(Error::InvalidParameter("shooting needs a differentiable potential".into()));
    }
    let mut lo = spec.c.c_min() - 1.0;
    let mut hi = spec.c.c_max() + 1.0;
    let mut flo = miss(spec, lo, cfg)?;
    let mut expand = 0;
    while flo >= 0.0 {
        let w = hi - lo;
        lo -= w;
        flo = miss(spec, lo, cfg)?;
        expand += 1;
        if expand > 60 {
            return Err(Error::NoBracket { lo, hi });
        }
    }
    let mut fhi = miss(spec, hi, cfg)?;
    expand = 0;
    while fhi <= 0.0 {
        let w = hi - lo;
        hi += w;
        fhi = miss(spec, hi, cfg)?;
        expand += 1;
        if expand > 60 {
            return Err(Error::NoBracket { lo, hi });
        }
    }
    for _ in 0..cfg.max_bisections {
        if hi - lo <= cfg.lambda_tol * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if miss(spec, mid, cfg)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let _ = (flo, fhi);
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckRecord {
    pub case_id: String,
    pub lambda_fem: f64,
    pub lambda_shoot: f64,
    pub rel_err: f64,
    pub pass: bool,
}

/// Galerkin value on `mesh` and `mesh` refined twice, Richardson-extrapolated,
/// compared with the shooting value.
pub fn crosscheck(case_id: &str, spec: &ProblemSpec, mesh: &Mesh, tol: f64) -> Result<CrosscheckRecord> {
    let coarse = solve(spec, mesh, 1e-14)?.lambda;
    let fine = solve(spec, &mesh.refine(2)?, 1e-14)?.lambda;
    let lambda_fem = (4.0 * fine - coarse) / 3.0;
    let lambda_shoot = shoot_principal(spec, &ShootingConfig::default())?;
    let rel_err = (lambda_fem - lambda_shoot).abs() / lambda_shoot.abs().max(f64::MIN_POSITIVE);
    Ok(CrosscheckRecord { case_id: case_id.to_string(), lambda_fem, lambda_shoot, rel_err, pass: rel_err <= tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{Potential, Reaction};

    #[test]
    fn analytic_dirichlet() {
        let spec = ProblemSpec::middle(1, Reaction::constant(1.0).unwrap(), (Bc::Dirichlet, Bc::Dirichlet)).unwrap();
        let l = shoot_principal(&spec, &ShootingConfig::default()).unwrap();
        let want = 1.0 + 9.0 * PI * PI;
        assert!((l - want).abs() / want < 1e-10, "{l}");
    }

    #[test]
    fn neumann_constant_any_dimension() {
        for d in 1..=3 {
            let spec = ProblemSpec::full(d, 0.0, Potential::zero(), Reaction::constant(4.0).unwrap()).unwrap();
            let l = shoot_principal(&spec, &ShootingConfig::default()).unwrap();
            assert!((l - 4.0).abs() < 1e-9, "d = {d}: {l}");
        }
    }

    #[test]
    fn miss_is_monotone() {
        let c = Reaction::plateau(1.0, 30.0, 0.05).unwrap();
        let spec = ProblemSpec::full(2, 5.0, Potential::bump(0.2).unwrap(), c).unwrap();
        let cfg = ShootingConfig::default();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..30 {
            let v = miss(&spec, k as f64 * 2.0, &cfg).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }
}
