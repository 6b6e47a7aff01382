use rayon::prelude::*;
use serde::Serialize;

use super::solve::solve;
use super::ProblemSpec;
use crate::coefficients::ONE_THIRD;
use crate::error::Error;
use crate::mesh::Mesh;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOptions {
    pub tol: f64,
    /// Split elements so `2 s |Δm|` stays below this; `None` keeps the base mesh.
    pub max_exponent_step: Option<f64>,
    pub workers: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_exponent_step: Some(0.5), workers: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub s: f64,
    pub lambda: f64,
    pub residual: f64,
    pub phi_at_one_third: f64,
    pub phi_max: f64,
    pub overflow: bool,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }

    /// `phi(1/3) / max phi`.
    pub fn trace_ratio(&self) -> f64 {
        self.phi_at_one_third / self.phi_max
    }
}

fn one(template: &ProblemSpec, s: f64, base: &Mesh, opts: &SweepOptions) -> SweepRow {
    let spec = template.with_s(s);
    let mesh = match opts.max_exponent_step {
        Some(step) => base.resolve_weight(&spec.m, s, step),
        None => base.clone(),
    };
    match solve(&spec, &mesh, opts.tol) {
        Ok(r) => {
            let probe = ONE_THIRD.clamp(mesh.domain.0, mesh.domain.1);
            SweepRow {
                s,
                lambda: r.lambda,
                residual: r.residual,
                phi_at_one_third: r.value_at(&mesh, probe),
                phi_max: r.max_phi(),
                overflow: false,
                error: None,
            }
        }
        Err(e) => SweepRow {
            s,
            lambda: f64::NAN,
            residual: f64::NAN,
            phi_at_one_third: f64::NAN,
            phi_max: f64::NAN,
            overflow: matches!(e, Error::WeightOverflow { .. }),
            error: Some(e.to_string()),
        },
    }
}

/// One solve per `s`, rows in input order; failures are recorded per row.
pub fn eigenvalue_sweep(template: &ProblemSpec, s_values: &[f64], base: &Mesh, opts: &SweepOptions) -> Vec<SweepRow> {
    if opts.workers <= 1 {
        return s_values.iter().map(|&s| one(template, s, base, opts)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.workers).build();
    match pool {
        Ok(pool) => pool.install(|| s_values.par_iter().map(|&s| one(template, s, base, opts)).collect()),
        Err(_) => s_values.iter().map(|&s| one(template, s, base, opts)).collect(),
    }
}
