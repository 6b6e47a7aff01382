//! Weighted Galerkin discretization and the principal eigenpair solver.

mod assemble;
mod reference;
mod solve;
mod sweep;
pub mod tridiag;

use serde::{Deserialize, Serialize};

pub use assemble::{assemble, Pencil};
pub use reference::{reference_eigenvalues, ReferenceEigenvalues};
pub use solve::{principal_eigenpair, rayleigh_quotient, solve, weighted_forms, EigenResult, WeightedForms};
pub use sweep::{eigenvalue_sweep, SweepOptions, SweepRow};

use crate::coefficients::{Potential, Reaction, ONE_THIRD, TWO_THIRDS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bc {
    Neumann,
    Dirichlet,
}

/// One radial eigenproblem: domain, boundary conditions, dimension and coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub domain: (f64, f64),
    pub bc_left: Bc,
    pub bc_right: Bc,
    pub d: u32,
    pub s: f64,
    pub m: Potential,
    pub c: Reaction,
}

impl ProblemSpec {
    pub fn new(domain: (f64, f64), bc: (Bc, Bc), d: u32, s: f64, m: Potential, c: Reaction) -> Result<Self> {
        let spec = Self { domain, bc_left: bc.0, bc_right: bc.1, d, s, m, c };
        spec.validate()?;
        Ok(spec)
    }

    /// Neumann problem on `[0, 1]`.
    pub fn full(d: u32, s: f64, m: Potential, c: Reaction) -> Result<Self> {
        Self::new((0.0, 1.0), (Bc::Neumann, Bc::Neumann), d, s, m, c)
    }

    /// Problem on `[1/3, 2/3]` where the potential vanishes.
    pub fn middle(d: u32, c: Reaction, bc: (Bc, Bc)) -> Result<Self> {
        Self::new((ONE_THIRD, TWO_THIRDS), bc, d, 0.0, Potential::zero(), c)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.domain;
        if !(a < b) {
            return Err(Error::EmptyDomain(a, b));
        }
        if a < 0.0 || b > 1.0 {
            return Err(Error::InvalidParameter(format!("domain [{a}, {b}] is not inside [0, 1]")));
        }
        if a == 0.0 && self.bc_left != Bc::Neumann {
            return Err(Error::InvalidParameter("the left end r = 0 carries the natural (Neumann) condition".into()));
        }
        if self.d < 1 {
            return Err(Error::InvalidParameter("dimension d must be at least 1".into()));
        }
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(Error::InvalidParameter(format!("s = {} must be finite and non-negative", self.s)));
        }
        Ok(())
    }

    pub fn with_s(&self, s: f64) -> Self {
        Self { s, ..self.clone() }
    }

    pub fn with_potential(&self, m: Potential) -> Self {
        Self { m, ..self.clone() }
    }

    /// `r^{d-1}`.
    pub fn radial_weight(&self, r: f64) -> f64 {
        match self.d {
            1 => 1.0,
            2 => r,
            3 => r * r,
            d => r.powi(d as i32 - 1),
        }
    }
}
