use serde::Serialize;

use super::solve::solve;
use super::{Bc, ProblemSpec};
use crate::coefficients::{Reaction, ONE_THIRD, TWO_THIRDS};
use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Principal eigenvalues on `[1/3, 2/3]` under the four boundary-condition pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceEigenvalues {
    pub lambda_nn: f64,
    pub lambda_nd: f64,
    pub lambda_dn: f64,
    pub lambda_dd: f64,
    pub nodes: Vec<f64>,
    pub phi_nn: Vec<f64>,
    pub phi_dd: Vec<f64>,
}

impl ReferenceEigenvalues {
    pub fn rho(&self) -> f64 {
        self.lambda_dd - self.lambda_nn
    }
}

pub fn reference_eigenvalues(c: &Reaction, d: u32, mesh: &Mesh, tol: f64) -> Result<ReferenceEigenvalues> {
    if (mesh.domain.0 - ONE_THIRD).abs() > 1e-15 || (mesh.domain.1 - TWO_THIRDS).abs() > 1e-15 {
        return Err(Error::InvalidParameter("reference mesh must cover [1/3, 2/3]".into()));
    }
    let run = |bc| solve(&ProblemSpec::middle(d, c.clone(), bc)?, mesh, tol);
    let nn = run((Bc::Neumann, Bc::Neumann))?;
    let nd = run((Bc::Neumann, Bc::Dirichlet))?;
    let dn = run((Bc::Dirichlet, Bc::Neumann))?;
    let dd = run((Bc::Dirichlet, Bc::Dirichlet))?;
    let slack = 1e-9 * dd.lambda.abs().max(1.0);
    let checks = [
        (nn.lambda < nd.lambda, "lambda_nn < lambda_nd"),
        (nn.lambda < dn.lambda, "lambda_nn < lambda_dn"),
        (nd.lambda <= dd.lambda + slack, "lambda_nd <= lambda_dd"),
        (dn.lambda <= dd.lambda + slack, "lambda_dn <= lambda_dd"),
    ];
    if let Some((_, what)) = checks.iter().find(|(ok, _)| !ok) {
        return Err(Error::Ordering((*what).to_string()));
    }
    Ok(ReferenceEigenvalues {
        lambda_nn: nn.lambda,
        lambda_nd: nd.lambda,
        lambda_dn: dn.lambda,
        lambda_dd: dd.lambda,
        nodes: mesh.nodes.clone(),
        phi_nn: nn.phi,
        phi_dd: dd.phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn analytic_quadruple() {
        let c = Reaction::constant(1.0).unwrap();
        let mesh = Mesh::uniform((ONE_THIRD, TWO_THIRDS), 2000).unwrap();
        let r = reference_eigenvalues(&c, 1, &mesh, 1e-14).unwrap();
        let want = [1.0, 1.0 + 2.25 * PI * PI, 1.0 + 2.25 * PI * PI, 1.0 + 9.0 * PI * PI];
        let got = [r.lambda_nn, r.lambda_nd, r.lambda_dn, r.lambda_dd];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() / w < 1e-6, "{g} vs {w}");
        }
    }

    #[test]
    fn constant_survives_in_three_dimensions() {
        let c = Reaction::constant(1.0).unwrap();
        let mesh = Mesh::uniform((ONE_THIRD, TWO_THIRDS), 200).unwrap();
        let r = reference_eigenvalues(&c, 3, &mesh, 1e-14).unwrap();
        assert!((r.lambda_nn - 1.0).abs() < 1e-10);
        assert!(r.lambda_nd != r.lambda_dn);
    }
}
