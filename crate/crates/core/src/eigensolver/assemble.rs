use super::tridiag::Ldl;
use super::{Bc, ProblemSpec};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::quadrature::GaussLegendre;

/// Largest exponent accepted in a weight factor before reporting overflow.
pub const MAX_EXPONENT: f64 = 700.0;

/// Tridiagonal stiffness/mass pair over the free nodes.
///
/// Row `i` is scaled by `exp(-log_scale[i])` from both sides, with
/// `log_scale[i] = s m(r_i)`, so entries stay of moderate size for any `s`.
/// The unknowns are `psi_i = exp(log_scale[i]) phi_i`.
#[derive(Debug, Clone)]
pub struct Pencil {
    pub k_diag: Vec<f64>,
    pub k_off: Vec<f64>,
    pub m_diag: Vec<f64>,
    pub m_off: Vec<f64>,
    pub log_scale: Vec<f64>,
    /// Mesh node index of each unknown.
    pub free: Vec<usize>,
    pub n_nodes: usize,
    /// Constant added to `c` so the shifted reaction is positive.
    pub shift: f64,
}

impl Pencil {
    pub fn size(&self) -> usize {
        self.k_diag.len()
    }
}

pub fn assemble(spec: &ProblemSpec, mesh: &Mesh) -> Result<Pencil> {
    spec.validate()?;
    if (mesh.domain.0 - spec.domain.0).abs() > 1e-15 || (mesh.domain.1 - spec.domain.1).abs() > 1e-15 {
        return Err(Error::InvalidParameter(format!(
            "mesh domain {:?} differs from problem domain {:?}",
            mesh.domain, spec.domain
        )));
    }
    let nodes = &mesh.nodes;
    let n = nodes.len();
    let s = spec.s;
    let shift = spec.c.positivity_shift();
    let scale: Vec<f64> = nodes.iter().map(|&r| s * spec.m.value(r)).collect();
    if let Some(i) = scale.iter().position(|e| e.abs() > MAX_EXPONENT) {
        return Err(Error::WeightOverflow { element: i.min(n - 2), s, exponent: scale[i].abs() });
    }
    let rule = GaussLegendre::new(mesh.quadrature_order);
    let mut kd = vec![0.0; n];
    let mut ko = vec![0.0; n - 1];
    let mut md = vec![0.0; n];
    let mut mo = vec![0.0; n - 1];
    for e in 0..n - 1 {
        let (a, b) = (nodes[e], nodes[e + 1]);
        let h = b - a;
        let (la, lb) = (scale[e], scale[e + 1]);
        let mut k = [0.0; 3];
        let mut m = [0.0; 3];
        for (x, w) in rule.mapped(a, b) {
            let two_sm = 2.0 * s * spec.m.value(x);
            let exps = [two_sm - 2.0 * la, two_sm - la - lb, two_sm - 2.0 * lb];
            if let Some(&big) = exps.iter().find(|&&v| v > MAX_EXPONENT) {
                return Err(Error::WeightOverflow { element: e, s, exponent: big });
            }
            let rw = w * spec.radial_weight(x);
            let c = spec.c.value(x) + shift;
            let n0 = (b - x) / h;
            let n1 = (x - a) / h;
            let g = 1.0 / (h * h);
            let prods = [(n0 * n0, g), (n0 * n1, -g), (n1 * n1, g)];
            for j in 0..3 {
                let wt = rw * exps[j].exp();
                m[j] += wt * prods[j].0;
                k[j] += wt * (prods[j].1 + c * prods[j].0);
            }
        }
        kd[e] += k[0];
        ko[e] += k[1];
        kd[e + 1] += k[2];
        md[e] += m[0];
        mo[e] += m[1];
        md[e + 1] += m[2];
    }
    let lo = usize::from(spec.bc_left == Bc::Dirichlet);
    let hi = n - usize::from(spec.bc_right == Bc::Dirichlet);
    if hi <= lo {
        return Err(Error::InvalidParameter("mesh has no free nodes".into()));
    }
    let free: Vec<usize> = (lo..hi).collect();
    let pencil = Pencil {
        k_diag: kd[lo..hi].to_vec(),
        k_off: ko[lo..hi - 1].to_vec(),
        m_diag: md[lo..hi].to_vec(),
        m_off: mo[lo..hi - 1].to_vec(),
        log_scale: scale[lo..hi].to_vec(),
        free,
        n_nodes: n,
        shift,
    };
    if let Some(i) = Ldl::new(&pencil.m_diag, &pencil.m_off).first_nonpositive() {
        return Err(Error::NegativeMassPivot(i));
    }
    Ok(pencil)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{Potential, Reaction};

    #[test]
    fn textbook_matrices() {
        let spec = ProblemSpec::full(1, 0.0, Potential::zero(), Reaction::constant(0.0).unwrap()).unwrap();
        let mesh = Mesh::uniform((0.0, 1.0), 10).unwrap();
        let p = assemble(&spec, &mesh).unwrap();
        // c = 0 is shifted to be positive
        assert_eq!(p.shift, 1.0);
        let h = 0.1;
        assert!((p.k_diag[5] - (2.0 / h + 2.0 * h / 3.0)).abs() < 1e-12);
        assert!((p.k_off[5] - (-1.0 / h + h / 6.0)).abs() < 1e-12);
        assert!((p.m_diag[5] - 2.0 * h / 3.0).abs() < 1e-15);
        assert!((p.m_off[5] - h / 6.0).abs() < 1e-15);
    }

    #[test]
    fn constant_potential_scales_out() {
        let c = Reaction::constant(3.0).unwrap();
        let mesh = Mesh::uniform((0.0, 1.0), 8).unwrap();
        let a = assemble(&ProblemSpec::full(2, 0.0, Potential::zero(), c.clone()).unwrap(), &mesh).unwrap();
        let b = assemble(&ProblemSpec::full(2, 50.0, Potential::constant(0.3), c).unwrap(), &mesh).unwrap();
        for (x, y) in a.k_diag.iter().zip(&b.k_diag) {
            assert!((x - y).abs() <= 1e-13 * x.abs());
        }
    }

    #[test]
    fn overflow_is_reported() {
        let spec = ProblemSpec::full(1, 5000.0, Potential::constant(0.3), Reaction::constant(1.0).unwrap()).unwrap();
        let mesh = Mesh::uniform((0.0, 1.0), 4).unwrap();
        assert!(matches!(assemble(&spec, &mesh), Err(Error::WeightOverflow { .. })));
    }
}
