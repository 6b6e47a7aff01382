//! Graded one-dimensional meshes with a node at every coefficient breakpoint.

use serde::{Deserialize, Serialize};

use crate::coefficients::{Potential, Reaction, ONE_THIRD, TWO_THIRDS};
use crate::error::{Error, Result};

const MERGE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshConfig {
    /// Elements in every breakpoint-to-breakpoint interval, at least.
    pub min_elems_per_interval: usize,
    /// Upper bound on element length.
    pub max_element_size: f64,
    /// Gauss points per element.
    pub quadrature_order: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { min_elems_per_interval: 8, max_element_size: 1.0 / 600.0, quadrature_order: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub domain: (f64, f64),
    pub nodes: Vec<f64>,
    #[serde(skip, default = "default_order")]
    pub quadrature_order: usize,
}

fn default_order() -> usize {
    6
}

fn check_domain(domain: (f64, f64)) -> Result<()> {
    let (a, b) = domain;
    if !(a < b) {
        return Err(Error::EmptyDomain(a, b));
    }
    if a < 0.0 || b > 1.0 {
        return Err(Error::InvalidParameter(format!("domain [{a}, {b}] is not inside [0, 1]")));
    }
    Ok(())
}

impl Mesh {
    pub fn uniform(domain: (f64, f64), elements: usize) -> Result<Self> {
        check_domain(domain)?;
        if elements == 0 {
            return Err(Error::InvalidParameter("a mesh needs at least one element".into()));
        }
        let (a, b) = domain;
        let mut nodes: Vec<f64> = (0..=elements).map(|k| a + (b - a) * k as f64 / elements as f64).collect();
        nodes[elements] = b;
        Ok(Self { domain, nodes, quadrature_order: 6 })
    }

    /// Nodes at every breakpoint of `m` and `c` inside `domain`, each gap subdivided uniformly.
    pub fn build(m: &Potential, c: &Reaction, domain: (f64, f64), cfg: &MeshConfig) -> Result<Self> {
        Self::build_multi(&[m], c, domain, cfg)
    }

    /// Like [`Mesh::build`], honoring the breakpoints of several potentials at once.
    pub fn build_multi(ms: &[&Potential], c: &Reaction, domain: (f64, f64), cfg: &MeshConfig) -> Result<Self> {
        check_domain(domain)?;
        if cfg.min_elems_per_interval < 1 {
            return Err(Error::InvalidParameter("min_elems_per_interval must be at least 1".into()));
        }
        if !(cfg.max_element_size > 0.0) || cfg.quadrature_order < 1 {
            return Err(Error::InvalidParameter("mesh sizes and quadrature order must be positive".into()));
        }
        let (a, b) = domain;
        let mut pts: Vec<f64> = ms.iter().flat_map(|m| m.breakpoints()).collect();
        if pts.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidParameter("potential breakpoints leave [0, 1]".into()));
        }
        pts.extend(c.breakpoints());
        pts.extend([ONE_THIRD, TWO_THIRDS]);
        let mut inner: Vec<f64> = pts.into_iter().filter(|&p| p > a + MERGE_TOL && p < b - MERGE_TOL).collect();
        inner.sort_by(f64::total_cmp);
        let mut keys = vec![a];
        for p in inner {
            if p - keys.last().copied().unwrap_or(a) > MERGE_TOL {
                keys.push(p);
            }
        }
        keys.push(b);
        let mut nodes = vec![a];
        for w in keys.windows(2) {
            let len = w[1] - w[0];
            let n = cfg.min_elems_per_interval.max((len / cfg.max_element_size).ceil() as usize);
            for k in 1..n {
                nodes.push(w[0] + len * k as f64 / n as f64);
            }
            nodes.push(w[1]);
        }
        Ok(Self { domain, nodes, quadrature_order: cfg.quadrature_order })
    }

    pub fn elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn with_quadrature_order(mut self, order: usize) -> Self {
        self.quadrature_order = order;
        self
    }

    /// Split every element into `factor` equal pieces.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor < 2 {
            return Err(Error::InvalidParameter(format!("refinement factor {factor} must be at least 2")));
        }
        Ok(self.split(|_, _| factor))
    }

    /// Split elements until `2 s |m(b) - m(a)|` is at most `max_step` on each one.
    ///
    /// `m` must be monotone between consecutive nodes, which holds for meshes from [`Mesh::build`].
    pub fn resolve_weight(&self, m: &Potential, s: f64, max_step: f64) -> Self {
        self.split(|a, b| {
            let var = 2.0 * s * (m.value(b) - m.value(a)).abs();
            ((var / max_step).ceil() as usize).max(1)
        })
    }

    fn split(&self, pieces: impl Fn(f64, f64) -> usize) -> Self {
        let mut nodes = Vec::with_capacity(self.nodes.len());
        nodes.push(self.nodes[0]);
        for w in self.nodes.windows(2) {
            let n = pieces(w[0], w[1]);
            let len = w[1] - w[0];
            for k in 1..n {
                nodes.push(w[0] + len * k as f64 / n as f64);
            }
            nodes.push(w[1]);
        }
        Self { domain: self.domain, nodes, quadrature_order: self.quadrature_order }
    }

    /// Insert `extra` points as nodes, skipping those already present.
    pub fn with_nodes(&self, extra: &[f64]) -> Self {
        let (a, b) = self.domain;
        let mut nodes = self.nodes.clone();
        for &p in extra {
            if p > a + MERGE_TOL && p < b - MERGE_TOL && !self.has_node(p, MERGE_TOL) {
                nodes.push(p);
            }
        }
        nodes.sort_by(f64::total_cmp);
        nodes.dedup_by(|x, y| (*x - *y).abs() <= MERGE_TOL);
        Self { domain: self.domain, nodes, quadrature_order: self.quadrature_order }
    }

    /// Count of elements inside `[a, b]`.
    pub fn elements_in(&self, a: f64, b: f64) -> usize {
        self.nodes.windows(2).filter(|w| w[0] >= a - MERGE_TOL && w[1] <= b + MERGE_TOL).count()
    }

    /// True if some node lies within `tol` of `r`.
    pub fn has_node(&self, r: f64, tol: f64) -> bool {
        let i = self.nodes.partition_point(|&x| x < r);
        [i.wrapping_sub(1), i].iter().any(|&j| j < self.nodes.len() && (self.nodes[j] - r).abs() <= tol)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("mesh serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{Family, OscillationSchedule};

    #[test]
    fn uniform_counts() {
        let m = Mesh::uniform((ONE_THIRD, TWO_THIRDS), 300).unwrap();
        assert_eq!(m.nodes.len(), 301);
        assert_eq!(m.nodes[0], ONE_THIRD);
        assert_eq!(m.nodes[300], TWO_THIRDS);
    }

    #[test]
    fn refine_keeps_nodes_and_composes() {
        let m = Mesh::uniform((0.0, 1.0), 2).unwrap();
        let r = m.refine(2).unwrap();
        assert_eq!(r.elements(), 4);
        assert!(m.nodes.iter().all(|&x| r.has_node(x, 0.0)));
        let twice = m.refine(2).unwrap().refine(2).unwrap();
        let once = m.refine(4).unwrap();
        assert_eq!(twice.nodes, once.nodes);
        assert!(m.refine(1).is_err());
    }

    #[test]
    fn build_honors_breakpoints() {
        let s = OscillationSchedule::new(Family::DD, 0.2, 0.3, Some(0.6), 5).unwrap();
        let pot = Potential::build_sdd(&s).unwrap();
        let c = Reaction::plateau(1.0, 100.0, 0.0).unwrap();
        let mesh = Mesh::build(&pot, &c, (0.0, 1.0), &MeshConfig::default()).unwrap();
        for w in mesh.nodes.windows(2) {
            assert!(w[1] > w[0]);
        }
        for p in pot.breakpoints() {
            assert!(mesh.has_node(p, 1e-14), "missing {p}");
        }
        for l in s.levels() {
            assert!(mesh.elements_in(l.gate.0, l.gate.1) >= 8);
        }
        assert!(Mesh::build(&pot, &c, (0.5, 0.5), &MeshConfig::default()).is_err());
    }
}
