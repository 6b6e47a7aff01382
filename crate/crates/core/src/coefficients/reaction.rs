use serde::{Deserialize, Serialize};

use super::schedule::{ONE_THIRD, TWO_THIRDS};
use crate::error::{Error, Result};
use crate::quadrature::smoothstep;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReactionKind {
    /// `c_in` on `[1/3, 2/3]`, `c_out` outside `[1/3 - ramp, 2/3 + ramp]`, smoothstep between.
    Plateau { c_in: f64, c_out: f64, ramp: f64 },
    /// `sum_k coeffs[k] (r - 1/2)^k`.
    Polynomial { coeffs: Vec<f64> },
}

/// Reaction coefficient `c(r)` with cached extrema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ReactionKind", try_from = "ReactionKind")]
pub struct Reaction {
    kind: ReactionKind,
    c_min: f64,
    c_max: f64,
}

impl From<Reaction> for ReactionKind {
    fn from(r: Reaction) -> Self {
        r.kind
    }
}

impl TryFrom<ReactionKind> for Reaction {
    type Error = Error;
    fn try_from(k: ReactionKind) -> Result<Self> {
        match k {
            ReactionKind::Plateau { c_in, c_out, ramp } => Reaction::plateau(c_in, c_out, ramp),
            ReactionKind::Polynomial { coeffs } => Reaction::polynomial(coeffs),
        }
    }
}

impl Reaction {
    pub fn plateau(c_in: f64, c_out: f64, ramp: f64) -> Result<Self> {
        if !(c_in.is_finite() && c_out.is_finite()) {
            return Err(Error::InvalidParameter("reaction values must be finite".into()));
        }
        if !(0.0..ONE_THIRD).contains(&ramp) {
            return Err(Error::InvalidParameter(format!("ramp = {ramp} must lie in [0, 1/3)")));
        }
        Ok(Self { kind: ReactionKind::Plateau { c_in, c_out, ramp }, c_min: c_in.min(c_out), c_max: c_in.max(c_out) })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::polynomial(vec![c])
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("polynomial reaction needs finite coefficients".into()));
        }
        let mut r = Self { kind: ReactionKind::Polynomial { coeffs }, c_min: 0.0, c_max: 0.0 };
        let (lo, hi) = r.scan_extrema();
        r.c_min = lo;
        r.c_max = hi;
        Ok(r)
    }

    pub fn kind(&self) -> &ReactionKind {
        &self.kind
    }

    /// `c_*`, the minimum over `[0, 1]`.
    pub fn c_min(&self) -> f64 {
        self.c_min
    }

    /// `c^*`, the maximum over `[0, 1]`.
    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    /// Extrema over a sub-interval.
    pub fn range_on(&self, a: f64, b: f64) -> (f64, f64) {
        let n = 2000;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut pts: Vec<f64> = (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect();
        pts.extend(self.breakpoints().into_iter().filter(|&p| p > a && p < b));
        for p in pts {
            let v = self.value(p);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    fn scan_extrema(&self) -> (f64, f64) {
        let (mut lo, mut hi) = self.range_on(0.0, 1.0);
        // polish each interior extremum by golden-section search on the sampled bracket
        let n = 2000;
        let h = 1.0 / n as f64;
        for k in 1..n {
            let x = k as f64 * h;
            let (a, b, c) = (self.value(x - h), self.value(x), self.value(x + h));
            if b <= a && b <= c {
                lo = lo.min(self.golden(x - h, x + h, 1.0));
            }
            if b >= a && b >= c {
                hi = hi.max(-self.golden(x - h, x + h, -1.0));
            }
        }
        (lo, hi)
    }

    fn golden(&self, mut a: f64, mut b: f64, sign: f64) -> f64 {
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let x1 = b - g * (b - a);
            let x2 = a + g * (b - a);
            if sign * self.value(x1) < sign * self.value(x2) {
                b = x2;
            } else {
                a = x1;
            }
        }
        sign * self.value(0.5 * (a + b))
    }

    pub fn value(&self, r: f64) -> f64 {
        match &self.kind {
            ReactionKind::Polynomial { coeffs } => {
                let x = r - 0.5;
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
            }
            ReactionKind::Plateau { c_in, c_out, ramp } => {
                let q = if r > 0.5 { 1.0 - r } else { r };
                if q >= ONE_THIRD {
                    *c_in
                } else if *ramp == 0.0 || q <= ONE_THIRD - ramp {
                    *c_out
                } else {
                    let t = (ONE_THIRD - q) / ramp;
                    c_in + (c_out - c_in) * smoothstep(t)
                }
            }
        }
    }

    /// Radii where `c` changes formula.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            ReactionKind::Plateau { ramp, .. } if *ramp > 0.0 => {
                vec![ONE_THIRD - ramp, ONE_THIRD, TWO_THIRDS, TWO_THIRDS + ramp]
            }
            ReactionKind::Plateau { .. } => vec![ONE_THIRD, TWO_THIRDS],
            ReactionKind::Polynomial { .. } => Vec::new(),
        }
    }

    /// Additive offset making `c` strictly positive; zero when already positive.
    pub fn positivity_shift(&self) -> f64 {
        if self.c_min > 0.0 {
            return 0.0;
        }
        let m = self.c_min.abs().max(self.c_max.abs());
        if self.c_min + m > 0.0 {
            m
        } else {
            m + 1.0
        }
    }

    /// Minimum of `c` on `[0, 1/3 - ramp] U [2/3 + ramp, 1]`, the exterior plateau.
    pub fn exterior_min(&self) -> f64 {
        match &self.kind {
            ReactionKind::Plateau { c_out, .. } => *c_out,
            ReactionKind::Polynomial { .. } => {
                let (a, _) = self.range_on(0.0, ONE_THIRD);
                let (b, _) = self.range_on(TWO_THIRDS, 1.0);
                a.min(b)
            }
        }
    }

    /// Minimum of `c` over the closed set `[0, 1/3] U [2/3, 1]`.
    pub fn closed_exterior_min(&self) -> f64 {
        let (a, _) = self.range_on(0.0, ONE_THIRD);
        let (b, _) = self.range_on(TWO_THIRDS, 1.0);
        a.min(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_values() {
        let c = Reaction::plateau(1.0, 100.0, 0.01).unwrap();
        assert_eq!(c.value(0.5), 1.0);
        assert_eq!(c.value(ONE_THIRD), 1.0);
        assert_eq!(c.value(0.1), 100.0);
        assert_eq!(c.value(0.9), 100.0);
        assert!((c.value(ONE_THIRD - 0.005) - 50.5).abs() < 1e-12);
        assert_eq!((c.c_min(), c.c_max()), (1.0, 100.0));
    }

    #[test]
    fn polynomial_extrema_and_shift() {
        let c = Reaction::polynomial(vec![-1.0, 0.0, 4.0]).unwrap();
        assert!((c.c_min() + 1.0).abs() < 1e-14);
        assert!((c.c_max() - 0.0).abs() < 1e-14);
        assert_eq!(c.positivity_shift(), 1.0 + 1.0);
        let d = Reaction::polynomial(vec![2.0, 0.3, -5.0]).unwrap();
        let want = 2.0 + 0.3 * 0.3 / 20.0;
        assert!((d.c_max() - want).abs() < 1e-12);
        assert_eq!(d.positivity_shift(), 0.0);
    }

    #[test]
    fn serde_roundtrip() {
        let c = Reaction::plateau(1.0, 100.0, 0.0).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<Reaction>(&s).unwrap(), c);
    }
}
