use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::schedule::{Family, OscillationSchedule, ONE_THIRD};
use crate::error::{Error, Result};
use crate::quadrature::{smoothstep, smoothstep_deriv};

const CONTACT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    EnvelopeStep,
    SmoothBump,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    /// Representative built on an oscillation schedule.
    Ladder { schedule: OscillationSchedule, profile: Profile },
    /// `m(r) = a (1 - cos 2 pi r) / 2`, a single maximum at `r = 1/2`.
    Bump { amplitude: f64 },
    Constant(f64),
}

/// Transition `from -> to` on `[a, b]` along the quintic smoothstep.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    a: f64,
    b: f64,
    from: f64,
    to: f64,
}

impl Piece {
    fn eval(&self, q: f64) -> (f64, f64) {
        if self.from == self.to {
            return (self.from, 0.0);
        }
        let len = self.b - self.a;
        let t = (q - self.a) / len;
        let dv = self.to - self.from;
        (self.from + dv * smoothstep(t), dv * smoothstep_deriv(t) / len)
    }
}

/// Radial potential on `[0, 1]`, symmetric under `r -> 1 - r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    kind: PotentialKind,
    flips: Vec<f64>,
    pieces: Vec<Piece>,
}

impl Potential {
    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(value: f64) -> Self {
        Self { kind: PotentialKind::Constant(value), flips: Vec::new(), pieces: Vec::new() }
    }

    pub fn bump(amplitude: f64) -> Result<Self> {
        if !amplitude.is_finite() {
            return Err(Error::InvalidParameter(format!("bump amplitude {amplitude} is not finite")));
        }
        Ok(Self { kind: PotentialKind::Bump { amplitude }, flips: Vec::new(), pieces: Vec::new() })
    }

    /// Smooth `S_DD` representative: nonnegative gates with second-order contact at `z_n`.
    pub fn build_sdd(schedule: &OscillationSchedule) -> Result<Self> {
        Self::build_family(schedule, Family::DD, Profile::SmoothBump)
    }

    /// Smooth `S_NN` representative: nonpositive, valleys at `-2 h^n`, hills touching zero.
    pub fn build_snn(schedule: &OscillationSchedule) -> Result<Self> {
        Self::build_family(schedule, Family::NN, Profile::SmoothBump)
    }

    fn build_family(schedule: &OscillationSchedule, family: Family, profile: Profile) -> Result<Self> {
        if schedule.family != family {
            return Err(Error::FamilyMismatch { expected: family });
        }
        Self::ladder(schedule, profile)
    }

    pub fn ladder(schedule: &OscillationSchedule, profile: Profile) -> Result<Self> {
        let schedule = schedule.validated()?;
        let pieces = ladder_pieces(&schedule, profile);
        Ok(Self { kind: PotentialKind::Ladder { schedule, profile }, flips: Vec::new(), pieces })
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn schedule(&self) -> Option<&OscillationSchedule> {
        match &self.kind {
            PotentialKind::Ladder { schedule, .. } => Some(schedule),
            _ => None,
        }
    }

    pub fn flips(&self) -> &[f64] {
        &self.flips
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    pub fn deriv(&self, r: f64) -> f64 {
        self.eval(r).1
    }

    /// `(m(r), m'(r))`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        match &self.kind {
            PotentialKind::Constant(v) => (*v, 0.0),
            PotentialKind::Bump { amplitude } => {
                let w = 2.0 * PI * r;
                (0.5 * amplitude * (1.0 - w.cos()), amplitude * PI * w.sin())
            }
            PotentialKind::Ladder { .. } => {
                if r > 0.5 {
                    let (v, d) = self.eval_left(1.0 - r);
                    (v, -d)
                } else {
                    self.eval_left(r)
                }
            }
        }
    }

    fn eval_left(&self, q: f64) -> (f64, f64) {
        if q >= ONE_THIRD {
            return (0.0, 0.0);
        }
        let i = self.pieces.partition_point(|p| p.b <= q).min(self.pieces.len() - 1);
        let (v, d) = self.pieces[i].eval(q);
        let sign = self.sign_left(q);
        (sign * v, sign * d)
    }

    fn sign_left(&self, q: f64) -> f64 {
        if self.flips.partition_point(|&f| f < q) % 2 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    /// Points in `[0, 1]` where the potential changes formula, with mirror images.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut left = vec![0.0, ONE_THIRD, 0.5];
        match &self.kind {
            PotentialKind::Ladder { .. } => {
                for p in &self.pieces {
                    left.push(p.a);
                    left.push(p.b);
                }
            }
            PotentialKind::Bump { .. } | PotentialKind::Constant(_) => {}
        }
        let mut all: Vec<f64> = left.iter().flat_map(|&q| [q, 1.0 - q]).collect();
        all.sort_by(f64::total_cmp);
        all.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        all
    }

    /// Zero-contact points (value and slope vanish) in `(0, 1/3)`, including the truncation contact.
    pub fn contacts(&self) -> Vec<f64> {
        match &self.kind {
            PotentialKind::Ladder { schedule, profile: Profile::SmoothBump } => {
                let mut c: Vec<f64> = schedule.levels().iter().map(|l| l.contact).collect();
                c.push(schedule.truncation_gate().1);
                c
            }
            _ => Vec::new(),
        }
    }

    /// Sign-flip the tail beyond the contact `kappa` (and its mirror image).
    /// Folding twice at the same point restores the input.
    pub fn fold_tail(&self, kappa: f64) -> Result<Self> {
        let q = if kappa > 0.5 { 1.0 - kappa } else { kappa };
        let hit = self.contacts().into_iter().find(|c| (c - q).abs() <= CONTACT_TOL);
        let Some(c) = hit else {
            return Err(Error::NotContact(kappa));
        };
        let mut out = self.clone();
        match out.flips.iter().position(|&f| f == c) {
            Some(i) => {
                out.flips.remove(i);
            }
            None => {
                let i = out.flips.partition_point(|&f| f < c);
                out.flips.insert(i, c);
            }
        }
        Ok(out)
    }

    /// Maximum and minimum of `m` over `[a, b]` within the left half `[0, 1/2]`.
    /// Exact for ladders, whose pieces are monotone.
    pub fn range_on(&self, a: f64, b: f64) -> (f64, f64) {
        let mut pts = vec![a, b];
        match &self.kind {
            PotentialKind::Ladder { .. } => {
                let i = self.pieces.partition_point(|p| p.a <= a);
                pts.extend(self.pieces[i..].iter().map(|p| p.a).take_while(|&x| x < b));
                if ONE_THIRD > a && ONE_THIRD < b {
                    pts.push(ONE_THIRD);
                }
            }
            PotentialKind::Bump { .. } => {
                if a < 0.5 && b > 0.5 {
                    pts.push(0.5);
                }
            }
            PotentialKind::Constant(_) => {}
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &p in &pts {
            // sample each side of the point so a piecewise-constant profile's jump is seen
            for x in [p, (p - 1e-15).max(a), (p + 1e-15).min(b)] {
                let v = self.value(x);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (hi, lo)
    }

    /// `sup |m|` over `(q, 1/3)`.
    pub fn sup_abs_beyond(&self, q: f64) -> f64 {
        let (hi, lo) = self.range_on(q, ONE_THIRD);
        hi.abs().max(lo.abs())
    }

    /// Sup norm over all of `[0, 1]`.
    pub fn sup_abs(&self) -> f64 {
        match &self.kind {
            PotentialKind::Constant(v) => v.abs(),
            PotentialKind::Bump { amplitude } => amplitude.abs(),
            PotentialKind::Ladder { .. } => self.pieces.iter().fold(0.0_f64, |m, p| m.max(p.from.abs()).max(p.to.abs())),
        }
    }

    pub fn to_record(&self) -> PotentialRecord {
        match &self.kind {
            PotentialKind::Ladder { schedule, profile } => PotentialRecord {
                kind: None,
                family: Some(schedule.family),
                delta: Some(schedule.delta),
                alpha: Some(schedule.alpha),
                beta: schedule.beta,
                theta: Some(schedule.theta),
                depth: Some(schedule.depth),
                level_offset: (schedule.level_offset != 0).then_some(schedule.level_offset),
                flips: self.flips.clone(),
                profile: Some(*profile),
                amplitude: None,
                value: None,
            },
            PotentialKind::Bump { amplitude } => PotentialRecord {
                kind: Some(RecordKind::Bump),
                amplitude: Some(*amplitude),
                ..PotentialRecord::default()
            },
            PotentialKind::Constant(v) => PotentialRecord {
                kind: Some(RecordKind::Constant),
                value: Some(*v),
                ..PotentialRecord::default()
            },
        }
    }

    pub fn from_record(rec: &PotentialRecord) -> Result<Self> {
        let missing = |f: &str| Error::InvalidParameter(format!("potential record lacks `{f}`"));
        match rec.kind.unwrap_or(RecordKind::Ladder) {
            RecordKind::Constant => Ok(Self::constant(rec.value.ok_or_else(|| missing("value"))?)),
            RecordKind::Bump => Self::bump(rec.amplitude.ok_or_else(|| missing("amplitude"))?),
            RecordKind::Ladder => {
                let family = rec.family.ok_or_else(|| missing("family"))?;
                let schedule = OscillationSchedule::with_offset(
                    family,
                    rec.delta.ok_or_else(|| missing("delta"))?,
                    rec.alpha.ok_or_else(|| missing("alpha"))?,
                    rec.beta,
                    rec.depth.ok_or_else(|| missing("depth"))?,
                    rec.level_offset.unwrap_or(0),
                )?;
                if let Some(theta) = rec.theta {
                    if theta != schedule.theta {
                        return Err(Error::InvalidParameter(format!(
                            "theta {theta} does not match the schedule value {}",
                            schedule.theta
                        )));
                    }
                }
                let mut m = Self::ladder(&schedule, rec.profile.unwrap_or(Profile::SmoothBump))?;
                for &k in &rec.flips {
                    m = m.fold_tail(k)?;
                }
                Ok(m)
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_record()).expect("potential record serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: PotentialRecord =
            serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("potential JSON: {e}")))?;
        Self::from_record(&rec)
    }
}

fn ladder_pieces(schedule: &OscillationSchedule, profile: Profile) -> Vec<Piece> {
    let fam = schedule.family;
    let mut out = Vec::new();
    let c = |a, b, v| Piece { a, b, from: v, to: v };
    out.push(c(0.0, schedule.delta, 0.0));
    let mut prev = 0.0;
    for l in schedule.levels() {
        let hold = l.hold_value(fam);
        match profile {
            Profile::SmoothBump => {
                out.push(Piece { a: l.gate.0, b: l.contact, from: prev, to: 0.0 });
                out.push(Piece { a: l.contact, b: l.gate.1, from: 0.0, to: hold });
            }
            Profile::EnvelopeStep => out.push(c(l.gate.0, l.gate.1, l.gate_envelope(fam))),
        }
        out.push(c(l.hold.0, l.hold.1, hold));
        prev = hold;
    }
    let ((a, _), z) = schedule.truncation_gate();
    match profile {
        Profile::SmoothBump => {
            out.push(Piece { a, b: z, from: prev, to: 0.0 });
            out.push(c(z, ONE_THIRD, 0.0));
        }
        Profile::EnvelopeStep => out.push(c(a, ONE_THIRD, 0.0)),
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Ladder,
    Bump,
    Constant,
}

/// Canonical JSON form of a [`Potential`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PotentialRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<RecordKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level_offset: Option<u32>,
    #[serde(default)]
    pub flips: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Profile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

/// Sup-norm distance on a grid that resolves both potentials' pieces.
pub fn sup_distance(m1: &Potential, m2: &Potential) -> f64 {
    let mut pts = m1.breakpoints();
    pts.extend(m2.breakpoints());
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut best = 0.0_f64;
    let per = 64;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        for k in 0..=per {
            let r = a + (b - a) * k as f64 / per as f64;
            best = best.max((m1.value(r) - m2.value(r)).abs());
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::schedule::TWO_THIRDS;

    fn dd(depth: u32) -> OscillationSchedule {
        OscillationSchedule::new(Family::DD, 1.0 / 6.0, 0.25, Some(1.0 / 3.0), depth).unwrap()
    }

    #[test]
    fn contacts_are_zero_with_zero_slope() {
        let m = Potential::build_sdd(&dd(4)).unwrap();
        for z in m.contacts() {
            let (v, d) = m.eval(z);
            assert_eq!(v, 0.0);
            assert_eq!(d, 0.0);
        }
    }

    #[test]
    fn vanishes_in_middle_and_is_symmetric() {
        let m = Potential::build_sdd(&dd(3)).unwrap();
        for k in 0..=100 {
            let r = ONE_THIRD + k as f64 / 300.0;
            assert_eq!(m.value(r.min(TWO_THIRDS)), 0.0);
            let x = k as f64 / 100.0;
            assert!((m.value(x) - m.value(1.0 - x)).abs() < 1e-12);
        }
        assert!(m.sup_abs() <= 1.0 / 3.0 + 1e-15);
    }

    #[test]
    fn family_mismatch() {
        assert!(matches!(Potential::build_snn(&dd(2)), Err(Error::FamilyMismatch { .. })));
    }

    #[test]
    fn fold_twice_is_identity() {
        let m = Potential::build_sdd(&dd(4)).unwrap();
        let z = m.contacts()[2];
        let f = m.fold_tail(z).unwrap();
        assert_ne!(f, m);
        assert_eq!(f.fold_tail(z).unwrap(), m);
        assert!(m.fold_tail(0.2001).is_err());
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let m = Potential::build_sdd(&dd(5)).unwrap();
        let m = m.fold_tail(m.contacts()[3]).unwrap();
        let back = Potential::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        let b = Potential::bump(0.3).unwrap();
        assert_eq!(Potential::from_json(&b.to_json()).unwrap(), b);
    }
}
