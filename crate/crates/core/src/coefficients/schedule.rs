use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amplitude base of both envelopes.
pub const H: f64 = 1.0 / 6.0;
pub const ONE_THIRD: f64 = 1.0 / 3.0;
pub const TWO_THIRDS: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    DD,
    NN,
}

impl Family {
    pub fn other(self) -> Family {
        match self {
            Family::DD => Family::NN,
            Family::NN => Family::DD,
        }
    }
}

/// One rung of the ladder.
///
/// For `DD` the gate is `[x_n, y_n]` with contact `z_n` and the hold is the
/// plateau `[y_n, x_{n+1}]`. For `NN` the gate is the hill `[Y_{n-1}, X_n]`
/// and the hold is the valley `[X_n, Y_n]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub index: u32,
    pub gate: (f64, f64),
    pub contact: f64,
    pub hold: (f64, f64),
    pub amplitude: f64,
}

impl Level {
    /// Envelope value on the gate.
    pub fn gate_envelope(&self, family: Family) -> f64 {
        match family {
            Family::DD => -self.amplitude,
            Family::NN => self.amplitude,
        }
    }

    /// Envelope value on the hold; also the height of the smooth representative there.
    pub fn hold_value(&self, family: Family) -> f64 {
        match family {
            Family::DD => 2.0 * self.amplitude,
            Family::NN => -2.0 * self.amplitude,
        }
    }
}

/// Breakpoint ladder accumulating at `r = 1/3` from the left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationSchedule {
    pub family: Family,
    pub delta: f64,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub theta: f64,
    pub depth: u32,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub level_offset: u32,
}

fn is_zero(v: &u32) -> bool {
    *v == 0
}

impl OscillationSchedule {
    pub fn new(family: Family, delta: f64, alpha: f64, beta: Option<f64>, depth: u32) -> Result<Self> {
        Self::with_offset(family, delta, alpha, beta, depth, 0)
    }

    /// Schedule whose level `n` carries the amplitude of level `n + offset`.
    pub fn with_offset(
        family: Family,
        delta: f64,
        alpha: f64,
        beta: Option<f64>,
        depth: u32,
        level_offset: u32,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta < ONE_THIRD) {
            return Err(Error::InvalidParameter(format!("delta = {delta} must lie in (0, 1/3)")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in (0, 1)")));
        }
        if depth < 1 {
            return Err(Error::InvalidParameter("depth must be at least 1".into()));
        }
        let theta = match family {
            Family::DD => {
                let b = beta.ok_or_else(|| Error::InvalidParameter("DD schedule requires beta".into()))?;
                if !(b > alpha && b < 1.0) {
                    return Err(Error::InvalidParameter(format!("beta = {b} must lie in (alpha, 1)")));
                }
                (ONE_THIRD - delta) / (alpha / (1.0 - alpha) + b / (1.0 - b))
            }
            Family::NN => {
                if beta.is_some() {
                    return Err(Error::InvalidParameter("NN schedule takes no beta".into()));
                }
                (ONE_THIRD - delta) * (1.0 - alpha) / (2.0 * alpha)
            }
        };
        Ok(Self { family, delta, alpha, beta, theta, depth, level_offset })
    }

    /// Recompute `theta` from the other fields and check ranges.
    pub fn validated(&self) -> Result<Self> {
        let fresh = Self::with_offset(self.family, self.delta, self.alpha, self.beta, self.depth, self.level_offset)?;
        if (fresh.theta - self.theta).abs() > 1e-12 * fresh.theta.abs().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "theta = {} inconsistent with (delta, alpha, beta) (expected {})",
                self.theta, fresh.theta
            )));
        }
        Ok(fresh)
    }

    pub fn amplitude(&self, n: u32) -> f64 {
        let e = match self.family {
            Family::DD => n.max(1),
            Family::NN => n,
        };
        H.powi((e + self.level_offset) as i32)
    }

    fn first_index(&self) -> u32 {
        match self.family {
            Family::DD => 0,
            Family::NN => 1,
        }
    }

    fn gate_len(&self, n: u32) -> f64 {
        match self.family {
            Family::DD => self.theta * self.alpha.powi(n as i32 + 1),
            Family::NN => self.theta * self.alpha.powi(n as i32),
        }
    }

    fn hold_len(&self, n: u32) -> f64 {
        match self.family {
            Family::DD => self.theta * self.beta.unwrap_or(self.alpha).powi(n as i32 + 1),
            Family::NN => self.theta * self.alpha.powi(n as i32),
        }
    }

    /// The `depth` retained levels in increasing radius.
    pub fn levels(&self) -> Vec<Level> {
        let mut out = Vec::with_capacity(self.depth as usize);
        let mut a = self.delta;
        let first = self.first_index();
        for n in first..first + self.depth {
            let b = a + self.gate_len(n);
            let e = b + self.hold_len(n);
            out.push(Level {
                index: n,
                gate: (a, b),
                contact: 0.5 * (a + b),
                hold: (b, e),
                amplitude: self.amplitude(n),
            });
            a = e;
        }
        out
    }

    /// Gate following the last retained level, where the representative returns to zero.
    pub fn truncation_gate(&self) -> ((f64, f64), f64) {
        let n = self.first_index() + self.depth;
        let a = self.levels().last().map(|l| l.hold.1).unwrap_or(self.delta);
        let b = a + self.gate_len(n);
        ((a, b), 0.5 * (a + b))
    }

    /// Radius beyond which the truncated envelope vanishes.
    pub fn truncation_radius(&self) -> f64 {
        self.truncation_gate().0 .0
    }

    /// Every ladder point in `[delta, 1/3)`, increasing.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = Vec::new();
        for l in self.levels() {
            pts.extend([l.gate.0, l.contact, l.gate.1]);
        }
        let ((a, b), z) = self.truncation_gate();
        pts.extend([a, z, b]);
        pts
    }

    /// Step envelope at `r`, mirrored for `r > 1/2`; zero on `[1/3, 2/3]` and past the truncation.
    pub fn envelope(&self, r: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::OutsideEnvelope(r));
        }
        if (ONE_THIRD..=TWO_THIRDS).contains(&r) {
            return Ok(0.0);
        }
        let q = if r > 0.5 { 1.0 - r } else { r };
        if q < self.delta {
            return Err(Error::OutsideEnvelope(r));
        }
        Ok(self.envelope_left(q))
    }

    pub(crate) fn envelope_left(&self, q: f64) -> f64 {
        let levels = self.levels();
        let i = levels.partition_point(|l| l.hold.1 <= q);
        if i == levels.len() {
            return 0.0;
        }
        let l = &levels[i];
        if q < l.gate.1 {
            l.gate_envelope(self.family)
        } else {
            l.hold_value(self.family)
        }
    }
}
