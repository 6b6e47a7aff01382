use serde::Serialize;

use super::potential::Potential;
use super::schedule::{Family, OscillationSchedule, ONE_THIRD, TWO_THIRDS};

/// Outcome of checking a potential against one family envelope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipReport {
    pub family: Family,
    /// Smallest signed margin of the envelope inequality over the grid (≥ 0 means satisfied).
    pub envelope_margin: f64,
    pub worst_radius: f64,
    pub envelope_ok: bool,
    pub max_value_jump: f64,
    pub max_derivative_jump: f64,
    pub c1_ok: bool,
    pub vanishes_in_middle: bool,
    pub symmetric: bool,
    pub pass: bool,
}

pub const C1_TOL: f64 = 1e-8;
/// Mirror evaluation differs from the direct one by the rounding of `1 - r`.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Grid check of `m` against the envelope of `schedule` plus the structural conditions.
pub fn verify_membership(m: &Potential, family: Family, schedule: &OscillationSchedule) -> MembershipReport {
    verify_with_density(m, family, schedule, 5000)
}

pub fn verify_with_density(
    m: &Potential,
    family: Family,
    schedule: &OscillationSchedule,
    per_piece: usize,
) -> MembershipReport {
    let (margin, worst) = if schedule.family == family {
        envelope_margin(m, schedule, per_piece)
    } else {
        (f64::NEG_INFINITY, schedule.delta)
    };
    let (vj, dj) = c1_jumps(m);
    let vanishes = (0..=1000).all(|k| m.value(ONE_THIRD + (TWO_THIRDS - ONE_THIRD) * k as f64 / 1000.0) == 0.0);
    let symmetric = (0..=10_000).all(|k| {
        let r = k as f64 / 10_000.0;
        (m.value(r) - m.value(1.0 - r)).abs() <= SYMMETRY_TOL
    });
    let envelope_ok = margin >= -1e-12;
    let c1_ok = vj <= C1_TOL && dj <= C1_TOL;
    MembershipReport {
        family,
        envelope_margin: margin,
        worst_radius: worst,
        envelope_ok,
        max_value_jump: vj,
        max_derivative_jump: dj,
        c1_ok,
        vanishes_in_middle: vanishes,
        symmetric,
        pass: envelope_ok && c1_ok && vanishes && symmetric,
    }
}

/// Margin of `m >= envelope` (DD) or `m <= envelope` (NN) sampled on `[delta, 1/3)` and its mirror.
fn envelope_margin(m: &Potential, s: &OscillationSchedule, per_piece: usize) -> (f64, f64) {
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    for l in s.levels() {
        pieces.push(l.gate);
        pieces.push(l.hold);
    }
    pieces.push((s.truncation_radius(), ONE_THIRD));
    let mut worst = f64::INFINITY;
    let mut at = s.delta;
    for (a, b) in pieces {
        for k in 0..per_piece {
            let q = a + (b - a) * k as f64 / per_piece as f64;
            let env = s.envelope_left(q);
            for r in [q, 1.0 - q] {
                let v = m.value(r);
                let gap = match s.family {
                    Family::DD => v - env,
                    Family::NN => env - v,
                };
                if gap < worst {
                    worst = gap;
                    at = r;
                }
            }
        }
    }
    (worst, at)
}

/// Largest value and one-sided derivative jumps at the breakpoints and flips of `m`,
/// net of the estimated rounding noise of the stencils.
pub fn c1_jumps(m: &Potential) -> (f64, f64) {
    let mut pts = m.breakpoints();
    pts.extend(m.flips().iter().flat_map(|&f| [f, 1.0 - f]));
    pts.sort_by(f64::total_cmp);
    let mut vmax = 0.0_f64;
    let mut dmax = 0.0_f64;
    // the right half is the mirror image, so checking the left half suffices
    for w in 0..pts.len() {
        let p = pts[w];
        if p <= 0.0 || p > 0.5 {
            continue;
        }
        let left = if w > 0 { p - pts[w - 1] } else { p };
        let right = if w + 1 < pts.len() { pts[w + 1] - p } else { 1.0 - p };
        let len = left.min(right);
        if len <= 0.0 {
            continue;
        }
        // one-sided stencils exact for quintics, so only rounding remains
        let h = len / 8.0;
        let side = |dir: f64| -> (f64, f64) {
            let f: Vec<f64> = (0..=6).map(|k| m.value(p + dir * k as f64 * h)).collect();
            let d = (-137.0 / 60.0 * f[0] + 5.0 * f[1] - 5.0 * f[2] + 10.0 / 3.0 * f[3] - 1.25 * f[4] + 0.2 * f[5])
                / (dir * h);
            let v = 6.0 * f[1] - 15.0 * f[2] + 20.0 * f[3] - 15.0 * f[4] + 6.0 * f[5] - f[6];
            (v, d)
        };
        let (vl, dl) = side(-1.0);
        let (vr, dr) = side(1.0);
        // rounding in the sampled values and in the sample positions, amplified by the stencils
        let f: Vec<f64> = (-6..=6).map(|k| m.value(p + k as f64 * h)).collect();
        let fmax = f.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let slope = f.windows(2).fold(0.0_f64, |a, w| a.max((w[1] - w[0]).abs())) / h;
        let dnoise = 17.1 * f64::EPSILON / h * (2.0 * p * slope + fmax);
        let vnoise = 63.0 * f64::EPSILON * (fmax + p * slope * h);
        vmax = vmax.max(((vl - vr).abs() - 16.0 * vnoise).max(0.0));
        dmax = dmax.max(((dl - dr).abs() - 16.0 * dnoise).max(0.0));
    }
    (vmax, dmax)
}

/// Search space for [`search_schedule`].
#[derive(Debug, Clone)]
pub struct SearchGrid {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub max_offset: u32,
    pub delta_candidates: usize,
    /// Candidate `delta` values per breakpoint gap.
    pub delta_subdivisions: usize,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self {
            alphas: (1..100).map(|k| k as f64 / 100.0).collect(),
            betas: (1..20).map(|k| k as f64 / 20.0).collect(),
            max_offset: 12,
            delta_candidates: 12,
            delta_subdivisions: 8,
        }
    }
}

/// Look for a schedule of `family` with `delta >= from` that `m` dominates (DD) or is dominated by (NN).
///
/// Candidates maximise the number of retained levels, then minimise the amplitude offset.
/// Level checks use the exact piecewise-monotone range of `m`.
pub fn search_schedule(
    m: &Potential,
    family: Family,
    from: f64,
    grid: &SearchGrid,
) -> Option<(OscillationSchedule, MembershipReport)> {
    let mut deltas: Vec<f64> = m.breakpoints().into_iter().filter(|&p| p >= from && p < ONE_THIRD).collect();
    deltas.dedup();
    let mut cands = Vec::new();
    let sub = grid.delta_subdivisions.max(1);
    for w in deltas.windows(2).take(grid.delta_candidates) {
        cands.extend((0..sub).map(|k| w[0] + (w[1] - w[0]) * k as f64 / sub as f64));
    }
    // the potential's own ratios line up with its ladder exactly
    let own: Vec<f64> = m.schedule().map(|s| [Some(s.alpha), s.beta].into_iter().flatten().collect()).unwrap_or_default();
    let alphas: Vec<f64> = grid.alphas.iter().chain(&own).copied().collect();
    let betas: Vec<Option<f64>> = match family {
        Family::NN => vec![None],
        Family::DD => grid.betas.iter().chain(&own).copied().map(Some).collect(),
    };
    let mut best: Option<(u32, u32, OscillationSchedule)> = None;
    for &delta in &cands {
        for &alpha in &alphas {
            for beta in &betas {
                if let Some(b) = beta {
                    if *b <= alpha {
                        continue;
                    }
                }
                for off in 0..=grid.max_offset {
                    let Ok(s) = OscillationSchedule::with_offset(family, delta, alpha, *beta, 40, off) else {
                        continue;
                    };
                    let depth = passing_levels(m, &s);
                    let better = depth > 0
                        && match &best {
                            None => true,
                            Some((d, o, _)) => depth > *d || (depth == *d && off < *o),
                        };
                    if better {
                        let mut s2 = s.clone();
                        s2.depth = depth;
                        best = Some((depth, off, s2));
                    }
                }
            }
        }
    }
    let (_, _, s) = best?;
    let s = s.validated().ok()?;
    let report = verify_membership(m, family, &s);
    report.pass.then_some((s, report))
}

fn passing_levels(m: &Potential, s: &OscillationSchedule) -> u32 {
    let levels = s.levels();
    let mut n = 0;
    for (i, l) in levels.iter().enumerate() {
        if !level_ok(m, s.family, l.gate, l.gate_envelope(s.family)) || !level_ok(m, s.family, l.hold, l.hold_value(s.family)) {
            break;
        }
        // the tail after a truncation here must carry the family's sign
        let tail = (l.hold.1, ONE_THIRD);
        if level_ok(m, s.family, tail, 0.0) {
            n = i as u32 + 1;
        }
    }
    n
}

fn level_ok(m: &Potential, family: Family, (a, b): (f64, f64), env: f64) -> bool {
    let (hi, lo) = m.range_on(a, b);
    match family {
        Family::DD => lo >= env - 1e-15,
        Family::NN => hi <= env + 1e-15,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dd() -> OscillationSchedule {
        OscillationSchedule::new(Family::DD, 1.0 / 6.0, 0.25, Some(1.0 / 3.0), 4).unwrap()
    }

    #[test]
    fn representatives_pass_their_own_family() {
        let s = dd();
        let m = Potential::build_sdd(&s).unwrap();
        let r = verify_membership(&m, Family::DD, &s);
        assert!(r.pass, "{r:?}");
        let nn = OscillationSchedule::new(Family::NN, 1.0 / 6.0, 0.25, None, 4).unwrap();
        let m = Potential::build_snn(&nn).unwrap();
        assert!(verify_membership(&m, Family::NN, &nn).pass);
        assert!(!verify_membership(&m, Family::DD, &s).pass);
    }

    #[test]
    fn zero_potential_fails_dd() {
        assert!(!verify_membership(&Potential::zero(), Family::DD, &dd()).pass);
    }

    #[test]
    fn step_profile_is_not_c1() {
        let s = dd();
        let m = Potential::ladder(&s, super::super::potential::Profile::EnvelopeStep).unwrap();
        let r = verify_membership(&m, Family::DD, &s);
        assert!(r.envelope_ok && !r.c1_ok);
    }
}
