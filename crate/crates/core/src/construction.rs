//! Alternating tail-fold construction of a potential whose principal eigenvalue
//! swings between the Dirichlet and Neumann reference values as `s` grows.

use serde::Serialize;

use crate::coefficients::{
    search_schedule, sup_distance, Family, MembershipReport, OscillationSchedule, Potential, PotentialRecord,
    Profile, Reaction, SearchGrid,
};
use crate::eigensolver::{reference_eigenvalues, solve, ProblemSpec, ReferenceEigenvalues};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, MeshConfig};
use crate::quadrature::smoothstep_inverse;

pub fn rho(refvals: &ReferenceEigenvalues) -> Result<f64> {
    let r = refvals.rho();
    if !(r > 0.0) {
        return Err(Error::DegenerateGap(r));
    }
    Ok(r)
}

/// `8 / ln(1 + rho / ((n + 1) c_max))`.
pub fn threshold_s(n: usize, rho: f64, c_max: f64) -> f64 {
    8.0 / (rho / ((n as f64 + 1.0) * c_max)).ln_1p()
}

/// `c_max (e^{4 s dist} - 1)`.
pub fn continuity_budget(c_max: f64, s: f64, dist: f64) -> f64 {
    c_max * (4.0 * s * dist).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kappa {
    pub tau: f64,
    /// Length of the largest left neighbourhood of `1/3` on which `|m| < tau`.
    pub delta_tau: f64,
    /// First zero-contact point past `1/3 - delta_tau`.
    pub kappa: f64,
    pub level: u32,
}

/// Fold point for the tolerance `tau` on a smooth ladder.
pub fn kappa(m: &Potential, tau: f64) -> Result<Kappa> {
    let sched = match m.kind() {
        crate::coefficients::PotentialKind::Ladder { schedule, profile: Profile::SmoothBump } => schedule,
        _ => return Err(Error::InvalidParameter("kappa needs a smooth ladder potential".into())),
    };
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau = {tau} must be positive")));
    }
    let levels = sched.levels();
    let fam = sched.family;
    // |holds| decrease, so the suffix sup beyond level k's gate is |hold_{k-1}| on its ramp and |hold_k| after
    let Some(k) = levels.iter().position(|l| l.hold_value(fam).abs() < tau) else {
        let deepest = levels.last().map(|l| l.hold_value(fam).abs()).unwrap_or(0.0);
        return Err(Error::TruncationTooShallow { tau, deepest });
    };
    let l = &levels[k];
    let prev = if k == 0 { 0.0 } else { levels[k - 1].hold_value(fam).abs() };
    let start = if prev < tau {
        l.gate.0
    } else {
        let t = smoothstep_inverse(1.0 - tau / prev);
        l.gate.0 + t * (l.contact - l.gate.0)
    };
    Ok(Kappa {
        tau,
        delta_tau: crate::coefficients::ONE_THIRD - start,
        kappa: l.contact,
        level: l.index,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub s: f64,
    pub lambda_1: f64,
    pub lambda_2: f64,
    pub difference: f64,
    pub sup_distance: f64,
    pub budget: f64,
    pub slack: f64,
    pub holds: bool,
}

fn shared_mesh(ms: &[&Potential], c: &Reaction, s: f64, cfg: &MeshConfig, step: f64) -> Result<Mesh> {
    let mut mesh = Mesh::build_multi(ms, c, (0.0, 1.0), cfg)?;
    for m in ms {
        mesh = mesh.resolve_weight(m, s, step);
    }
    Ok(mesh)
}

/// Compare `|lambda(s, m1) - lambda(s, m2)|` against `c_max (e^{4 s |m1 - m2|} - 1)` on a shared mesh.
pub fn check_continuity_bound(
    template: &ProblemSpec,
    m1: &Potential,
    m2: &Potential,
    s: f64,
    cfg: &MeshConfig,
    max_exponent_step: f64,
    tol: f64,
) -> Result<ContinuityReport> {
    let mesh = shared_mesh(&[m1, m2], &template.c, s, cfg, max_exponent_step)?;
    let l1 = solve(&template.with_s(s).with_potential(m1.clone()), &mesh, tol)?.lambda;
    let l2 = solve(&template.with_s(s).with_potential(m2.clone()), &mesh, tol)?.lambda;
    let dist = sup_distance(m1, m2);
    let budget = continuity_budget(template.c.c_max(), s, dist);
    let slack = 1e-9 * l1.abs().max(l2.abs()).max(1.0);
    let difference = (l1 - l2).abs();
    Ok(ContinuityReport {
        s,
        lambda_1: l1,
        lambda_2: l2,
        difference,
        sup_distance: dist,
        budget,
        slack,
        holds: difference <= budget + slack,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstructionConfig {
    pub d: u32,
    pub reaction: Reaction,
    pub schedule: OscillationSchedule,
    pub depth_max: usize,
    /// Tolerance of step `n` as a fraction of `rho`; defaults to `1 / (n + 1)` past the end.
    pub target_fraction: Vec<f64>,
    pub s_growth: f64,
    pub s_cap: f64,
    pub mesh: MeshConfig,
    pub max_exponent_step: f64,
    pub reference_elements: usize,
    pub tol: f64,
    /// Extra levels in the deeper schedule used by the truncation certificate.
    pub certificate_extra_depth: u32,
}

impl Default for ConstructionConfig {
    fn default() -> Self {
        let schedule = OscillationSchedule::new(Family::DD, 1.0 / 3.0 - 0.1, 0.3, Some(0.6), 12)
            .expect("default schedule is valid");
        Self {
            d: 1,
            reaction: Reaction::plateau(1.0, 100.0, 0.0).expect("default reaction is valid"),
            schedule,
            depth_max: 2,
            target_fraction: Vec::new(),
            s_growth: 1.05,
            s_cap: 2000.0,
            mesh: MeshConfig::default(),
            max_exponent_step: 0.5,
            reference_elements: 2000,
            tol: 1e-12,
            certificate_extra_depth: 3,
        }
    }
}

impl ConstructionConfig {
    pub fn fraction(&self, n: usize) -> f64 {
        self.target_fraction.get(n - 1).copied().unwrap_or(1.0 / (n as f64 + 1.0))
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth_max < 1 {
            return Err(Error::InvalidParameter("depth_max must be at least 1".into()));
        }
        if self.schedule.family != Family::DD {
            return Err(Error::FamilyMismatch { expected: Family::DD });
        }
        self.schedule.validated()?;
        let fr: Vec<f64> = (1..=self.depth_max).map(|n| self.fraction(n)).collect();
        if fr.iter().any(|&f| !(f > 0.0)) || fr.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter("target fractions must be positive and non-increasing".into()));
        }
        if !(self.s_growth > 1.0) || !(self.s_cap > 0.0) {
            return Err(Error::InvalidParameter("s_growth must exceed 1 and s_cap must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub n: usize,
    pub family: Family,
    pub threshold: f64,
    pub s_n: f64,
    pub tau: f64,
    pub delta_tau: f64,
    pub kappa: f64,
    pub kappa_level: u32,
    pub target: f64,
    pub gap_allowed: f64,
    /// `lambda(s_n, m_n)`.
    pub achieved: f64,
    pub achieved_gap: f64,
    /// `lambda(s_n, m_{n+1})`.
    pub after_fold: f64,
    pub fold_shift: f64,
    pub budget: f64,
    pub budget_ok: bool,
    /// `|lambda(s_n, m_{n+1}) - target| <= achieved_gap + budget`.
    pub triangle_ok: bool,
    pub next_family: Family,
    pub next_schedule: Option<OscillationSchedule>,
    pub next_membership: Option<MembershipReport>,
    /// `(s, lambda)` pairs scanned while searching for `s_n`.
    pub scanned: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateRow {
    pub s: f64,
    pub lambda_truncated: f64,
    pub lambda_deeper: f64,
    pub difference: f64,
    pub sup_distance: f64,
    pub budget: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalCheck {
    pub n: usize,
    pub s_n: f64,
    pub target: f64,
    /// `lambda(s_n, m_hat)`.
    pub lambda: f64,
    pub gap: f64,
    /// `2 rho / (n + 1)`, the slack left after all later folds.
    pub gap_allowed: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstructionTrace {
    pub lambda_dd: f64,
    pub lambda_nn: f64,
    pub rho: f64,
    pub c_max: f64,
    pub steps: Vec<StepRecord>,
    pub final_checks: Vec<FinalCheck>,
    pub final_potential: Option<PotentialRecord>,
    pub certificate: Vec<CertificateRow>,
    /// `min lambda(s_odd, m_hat) - max lambda(s_even, m_hat)`.
    pub alternation_amplitude: Option<f64>,
}

impl ConstructionTrace {
    pub fn succeeded(&self) -> bool {
        self.final_potential.is_some()
            && self.steps.iter().all(|s| s.budget_ok && s.achieved_gap < s.gap_allowed)
            && self.final_checks.iter().all(|c| c.ok)
            && self.certificate.iter().all(|c| c.holds)
    }
}

pub struct ConstructionOutcome {
    pub trace: ConstructionTrace,
    pub potential: Option<Potential>,
    pub error: Option<Error>,
}

struct Solver<'a> {
    cfg: &'a ConstructionConfig,
    template: ProblemSpec,
}

impl Solver<'_> {
    fn lambda(&self, m: &Potential, s: f64) -> Result<f64> {
        let mesh = shared_mesh(&[m], &self.cfg.reaction, s, &self.cfg.mesh, self.cfg.max_exponent_step)?;
        Ok(solve(&self.template.with_s(s).with_potential(m.clone()), &mesh, self.cfg.tol)?.lambda)
    }

    fn pair(&self, m1: &Potential, m2: &Potential, s: f64) -> Result<(f64, f64)> {
        let mesh = shared_mesh(&[m1, m2], &self.cfg.reaction, s, &self.cfg.mesh, self.cfg.max_exponent_step)?;
        let run = |m: &Potential| solve(&self.template.with_s(s).with_potential(m.clone()), &mesh, self.cfg.tol);
        Ok((run(m1)?.lambda, run(m2)?.lambda))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwitchPoint {
    pub s: f64,
    pub lambda: f64,
    pub scanned: Vec<(f64, f64)>,
}

/// Smallest `s = s_min * growth^k`, `k >= 1`, with `|lambda(s, m) - target| < gap`.
pub fn find_switch_s(
    template: &ProblemSpec,
    m: &Potential,
    target: f64,
    gap: f64,
    s_min: f64,
    cfg: &ConstructionConfig,
) -> Result<SwitchPoint> {
    let (lo, hi) = (template.c.c_min(), template.c.c_max());
    if target + gap <= lo || target - gap >= hi {
        return Err(Error::UnreachableTarget { target, lo, hi });
    }
    let solver = Solver { cfg, template: template.clone() };
    let mut scanned = Vec::new();
    let mut best = (f64::INFINITY, f64::NAN);
    let mut s = s_min.max(f64::MIN_POSITIVE) * cfg.s_growth;
    while s <= cfg.s_cap {
        let lam = solver.lambda(m, s)?;
        scanned.push((s, lam));
        let g = (lam - target).abs();
        if g < best.0 {
            best = (g, s);
        }
        if g < gap {
            return Ok(SwitchPoint { s, lambda: lam, scanned });
        }
        s *= cfg.s_growth;
    }
    Err(Error::SwitchSearch { best_gap: best.0, best_s: best.1, cap: cfg.s_cap, gap })
}

/// Rebuild `m`'s folds on a deeper copy of its schedule.
fn deepen(m: &Potential, extra: u32) -> Result<Potential> {
    let mut sched = m
        .schedule()
        .cloned()
        .ok_or_else(|| Error::InvalidParameter("not a ladder potential".into()))?;
    sched.depth += extra;
    let mut out = Potential::ladder(&sched, Profile::SmoothBump)?;
    for &k in m.flips() {
        out = out.fold_tail(k)?;
    }
    Ok(out)
}

pub fn run_construction(cfg: &ConstructionConfig) -> ConstructionOutcome {
    run_construction_with(cfg, |_| {})
}

/// Run the construction, reporting each finished step to `on_step`.
pub fn run_construction_with(cfg: &ConstructionConfig, mut on_step: impl FnMut(&StepRecord)) -> ConstructionOutcome {
    let mut trace = ConstructionTrace {
        lambda_dd: f64::NAN,
        lambda_nn: f64::NAN,
        rho: f64::NAN,
        c_max: cfg.reaction.c_max(),
        steps: Vec::new(),
        final_checks: Vec::new(),
        final_potential: None,
        certificate: Vec::new(),
        alternation_amplitude: None,
    };
    match construct(cfg, &mut trace, &mut on_step) {
        Ok(m) => ConstructionOutcome { trace, potential: Some(m), error: None },
        Err(e) => ConstructionOutcome { trace, potential: None, error: Some(e) },
    }
}

fn construct(
    cfg: &ConstructionConfig,
    trace: &mut ConstructionTrace,
    on_step: &mut impl FnMut(&StepRecord),
) -> Result<Potential> {
    cfg.validate()?;
    let ref_mesh = Mesh::uniform((1.0 / 3.0, 2.0 / 3.0), cfg.reference_elements)?;
    let refvals = reference_eigenvalues(&cfg.reaction, cfg.d, &ref_mesh, cfg.tol)?;
    let rho = rho(&refvals)?;
    trace.lambda_dd = refvals.lambda_dd;
    trace.lambda_nn = refvals.lambda_nn;
    trace.rho = rho;
    let c_max = cfg.reaction.c_max();
    let mut m = Potential::build_sdd(&cfg.schedule)?;
    let template = ProblemSpec::full(cfg.d, 0.0, m.clone(), cfg.reaction.clone())?;
    let solver = Solver { cfg, template: template.clone() };
    let mut s_prev = 0.0_f64;
    let mut kappa_prev = 0.0_f64;
    for n in 1..=cfg.depth_max {
        let family = if n % 2 == 1 { Family::DD } else { Family::NN };
        let target = match family {
            Family::DD => refvals.lambda_dd,
            Family::NN => refvals.lambda_nn,
        };
        let threshold = threshold_s(n, rho, c_max);
        let gap = cfg.fraction(n) * rho;
        let sw = find_switch_s(&template, &m, target, gap, s_prev.max(threshold), cfg)?;
        let tau = 1.0 / (sw.s * sw.s);
        let k = kappa(&m, tau)?;
        if !(k.kappa > kappa_prev) {
            return Err(Error::InvalidParameter(format!(
                "fold point {} does not advance past {kappa_prev}",
                k.kappa
            )));
        }
        let next = m.fold_tail(k.kappa)?;
        let (before, after) = solver.pair(&m, &next, sw.s)?;
        let budget = continuity_budget(c_max, sw.s, 2.0 * tau);
        let shift = (after - before).abs();
        let found = search_schedule(&next, family.other(), k.kappa, &SearchGrid::default());
        let rec = StepRecord {
            n,
            family,
            threshold,
            s_n: sw.s,
            tau,
            delta_tau: k.delta_tau,
            kappa: k.kappa,
            kappa_level: k.level,
            target,
            gap_allowed: gap,
            achieved: sw.lambda,
            achieved_gap: (sw.lambda - target).abs(),
            after_fold: after,
            fold_shift: shift,
            budget,
            budget_ok: shift <= budget + 1e-9 * before.abs().max(1.0),
            triangle_ok: (after - target).abs() <= (sw.lambda - target).abs() + budget + 1e-9 * before.abs().max(1.0),
            next_family: family.other(),
            next_schedule: found.as_ref().map(|f| f.0.clone()),
            next_membership: found.as_ref().map(|f| f.1.clone()),
            scanned: sw.scanned,
        };
        on_step(&rec);
        let failed = if found.is_none() {
            Some(Error::Membership(format!("folded potential of step {n} is not in the {:?} family", family.other())))
        } else if !rec.budget_ok {
            Some(Error::InvalidParameter(format!("fold shift {shift:.3e} exceeds its budget {budget:.3e} at step {n}")))
        } else {
            None
        };
        trace.steps.push(rec);
        if let Some(e) = failed {
            return Err(e);
        }
        s_prev = sw.s;
        kappa_prev = k.kappa;
        m = next;
    }

    let deeper = deepen(&m, cfg.certificate_extra_depth)?;
    let dist = sup_distance(&m, &deeper);
    let mut odd_min = f64::INFINITY;
    let mut even_max = f64::NEG_INFINITY;
    for step in trace.steps.clone() {
        let (lt, ld) = solver.pair(&m, &deeper, step.s_n)?;
        let budget = continuity_budget(c_max, step.s_n, dist);
        trace.certificate.push(CertificateRow {
            s: step.s_n,
            lambda_truncated: lt,
            lambda_deeper: ld,
            difference: (lt - ld).abs(),
            sup_distance: dist,
            budget,
            holds: (lt - ld).abs() <= budget + 1e-9 * lt.abs().max(1.0),
        });
        let gap_allowed = 2.0 * rho / (step.n as f64 + 1.0);
        let gap = (lt - step.target).abs();
        trace.final_checks.push(FinalCheck {
            n: step.n,
            s_n: step.s_n,
            target: step.target,
            lambda: lt,
            gap,
            gap_allowed,
            ok: gap <= gap_allowed,
        });
        match step.family {
            Family::DD => odd_min = odd_min.min(lt),
            Family::NN => even_max = even_max.max(lt),
        }
    }
    if odd_min.is_finite() && even_max.is_finite() {
        trace.alternation_amplitude = Some(odd_min - even_max);
    }
    trace.final_potential = Some(m.to_record());
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_threshold() {
        let rho = 9.0 * std::f64::consts::PI.powi(2);
        let t = threshold_s(1, rho, 100.0);
        assert!((t - 8.0 / (1.0 + rho / 200.0).ln()).abs() < 1e-12);
        assert!((t - 21.7682).abs() < 1e-3);
        assert!(threshold_s(2, rho, 100.0) > t);
    }

    #[test]
    fn kappa_moves_inward_as_tau_shrinks() {
        let s = OscillationSchedule::new(Family::DD, 0.2, 0.3, Some(0.6), 8).unwrap();
        let m = Potential::build_sdd(&s).unwrap();
        let a = kappa(&m, 1e-2).unwrap();
        let b = kappa(&m, 1e-4).unwrap();
        assert!(b.kappa > a.kappa);
        assert!(m.sup_abs_beyond(1.0 / 3.0 - a.delta_tau + 1e-12) <= 1e-2 + 1e-15);
        assert!(matches!(kappa(&m, 1e-9), Err(Error::TruncationTooShallow { .. })));
    }

    #[test]
    fn whole_tail_when_tau_is_large() {
        let s = OscillationSchedule::new(Family::DD, 0.2, 0.3, Some(0.6), 4).unwrap();
        let m = Potential::build_sdd(&s).unwrap();
        let k = kappa(&m, 1.0).unwrap();
        assert_eq!(k.kappa, s.levels()[0].contact);
        assert!((k.delta_tau - (1.0 / 3.0 - 0.2)).abs() < 1e-15);
    }
}
