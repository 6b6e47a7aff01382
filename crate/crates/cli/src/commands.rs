use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use advection_eigen::asymptotics::{efg, ladder, trend, window_indices};
use advection_eigen::construction::{check_continuity_bound, run_construction_with, threshold_s};
use advection_eigen::eigensolver::{eigenvalue_sweep, reference_eigenvalues, solve, SweepOptions, SweepRow};
use advection_eigen::io::{efg_csv, jsonl, sweep_csv, write_atomic, EfgRow};
use advection_eigen::oracle::{crosscheck, CrosscheckRecord};
use advection_eigen::{Bc, Mesh, MeshConfig, Potential, ProblemSpec, Reaction};
use advection_eigen::coefficients::{ONE_THIRD, TWO_THIRDS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::cases;
use crate::config::*;
use crate::CliError;

/// Whether every check the command performs passed.
pub struct Outcome {
    pub passed: bool,
    pub summary: String,
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    write_atomic(&dir.join(name), contents).map_err(|e| CliError::Io(format!("{}: {e}", dir.join(name).display())))
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("outputs serialize");
    s.push('\n');
    s
}

/// Map `f` over `items` on `workers` threads, results in input order.
fn pool_map<T: Sync, R: Send>(workers: usize, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

pub fn run(exp: &Experiment) -> Result<Outcome, CliError> {
    let dir = exp.out_dir();
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    write(dir, "config.json", &pretty(&exp.to_json()))?;
    match exp {
        Experiment::Refvals(c) => refvals(c),
        Experiment::Sweep(c) => sweep(c),
        Experiment::Counterexample(c) => counterexample(c),
        Experiment::Verify(c) => verify(c),
        Experiment::Efg(c) => efg_sweep(c),
        Experiment::Crosscheck(c) => crosscheck_cmd(c),
    }
}

fn refvals(c: &RefvalsConfig) -> Result<Outcome, CliError> {
    let mesh = Mesh::uniform((ONE_THIRD, TWO_THIRDS), c.elements)?;
    let rv = reference_eigenvalues(&c.reaction, c.d, &mesh, c.tol)?;
    let bcs = [
        ("NN", (Bc::Neumann, Bc::Neumann)),
        ("ND", (Bc::Neumann, Bc::Dirichlet)),
        ("DN", (Bc::Dirichlet, Bc::Neumann)),
        ("DD", (Bc::Dirichlet, Bc::Dirichlet)),
    ];
    let records: Vec<CrosscheckRecord> = pool_map(c.workers, &bcs, |(name, bc)| {
        let spec = ProblemSpec::middle(c.d, c.reaction.clone(), *bc)?;
        crosscheck(&format!("refvals-{name}"), &spec, &mesh, c.crosscheck_tol)
    })
    .into_iter()
    .collect::<Result<_, _>>()?;
    let passed = records.iter().all(|r| r.pass);
    let doc = json!({
        "d": c.d,
        "elements": c.elements,
        "lambda_nn": rv.lambda_nn,
        "lambda_nd": rv.lambda_nd,
        "lambda_dn": rv.lambda_dn,
        "lambda_dd": rv.lambda_dd,
        "rho": rv.rho(),
        "crosscheck_pass": passed,
    });
    write(&c.out_dir, "refvals.json", &pretty(&doc))?;
    write(&c.out_dir, "crosscheck.jsonl", &jsonl(&records).expect("records serialize"))?;
    Ok(Outcome {
        passed,
        summary: format!(
            "lambda_nn = {:.12}, lambda_nd = {:.12}, lambda_dn = {:.12}, lambda_dd = {:.12}; crosscheck {}",
            rv.lambda_nn,
            rv.lambda_nd,
            rv.lambda_dn,
            rv.lambda_dd,
            if passed { "passed" } else { "FAILED" }
        ),
    })
}

fn sweep_and_trend(
    dir: &Path,
    template: &ProblemSpec,
    grid: &[f64],
    base: &Mesh,
    opts: &SweepOptions,
    tail_fraction: f64,
    trend_tol: f64,
    stem: &str,
) -> Result<Vec<SweepRow>, CliError> {
    let rows = eigenvalue_sweep(template, grid, base, opts);
    write(dir, &format!("{stem}.csv"), &sweep_csv(&rows))?;
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.ok()).collect();
    let s: Vec<f64> = ok.iter().map(|r| r.s).collect();
    let l: Vec<f64> = ok.iter().map(|r| r.lambda).collect();
    match trend(&s, &l, tail_fraction, trend_tol) {
        Ok(t) => write(dir, "trend.json", &pretty(&t))?,
        Err(e) => eprintln!("warning: no trend report: {e}"),
    }
    Ok(rows)
}

fn sweep(c: &SweepConfig) -> Result<Outcome, CliError> {
    let m = Potential::from_record(&c.potential).map_err(|e| CliError::Config(format!("potential: {e}")))?;
    let template = ProblemSpec::full(c.d, 0.0, m.clone(), c.reaction.clone())?;
    let base = Mesh::build(&m, &c.reaction, (0.0, 1.0), &c.mesh)?;
    let opts = SweepOptions { tol: c.tol, max_exponent_step: Some(c.max_exponent_step), workers: c.workers };
    let grid = c.grid.points()?;
    let rows = sweep_and_trend(&c.out_dir, &template, &grid, &base, &opts, c.tail_fraction, c.trend_tol, "sweep")?;
    let failed = rows.iter().filter(|r| !r.ok()).count();
    if failed == rows.len() {
        return Err(CliError::Numerical(format!("every sample failed; first: {:?}", rows[0].error)));
    }
    let last = rows.iter().rev().find(|r| r.ok()).expect("some row succeeded");
    Ok(Outcome {
        passed: true,
        summary: format!(
            "{} samples ({failed} failed), lambda({}) = {:.12}, trace ratio {:.3e}",
            rows.len(),
            last.s,
            last.lambda,
            last.trace_ratio()
        ),
    })
}

fn counterexample(c: &CounterexampleConfig) -> Result<Outcome, CliError> {
    let cfg = to_construction(c)?;
    let trace_path = c.out_dir.join("trace.jsonl");
    let mut trace_file = File::create(&trace_path).map_err(|e| CliError::Io(format!("{}: {e}", trace_path.display())))?;
    let mut io_error = None;
    let out = run_construction_with(&cfg, |step| {
        let line = serde_json::to_string(step).expect("steps serialize");
        if let Err(e) = writeln!(trace_file, "{line}").and_then(|_| trace_file.flush()) {
            io_error.get_or_insert(e);
        }
    });
    if let Some(e) = io_error {
        return Err(CliError::Io(format!("{}: {e}", trace_path.display())));
    }
    write(&c.out_dir, "trace.json", &pretty(&out.trace))?;
    let tr = &out.trace;
    for st in &tr.steps {
        let want = threshold_s(st.n, tr.rho, tr.c_max);
        if (st.threshold - want).abs() > 1e-12 * want {
            return Err(CliError::Numerical(format!("step {} threshold {} != {}", st.n, st.threshold, want)));
        }
    }
    if let Some(e) = &out.error {
        return Err(CliError::from(e.clone()));
    }
    let m = out.potential.as_ref().expect("completed construction has a potential");
    write(&c.out_dir, "potential.json", &format!("{}\n", m.to_json()))?;
    let s_n: Vec<f64> = tr.final_checks.iter().map(|f| f.s_n).collect();
    let (lo, hi) = (s_n[0] / 2.0, s_n[s_n.len() - 1] * 1.2);
    let n = c.confirm_points - 1;
    let mut grid: Vec<f64> = (0..=n).map(|i| lo * (hi / lo).powf(i as f64 / n as f64)).collect();
    grid.extend(&s_n);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let template = ProblemSpec::full(c.d, 0.0, m.clone(), c.reaction.clone())?;
    let base = Mesh::build(m, &c.reaction, (0.0, 1.0), &c.mesh)?;
    let opts = SweepOptions { tol: c.tol, max_exponent_step: Some(c.max_exponent_step), workers: c.workers };
    sweep_and_trend(&c.out_dir, &template, &grid, &base, &opts, 0.25, c.trend_tol, "confirm")?;
    let passed = tr.succeeded();
    Ok(Outcome {
        passed,
        summary: format!(
            "s_n = {s_n:?}, lambda = {:?}, amplitude {:.4} (rho/2 = {:.4}), {}",
            tr.final_checks.iter().map(|f| f.lambda).collect::<Vec<_>>(),
            tr.alternation_amplitude.unwrap_or(f64::NAN),
            tr.rho / 2.0,
            if passed { "all checks passed" } else { "checks FAILED" }
        ),
    })
}

#[derive(Debug, Serialize)]
struct CheckResult {
    name: String,
    pass: bool,
    cases: usize,
    failures: usize,
    worst: f64,
    detail: String,
}

fn check_result(name: &str, flags: &[(bool, f64)], detail: String) -> CheckResult {
    let failures = flags.iter().filter(|f| !f.0).count();
    CheckResult {
        name: name.into(),
        pass: failures == 0,
        cases: flags.len(),
        failures,
        worst: flags.iter().map(|f| f.1).fold(0.0, f64::max),
        detail,
    }
}

fn check_analytic() -> Result<CheckResult, CliError> {
    let c = Reaction::constant(1.0)?;
    let mesh = Mesh::uniform((ONE_THIRD, TWO_THIRDS), 2000)?;
    let q = 1.0 + 9.0 * PI * PI / 4.0;
    let mut flags = Vec::new();
    for (bc, want) in [
        ((Bc::Neumann, Bc::Neumann), 1.0),
        ((Bc::Neumann, Bc::Dirichlet), q),
        ((Bc::Dirichlet, Bc::Neumann), q),
        ((Bc::Dirichlet, Bc::Dirichlet), 1.0 + 9.0 * PI * PI),
    ] {
        let got = solve(&ProblemSpec::middle(1, c.clone(), bc)?, &mesh, 1e-13)?.lambda;
        let rel = (got - want).abs() / want;
        flags.push((rel <= 1e-6, rel));
    }
    let full = Mesh::uniform((0.0, 1.0), 500)?;
    for d in 1..=3 {
        let c0 = Reaction::constant(3.0)?;
        let got = solve(&ProblemSpec::full(d, 0.0, Potential::zero(), c0)?, &full, 1e-13)?.lambda;
        let rel = (got - 3.0).abs() / 3.0;
        flags.push((rel <= 1e-8, rel));
    }
    Ok(check_result("analytic", &flags, "closed-form reference eigenvalues, worst relative error".into()))
}

fn check_bounds(rng: &mut ChaCha8Rng, cases: usize, workers: usize) -> Result<CheckResult, CliError> {
    let items: Vec<(Potential, Reaction, u32, f64)> = (0..cases)
        .map(|_| (cases::ladder(rng, 4), cases::smooth_reaction(rng), rng.gen_range(1..=3), rng.gen_range(0.0..300.0)))
        .collect();
    let flags: Vec<(bool, f64)> = pool_map(workers, &items, |(m, c, d, s)| -> Result<(bool, f64), CliError> {
        let mesh = Mesh::build(m, c, (0.0, 1.0), &MeshConfig::default())?.resolve_weight(m, *s, 0.5);
        let l = solve(&ProblemSpec::full(*d, *s, m.clone(), c.clone())?, &mesh, 1e-12)?.lambda;
        let tol = 1e-8 * c.c_max().abs().max(1.0);
        let excess = (c.c_min() - l).max(l - c.c_max()).max(0.0);
        Ok((excess <= tol, excess))
    })
    .into_iter()
    .collect::<Result<_, _>>()?;
    Ok(check_result("bounds", &flags, "c_min <= lambda <= c_max on full-domain solves, worst excess".into()))
}

fn check_ladder() -> Result<CheckResult, CliError> {
    let mut flags = Vec::new();
    for alpha in [0.2, 0.25, 0.5] {
        for s in [0.0, 1.0, 10.0, 100.0, 1000.0] {
            let lad = ladder(alpha, s, 1e-16)?;
            for n in (1..=20).filter(|&n| lad.ell(n) >= f64::MIN_POSITIVE && lad.sigma(n).is_finite()) {
                let err = ((lad.ell(n + 1) - lad.ell(n)) - lad.sigma(n) * lad.ell(n)).abs()
                    / lad.ell(n + 1);
                flags.push((err <= 1e-12, err));
            }
        }
    }
    Ok(check_result("ladder", &flags, "l_{n+1} - l_n = sigma_n l_n, worst relative error".into()))
}

fn check_continuity(rng: &mut ChaCha8Rng, cases: usize, workers: usize) -> Result<CheckResult, CliError> {
    let items: Vec<((Potential, Potential), Reaction)> =
        (0..cases).map(|_| (cases::potential_pair(rng), cases::smooth_reaction(rng))).collect();
    let nested: Vec<Vec<(bool, f64)>> = pool_map(workers, &items, |((m1, m2), c)| -> Result<Vec<(bool, f64)>, CliError> {
        let template = ProblemSpec::full(1, 0.0, Potential::zero(), c.clone())?;
        [1.0, 10.0, 50.0]
            .iter()
            .map(|&s| {
                let r = check_continuity_bound(&template, m1, m2, s, &MeshConfig::default(), 0.5, 1e-12)?;
                Ok((r.holds, (r.difference - r.budget).max(0.0)))
            })
            .collect()
    })
    .into_iter()
    .collect::<Result<_, _>>()?;
    let flags: Vec<(bool, f64)> = nested.into_iter().flatten().collect();
    Ok(check_result("continuity", &flags, "|lambda_1 - lambda_2| <= c_max (e^{4 s |dm|} - 1), worst excess".into()))
}

struct OracleCase {
    id: String,
    spec: ProblemSpec,
    mesh: Mesh,
}

fn oracle_cases(
    rng: &mut ChaCha8Rng,
    cases: usize,
    d_max: u32,
    s_max: f64,
    depth_max: u32,
    mesh_cfg: &MeshConfig,
    elements: Option<usize>,
) -> Result<Vec<OracleCase>, CliError> {
    (0..cases)
        .map(|k| {
            let m = cases::smooth_potential(rng, depth_max);
            let c = cases::smooth_reaction(rng);
            let d = rng.gen_range(1..=d_max);
            let s = rng.gen_range(0.0..=s_max);
            let mesh = match elements {
                Some(n) => Mesh::uniform((0.0, 1.0), n)?,
                None => Mesh::build(&m, &c, (0.0, 1.0), mesh_cfg)?.resolve_weight(&m, s, 0.5),
            };
            Ok(OracleCase { id: format!("case-{k:03}"), spec: ProblemSpec::full(d, s, m, c)?, mesh })
        })
        .collect()
}

fn run_oracle(items: &[OracleCase], tol: f64, workers: usize) -> Result<Vec<CrosscheckRecord>, CliError> {
    pool_map(workers, items, |case| crosscheck(&case.id, &case.spec, &case.mesh, tol).map_err(CliError::from))
        .into_iter()
        .collect()
}

fn verify(c: &VerifyConfig) -> Result<Outcome, CliError> {
    if c.checks.is_empty() {
        eprintln!("warning: verify was given an empty check list; nothing to do");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut results = Vec::new();
    for name in &c.checks {
        let r = match name.as_str() {
            "analytic" => check_analytic()?,
            "bounds" => check_bounds(&mut rng, c.cases, c.workers)?,
            "ladder" => check_ladder()?,
            "continuity" => check_continuity(&mut rng, c.cases, c.workers)?,
            "crosscheck" => {
                let cfg = CrosscheckConfig::default();
                let items = oracle_cases(&mut rng, c.cases, 3, 50.0, 2, &cfg.mesh, c.crosscheck_elements)?;
                let recs = run_oracle(&items, 1e-6, c.workers)?;
                let flags: Vec<(bool, f64)> = recs.iter().map(|r| (r.pass, r.rel_err)).collect();
                check_result("crosscheck", &flags, "Galerkin vs shooting, worst relative difference".into())
            }
            other => return Err(CliError::Config(format!("unknown check `{other}`"))),
        };
        results.push(r);
    }
    let passed = results.iter().all(|r| r.pass);
    let failing: Vec<&str> = results.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
    write(&c.out_dir, "verify.json", &pretty(&json!({ "pass": passed, "checks": results })))?;
    Ok(Outcome {
        passed,
        summary: if passed {
            format!("{} checks passed", results.len())
        } else {
            format!("failing checks: {}", failing.join(", "))
        },
    })
}

fn efg_sweep(c: &EfgConfig) -> Result<Outcome, CliError> {
    let grid = c.grid.points()?;
    let rows: Vec<EfgRow> = pool_map(c.workers, &grid, |&s| -> Result<EfgRow, CliError> {
        let lad = ladder(c.alpha, s, c.tail_tol)?;
        let v = efg(&lad);
        let w = window_indices(&lad, c.eps)?;
        Ok(EfgRow { s, e: v.e, f: v.f, g: v.g, k1: w.k1, k2: w.k2 })
    })
    .into_iter()
    .collect::<Result<_, _>>()?;
    write(&c.out_dir, "efg.csv", &efg_csv(&rows))?;
    let (a, b) = (&rows[0], &rows[rows.len() - 1]);
    Ok(Outcome {
        passed: true,
        summary: format!(
            "s = {} -> {}: E {:.3e} -> {:.3e}, F {:.3e} -> {:.3e}, G {:.3e} -> {:.3e}",
            a.s, b.s, a.e, b.e, a.f, b.f, a.g, b.g
        ),
    })
}

fn crosscheck_cmd(c: &CrosscheckConfig) -> Result<Outcome, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let items = oracle_cases(&mut rng, c.cases, c.d_max, c.s_max, c.depth_max, &c.mesh, c.elements)?;
    let recs = run_oracle(&items, c.tol, c.workers)?;
    write(&c.out_dir, "crosscheck.jsonl", &jsonl(&recs).expect("records serialize"))?;
    let failed = recs.iter().filter(|r| !r.pass).count();
    let worst = recs.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    Ok(Outcome {
        passed: failed == 0,
        summary: format!("{}/{} cases agree to {:e}, worst relative difference {worst:.3e}", recs.len() - failed, recs.len(), c.tol),
    })
}
