use std::path::{Path, PathBuf};

use advection_eigen::coefficients::potential::RecordKind;
use advection_eigen::coefficients::{Family, PotentialRecord};
use advection_eigen::mesh::MeshConfig;
use advection_eigen::{Potential, Reaction};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

pub const WORKERS_ENV: &str = "ADVECTION_EIGEN_WORKERS";

pub const COMMANDS: &[&str] = &["refvals", "sweep", "counterexample", "verify", "efg", "crosscheck"];

fn canonical_reaction() -> Reaction {
    Reaction::plateau(1.0, 100.0, 0.0).expect("canonical reaction is valid")
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Geometric,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
    /// Explicit values; overrides the other fields when present.
    pub values: Option<Vec<f64>>,
}

impl Default for Grid {
    fn default() -> Self {
        Self { start: 1.0, stop: 300.0, count: 25, spacing: Spacing::Geometric, values: None }
    }
}

impl Grid {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        if let Some(v) = &self.values {
            if v.is_empty() || v.windows(2).any(|w| !(w[1] > w[0])) || v.iter().any(|x| !x.is_finite()) {
                return Err(CliError::Config("grid values must be finite and strictly increasing".into()));
            }
            return Ok(v.clone());
        }
        if self.count < 2 || !(self.stop > self.start) {
            return Err(CliError::Config("grid needs count >= 2 and stop > start".into()));
        }
        let n = self.count - 1;
        Ok(match self.spacing {
            Spacing::Geometric => {
                if !(self.start > 0.0) {
                    return Err(CliError::Config("geometric grid needs start > 0".into()));
                }
                (0..=n).map(|i| self.start * (self.stop / self.start).powf(i as f64 / n as f64)).collect()
            }
            Spacing::Linear => (0..=n).map(|i| self.start + (self.stop - self.start) * i as f64 / n as f64).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefvalsConfig {
    pub out_dir: PathBuf,
    pub workers: usize,
    pub d: u32,
    pub reaction: Reaction,
    pub elements: usize,
    pub tol: f64,
    pub crosscheck_tol: f64,
}

impl Default for RefvalsConfig {
    fn default() -> Self {
        Self {
            out_dir: default_out(),
            workers: 1,
            d: 1,
            reaction: canonical_reaction(),
            elements: 2000,
            tol: 1e-13,
            crosscheck_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub out_dir: PathBuf,
    pub workers: usize,
    pub d: u32,
    pub reaction: Reaction,
    pub potential: PotentialRecord,
    pub grid: Grid,
    pub mesh: MeshConfig,
    pub max_exponent_step: f64,
    pub tol: f64,
    pub tail_fraction: f64,
    pub trend_tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            out_dir: default_out(),
            workers: 1,
            d: 1,
            reaction: canonical_reaction(),
            potential: PotentialRecord {
                kind: Some(RecordKind::Ladder),
                family: Some(Family::DD),
                delta: Some(1.0 / 3.0 - 1e-3),
                alpha: Some(0.25),
                beta: Some(0.5),
                depth: Some(4),
                ..PotentialRecord::default()
            },
            grid: Grid::default(),
            mesh: MeshConfig::default(),
            max_exponent_step: 0.5,
            tol: 1e-12,
            tail_fraction: 0.25,
            trend_tol: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub depth: u32,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self { delta: 1.0 / 3.0 - 0.1, alpha: 0.3, beta: 0.6, depth: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub out_dir: PathBuf,
    pub workers: usize,
    pub d: u32,
    pub reaction: Reaction,
    pub schedule: ScheduleConfig,
    pub depth_max: usize,
    pub target_fraction: Vec<f64>,
    pub s_growth: f64,
    pub s_cap: f64,
    pub mesh: MeshConfig,
    pub max_exponent_step: f64,
    pub reference_elements: usize,
    pub tol: f64,
    pub certificate_extra_depth: u32,
    /// Geometric samples in the confirmation sweep, in addition to every `s_n`.
    pub confirm_points: usize,
    pub trend_tol: f64,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        let c = advection_eigen::construction::ConstructionConfig::default();
        Self {
            out_dir: default_out(),
            workers: 1,
            d: c.d,
            reaction: c.reaction,
            schedule: ScheduleConfig::default(),
            depth_max: c.depth_max,
            target_fraction: c.target_fraction,
            s_growth: c.s_growth,
            s_cap: c.s_cap,
            mesh: c.mesh,
            max_exponent_step: c.max_exponent_step,
            reference_elements: c.reference_elements,
            tol: c.tol,
            certificate_extra_depth: c.certificate_extra_depth,
            confirm_points: 40,
            trend_tol: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub out_dir: PathBuf,
    pub workers: usize,
    pub checks: Vec<String>,
    pub seed: u64,
    pub cases: usize,
    /// Replace the crosscheck meshes by uniform meshes with this many elements.
    pub crosscheck_elements: Option<usize>,
}

pub const VERIFY_CHECKS: &[&str] = &["analytic", "bounds", "ladder", "continuity", "crosscheck"];

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            out_dir: default_out(),
            workers: 1,
            checks: VERIFY_CHECKS.iter().map(|s| s.to_string()).collect(),
            seed: 1,
            cases: 12,
            crosscheck_elements: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EfgConfig {
    pub out_dir: PathBuf,
    pub workers: usize,
    pub alpha: f64,
    pub grid: Grid,
    pub tail_tol: f64,
    pub eps: f64,
}

impl Default for EfgConfig {
    fn default() -> Self {
        Self {
            out_dir: default_out(),
            workers: 1,
            alpha: 0.25,
            grid: Grid { start: 1.0, stop: 1000.0, count: 31, ..Grid::default() },
            tail_tol: 1e-16,
            eps: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrosscheckConfig {
    pub out_dir: PathBuf,
    pub workers: usize,
    pub seed: u64,
    pub cases: usize,
    pub d_max: u32,
    pub s_max: f64,
    pub depth_max: u32,
    pub tol: f64,
    pub mesh: MeshConfig,
    /// Replace the built meshes by uniform meshes with this many elements.
    pub elements: Option<usize>,
}

impl Default for CrosscheckConfig {
    fn default() -> Self {
        Self {
            out_dir: default_out(),
            workers: 1,
            seed: 2,
            cases: 20,
            d_max: 3,
            s_max: 50.0,
            depth_max: 2,
            tol: 1e-6,
            mesh: MeshConfig { min_elems_per_interval: 16, max_element_size: 1.0 / 4000.0, ..MeshConfig::default() },
            elements: None,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Experiment {
    Refvals(RefvalsConfig),
    Sweep(SweepConfig),
    Counterexample(CounterexampleConfig),
    Verify(VerifyConfig),
    Efg(EfgConfig),
    Crosscheck(CrosscheckConfig),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Refvals(_) => "refvals",
            Experiment::Sweep(_) => "sweep",
            Experiment::Counterexample(_) => "counterexample",
            Experiment::Verify(_) => "verify",
            Experiment::Efg(_) => "efg",
            Experiment::Crosscheck(_) => "crosscheck",
        }
    }

    pub fn out_dir(&self) -> &Path {
        match self {
            Experiment::Refvals(c) => &c.out_dir,
            Experiment::Sweep(c) => &c.out_dir,
            Experiment::Counterexample(c) => &c.out_dir,
            Experiment::Verify(c) => &c.out_dir,
            Experiment::Efg(c) => &c.out_dir,
            Experiment::Crosscheck(c) => &c.out_dir,
        }
    }

    pub fn workers(&self) -> usize {
        match self {
            Experiment::Refvals(c) => c.workers,
            Experiment::Sweep(c) => c.workers,
            Experiment::Counterexample(c) => c.workers,
            Experiment::Verify(c) => c.workers,
            Experiment::Efg(c) => c.workers,
            Experiment::Crosscheck(c) => c.workers,
        }
    }

    /// The resolved configuration, as written next to the outputs.
    pub fn to_json(&self) -> Value {
        let body = match self {
            Experiment::Refvals(c) => serde_json::to_value(c),
            Experiment::Sweep(c) => serde_json::to_value(c),
            Experiment::Counterexample(c) => serde_json::to_value(c),
            Experiment::Verify(c) => serde_json::to_value(c),
            Experiment::Efg(c) => serde_json::to_value(c),
            Experiment::Crosscheck(c) => serde_json::to_value(c),
        };
        let mut v = body.expect("configs serialize");
        if let Value::Object(m) = &mut v {
            m.insert("command".into(), Value::String(self.name().into()));
        }
        v
    }
}

/// Parse `key=value`; the value is read as JSON and falls back to a plain string.
pub fn parse_override(s: &str) -> Result<(Vec<String>, Value), CliError> {
    let (k, v) = s.split_once('=').ok_or_else(|| CliError::Config(format!("override `{s}` is not key=value")))?;
    let path: Vec<String> = k.trim().split('.').map(str::to_string).collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("override key `{k}` is malformed")));
    }
    let value = serde_json::from_str(v.trim()).unwrap_or_else(|_| Value::String(v.trim().to_string()));
    Ok((path, value))
}

fn set_path(root: &mut Map<String, Value>, path: &[String], value: Value) -> Result<(), CliError> {
    let (last, parents) = path.split_last().expect("override path is non-empty");
    let mut cur = root;
    for p in parents {
        let entry = cur.entry(p.clone()).or_insert_with(|| Value::Object(Map::new()));
        cur = match entry {
            Value::Object(m) => m,
            _ => return Err(CliError::Config(format!("override path `{}` crosses a non-object", path.join(".")))),
        };
    }
    cur.insert(last.clone(), value);
    Ok(())
}

fn parse_body<T: DeserializeOwned + Serialize + Default>(command: &str, body: Map<String, Value>) -> Result<T, CliError> {
    // start from the defaults so nested objects only need the fields being changed
    let mut base = match serde_json::to_value(T::default()).expect("defaults serialize") {
        Value::Object(m) => m,
        _ => unreachable!("configs are objects"),
    };
    merge(&mut base, body);
    serde_json::from_value(Value::Object(base)).map_err(|e| CliError::Config(format!("{command} config: {e}")))
}

fn merge(base: &mut Map<String, Value>, over: Map<String, Value>) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Object(b)), Value::Object(o)) if !replaces_whole(&k) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Tagged objects whose variants have different fields are replaced, not merged.
fn replaces_whole(key: &str) -> bool {
    key == "reaction"
}

/// Build the experiment from an optional config document, the subcommand and overrides.
pub fn resolve(
    file: Option<Value>,
    command: Option<&str>,
    overrides: &[(Vec<String>, Value)],
    workers_env: Option<&str>,
) -> Result<Experiment, CliError> {
    let mut body = match file {
        None => Map::new(),
        Some(Value::Object(m)) => m,
        Some(_) => return Err(CliError::Config("config file must hold a JSON object".into())),
    };
    let file_command = match body.remove("command") {
        None => None,
        Some(Value::String(s)) => Some(s),
        Some(other) => return Err(CliError::Config(format!("`command` must be a string, got {other}"))),
    };
    let command = match (command, file_command.as_deref()) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::Config(format!("subcommand `{a}` disagrees with config command `{b}`")))
        }
        (Some(a), _) => a.to_string(),
        (None, Some(b)) => b.to_string(),
        (None, None) => return Err(CliError::Config("no command given on the command line or in the config".into())),
    };
    if let Some(w) = workers_env {
        let n: usize = w
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{WORKERS_ENV}=`{w}` is not a worker count")))?;
        body.insert("workers".into(), Value::from(n));
    }
    for (path, value) in overrides {
        set_path(&mut body, path, value.clone())?;
    }
    let exp = match command.as_str() {
        "refvals" => Experiment::Refvals(parse_body("refvals", body)?),
        "sweep" => Experiment::Sweep(parse_body("sweep", body)?),
        "counterexample" => Experiment::Counterexample(parse_body("counterexample", body)?),
        "verify" => Experiment::Verify(parse_body("verify", body)?),
        "efg" => Experiment::Efg(parse_body("efg", body)?),
        "crosscheck" => Experiment::Crosscheck(parse_body("crosscheck", body)?),
        other => return Err(CliError::Config(format!("unknown command `{other}` (expected one of {COMMANDS:?})"))),
    };
    validate(&exp)?;
    Ok(exp)
}

fn check(ok: bool, msg: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(msg.to_string()))
    }
}

fn validate(exp: &Experiment) -> Result<(), CliError> {
    check(exp.workers() >= 1, "workers must be at least 1")?;
    match exp {
        Experiment::Refvals(c) => {
            check((1..=3).contains(&c.d), "d must be 1, 2 or 3")?;
            check(c.elements >= 2, "elements must be at least 2")?;
            check(c.tol > 0.0 && c.crosscheck_tol > 0.0, "tolerances must be positive")?;
        }
        Experiment::Sweep(c) => {
            check((1..=3).contains(&c.d), "d must be 1, 2 or 3")?;
            Potential::from_record(&c.potential).map_err(|e| CliError::Config(format!("potential: {e}")))?;
            let pts = c.grid.points()?;
            check(pts.iter().all(|&s| s >= 0.0), "s values must be nonnegative")?;
            check(c.tol > 0.0 && c.max_exponent_step > 0.0, "tolerances must be positive")?;
            check(c.tail_fraction > 0.0 && c.tail_fraction <= 1.0, "tail_fraction must lie in (0, 1]")?;
        }
        Experiment::Counterexample(c) => {
            check((1..=3).contains(&c.d), "d must be 1, 2 or 3")?;
            check(c.confirm_points >= 2, "confirm_points must be at least 2")?;
            to_construction(c)?.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        Experiment::Verify(c) => {
            for name in &c.checks {
                check(VERIFY_CHECKS.contains(&name.as_str()), &format!("unknown check `{name}` (known: {VERIFY_CHECKS:?})"))?;
            }
            check(c.cases >= 1, "cases must be at least 1")?;
        }
        Experiment::Efg(c) => {
            check(c.alpha > 0.0 && c.alpha < 1.0, "alpha must lie in (0, 1)")?;
            check(c.eps > 0.0 && c.eps < 1.0, "eps must lie in (0, 1)")?;
            check(c.tail_tol > 0.0, "tail_tol must be positive")?;
            let pts = c.grid.points()?;
            check(pts.iter().all(|&s| s >= 0.0), "s values must be nonnegative")?;
        }
        Experiment::Crosscheck(c) => {
            check((1..=3).contains(&c.d_max), "d_max must be 1, 2 or 3")?;
            check(c.s_max >= 0.0 && c.tol > 0.0, "s_max and tol must be nonnegative and positive")?;
            check((1..=6).contains(&c.depth_max), "depth_max must lie in 1..=6")?;
            check(c.cases >= 1, "cases must be at least 1")?;
        }
    }
    Ok(())
}

pub fn to_construction(c: &CounterexampleConfig) -> Result<advection_eigen::construction::ConstructionConfig, CliError> {
    let schedule = advection_eigen::OscillationSchedule::new(
        Family::DD,
        c.schedule.delta,
        c.schedule.alpha,
        Some(c.schedule.beta),
        c.schedule.depth,
    )
    .map_err(|e| CliError::Config(format!("schedule: {e}")))?;
    Ok(advection_eigen::construction::ConstructionConfig {
        d: c.d,
        reaction: c.reaction.clone(),
        schedule,
        depth_max: c.depth_max,
        target_fraction: c.target_fraction.clone(),
        s_growth: c.s_growth,
        s_cap: c.s_cap,
        mesh: c.mesh.clone(),
        max_exponent_step: c.max_exponent_step,
        reference_elements: c.reference_elements,
        tol: c.tol,
        certificate_extra_depth: c.certificate_extra_depth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_reach_nested_fields() {
        let ov = vec![parse_override("grid.count=9").unwrap(), parse_override("potential.depth=3").unwrap()];
        let Experiment::Sweep(c) = resolve(None, Some("sweep"), &ov, None).unwrap() else { panic!() };
        assert_eq!(c.grid.count, 9);
        assert_eq!(c.potential.depth, Some(3));
        assert_eq!(c.grid.stop, 300.0);
    }

    #[test]
    fn env_sets_workers_and_flags_win() {
        let ov = vec![parse_override("workers=3").unwrap()];
        let e = resolve(None, Some("efg"), &[], Some("5")).unwrap();
        assert_eq!(e.workers(), 5);
        let e = resolve(None, Some("efg"), &ov, Some("5")).unwrap();
        assert_eq!(e.workers(), 3);
    }

    #[test]
    fn file_command_is_used() {
        let file = serde_json::json!({"command": "efg", "alpha": 0.5});
        let Experiment::Efg(c) = resolve(Some(file), None, &[], None).unwrap() else { panic!() };
        assert_eq!(c.alpha, 0.5);
    }

    #[test]
    fn conflicts_and_typos_are_config_errors() {
        let file = serde_json::json!({"command": "efg"});
        assert!(matches!(resolve(Some(file), Some("sweep"), &[], None), Err(CliError::Config(_))));
        let file = serde_json::json!({"alpah": 0.5});
        assert!(matches!(resolve(Some(file), Some("efg"), &[], None), Err(CliError::Config(_))));
        assert!(matches!(resolve(None, None, &[], None), Err(CliError::Config(_))));
    }

    #[test]
    fn reaction_is_replaced_whole() {
        let file = serde_json::json!({"reaction": {"kind": "polynomial", "coeffs": [2.0]}});
        let Experiment::Refvals(c) = resolve(Some(file), Some("refvals"), &[], None).unwrap() else { panic!() };
        assert_eq!(c.reaction.c_min(), 2.0);
    }
}
