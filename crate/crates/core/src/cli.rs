//! Command implementations behind the `lionlab` binary: JSON run configs,
//! CSV/JSON output, invariant suites and rate fits.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 divergence, 4 I/O error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::distributed::{cluster_init, ClusterVariant, CommLedger, CompressorId};
use crate::error::{LionError, Result};
use crate::harness::{
    fit_rate, median_by_horizon, par_map, run_variant, sweep, CompressorKind, RateFit, RunRecord,
    Summary, SweepSpec, Trajectory, Variant,
};
use crate::lion::{lion_init, CentralVariant, Hyper};
use crate::problems::{benchmark_config, make_logreg_problem, Problem, ProblemConfig, CERT_BOX};
use crate::rng::{seeded, stream, Purpose};
use crate::schedules::{schedule_for, validate, Relation, Schedule, TheoremId};
use crate::vecops::{unbiased_sign, Vector};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Header of every per-run CSV.
pub const CSV_HEADER: &str =
    "t,grad_l1,grad_l2_sq,est_err_v,est_err_m,x_inf,step_sq,bits_up,bits_down";

/// Names accepted by [`cmd_verify`].
pub const SUITES: [&str; 5] = [
    "lemma1",
    "unbiased-sign",
    "reduction",
    "bits",
    "assumptions",
];

pub fn exit_code(e: &LionError) -> i32 {
    match e.category() {
        "divergence" => EXIT_DIVERGENCE,
        "io" => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn report_error(e: &LionError) -> i32 {
    eprintln!(
        "{}",
        json!({ "category": e.category(), "message": e.to_string() })
    );
    exit_code(e)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q1: Option<CompressorKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q2: Option<CompressorKind>,
}

/// Either a theorem id, explicit values, or a theorem id with overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem_id: Option<TheoremId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[serde(rename = "B0", default, skip_serializing_if = "Option::is_none")]
    pub b0: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunParams {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub algorithm: AlgorithmConfig,
    pub schedule: ScheduleConfig,
    pub run: RunParams,
}

/// Rule set applied to explicit schedules that name no theorem.
fn default_theorem(variant: Variant, q2: Option<CompressorKind>) -> TheoremId {
    match variant {
        Variant::LionV1 => TheoremId::T1,
        Variant::LionV2 => TheoremId::T2,
        Variant::DisV1 => TheoremId::T3,
        Variant::DisV2 => TheoremId::T4,
        Variant::CeV1 if q2 == Some(CompressorKind::UnbiasedSign) => TheoremId::T7,
        Variant::CeV1 => TheoremId::T5a,
        Variant::CeV2 => TheoremId::T8,
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| LionError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| LionError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Structural checks that need no problem instance.
    pub fn check(&self) -> Result<()> {
        let a = &self.algorithm;
        if a.variant.is_compressed() {
            if a.q1.is_none() {
                return Err(LionError::Config(format!(
                    "algorithm.q1 is required for {}",
                    a.variant
                )));
            }
            if a.q2.is_none() {
                return Err(LionError::Config(format!(
                    "algorithm.q2 is required for {}",
                    a.variant
                )));
            }
        } else if a.q1.is_some() || a.q2.is_some() {
            return Err(LionError::Config(format!(
                "algorithm.q1/q2 are not accepted by {}",
                a.variant
            )));
        }
        if self.run.horizon == 0 {
            return Err(LionError::Config("run.T must be >= 1".into()));
        }
        if self.run.seeds.is_empty() {
            return Err(LionError::Config("run.seeds must not be empty".into()));
        }
        Ok(())
    }

    /// Build the schedule (theorem values, then overrides) and check every
    /// relation its rule set requires.
    pub fn resolve_schedule(&self, problem: &Problem) -> Result<(Schedule, Vec<Relation>)> {
        let sc = &self.schedule;
        let t = self.run.horizon;
        let n = problem.num_nodes();
        let mut s = match sc.theorem_id {
            Some(th) => schedule_for(th, t, problem.dim(), n, problem.constants())?,
            None => {
                let need = |v: Option<f64>, name: &str| {
                    v.ok_or_else(|| {
                        LionError::Config(format!("schedule.{name} is required without theorem_id"))
                    })
                };
                let th = default_theorem(self.algorithm.variant, self.algorithm.q2);
                let c = problem.constants();
                let with_lg = matches!(th, TheoremId::T7 | TheoremId::T8);
                Schedule {
                    theorem: th,
                    eta: need(sc.eta, "eta")?,
                    lambda: need(sc.lambda, "lambda")?,
                    beta1: need(sc.beta1, "beta1")?,
                    beta2: need(sc.beta2, "beta2")?,
                    b0: sc.b0.ok_or_else(|| {
                        LionError::Config("schedule.B0 is required without theorem_id".into())
                    })?,
                    l: with_lg.then_some(c.l),
                    g: with_lg.then_some(c.g),
                }
            }
        };
        if let Some(v) = sc.eta {
            s.eta = v;
        }
        if let Some(v) = sc.lambda {
            s.lambda = v;
        }
        if let Some(v) = sc.beta1 {
            s.beta1 = v;
        }
        if let Some(v) = sc.beta2 {
            s.beta2 = v;
        }
        if let Some(v) = sc.b0 {
            s.b0 = v;
        }
        let relations = validate(&s, t, n);
        let failed: Vec<&str> = relations
            .iter()
            .filter(|r| !r.satisfied)
            .map(|r| r.name.as_str())
            .collect();
        if !failed.is_empty() {
            return Err(LionError::Config(format!(
                "schedule violates: {}",
                failed.join("; ")
            )));
        }
        Ok((s, relations))
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Render a record's series as CSV.
pub fn series_csv(rec: &RunRecord) -> String {
    let mut out = String::with_capacity(rec.series.len() * 200);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &rec.series {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.t,
            fmt_f(r.grad_l1),
            fmt_f(r.grad_l2_sq),
            fmt_f(r.est_err_v),
            fmt_f(r.est_err_m),
            fmt_f(r.x_inf),
            fmt_f(r.step_sq),
            r.bits_up,
            r.bits_down
        );
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| LionError::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub seed: u64,
    pub csv: String,
    pub summary: Summary,
    pub ledger: CommLedger,
}

/// Contents of `summary.json` written by [`run_config`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub config: RunConfig,
    pub schedule: Schedule,
    pub relations: Vec<Relation>,
    pub runs: Vec<RunEntry>,
}

/// Execute a config: one CSV per seed plus `summary.json` in `out_dir`.
pub fn run_config(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutput> {
    cfg.check()?;
    let problem = cfg.problem.build()?;
    let (schedule, relations) = cfg.resolve_schedule(&problem)?;
    let a = &cfg.algorithm;
    let t = cfg.run.horizon;
    let records = par_map(cfg.run.seeds.clone(), |seed| {
        run_variant(&problem, a.variant, &schedule, t, seed, a.q1, a.q2)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(out_dir)
        .map_err(|e| LionError::Io(format!("{}: {e}", out_dir.display())))?;
    let mut runs = Vec::with_capacity(records.len());
    for rec in records {
        let name = format!("{}_T{}_seed{}.csv", a.variant, t, rec.meta.seed);
        write_file(&out_dir.join(&name), &series_csv(&rec))?;
        runs.push(RunEntry {
            seed: rec.meta.seed,
            csv: name,
            summary: rec.summary,
            ledger: rec.ledger,
        });
    }
    let output = RunOutput {
        config: cfg.clone(),
        schedule,
        relations,
        runs,
    };
    let text = serde_json::to_string_pretty(&output).expect("summary serializes");
    write_file(&out_dir.join("summary.json"), &text)?;
    Ok(output)
}

/// `run --config <path> --out <dir>`
pub fn cmd_run(config_path: &Path, out_dir: &Path) -> i32 {
    match RunConfig::load(config_path).and_then(|cfg| run_config(&cfg, out_dir)) {
        Ok(out) => {
            for r in &out.runs {
                println!(
                    "seed {}: avg_grad_l1 = {:.6e}, min_grad_l1 = {:.6e} -> {}",
                    r.seed, r.summary.avg_grad_l1, r.summary.min_grad_l1, r.csv
                );
            }
            EXIT_OK
        }
        Err(e) => report_error(&e),
    }
}

/// One property checked by a verification suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<serde_json::Value>,
}

impl Check {
    fn pass(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: true,
            detail: detail.into(),
            counterexample: None,
        }
    }

    fn fail(name: impl Into<String>, detail: impl Into<String>, cx: serde_json::Value) -> Self {
        Self {
            name: name.into(),
            passed: false,
            detail: detail.into(),
            counterexample: Some(cx),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Run a named suite at its built-in sizes.
pub fn verify_suite(suite: &str) -> Result<SuiteReport> {
    let checks = match suite {
        "lemma1" => verify_lemma1(100, 0x1e11a)?,
        "unbiased-sign" => verify_unbiased_sign(1_000_000)?,
        "reduction" => verify_reduction(500, &[1, 2, 3, 4, 5])?,
        "bits" => verify_bits()?,
        "assumptions" => verify_assumptions()?,
        other => {
            return Err(LionError::Config(format!(
                "unknown suite {other:?}, expected one of {}",
                SUITES.join(", ")
            )))
        }
    };
    Ok(SuiteReport {
        suite: suite.to_string(),
        checks,
    })
}

/// `verify <suite>`
pub fn cmd_verify(suite: &str) -> i32 {
    match verify_suite(suite) {
        Ok(report) => {
            for c in &report.checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
                if let Some(cx) = &c.counterexample {
                    println!("  counterexample: {cx}");
                }
            }
            if report.passed() {
                EXIT_OK
            } else {
                EXIT_VERIFY
            }
        }
        Err(e) => report_error(&e),
    }
}

/// Hyperparameters with `beta1 = sqrt(beta2)`, valid for every momentum chain.
fn lemma1_schedule(
    theorem: TheoremId,
    eta: f64,
    horizon: usize,
    beta2: f64,
    b0: usize,
) -> Schedule {
    Schedule {
        theorem,
        eta,
        lambda: 1.0 / (2.0 * eta * horizon as f64),
        beta1: beta2.sqrt(),
        beta2,
        b0,
        l: None,
        g: None,
    }
}

/// Iterate bounds on random configurations, zero tolerance.
pub fn verify_lemma1(configs: usize, seed: u64) -> Result<Vec<Check>> {
    let mut rng = seeded(seed);
    let mut jobs = Vec::with_capacity(configs);
    for i in 0..configs {
        let variant = Variant::ALL[rng.gen_range(0..Variant::ALL.len())];
        let d = rng.gen_range(1..=64usize);
        let horizon = rng.gen_range(10..=2000usize);
        let eta: f64 = rng.gen_range(1e-6..1.0);
        let beta2: f64 = rng.gen_range(0.01..=1.0);
        let b0 = rng.gen_range(1..=4usize);
        let n = if variant.is_centralized() {
            1
        } else {
            rng.gen_range(1..=4usize)
        };
        let reg = if rng.gen_bool(0.5) { 0.1 } else { 0.0 };
        let (q1, q2) = match variant {
            Variant::CeV1 => {
                let q2 = if rng.gen_bool(0.5) {
                    CompressorKind::Sign
                } else {
                    CompressorKind::UnbiasedSign
                };
                let q1 = match rng.gen_range(0..3) {
                    0 if q2 == CompressorKind::Sign => CompressorKind::Identity,
                    1 => CompressorKind::Sign,
                    _ => CompressorKind::UnbiasedSign,
                };
                (Some(q1), Some(q2))
            }
            // The STORM momentum is not a convex combination of gradients,
            // so only the plain sign is safe on the nodes.
            Variant::CeV2 => {
                let q2 = if rng.gen_bool(0.5) {
                    CompressorKind::Sign
                } else {
                    CompressorKind::UnbiasedSign
                };
                (Some(CompressorKind::Sign), Some(q2))
            }
            _ => (None, None),
        };
        let run_seed: u64 = rng.gen();
        jobs.push((
            i, variant, d, horizon, eta, beta2, b0, n, reg, q1, q2, run_seed,
        ));
    }
    let results = par_map(
        jobs,
        |(i, variant, d, horizon, eta, beta2, b0, n, reg, q1, q2, run_seed)| {
            let problem = make_logreg_problem(d, n, 16, 0.1, reg, seed ^ i as u64)?;
            let th = default_theorem(variant, q2);
            let s = lemma1_schedule(th, eta, horizon, beta2, b0);
            let rec = run_variant(&problem, variant, &s, horizon, run_seed, q1, q2)?;
            let bad = rec
                .series
                .iter()
                .find(|r| r.x_inf > eta * r.t as f64 || r.step_sq > 4.0 * eta * eta * d as f64);
            Ok::<_, LionError>(bad.map(|r| {
                json!({
                    "config": i, "variant": variant, "d": d, "n": n, "T": horizon, "eta": eta,
                    "beta2": beta2, "B0": b0, "seed": run_seed, "t": r.t,
                    "x_inf": r.x_inf, "eta_t": eta * r.t as f64,
                    "step_sq": r.step_sq, "four_eta2_d": 4.0 * eta * eta * d as f64,
                })
            }))
        },
    );
    let mut failures = Vec::new();
    for r in results {
        if let Some(cx) = r? {
            failures.push(cx);
        }
    }
    let name = "||x_t||_inf ≤ ηt and ||x_{t+1} - x_t||^2 ≤ 4η^2 d";
    Ok(vec![if failures.is_empty() {
        Check::pass(
            name,
            format!("{configs} random configurations, every step, zero tolerance"),
        )
    } else {
        Check::fail(
            name,
            format!("{} of {configs} configurations violate", failures.len()),
            failures.swap_remove(0),
        )
    }])
}

/// Five fixed vectors in `[-R, R]^8`.
pub fn unbiased_sign_vectors(radius: f64) -> Vec<Vec<f64>> {
    (0..5)
        .map(|j| {
            (0..8)
                .map(|k| {
                    let u = ((3 * j + 5 * k) % 9) as f64 / 4.0 - 1.0;
                    radius * u * if (j + k) % 2 == 0 { 1.0 } else { 0.97 }
                })
                .collect()
        })
        .collect()
}

/// Monte-Carlo mean of `S_R` against `v / R`, plus deterministic boundaries.
pub fn verify_unbiased_sign(draws: usize) -> Result<Vec<Check>> {
    const R: f64 = 1.5;
    const TOL: f64 = 5e-3;
    let vectors = unbiased_sign_vectors(R);
    let mut checks = Vec::new();
    let results = par_map(vectors.into_iter().enumerate().collect(), |(j, v)| {
        let v = Vector::new(v)?;
        let mut rng = stream(0x5151, j as u64, 0, Purpose::Aux);
        let mut sums = vec![0i64; v.dim()];
        for _ in 0..draws {
            let s = unbiased_sign(&v, R, &mut rng)?;
            for (acc, &b) in sums.iter_mut().zip(s.as_slice()) {
                *acc += b as i64;
            }
        }
        let (k, dev) = sums
            .iter()
            .enumerate()
            .map(|(k, &s)| (k, (s as f64 / draws as f64 - v[k] / R).abs()))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        Ok::<_, LionError>((j, v, k, dev))
    });
    for r in results {
        let (j, v, k, dev) = r?;
        let name = format!("E[S_R(v{j})] = v{j}/R");
        checks.push(if dev <= TOL {
            Check::pass(name, format!("max |mean - v_k/R| = {dev:.2e} over {draws} draws"))
        } else {
            Check::fail(
                name,
                format!("max deviation {dev:.3e} > {TOL:e}"),
                json!({ "vector": v.as_slice(), "coordinate": k, "deviation": dev, "draws": draws }),
            )
        });
    }
    let boundary = Vector::new(vec![R, -R, R, -R, R, -R, R, -R])?;
    let mut rng = stream(0x5152, 0, 0, Purpose::Aux);
    let mut bad = None;
    for i in 0..10_000 {
        let s = unbiased_sign(&boundary, R, &mut rng)?;
        if let Some(k) =
            (0..boundary.dim()).find(|&k| s.as_slice()[k] as f64 != boundary[k].signum())
        {
            bad = Some(json!({ "draw": i, "coordinate": k, "output": s.as_slice()[k] }));
            break;
        }
    }
    let name = "S_R(±R) = ±1 on every draw";
    checks.push(match bad {
        None => Check::pass(name, "10000 draws"),
        Some(cx) => Check::fail(name, "boundary coordinate flipped", cx),
    });
    Ok(checks)
}

fn iterates<Tr: Trajectory>(
    problem: &Problem,
    mut traj: Tr,
    horizon: usize,
) -> Result<Vec<Vector>> {
    let mut xs = vec![traj.x().clone()];
    for _ in 0..horizon {
        traj.step(problem)?;
        xs.push(traj.x().clone());
    }
    Ok(xs)
}

fn first_mismatch(a: &[Vector], b: &[Vector]) -> Option<(usize, usize, f64, f64)> {
    a.iter().zip(b).enumerate().find_map(|(t, (xa, xb))| {
        (0..xa.dim())
            .find(|&k| xa[k].to_bits() != xb[k].to_bits())
            .map(|k| (t + 1, k, xa[k], xb[k]))
    })
}

/// Iterates of a one-node cluster and of centralized Lion, bitwise.
pub fn reduction_check(
    problem: &Problem,
    schedule: &Schedule,
    horizon: usize,
    seed: u64,
    cluster: ClusterVariant,
    q: (CompressorId, CompressorId),
) -> Result<Option<serde_json::Value>> {
    let central = if cluster.uses_storm() {
        CentralVariant::V2
    } else {
        CentralVariant::V1
    };
    let hp = Hyper::from(schedule);
    let a = iterates(
        problem,
        lion_init(problem, hp, horizon, schedule.b0, central, seed, None)?,
        horizon,
    )?;
    let b = iterates(
        problem,
        cluster_init(problem, hp, horizon, schedule.b0, cluster, q.0, q.1, seed)?,
        horizon,
    )?;
    Ok(first_mismatch(&a, &b).map(|(t, k, va, vb)| {
        json!({ "seed": seed, "t": t, "coordinate": k, "central": va, "cluster": vb })
    }))
}

/// One-node clusters against centralized Lion on the one-node benchmark problem.
pub fn verify_reduction(horizon: usize, seeds: &[u64]) -> Result<Vec<Check>> {
    let problem = benchmark_config(1).build()?;
    let c = problem.constants();
    let s1 = schedule_for(TheoremId::T1, horizon, problem.dim(), 1, c)?;
    let s2 = schedule_for(TheoremId::T2, horizon, problem.dim(), 1, c)?;
    let pairs = [
        (
            "dis-v1 (n = 1) ≡ lion-v1",
            ClusterVariant::DisV1,
            &s1,
            (CompressorId::Identity, CompressorId::Sign),
        ),
        (
            "dis-v2 (n = 1) ≡ lion-v2",
            ClusterVariant::DisV2,
            &s2,
            (CompressorId::Identity, CompressorId::Sign),
        ),
        (
            "ce-v1 (n = 1, q1 = identity, q2 = sign) ≡ lion-v1",
            ClusterVariant::CeV1,
            &s1,
            (CompressorId::Identity, CompressorId::Sign),
        ),
    ];
    let mut checks = Vec::new();
    for (name, cv, s, q) in pairs {
        let mut cx = None;
        for &seed in seeds {
            if let Some(m) = reduction_check(&problem, s, horizon, seed, cv, q)? {
                cx = Some(m);
                break;
            }
        }
        let detail = format!("T = {horizon}, seeds {seeds:?}");
        checks.push(match cx {
            None => Check::pass(name, format!("bitwise equal iterates, {detail}")),
            Some(m) => Check::fail(name, format!("iterates differ, {detail}"), m),
        });
    }
    Ok(checks)
}

/// Ledger totals for one run against the closed-form counts.
pub fn bits_check(variant: Variant, horizon: usize, n: usize, d: usize) -> Result<Check> {
    let problem = make_logreg_problem(d, n, 8, 0.1, 0.1, 7)?;
    let s = Schedule {
        theorem: default_theorem(variant, Some(CompressorKind::Sign)),
        eta: 0.01,
        lambda: 0.0,
        beta1: 0.5,
        beta2: 0.25,
        b0: 2,
        l: None,
        g: None,
    };
    let (q1, q2) = if variant.is_compressed() {
        (
            Some(CompressorKind::UnbiasedSign),
            Some(CompressorKind::Sign),
        )
    } else {
        (None, None)
    };
    let rec = run_variant(&problem, variant, &s, horizon, 3, q1, q2)?;
    let tnd = (horizon * n * d) as u64;
    let expect = if variant.is_compressed() {
        CommLedger {
            bits_up: tnd,
            bits_down: tnd,
            floats_up: 0,
            floats_down: 0,
        }
    } else {
        CommLedger {
            bits_up: 0,
            bits_down: tnd,
            floats_up: tnd,
            floats_down: 0,
        }
    };
    let name = format!("{variant} (T, n, d) = ({horizon}, {n}, {d})");
    let unit = if variant.is_compressed() {
        "bits"
    } else {
        "floats"
    };
    Ok(if rec.ledger == expect {
        Check::pass(
            name,
            format!("T·n·d = {tnd} {unit} up, T·n·d = {tnd} bits down"),
        )
    } else {
        Check::fail(
            name,
            "ledger mismatch",
            json!({ "expected": expect, "got": rec.ledger }),
        )
    })
}

pub fn verify_bits() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (t, n, d) in [(100, 4, 10), (50, 16, 32)] {
        for v in [Variant::DisV1, Variant::DisV2, Variant::CeV1, Variant::CeV2] {
            out.push(bits_check(v, t, n, d)?);
        }
    }
    Ok(out)
}

fn random_point(rng: &mut impl Rng, d: usize) -> Vector {
    Vector::new(
        (0..d)
            .map(|_| rng.gen_range(-CERT_BOX..=CERT_BOX))
            .collect(),
    )
    .expect("finite")
}

/// Certified constants of the 4-node benchmark problem against random probes.
pub fn verify_assumptions() -> Result<Vec<Check>> {
    let problem = benchmark_config(4).build()?;
    let c = problem.constants().clone();
    let d = problem.dim();
    let mut rng = seeded(0xa55);
    let mut checks = Vec::new();

    let mut worst_g = 0.0f64;
    let mut cx_g = None;
    for _ in 0..10_000 {
        let x = random_point(&mut rng, d);
        let j = rng.gen_range(0..problem.num_nodes());
        let i = rng.gen_range(0..problem.samples_per_node(j));
        let g = problem.sample_grad(j, i, &x).linf();
        if g > worst_g {
            worst_g = g;
        }
        if g > c.g && cx_g.is_none() {
            cx_g =
                Some(json!({ "x": x.as_slice(), "node": j, "sample": i, "grad_inf": g, "G": c.g }));
        }
    }
    let name = "||grad f_j(x; i)||_inf ≤ G";
    checks.push(match cx_g {
        None => Check::pass(
            name,
            format!("max {worst_g:.4} ≤ G = {:.4} over 10000 draws", c.g),
        ),
        Some(cx) => Check::fail(name, "bound exceeded", cx),
    });

    let mut worst_l = 0.0f64;
    let mut cx_l = None;
    for _ in 0..10_000 {
        let x = random_point(&mut rng, d);
        let y = random_point(&mut rng, d);
        let j = rng.gen_range(0..problem.num_nodes());
        let i = rng.gen_range(0..problem.samples_per_node(j));
        let num = problem
            .sample_grad(j, i, &x)
            .dist_sq(&problem.sample_grad(j, i, &y))?
            .sqrt();
        let ratio = num / x.dist_sq(&y)?.sqrt();
        worst_l = worst_l.max(ratio);
        if ratio > c.l && cx_l.is_none() {
            cx_l = Some(json!({ "x": x.as_slice(), "y": y.as_slice(), "ratio": ratio, "L": c.l }));
        }
    }
    let name = "||grad f_j(x; i) - grad f_j(y; i)|| ≤ L ||x - y||";
    checks.push(match cx_l {
        None => Check::pass(
            name,
            format!("max ratio {worst_l:.4} ≤ L = {:.4} over 10000 pairs", c.l),
        ),
        Some(cx) => Check::fail(name, "bound exceeded", cx),
    });

    let mut worst_s = 0.0f64;
    let mut cx_s = None;
    for _ in 0..256 {
        let x = random_point(&mut rng, d);
        let s = problem.max_noise_sq(&x);
        worst_s = worst_s.max(s);
        if s > c.sigma * c.sigma && cx_s.is_none() {
            cx_s = Some(json!({ "x": x.as_slice(), "noise_sq": s, "sigma_sq": c.sigma * c.sigma }));
        }
    }
    let name = "E||grad f_j(x; i) - grad f_j(x)||^2 ≤ sigma^2";
    checks.push(match cx_s {
        None => Check::pass(
            name,
            format!(
                "max {worst_s:.4} ≤ sigma^2 = {:.4} at 256 points",
                c.sigma * c.sigma
            ),
        ),
        Some(cx) => Check::fail(name, "bound exceeded", cx),
    });

    let mut cx_f = None;
    for _ in 0..1000 {
        let x = random_point(&mut rng, d);
        let f = problem.value(&x);
        if f < c.f_star && cx_f.is_none() {
            cx_f = Some(json!({ "x": x.as_slice(), "f": f, "f_star": c.f_star }));
        }
    }
    let gap = problem.value(&problem.x1()) - c.f_star;
    let name = "f ≥ f* and f(x_1) - f* ≤ delta_f";
    checks.push(match cx_f {
        None if gap <= c.delta_f => {
            Check::pass(name, format!("1000 points, f(x_1) - f* = {gap:.6}"))
        }
        None => Check::fail(
            name,
            "delta_f too small",
            json!({ "gap": gap, "delta_f": c.delta_f }),
        ),
        Some(cx) => Check::fail(name, "f below f*", cx),
    });
    Ok(checks)
}

/// Variant, node count and compressors each theorem is benchmarked with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSetup {
    pub variant: Variant,
    pub n: usize,
    pub q1: Option<CompressorKind>,
    pub q2: Option<CompressorKind>,
}

pub fn rate_setup(theorem: TheoremId) -> RateSetup {
    use CompressorKind::{Sign, UnbiasedSign};
    let (variant, n, q) = match theorem {
        TheoremId::T1 => (Variant::LionV1, 1, None),
        TheoremId::T2 => (Variant::LionV2, 1, None),
        TheoremId::T3 => (Variant::DisV1, 4, None),
        TheoremId::T4 => (Variant::DisV2, 4, None),
        TheoremId::T5a | TheoremId::T5b => (Variant::CeV1, 8, Some((UnbiasedSign, Sign))),
        TheoremId::T7 => (Variant::CeV1, 8, Some((UnbiasedSign, UnbiasedSign))),
        TheoremId::T8 => (Variant::CeV2, 8, Some((UnbiasedSign, UnbiasedSign))),
    };
    RateSetup {
        variant,
        n,
        q1: q.map(|q| q.0),
        q2: q.map(|q| q.1),
    }
}

/// Contents of the JSON written by [`cmd_rates`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatesOutput {
    pub theorem: TheoremId,
    pub self_test: bool,
    pub setup: Option<RateSetup>,
    pub problem: Option<ProblemConfig>,
    #[serde(rename = "T")]
    pub horizons: Vec<usize>,
    pub seeds: Vec<u64>,
    /// `(T, median avg_grad_l1)`
    pub medians: Vec<(usize, f64)>,
    pub fit: RateFit,
}

/// Exponent of the exact power law used by the self-test.
pub const SELF_TEST_SLOPE: f64 = -0.25;

/// Sweep the benchmark problem under `theorem` and fit the rate; with
/// `self_test`, fit exact power-law data instead.
pub fn rates(
    theorem: TheoremId,
    horizons: &[usize],
    seeds: &[u64],
    self_test: bool,
) -> Result<RatesOutput> {
    let mut sorted = horizons.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() < 2 {
        return Err(LionError::InsufficientData(format!(
            "a rate fit needs at least 2 distinct T values, got {horizons:?}"
        )));
    }
    if self_test {
        let medians: Vec<(usize, f64)> = sorted
            .iter()
            .map(|&t| (t, 2.0 * (t as f64).powf(SELF_TEST_SLOPE)))
            .collect();
        let fit = RateFit::from_points(
            medians
                .iter()
                .map(|&(t, y)| ((t as f64).ln(), y.ln()))
                .collect(),
        )?;
        return Ok(RatesOutput {
            theorem,
            self_test,
            setup: None,
            problem: None,
            horizons: sorted,
            seeds: seeds.to_vec(),
            medians,
            fit,
        });
    }
    let setup = rate_setup(theorem);
    let cfg = benchmark_config(setup.n);
    let problem = cfg.build()?;
    let spec = SweepSpec {
        variant: setup.variant,
        theorem,
        q1: setup.q1,
        q2: setup.q2,
    };
    let records = sweep(&problem, &spec, &sorted, seeds)?;
    Ok(RatesOutput {
        theorem,
        self_test,
        setup: Some(setup),
        problem: Some(cfg),
        horizons: sorted,
        seeds: seeds.to_vec(),
        medians: median_by_horizon(&records).into_iter().collect(),
        fit: fit_rate(&records)?,
    })
}

/// `rates --theorem <id> --T <list> --seeds <list> --out <path> [--self-test]`
pub fn cmd_rates(
    theorem: &str,
    horizons: &[usize],
    seeds: &[u64],
    out: &Path,
    self_test: bool,
) -> i32 {
    let result = TheoremId::parse(theorem).and_then(|th| rates(th, horizons, seeds, self_test));
    let output = match result {
        Ok(o) => o,
        Err(e) => return report_error(&e),
    };
    let text = serde_json::to_string_pretty(&output).expect("rate output serializes");
    if let Err(e) = write_file(out, &text) {
        return report_error(&e);
    }
    for (t, m) in &output.medians {
        println!("T = {t:>7}: median avg_grad_l1 = {m:.6e}");
    }
    println!(
        "slope = {:.4}, r^2 = {:.4}",
        output.fit.slope, output.fit.r_squared
    );
    if self_test && (output.fit.slope - SELF_TEST_SLOPE).abs() > 1e-9 {
        eprintln!(
            "self-test slope {} differs from {SELF_TEST_SLOPE}",
            output.fit.slope
        );
        return EXIT_VERIFY;
    }
    EXIT_OK
}

/// Default output path for `rates` when none is given.
pub fn default_rates_path(theorem: &str) -> PathBuf {
    PathBuf::from(format!("rates_{theorem}.json"))
}
