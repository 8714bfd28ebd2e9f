//! Run records, the shared trajectory driver, multi-seed sweeps, rate
//! fitting and paired variant comparison.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributed::{cluster_run, ClusterVariant, CommLedger, CompressorId};
use crate::error::{LionError, Result};
use crate::lion::{lion_run, CentralVariant};
use crate::problems::{Problem, ProblemConfig};
use crate::schedules::{schedule_for, Schedule, TheoremId};
use crate::vecops::Vector;

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "LIONLAB_THREADS";

/// How often (in steps) the driver re-enumerates the shard noise at `x_t`.
pub const NOISE_CHECK_EVERY: usize = 256;

/// Every optimizer variant the crate runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "lion-v1")]
    LionV1,
    #[serde(rename = "lion-v2")]
    LionV2,
    #[serde(rename = "dis-v1")]
    DisV1,
    #[serde(rename = "dis-v2")]
    DisV2,
    #[serde(rename = "ce-v1")]
    CeV1,
    #[serde(rename = "ce-v2")]
    CeV2,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::LionV1,
        Variant::LionV2,
        Variant::DisV1,
        Variant::DisV2,
        Variant::CeV1,
        Variant::CeV2,
    ];

    pub fn is_compressed(self) -> bool {
        matches!(self, Variant::CeV1 | Variant::CeV2)
    }

    pub fn is_centralized(self) -> bool {
        matches!(self, Variant::LionV1 | Variant::LionV2)
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.to_string() == s)
            .ok_or_else(|| LionError::Config(format!("unknown variant {s:?}")))
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::LionV1 => "lion-v1",
            Variant::LionV2 => "lion-v2",
            Variant::DisV1 => "dis-v1",
            Variant::DisV2 => "dis-v2",
            Variant::CeV1 => "ce-v1",
            Variant::CeV2 => "ce-v2",
        })
    }
}

impl From<CentralVariant> for Variant {
    fn from(v: CentralVariant) -> Self {
        match v {
            CentralVariant::V1 => Variant::LionV1,
            CentralVariant::V2 => Variant::LionV2,
        }
    }
}

impl From<ClusterVariant> for Variant {
    fn from(v: ClusterVariant) -> Self {
        match v {
            ClusterVariant::DisV1 => Variant::DisV1,
            ClusterVariant::DisV2 => Variant::DisV2,
            ClusterVariant::CeV1 => Variant::CeV1,
            ClusterVariant::CeV2 => Variant::CeV2,
        }
    }
}

/// Compressor choice as written in configs; the radius of the unbiased sign
/// is resolved by position (`G` on nodes, `1` on the server).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompressorKind {
    Identity,
    Sign,
    UnbiasedSign,
}

impl CompressorKind {
    pub fn node_side(self, g: f64) -> CompressorId {
        match self {
            CompressorKind::Identity => CompressorId::Identity,
            CompressorKind::Sign => CompressorId::Sign,
            CompressorKind::UnbiasedSign => CompressorId::UnbiasedSign(g),
        }
    }

    pub fn server_side(self) -> CompressorId {
        match self {
            CompressorKind::Identity => CompressorId::Identity,
            CompressorKind::Sign => CompressorId::Sign,
            CompressorKind::UnbiasedSign => CompressorId::UnbiasedSign(1.0),
        }
    }
}

/// Configuration snapshot carried by every record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub problem: Option<ProblemConfig>,
    pub schedule: Schedule,
    pub variant: Variant,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub q1: Option<CompressorId>,
    pub q2: Option<CompressorId>,
}

impl RunMeta {
    pub fn new(
        problem: &Problem,
        schedule: &Schedule,
        horizon: usize,
        seed: u64,
        variant: Variant,
        compressors: Option<(CompressorId, CompressorId)>,
    ) -> Self {
        let compressors = compressors.filter(|_| variant.is_compressed());
        Self {
            problem: problem.config().cloned(),
            schedule: schedule.clone(),
            variant,
            horizon,
            n: problem.num_nodes(),
            d: problem.dim(),
            seed,
            q1: compressors.map(|c| c.0),
            q2: compressors.map(|c| c.1),
        }
    }
}

/// Metrics of one step `t`, measured at `x_t` with the estimators of step `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub t: usize,
    pub grad_l1: f64,
    pub grad_l2_sq: f64,
    /// `||v_bar_t - grad f(x_t)||^2`
    pub est_err_v: f64,
    /// `||m_bar_t - grad f(x_t)||^2`
    pub est_err_m: f64,
    pub x_inf: f64,
    /// `||x_{t+1} - x_t||^2`
    pub step_sq: f64,
    /// Cumulative after step `t`.
    pub bits_up: u64,
    pub bits_down: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub avg_grad_l1: f64,
    pub min_grad_l1: f64,
    pub avg_est_err_v: f64,
    pub avg_est_err_m: f64,
    /// First checked step at which the enumerated noise exceeded `sigma^2`.
    pub sigma_exceeded_at: Option<usize>,
    pub wallclock_secs: f64,
}

/// Everything recorded about one run.
///
/// Equality ignores `summary.wallclock_secs`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub meta: RunMeta,
    pub series: Vec<StepRow>,
    pub ledger: CommLedger,
    pub summary: Summary,
}

impl PartialEq for RunRecord {
    fn eq(&self, other: &Self) -> bool {
        let strip = |s: &Summary| Summary {
            wallclock_secs: 0.0,
            ..s.clone()
        };
        self.meta == other.meta
            && self.series == other.series
            && self.ledger == other.ledger
            && strip(&self.summary) == strip(&other.summary)
    }
}

/// Estimators produced by one step of any variant.
#[derive(Debug, Clone, PartialEq)]
pub struct StepEstimates {
    pub v_bar: Vector,
    pub m_bar: Vector,
    pub bits_up: u64,
    pub bits_down: u64,
    /// The applied direction lies in `[-1, 1]^d`, so the iterate bounds apply.
    pub direction_bounded: bool,
}

/// A steppable optimizer.
pub trait Trajectory {
    fn x(&self) -> &Vector;
    fn eta(&self) -> f64;
    fn step(&mut self, problem: &Problem) -> Result<StepEstimates>;
}

/// Run `horizon` steps and collect per-step metrics against the exact
/// full gradient.
pub fn drive<Tr: Trajectory>(
    problem: &Problem,
    mut traj: Tr,
    horizon: usize,
    meta: RunMeta,
) -> Result<(RunRecord, Tr)> {
    let start = Instant::now();
    let eta = traj.eta();
    let d = problem.dim() as f64;
    let sigma_sq = problem.constants().sigma.powi(2);
    let mut series = Vec::with_capacity(horizon);
    let mut sigma_exceeded_at = None;
    for t in 1..=horizon {
        let x_t = traj.x().clone();
        let grad = problem.full_grad(&x_t)?;
        if sigma_exceeded_at.is_none()
            && (t - 1) % NOISE_CHECK_EVERY == 0
            && problem.max_noise_sq(&x_t) > sigma_sq
        {
            sigma_exceeded_at = Some(t);
        }
        let est = traj.step(problem)?;
        let step_sq = traj.x().dist_sq(&x_t)?;
        let x_inf = x_t.linf();
        if cfg!(debug_assertions) && est.direction_bounded {
            let slack = 1.0 + 1e-12;
            if x_inf > eta * t as f64 * slack || step_sq > 4.0 * eta * eta * d * slack {
                return Err(LionError::Invariant {
                    step: t,
                    what: format!(
                        "iterate bound: ||x_t||_inf = {x_inf} vs eta*t = {}, step^2 = {step_sq} vs 4 eta^2 d = {}",
                        eta * t as f64,
                        4.0 * eta * eta * d
                    ),
                });
            }
        }
        series.push(StepRow {
            t,
            grad_l1: grad.l1(),
            grad_l2_sq: grad.l2_sq(),
            est_err_v: est.v_bar.dist_sq(&grad)?,
            est_err_m: est.m_bar.dist_sq(&grad)?,
            x_inf,
            step_sq,
            bits_up: est.bits_up,
            bits_down: est.bits_down,
        });
    }
    let mean =
        |f: fn(&StepRow) -> f64| series.iter().map(f).sum::<f64>() / series.len().max(1) as f64;
    let summary = Summary {
        avg_grad_l1: mean(|r| r.grad_l1),
        min_grad_l1: series
            .iter()
            .map(|r| r.grad_l1)
            .fold(f64::INFINITY, f64::min),
        avg_est_err_v: mean(|r| r.est_err_v),
        avg_est_err_m: mean(|r| r.est_err_m),
        sigma_exceeded_at,
        wallclock_secs: start.elapsed().as_secs_f64(),
    };
    Ok((
        RunRecord {
            meta,
            series,
            ledger: CommLedger::default(),
            summary,
        },
        traj,
    ))
}

/// Run any variant under an explicit schedule.
///
/// Centralized variants require a single-node problem. Compressed variants
/// require both compressors.
pub fn run_variant(
    problem: &Problem,
    variant: Variant,
    schedule: &Schedule,
    horizon: usize,
    seed: u64,
    q1: Option<CompressorKind>,
    q2: Option<CompressorKind>,
) -> Result<RunRecord> {
    if variant.is_centralized() && problem.num_nodes() != 1 {
        return Err(LionError::Config(format!(
            "{variant} runs on a single node, problem has n = {}",
            problem.num_nodes()
        )));
    }
    let resolve = || -> Result<(CompressorId, CompressorId)> {
        match (q1, q2) {
            (Some(a), Some(b)) => Ok((a.node_side(problem.constants().g), b.server_side())),
            (None, _) => Err(LionError::Config(format!("{variant} requires q1"))),
            (_, None) => Err(LionError::Config(format!("{variant} requires q2"))),
        }
    };
    match variant {
        Variant::LionV1 => lion_run(problem, schedule, horizon, seed, CentralVariant::V1),
        Variant::LionV2 => lion_run(problem, schedule, horizon, seed, CentralVariant::V2),
        Variant::DisV1 | Variant::DisV2 => {
            let cv = if variant == Variant::DisV1 {
                ClusterVariant::DisV1
            } else {
                ClusterVariant::DisV2
            };
            cluster_run(
                problem,
                schedule,
                horizon,
                seed,
                cv,
                CompressorId::Identity,
                CompressorId::Sign,
            )
        }
        Variant::CeV1 | Variant::CeV2 => {
            let (a, b) = resolve()?;
            let cv = if variant == Variant::CeV1 {
                ClusterVariant::CeV1
            } else {
                ClusterVariant::CeV2
            };
            cluster_run(problem, schedule, horizon, seed, cv, a, b)
        }
    }
}

/// What a sweep runs: one variant under one theorem's schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variant: Variant,
    pub theorem: TheoremId,
    pub q1: Option<CompressorKind>,
    pub q2: Option<CompressorKind>,
}

impl SweepSpec {
    pub fn new(variant: Variant, theorem: TheoremId) -> Self {
        Self {
            variant,
            theorem,
            q1: None,
            q2: None,
        }
    }

    pub fn with_compressors(mut self, q1: CompressorKind, q2: CompressorKind) -> Self {
        self.q1 = Some(q1);
        self.q2 = Some(q2);
        self
    }
}

/// Worker count: `LIONLAB_THREADS` if set and positive, else all cores.
pub fn worker_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

/// Run `f` over `items` in parallel, preserving input order in the output.
pub fn par_map<I, O, F>(items: Vec<I>, f: F) -> Vec<O>
where
    I: Send,
    O: Send,
    F: Fn(I) -> O + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_threads())
        .build()
        .expect("thread pool");
    pool.install(|| items.into_par_iter().map(f).collect())
}

fn annotate(e: LionError, ctx: &str) -> LionError {
    match e {
        LionError::Config(s) => LionError::Config(format!("{ctx}: {s}")),
        LionError::Divergence { step, what } => LionError::Divergence {
            step,
            what: format!("{ctx}: {what}"),
        },
        LionError::Invariant { step, what } => LionError::Invariant {
            step,
            what: format!("{ctx}: {what}"),
        },
        LionError::Range { .. } => e.with_context(ctx.to_string()),
        other => other,
    }
}

/// One record per `(T, seed)`, in `(T, seed)` order; the schedule is
/// recomputed for every `T`.
pub fn sweep(
    problem: &Problem,
    spec: &SweepSpec,
    horizons: &[usize],
    seeds: &[u64],
) -> Result<Vec<RunRecord>> {
    if horizons.is_empty() || seeds.is_empty() {
        return Err(LionError::Config(
            "sweep needs at least one T and one seed".into(),
        ));
    }
    if !horizons.windows(2).all(|w| w[0] < w[1]) {
        return Err(LionError::Config(format!(
            "T list must be strictly ascending, got {horizons:?}"
        )));
    }
    let mut jobs = Vec::new();
    for &t in horizons {
        let schedule = schedule_for(
            spec.theorem,
            t,
            problem.dim(),
            problem.num_nodes(),
            problem.constants(),
        )
        .map_err(|e| annotate(e, &format!("T = {t}")))?;
        for &seed in seeds {
            jobs.push((t, seed, schedule.clone()));
        }
    }
    par_map(jobs, |(t, seed, schedule)| {
        run_variant(problem, spec.variant, &schedule, t, seed, spec.q1, spec.q2)
            .map_err(|e| annotate(e, &format!("T = {t}, seed = {seed}")))
    })
    .into_iter()
    .collect()
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    values.sort_by(f64::total_cmp);
    let k = values.len() / 2;
    if values.len() % 2 == 1 {
        values[k]
    } else {
        0.5 * (values[k - 1] + values[k])
    }
}

/// Ordinary least-squares fit of `ln(avg_grad_l1)` against `ln T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// `(ln T, ln median avg_grad_l1)`
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl RateFit {
    /// OLS on the given points.
    pub fn from_points(points: Vec<(f64, f64)>) -> Result<Self> {
        let distinct: BTreeSet<u64> = points.iter().map(|p| p.0.to_bits()).collect();
        if distinct.len() < 2 {
            return Err(LionError::InsufficientData(format!(
                "rate fit needs at least 2 distinct T values, got {}",
                distinct.len()
            )));
        }
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let ss_tot: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
        let ss_res: f64 = points
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        let r_squared = if ss_tot > 0.0 {
            (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
        } else {
            1.0
        };
        Ok(Self {
            points,
            slope,
            intercept,
            r_squared,
        })
    }
}

/// Median `avg_grad_l1` over seeds for each `T`, ascending in `T`.
pub fn median_by_horizon(records: &[RunRecord]) -> BTreeMap<usize, f64> {
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in records {
        groups
            .entry(r.meta.horizon)
            .or_default()
            .push(r.summary.avg_grad_l1);
    }
    groups
        .into_iter()
        .map(|(t, mut v)| (t, median(&mut v)))
        .collect()
}

/// Fit the log-log rate on per-`T` seed medians.
pub fn fit_rate(records: &[RunRecord]) -> Result<RateFit> {
    let points = median_by_horizon(records)
        .into_iter()
        .map(|(t, y)| ((t as f64).ln(), y.ln()))
        .collect();
    RateFit::from_points(points)
}

/// Summary metric used by [`compare_variants`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    AvgGradL1,
    MinGradL1,
    AvgEstErrV,
    AvgEstErrM,
}

impl Metric {
    pub fn of(self, r: &RunRecord) -> f64 {
        match self {
            Metric::AvgGradL1 => r.summary.avg_grad_l1,
            Metric::MinGradL1 => r.summary.min_grad_l1,
            Metric::AvgEstErrV => r.summary.avg_est_err_v,
            Metric::AvgEstErrM => r.summary.avg_est_err_m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    LowerIsBetter,
    HigherIsBetter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// Seeds on which `a` is strictly better than `b`. Ties are not wins.
    pub wins: usize,
    pub total: usize,
    pub median_a: f64,
    pub median_b: f64,
}

/// Per-seed paired comparison of `a` against `b`.
pub fn compare_variants(
    a: &[RunRecord],
    b: &[RunRecord],
    metric: Metric,
    direction: Direction,
) -> Result<Comparison> {
    let index = |rs: &[RunRecord]| -> Result<BTreeMap<u64, f64>> {
        let mut m = BTreeMap::new();
        for r in rs {
            if m.insert(r.meta.seed, metric.of(r)).is_some() {
                return Err(LionError::InvalidPairing(format!(
                    "seed {} appears twice",
                    r.meta.seed
                )));
            }
        }
        Ok(m)
    };
    let ia = index(a)?;
    let ib = index(b)?;
    if ia.keys().ne(ib.keys()) || ia.is_empty() {
        return Err(LionError::InvalidPairing(format!(
            "seed sets differ: {:?} vs {:?}",
            ia.keys().collect::<Vec<_>>(),
            ib.keys().collect::<Vec<_>>()
        )));
    }
    let wins = ia
        .iter()
        .filter(|(seed, va)| {
            let vb = ib[seed];
            match direction {
                Direction::LowerIsBetter => **va < vb,
                Direction::HigherIsBetter => **va > vb,
            }
        })
        .count();
    Ok(Comparison {
        wins,
        total: ia.len(),
        median_a: median(&mut ia.values().copied().collect::<Vec<_>>()),
        median_b: median(&mut ib.values().copied().collect::<Vec<_>>()),
    })
}
