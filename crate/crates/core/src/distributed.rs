//! Synchronous parameter-server simulation of distributed Lion.
//!
//! * `DisV1` / `DisV2`: nodes upload full-precision `v_t^j`, the server sums
//!   them and broadcasts `sign(sum)`. `DisV2` applies the STORM correction to
//!   both `v_t^j` (with `beta1`) and `m_t^j` (with `beta2`).
//! * `CeV1` / `CeV2`: nodes upload `Q1(v_t^j)`, the server averages and
//!   broadcasts `Q2(average)`. `v_t^j` is always the plain momentum combine;
//!   `CeV2` applies the STORM correction to `m_t^j` only.
//!
//! Every node draws from its own `(seed, node, step, purpose)` stream, so the
//! evaluation order of nodes never affects the result and a one-node cluster
//! consumes exactly the draws of the centralized optimizer.

use serde::{Deserialize, Serialize};

use crate::error::{LionError, Result};
use crate::estimators::{momentum_update, storm_update};
use crate::harness::{drive, RunMeta, RunRecord, StepEstimates, Trajectory, Variant};
use crate::lion::{apply_update, check_preconditions, ensure_finite, BetaChain, Hyper};
use crate::problems::{Problem, Sampling};
use crate::rng::{stream, Purpose, SERVER_NODE};
use crate::schedules::Schedule;
use crate::vecops::{sign, unbiased_sign, Vector};

/// A node-side or server-side compressor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CompressorId {
    Identity,
    Sign,
    UnbiasedSign(f64),
}

impl CompressorId {
    /// Whether the output is a 1-bit-per-coordinate message.
    pub fn is_sign_type(&self) -> bool {
        !matches!(self, CompressorId::Identity)
    }

    pub fn apply(&self, v: &Vector, step: usize, rng_key: (u64, u64, Purpose)) -> Result<Vector> {
        match *self {
            CompressorId::Identity => Ok(v.clone()),
            CompressorId::Sign => Ok(sign(v)?.to_vector()),
            CompressorId::UnbiasedSign(radius) => {
                let (seed, node, purpose) = rng_key;
                let mut rng = stream(seed, node, step as u64, purpose);
                Ok(unbiased_sign(v, radius, &mut rng)?.to_vector())
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            CompressorId::UnbiasedSign(r) if !(r > 0.0 && r.is_finite()) => Err(LionError::Config(
                format!("unbiased-sign radius must be positive, got {r}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Cumulative communication volume.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommLedger {
    pub bits_up: u64,
    pub bits_down: u64,
    pub floats_up: u64,
    pub floats_down: u64,
}

impl CommLedger {
    fn upload(&mut self, compressor: CompressorId, coords: u64) {
        if compressor.is_sign_type() {
            self.bits_up += coords;
        } else {
            self.floats_up += coords;
        }
    }

    fn download(&mut self, compressor: CompressorId, coords: u64) {
        if compressor.is_sign_type() {
            self.bits_down += coords;
        } else {
            self.floats_down += coords;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClusterVariant {
    DisV1,
    DisV2,
    CeV1,
    CeV2,
}

impl ClusterVariant {
    pub fn uses_storm(self) -> bool {
        matches!(self, ClusterVariant::DisV2 | ClusterVariant::CeV2)
    }

    pub fn is_compressed(self) -> bool {
        matches!(self, ClusterVariant::CeV1 | ClusterVariant::CeV2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub m: Vector,
}

/// Replicated model plus per-node momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    pub x: Vector,
    pub x_prev: Option<Vector>,
    pub nodes: Vec<NodeState>,
    pub t: usize,
    pub hp: Hyper,
    pub variant: ClusterVariant,
    pub q1: CompressorId,
    pub q2: CompressorId,
    pub ledger: CommLedger,
    pub horizon: usize,
    seed: u64,
}

/// Initialize every node's `m_1` from its own step-1 sample stream.
///
/// For the uncompressed variants `q1`/`q2` are ignored and stored as
/// `Identity`/`Sign` respectively.
#[allow(clippy::too_many_arguments)]
pub fn cluster_init(
    problem: &Problem,
    hp: Hyper,
    horizon: usize,
    b0: usize,
    variant: ClusterVariant,
    q1: CompressorId,
    q2: CompressorId,
    seed: u64,
) -> Result<ClusterState> {
    let x1 = problem.x1();
    let chain = if variant.uses_storm() {
        BetaChain::UpperOnly
    } else {
        BetaChain::Squared
    };
    check_preconditions(&hp, horizon, &x1, chain)?;
    q1.validate()?;
    q2.validate()?;
    let (q1, q2) = if variant.is_compressed() {
        (q1, q2)
    } else {
        (CompressorId::Identity, CompressorId::Sign)
    };
    let nodes = (0..problem.num_nodes())
        .map(|j| {
            let mut rng = stream(seed, j as u64, 1, Purpose::Sample);
            let m = if variant.uses_storm() {
                problem.batch_grad(j, &x1, b0, Sampling::WithReplacement, &mut rng)?
            } else {
                problem.stoch_grad(j, &x1, &mut rng)?.0
            };
            Ok(NodeState { m })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClusterState {
        x: x1,
        x_prev: None,
        nodes,
        t: 1,
        hp,
        variant,
        q1,
        q2,
        ledger: CommLedger::default(),
        horizon,
        seed,
    })
}

/// Output of one cluster step.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStepInfo {
    /// `(1/n) sum_j v_t^j`, before compression.
    pub v_bar: Vector,
    /// `(1/n) sum_j m_t^j`.
    pub m_bar: Vector,
    /// The broadcast direction applied to `x`.
    pub direction: Vector,
}

fn sum_all(vs: &[Vector]) -> Result<Vector> {
    let mut acc = vs[0].clone();
    for v in &vs[1..] {
        acc.add_assign(v)?;
    }
    Ok(acc)
}

fn mean_all(vs: &[Vector]) -> Result<Vector> {
    let n = vs.len() as f64;
    let mut acc = sum_all(vs)?;
    for a in acc.as_mut_slice() {
        *a /= n;
    }
    Ok(acc)
}

/// Per-node local estimators `(v_t^j, m_t^j)` for step `t`.
fn local_update(state: &ClusterState, problem: &Problem, j: usize) -> Result<(Vector, Vector)> {
    let t = state.t;
    let m_prev = &state.nodes[j].m;
    if t == 1 {
        return Ok((m_prev.clone(), m_prev.clone()));
    }
    let hp = &state.hp;
    let mut rng = stream(state.seed, j as u64, t as u64, Purpose::Sample);
    match state.variant {
        ClusterVariant::DisV1 | ClusterVariant::CeV1 => {
            let (g, _) = problem.stoch_grad(j, &state.x, &mut rng)?;
            Ok((
                momentum_update(m_prev, &g, hp.beta1)?,
                momentum_update(m_prev, &g, hp.beta2)?,
            ))
        }
        ClusterVariant::DisV2 => {
            let prev = state.x_prev.as_ref().expect("x_prev is set after step 1");
            let p = problem.paired_grad(j, &state.x, prev, &mut rng)?;
            Ok((
                storm_update(m_prev, &p.g_curr, &p.g_prev, hp.beta1)?,
                storm_update(m_prev, &p.g_curr, &p.g_prev, hp.beta2)?,
            ))
        }
        ClusterVariant::CeV2 => {
            let prev = state.x_prev.as_ref().expect("x_prev is set after step 1");
            let p = problem.paired_grad(j, &state.x, prev, &mut rng)?;
            Ok((
                momentum_update(m_prev, &p.g_curr, hp.beta1)?,
                storm_update(m_prev, &p.g_curr, &p.g_prev, hp.beta2)?,
            ))
        }
    }
}

fn step_common(
    state: &mut ClusterState,
    problem: &Problem,
    compressed: bool,
) -> Result<ClusterStepInfo> {
    let t = state.t;
    let n = state.nodes.len();
    let d = state.x.dim() as u64;
    let mut vs = Vec::with_capacity(n);
    let mut ms = Vec::with_capacity(n);
    for j in 0..n {
        let (v, m) = local_update(state, problem, j)?;
        ensure_finite(&v, t, &format!("v_t on node {j}"))?;
        ensure_finite(&m, t, &format!("m_t on node {j}"))?;
        vs.push(v);
        ms.push(m);
    }
    let mut ledger = state.ledger;
    let direction = if compressed {
        let uploads = vs
            .iter()
            .enumerate()
            .map(|(j, v)| {
                ledger.upload(state.q1, d);
                state
                    .q1
                    .apply(v, t, (state.seed, j as u64, Purpose::NodeCompress))
                    .map_err(|e| e.with_context(format!("node {j}, step {t}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let avg = mean_all(&uploads)?;
        let out = state
            .q2
            .apply(&avg, t, (state.seed, SERVER_NODE, Purpose::ServerCompress))
            .map_err(|e| e.with_context(format!("server, step {t}")))?;
        ledger.download(state.q2, n as u64 * d);
        out
    } else {
        for _ in 0..n {
            ledger.upload(CompressorId::Identity, d);
        }
        let total = sum_all(&vs)?;
        ledger.download(CompressorId::Sign, n as u64 * d);
        sign(&total)?.to_vector()
    };
    let x_next = apply_update(
        &state.x,
        direction.as_slice(),
        state.hp.eta,
        state.hp.lambda,
    );
    ensure_finite(&x_next, t, "x_{t+1}")?;
    let v_bar = mean_all(&vs)?;
    let m_bar = mean_all(&ms)?;
    state.x_prev = Some(std::mem::replace(&mut state.x, x_next));
    for (node, m) in state.nodes.iter_mut().zip(ms) {
        node.m = m;
    }
    state.ledger = ledger;
    state.t += 1;
    Ok(ClusterStepInfo {
        v_bar,
        m_bar,
        direction,
    })
}

/// One step of `DisV1`/`DisV2`: sum-then-sign aggregation.
pub fn dis_lion_step(state: &mut ClusterState, problem: &Problem) -> Result<ClusterStepInfo> {
    if state.variant.is_compressed() {
        return Err(LionError::Config(format!(
            "dis_lion_step called on {:?}",
            state.variant
        )));
    }
    step_common(state, problem, false)
}

/// One step of `CeV1`/`CeV2`: average of `Q1` uploads, then `Q2`.
pub fn ce_dis_lion_step(state: &mut ClusterState, problem: &Problem) -> Result<ClusterStepInfo> {
    if !state.variant.is_compressed() {
        return Err(LionError::Config(format!(
            "ce_dis_lion_step called on {:?}",
            state.variant
        )));
    }
    step_common(state, problem, true)
}

impl Trajectory for ClusterState {
    fn x(&self) -> &Vector {
        &self.x
    }

    fn eta(&self) -> f64 {
        self.hp.eta
    }

    fn step(&mut self, problem: &Problem) -> Result<StepEstimates> {
        let info = if self.variant.is_compressed() {
            ce_dis_lion_step(self, problem)?
        } else {
            dis_lion_step(self, problem)?
        };
        Ok(StepEstimates {
            v_bar: info.v_bar,
            m_bar: info.m_bar,
            bits_up: self.ledger.bits_up,
            bits_down: self.ledger.bits_down,
            direction_bounded: self.q2.is_sign_type(),
        })
    }
}

/// Run `horizon` steps of a distributed variant.
pub fn cluster_run(
    problem: &Problem,
    schedule: &Schedule,
    horizon: usize,
    seed: u64,
    variant: ClusterVariant,
    q1: CompressorId,
    q2: CompressorId,
) -> Result<RunRecord> {
    let state = cluster_init(
        problem,
        Hyper::from(schedule),
        horizon,
        schedule.b0,
        variant,
        q1,
        q2,
        seed,
    )?;
    let meta = RunMeta::new(
        problem,
        schedule,
        horizon,
        seed,
        Variant::from(variant),
        Some((state.q1, state.q2)),
    );
    let (mut rec, state) = drive(problem, state, horizon, meta)?;
    rec.ledger = state.ledger;
    Ok(rec)
}
