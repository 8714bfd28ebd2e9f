//! Centralized Lion (v1) and Lion with STORM variance reduction (v2).
//!
//! One step at time `t`:
//!
//! ```text
//! v_t     = (1 - beta1) m_{t-1} + beta1 g(x_t; xi_t)
//! m_t     = (1 - beta2) m_{t-1} + beta2 g(x_t; xi_t)                       (v1)
//! m_t     = ... + (1 - beta2) (g(x_t; xi_t) - g(x_{t-1}; xi_t))            (v2)
//! x_{t+1} = x_t - eta (sign(v_t) + lambda x_t)
//! ```
//!
//! At `t = 1` there is no recursion: `v_1 = m_1` is a single stochastic
//! gradient (v1) or the mean of a `B0` batch (v2). One sample per step feeds
//! both `v_t` and `m_t`.

use serde::{Deserialize, Serialize};

use crate::error::{LionError, Result};
use crate::estimators::{check_beta, momentum_update, storm_update};
use crate::harness::{drive, RunMeta, RunRecord, StepEstimates, Trajectory};
use crate::problems::{Problem, Sampling};
use crate::rng::{stream, Purpose};
use crate::schedules::Schedule;
use crate::vecops::{sign, Vector};

/// Step size, weight decay and the two momentum parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub eta: f64,
    pub lambda: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl From<&Schedule> for Hyper {
    fn from(s: &Schedule) -> Self {
        Hyper {
            eta: s.eta,
            lambda: s.lambda,
            beta1: s.beta1,
            beta2: s.beta2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CentralVariant {
    V1,
    V2,
}

/// Lower end of the momentum-parameter chain a variant requires.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BetaChain {
    /// `beta2^2 <= beta1 <= sqrt(beta2)`
    Squared,
    /// `beta2 <= beta1 <= sqrt(beta2)`
    Linear,
    /// `beta1 <= sqrt(beta2)`
    UpperOnly,
}

/// Check the preconditions shared by every Lion-type trajectory: the
/// momentum chain of the variant, `eta > 0`, `||x_1||_inf <= eta` and
/// `lambda <= 1/(2 eta T)`.
pub(crate) fn check_preconditions(
    hp: &Hyper,
    horizon: usize,
    x1: &Vector,
    chain: BetaChain,
) -> Result<()> {
    check_beta(hp.beta1).map_err(|e| LionError::Config(format!("beta1: {e}")))?;
    check_beta(hp.beta2).map_err(|e| LionError::Config(format!("beta2: {e}")))?;
    if !(hp.eta > 0.0 && hp.eta.is_finite()) {
        return Err(LionError::Config(format!(
            "eta must be positive, got {}",
            hp.eta
        )));
    }
    if !(hp.lambda >= 0.0 && hp.lambda.is_finite()) {
        return Err(LionError::Config(format!(
            "lambda must be >= 0, got {}",
            hp.lambda
        )));
    }
    if horizon == 0 {
        return Err(LionError::Config("horizon T must be >= 1".into()));
    }
    match chain {
        BetaChain::Linear if hp.beta2 > hp.beta1 => {
            return Err(LionError::Config(format!(
                "violated beta2 ≤ beta1 (beta2 = {}, beta1 = {})",
                hp.beta2, hp.beta1
            )));
        }
        BetaChain::Squared if hp.beta2 * hp.beta2 > hp.beta1 => {
            return Err(LionError::Config(format!(
                "violated beta2^2 ≤ beta1 (beta2 = {}, beta1 = {})",
                hp.beta2, hp.beta1
            )));
        }
        _ => {}
    }
    if hp.beta1 > hp.beta2.sqrt() {
        return Err(LionError::Config(format!(
            "violated beta1 ≤ sqrt(beta2) (beta1 = {}, beta2 = {})",
            hp.beta1, hp.beta2
        )));
    }
    if x1.linf() > hp.eta {
        return Err(LionError::Config(format!(
            "violated ||x_1||_inf ≤ eta (||x_1||_inf = {}, eta = {})",
            x1.linf(),
            hp.eta
        )));
    }
    if hp.lambda > 1.0 / (2.0 * hp.eta * horizon as f64) {
        return Err(LionError::Config(format!(
            "violated lambda ≤ 1/(2ηT) (lambda = {}, eta = {}, T = {horizon})",
            hp.lambda, hp.eta
        )));
    }
    Ok(())
}

/// `x - eta * (dir + lambda * x)`, per coordinate.
pub(crate) fn apply_update(x: &Vector, dir: &[f64], eta: f64, lambda: f64) -> Vector {
    Vector::from_raw(
        x.as_slice()
            .iter()
            .zip(dir)
            .map(|(&xk, &dk)| xk - eta * (dk + lambda * xk))
            .collect(),
    )
}

pub(crate) fn ensure_finite(v: &Vector, step: usize, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(LionError::Divergence {
            step,
            what: format!("non-finite entry in {what}"),
        })
    }
}

/// Centralized optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct LionState {
    pub x: Vector,
    pub x_prev: Option<Vector>,
    pub m: Vector,
    /// Index of the next step to execute, starting at 1.
    pub t: usize,
    pub hp: Hyper,
    pub variant: CentralVariant,
    pub horizon: usize,
    seed: u64,
}

/// Initialize at `x1` (origin by default) with `m_1` drawn from step 1's
/// sample stream: one gradient for v1, a `b0`-batch mean for v2.
pub fn lion_init(
    problem: &Problem,
    hp: Hyper,
    horizon: usize,
    b0: usize,
    variant: CentralVariant,
    seed: u64,
    x1: Option<Vector>,
) -> Result<LionState> {
    let x1 = x1.unwrap_or_else(|| problem.x1());
    if x1.dim() != problem.dim() {
        return Err(LionError::Shape {
            expected: problem.dim(),
            got: x1.dim(),
        });
    }
    let chain = match variant {
        CentralVariant::V1 => BetaChain::Squared,
        CentralVariant::V2 => BetaChain::Linear,
    };
    check_preconditions(&hp, horizon, &x1, chain)?;
    init_unchecked(problem, hp, horizon, b0, variant, seed, x1)
}

fn init_unchecked(
    problem: &Problem,
    hp: Hyper,
    horizon: usize,
    b0: usize,
    variant: CentralVariant,
    seed: u64,
    x1: Vector,
) -> Result<LionState> {
    let mut rng = stream(seed, 0, 1, Purpose::Sample);
    let m = match variant {
        CentralVariant::V1 => problem.stoch_grad(0, &x1, &mut rng)?.0,
        CentralVariant::V2 => {
            problem.batch_grad(0, &x1, b0, Sampling::WithReplacement, &mut rng)?
        }
    };
    Ok(LionState {
        x: x1,
        x_prev: None,
        m,
        t: 1,
        hp,
        variant,
        horizon,
        seed,
    })
}

/// Output of one step, for metric collection.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub v: Vector,
    pub m: Vector,
    pub x_before: Vector,
}

/// Advance one step. Returns the estimators used at this step.
pub fn lion_step(state: &mut LionState, problem: &Problem) -> Result<StepInfo> {
    let t = state.t;
    let (v, m) = if t == 1 {
        (state.m.clone(), state.m.clone())
    } else {
        let mut rng = stream(state.seed, 0, t as u64, Purpose::Sample);
        match state.variant {
            CentralVariant::V1 => {
                let (g, _) = problem.stoch_grad(0, &state.x, &mut rng)?;
                (
                    momentum_update(&state.m, &g, state.hp.beta1)?,
                    momentum_update(&state.m, &g, state.hp.beta2)?,
                )
            }
            CentralVariant::V2 => {
                let prev = state.x_prev.as_ref().expect("x_prev is set after step 1");
                let pair = problem.paired_grad(0, &state.x, prev, &mut rng)?;
                (
                    momentum_update(&state.m, &pair.g_curr, state.hp.beta1)?,
                    storm_update(&state.m, &pair.g_curr, &pair.g_prev, state.hp.beta2)?,
                )
            }
        }
    };
    ensure_finite(&v, t, "v_t")?;
    ensure_finite(&m, t, "m_t")?;
    let dir = sign(&v)?.to_vector();
    let x_next = apply_update(&state.x, dir.as_slice(), state.hp.eta, state.hp.lambda);
    ensure_finite(&x_next, t, "x_{t+1}")?;
    let x_before = std::mem::replace(&mut state.x, x_next);
    state.x_prev = Some(x_before.clone());
    state.m = m.clone();
    state.t += 1;
    Ok(StepInfo { v, m, x_before })
}

impl Trajectory for LionState {
    fn x(&self) -> &Vector {
        &self.x
    }

    fn eta(&self) -> f64 {
        self.hp.eta
    }

    fn step(&mut self, problem: &Problem) -> Result<StepEstimates> {
        let info = lion_step(self, problem)?;
        Ok(StepEstimates {
            v_bar: info.v,
            m_bar: info.m,
            bits_up: 0,
            bits_down: 0,
            direction_bounded: true,
        })
    }
}

/// Run `horizon` steps of centralized Lion under `schedule`.
pub fn lion_run(
    problem: &Problem,
    schedule: &Schedule,
    horizon: usize,
    seed: u64,
    variant: CentralVariant,
) -> Result<RunRecord> {
    let state = lion_init(
        problem,
        Hyper::from(schedule),
        horizon,
        schedule.b0,
        variant,
        seed,
        None,
    )?;
    let meta = RunMeta::new(problem, schedule, horizon, seed, variant.into(), None);
    drive(problem, state, horizon, meta).map(|(rec, _)| rec)
}
