//! Hyperparameter schedules derived from the convergence theorems.
//!
//! Each [`TheoremId`] fixes how `(beta1, beta2, eta, lambda, B0)` scale with
//! the horizon `T`, the dimension `d` and the node count `n`. All big-O
//! constants are 1, betas are clipped into `(0, 1]`, `beta1 = sqrt(beta2)`
//! wherever it is only range-constrained, and `B0` is a ceiling with floor 1.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LionError, Result};
use crate::problems::Constants;

/// Which theorem's settings a schedule follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TheoremId {
    /// Centralized Lion.
    T1,
    /// Centralized Lion with variance reduction.
    T2,
    /// Distributed Lion.
    T3,
    /// Distributed Lion with variance reduction.
    T4,
    /// Sign-compressed distributed Lion, sign on the server, `eta ~ (Td)^{-1/2}`.
    T5a,
    /// Sign-compressed distributed Lion, sign on the server, `eta ~ n^{-1/2}`.
    T5b,
    /// Sign-compressed distributed Lion, unbiased sign in both directions.
    T7,
    /// As `T7` with variance reduction.
    T8,
}

impl TheoremId {
    pub const ALL: [TheoremId; 8] = [
        TheoremId::T1,
        TheoremId::T2,
        TheoremId::T3,
        TheoremId::T4,
        TheoremId::T5a,
        TheoremId::T5b,
        TheoremId::T7,
        TheoremId::T8,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| LionError::Config(format!("unknown theorem id {s:?}")))
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TheoremId::T1 => "T1",
            TheoremId::T2 => "T2",
            TheoremId::T3 => "T3",
            TheoremId::T4 => "T4",
            TheoremId::T5a => "T5a",
            TheoremId::T5b => "T5b",
            TheoremId::T7 => "T7",
            TheoremId::T8 => "T8",
        };
        f.write_str(s)
    }
}

pub const REL_BETA_LOWER_SQ: &str = "beta2^2 ≤ beta1";
pub const REL_BETA_LOWER: &str = "beta2 ≤ beta1";
pub const REL_BETA_UPPER: &str = "beta1 ≤ sqrt(beta2)";
pub const REL_LAMBDA: &str = "lambda ≤ 1/(2ηT)";
pub const REL_LAMBDA_MIN: &str = "lambda ≤ min{sqrt(L)/(T·sqrt(ηG)), 1/(2ηT)}";
pub const REL_T_GE_N: &str = "T ≥ n";
pub const REL_T_GE_N2: &str = "T ≥ n^2";
pub const REL_ETA_POS: &str = "eta > 0";
pub const REL_LAMBDA_NONNEG: &str = "lambda ≥ 0";
pub const REL_BETA1_RANGE: &str = "beta1 in (0, 1]";
pub const REL_BETA2_RANGE: &str = "beta2 in (0, 1]";
pub const REL_B0: &str = "B0 ≥ 1";
pub const REL_CONSTANTS: &str = "L > 0 and G > 0";

/// One evaluated constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub name: String,
    pub satisfied: bool,
}

/// A fully specified hyperparameter bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub theorem: TheoremId,
    pub eta: f64,
    pub lambda: f64,
    pub beta1: f64,
    pub beta2: f64,
    #[serde(rename = "B0")]
    pub b0: usize,
    /// Smoothness constant, needed by the `T7`/`T8` weight-decay rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    /// Gradient bound, needed by the `T7`/`T8` weight-decay rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
}

impl Schedule {
    pub fn validate(&self, horizon: usize, nodes: usize) -> Vec<Relation> {
        validate(self, horizon, nodes)
    }

    pub fn failed(&self, horizon: usize, nodes: usize) -> Vec<String> {
        validate(self, horizon, nodes)
            .into_iter()
            .filter(|r| !r.satisfied)
            .map(|r| r.name)
            .collect()
    }
}

fn lambda_cap(eta: f64, horizon: usize) -> f64 {
    1.0 / (2.0 * eta * horizon as f64)
}

fn lambda_cap_min(eta: f64, horizon: usize, l: f64, g: f64) -> f64 {
    let t = horizon as f64;
    (l.sqrt() / (t * (eta * g).sqrt())).min(lambda_cap(eta, horizon))
}

/// Build the schedule of `theorem` for horizon `T`, dimension `d`, `n` nodes.
///
/// Fails with a configuration error naming every violated relation.
pub fn schedule_for(
    theorem: TheoremId,
    horizon: usize,
    d: usize,
    n: usize,
    constants: &Constants,
) -> Result<Schedule> {
    if horizon == 0 || d == 0 || n == 0 {
        return Err(LionError::Config("T, d and n must all be >= 1".into()));
    }
    let t = horizon as f64;
    let d_f = d as f64;
    let n_f = n as f64;
    let b0_distributed = || 1usize.max((n_f.powf(-2.0 / 3.0) * t.powf(1.0 / 3.0)).ceil() as usize);

    let (eta, beta2, b0) = match theorem {
        TheoremId::T1 => (d_f.powf(-0.5) * t.powf(-0.75), t.powf(-0.5), 1),
        TheoremId::T2 => (
            d_f.powf(-0.5) * t.powf(-2.0 / 3.0),
            t.powf(-2.0 / 3.0),
            1usize.max(t.powf(1.0 / 3.0).ceil() as usize),
        ),
        TheoremId::T3 => (
            n_f.powf(0.25) * d_f.powf(-0.5) * t.powf(-0.75),
            (n_f.sqrt() * t.powf(-0.5)).min(1.0),
            1,
        ),
        TheoremId::T4 => (
            n_f.powf(1.0 / 3.0) * d_f.powf(-0.5) * t.powf(-2.0 / 3.0),
            (n_f.powf(1.0 / 3.0) * t.powf(-2.0 / 3.0)).min(1.0),
            b0_distributed(),
        ),
        TheoremId::T5a => (t.powf(-0.5) * d_f.powf(-0.5), 0.5, 1),
        TheoremId::T5b => (n_f.powf(-0.5), 0.5, 1),
        TheoremId::T7 => {
            let eta =
                (t.powf(-0.5) * d_f.powf(-0.5)).min(n_f.powf(0.4) * t.powf(-0.6) * d_f.powf(-0.2));
            let beta2 = (n_f.powf(1.0 / 3.0) * eta.powf(2.0 / 3.0) * d_f.powf(1.0 / 3.0)).min(1.0);
            (eta, beta2, 1)
        }
        TheoremId::T8 => (
            d_f.powf(-0.5) * t.powf(-0.5),
            t.powf(-0.5),
            b0_distributed(),
        ),
    };
    let beta1 = beta2.sqrt();
    let (lambda, l, g) = match theorem {
        TheoremId::T7 | TheoremId::T8 => (
            lambda_cap_min(eta, horizon, constants.l, constants.g),
            Some(constants.l),
            Some(constants.g),
        ),
        _ => (lambda_cap(eta, horizon), None, None),
    };
    let schedule = Schedule {
        theorem,
        eta,
        lambda,
        beta1,
        beta2,
        b0,
        l,
        g,
    };
    let failed = schedule.failed(horizon, n);
    if failed.is_empty() {
        Ok(schedule)
    } else {
        Err(LionError::Config(format!(
            "schedule {theorem} for T = {horizon}, n = {n} violates: {}",
            failed.join("; ")
        )))
    }
}

/// Evaluate every relation the schedule's theorem requires. Never mutates.
pub fn validate(s: &Schedule, horizon: usize, nodes: usize) -> Vec<Relation> {
    let rel = |name: &str, satisfied: bool| Relation {
        name: name.to_string(),
        satisfied,
    };
    let in_unit = |b: f64| b > 0.0 && b <= 1.0;
    let mut out = vec![
        rel(REL_ETA_POS, s.eta > 0.0 && s.eta.is_finite()),
        rel(REL_LAMBDA_NONNEG, s.lambda >= 0.0 && s.lambda.is_finite()),
        rel(REL_BETA1_RANGE, in_unit(s.beta1)),
        rel(REL_BETA2_RANGE, in_unit(s.beta2)),
        rel(REL_B0, s.b0 >= 1),
    ];
    let t = horizon;
    let n = nodes as u128;
    use TheoremId::*;
    match s.theorem {
        T1 | T3 | T5a | T5b | T7 => out.push(rel(REL_BETA_LOWER_SQ, s.beta2 * s.beta2 <= s.beta1)),
        T2 => out.push(rel(REL_BETA_LOWER, s.beta2 <= s.beta1)),
        T4 | T8 => {}
    }
    out.push(rel(REL_BETA_UPPER, s.beta1 <= s.beta2.sqrt()));
    match s.theorem {
        T7 | T8 => match (s.l, s.g) {
            (Some(l), Some(g)) if l > 0.0 && g > 0.0 => out.push(rel(
                REL_LAMBDA_MIN,
                s.lambda <= lambda_cap_min(s.eta, t, l, g),
            )),
            _ => {
                out.push(rel(REL_CONSTANTS, false));
                out.push(rel(REL_LAMBDA_MIN, false));
            }
        },
        _ => out.push(rel(REL_LAMBDA, s.lambda <= lambda_cap(s.eta, t))),
    }
    match s.theorem {
        T3 | T7 => out.push(rel(REL_T_GE_N, t as u128 >= n)),
        T4 => out.push(rel(REL_T_GE_N2, t as u128 >= n * n)),
        _ => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_constants() -> Constants {
        Constants {
            l: 1.0,
            sigma: 1.0,
            sigma_enumerated: 0.5,
            g: 1.0,
            f_star: 0.0,
            delta_f: 1.0,
        }
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn t1_example() {
        let s = schedule_for(TheoremId::T1, 10_000, 100, 1, &unit_constants()).unwrap();
        assert!(close(s.beta2, 0.01));
        assert!(close(s.beta1, 0.1));
        assert!(close(s.eta, 1e-4));
        assert!(close(s.lambda, 0.5));
        assert_eq!(s.b0, 1);
        assert!(s.validate(10_000, 1).iter().all(|r| r.satisfied));
    }

    #[test]
    fn t3_example() {
        let s = schedule_for(TheoremId::T3, 10_000, 10, 16, &unit_constants()).unwrap();
        assert!(close(s.beta2, 0.04));
        assert!(close(s.beta1, 0.2));
    }

    #[test]
    fn t2_batch_size() {
        let s = schedule_for(TheoremId::T2, 1000, 10, 1, &unit_constants()).unwrap();
        // ceil(1000^(1/3)) may land on 10 or 11 depending on rounding of powf.
        assert!(s.b0 == 10 || s.b0 == 11);
        let s = schedule_for(TheoremId::T2, 100, 10, 1, &unit_constants()).unwrap();
        assert_eq!(s.b0, 5);
    }

    #[test]
    fn t4_side_condition() {
        let e = schedule_for(TheoremId::T4, 1000, 10, 100, &unit_constants()).unwrap_err();
        assert!(e.to_string().contains(REL_T_GE_N2), "{e}");
        assert!(schedule_for(TheoremId::T4, 10_000, 10, 100, &unit_constants()).is_ok());
    }

    #[test]
    fn t3_side_condition() {
        let e = schedule_for(TheoremId::T3, 10, 10, 16, &unit_constants()).unwrap_err();
        assert!(e.to_string().contains(REL_T_GE_N), "{e}");
    }

    #[test]
    fn t5_variants() {
        let a = schedule_for(TheoremId::T5a, 400, 4, 9, &unit_constants()).unwrap();
        assert!(close(a.eta, 1.0 / 40.0));
        assert_eq!(a.beta2, 0.5);
        let b = schedule_for(TheoremId::T5b, 400, 4, 9, &unit_constants()).unwrap();
        assert!(close(b.eta, 1.0 / 3.0));
        assert!(close(b.lambda, 1.0 / (2.0 * b.eta * 400.0)));
    }

    #[test]
    fn t7_evaluation_order() {
        let c = Constants {
            l: 2.0,
            g: 1.5,
            ..unit_constants()
        };
        let s = schedule_for(TheoremId::T7, 1000, 20, 8, &c).unwrap();
        let eta = (1000f64.powf(-0.5) * 20f64.powf(-0.5))
            .min(8f64.powf(0.4) * 1000f64.powf(-0.6) * 20f64.powf(-0.2));
        assert!(close(s.eta, eta));
        let beta2 = (8f64.powf(1.0 / 3.0) * eta.powf(2.0 / 3.0) * 20f64.powf(1.0 / 3.0)).min(1.0);
        assert!(close(s.beta2, beta2));
        let lam = (2f64.sqrt() / (1000.0 * (eta * 1.5).sqrt())).min(1.0 / (2.0 * eta * 1000.0));
        assert!(close(s.lambda, lam));
    }

    #[test]
    fn validate_hand_built() {
        let mut s = Schedule {
            theorem: TheoremId::T1,
            eta: 0.1,
            lambda: 0.0,
            beta1: 0.5,
            beta2: 0.5,
            b0: 1,
            l: None,
            g: None,
        };
        assert!(s.validate(100, 1).iter().all(|r| r.satisfied));
        s.lambda = 1.0 / (s.eta * 100.0);
        assert_eq!(s.failed(100, 1), vec![REL_LAMBDA.to_string()]);
    }

    #[test]
    fn validate_min_rule_arithmetic() {
        // L = 1, G = 1, eta = 0.01, T = 100: min{1/(100 * 0.1), 1/(2 * 0.01 * 100)} = 0.1
        let mut s = Schedule {
            theorem: TheoremId::T8,
            eta: 0.01,
            lambda: 0.1,
            beta1: 0.1,
            beta2: 0.01,
            b0: 1,
            l: Some(1.0),
            g: Some(1.0),
        };
        assert!(close(lambda_cap_min(0.01, 100, 1.0, 1.0), 0.1));
        assert!(s.failed(100, 1).is_empty());
        s.lambda = 0.11;
        assert_eq!(s.failed(100, 1), vec![REL_LAMBDA_MIN.to_string()]);
        s.l = None;
        assert!(s.failed(100, 1).contains(&REL_CONSTANTS.to_string()));
    }

    #[test]
    fn theorem_id_parse_roundtrip() {
        for t in TheoremId::ALL {
            assert_eq!(TheoremId::parse(&t.to_string()).unwrap(), t);
        }
        assert!(TheoremId::parse("T6").is_err());
    }

    #[test]
    fn eta_nonincreasing_in_horizon() {
        let c = unit_constants();
        for th in TheoremId::ALL {
            for d in [1, 10, 100, 1000] {
                for n in [1, 4, 16, 64] {
                    let etas: Vec<f64> = [100usize, 316, 1000, 3162, 10_000, 31_623, 100_000]
                        .iter()
                        .filter_map(|&t| schedule_for(th, t, d, n, &c).ok().map(|s| s.eta))
                        .collect();
                    assert!(
                        etas.windows(2).all(|w| w[1] <= w[0]),
                        "{th} d={d} n={n}: {etas:?}"
                    );
                }
            }
        }
    }
}
