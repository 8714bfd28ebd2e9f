//! Synthetic finite-sum problems with certified constants.
//!
//! Every node `j` holds a shard of labelled samples `(a, y)` with
//! `||a||_inf <= 1` and `y in {-1, +1}`. The per-sample loss is
//!
//! ```text
//! f_j(x; i) = ln(1 + exp(-y_i <a_i, x>)) + alpha * sum_k x_k^2 / (1 + x_k^2)
//! ```
//!
//! and the global objective is the average of the node objectives. Both terms
//! are nonnegative, so `f* >= 0`. The constants the hyperparameter schedules
//! need (`L`, `sigma`, `G`, `delta_f`) are derived from the data:
//!
//! * `G = 1 + 2 alpha` bounds every per-sample gradient in the sup-norm.
//! * `L = max_i ||a_i||^2 / 4 + 2 alpha` is a per-sample smoothness constant,
//!   so it also bounds the averaged and the full-gradient Lipschitz constants.
//! * `sigma` is the largest shard noise found by exact enumeration at `x_1`
//!   and at sampled points of the box `||x||_inf <= 10`, inflated by 2.
//! * `delta_f = f(x_1)`, valid because `f* >= 0`.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{LionError, Result};
use crate::rng::{stream, Purpose, RandomStream};
use crate::vecops::Vector;

/// Half-width of the box on which the noise bound is certified.
pub const CERT_BOX: f64 = 10.0;
/// Number of random box points used to certify `sigma`.
pub const SIGMA_CERT_POINTS: usize = 32;
/// Multiplicative margin applied to the enumerated noise bound.
pub const SIGMA_MARGIN: f64 = 2.0;

/// Largest per-coordinate class mean.
const CLASS_SEPARATION: f64 = 0.15;
/// Standard deviation of the per-coordinate feature noise.
const FEATURE_NOISE: f64 = 0.3;

/// Generation parameters for the logistic-regression family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default = "default_kind")]
    pub kind: String,
    pub d: usize,
    pub n: usize,
    pub samples_per_node: usize,
    #[serde(default)]
    pub heterogeneity: f64,
    #[serde(default)]
    pub nonconvex_reg: f64,
    pub seed: u64,
}

fn default_kind() -> String {
    "logreg".to_string()
}

impl ProblemConfig {
    pub fn logreg(
        d: usize,
        n: usize,
        samples_per_node: usize,
        heterogeneity: f64,
        nonconvex_reg: f64,
        seed: u64,
    ) -> Self {
        Self {
            kind: default_kind(),
            d,
            n,
            samples_per_node,
            heterogeneity,
            nonconvex_reg,
            seed,
        }
    }

    pub fn build(&self) -> Result<Problem> {
        if self.kind != "logreg" {
            return Err(LionError::Config(format!(
                "unknown problem kind {:?} (expected \"logreg\")",
                self.kind
            )));
        }
        make_logreg_problem(
            self.d,
            self.n,
            self.samples_per_node,
            self.heterogeneity,
            self.nonconvex_reg,
            self.seed,
        )
    }
}

/// Dimension of the benchmark problem.
pub const BENCH_D: usize = 20;
/// Weight of the nonconvex regularizer in the benchmark problem.
pub const BENCH_REG: f64 = 0.1;
/// Samples held by each benchmark node.
pub const BENCH_SAMPLES_PER_NODE: usize = 256;
/// Feature shift across benchmark nodes.
pub const BENCH_HETEROGENEITY: f64 = 1.0;
/// Data seed of the benchmark problem.
pub const BENCH_SEED: u64 = 2024;

/// The benchmark problem on `n` nodes.
pub fn benchmark_config(n: usize) -> ProblemConfig {
    ProblemConfig::logreg(
        BENCH_D,
        n,
        BENCH_SAMPLES_PER_NODE,
        BENCH_HETEROGENEITY,
        BENCH_REG,
        BENCH_SEED,
    )
}

/// Certified problem constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Per-sample smoothness constant.
    pub l: f64,
    /// Noise bound used by schedules (enumerated value times the margin).
    pub sigma: f64,
    /// Largest enumerated shard noise, before the margin.
    pub sigma_enumerated: f64,
    /// Sup-norm bound on every per-sample gradient.
    pub g: f64,
    /// Lower bound on the infimum of `f`.
    pub f_star: f64,
    /// Upper bound on `f(x_1) - f*`.
    pub delta_f: f64,
}

/// One node's data.
#[derive(Debug, Clone, PartialEq)]
pub struct Shard {
    pub node_id: usize,
    dim: usize,
    /// Row-major `len x dim`.
    features: Vec<f64>,
    labels: Vec<f64>,
}

impl Shard {
    pub fn new(node_id: usize, dim: usize, features: Vec<f64>, labels: Vec<f64>) -> Result<Self> {
        if dim == 0 || labels.is_empty() {
            return Err(LionError::InvalidParameter(
                "shard must have dim >= 1 and at least one sample".into(),
            ));
        }
        if features.len() != dim * labels.len() {
            return Err(LionError::Shape {
                expected: dim * labels.len(),
                got: features.len(),
            });
        }
        if features.iter().any(|a| !(a.is_finite() && a.abs() <= 1.0)) {
            return Err(LionError::InvalidInput(
                "features must satisfy |a| <= 1".into(),
            ));
        }
        if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(LionError::InvalidInput("labels must be -1 or +1".into()));
        }
        Ok(Self {
            node_id,
            dim,
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sample(&self, i: usize) -> (&[f64], f64) {
        (
            &self.features[i * self.dim..(i + 1) * self.dim],
            self.labels[i],
        )
    }

    fn max_feature_norm_sq(&self) -> f64 {
        self.features
            .chunks(self.dim)
            .map(|a| a.iter().map(|v| v * v).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Two gradients of the same node evaluated on one shared sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedGrad {
    pub g_curr: Vector,
    pub g_prev: Vector,
    pub sample_id: usize,
}

/// How `batch_grad` draws its samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    WithReplacement,
    WithoutReplacement,
}

/// Finite-sum objective distributed over `n` shards.
#[derive(Debug, Clone)]
pub struct Problem {
    dim: usize,
    alpha: f64,
    shards: Vec<Shard>,
    constants: Constants,
    config: Option<ProblemConfig>,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// `1 / (1 + exp(-z))`, stable for large `|z|`.
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Problem {
    /// Build a problem from explicit shards. All shards must share `dim`.
    pub fn from_shards(dim: usize, shards: Vec<Shard>, nonconvex_reg: f64) -> Result<Self> {
        if shards.is_empty() {
            return Err(LionError::InvalidParameter(
                "need at least one shard".into(),
            ));
        }
        if !(nonconvex_reg.is_finite() && nonconvex_reg >= 0.0) {
            return Err(LionError::InvalidParameter(format!(
                "nonconvex_reg must be >= 0, got {nonconvex_reg}"
            )));
        }
        if let Some(s) = shards.iter().find(|s| s.dim != dim) {
            return Err(LionError::Shape {
                expected: dim,
                got: s.dim,
            });
        }
        let mut p = Self {
            dim,
            alpha: nonconvex_reg,
            shards,
            constants: Constants {
                l: 0.0,
                sigma: 0.0,
                sigma_enumerated: 0.0,
                g: 0.0,
                f_star: 0.0,
                delta_f: 0.0,
            },
            config: None,
        };
        p.constants = p.certify();
        Ok(p)
    }

    fn certify(&self) -> Constants {
        let alpha = self.alpha;
        let max_a2 = self
            .shards
            .iter()
            .map(Shard::max_feature_norm_sq)
            .fold(0.0, f64::max);
        let x1 = self.x1();
        let mut noise_sq = self.max_noise_sq(&x1);
        let mut rng = stream(0, 0, 0, Purpose::Problem);
        for _ in 0..SIGMA_CERT_POINTS {
            let x = Vector::from_raw(
                (0..self.dim)
                    .map(|_| rng.gen_range(-CERT_BOX..=CERT_BOX))
                    .collect(),
            );
            noise_sq = noise_sq.max(self.max_noise_sq(&x));
        }
        let sigma_enumerated = noise_sq.sqrt();
        Constants {
            l: 0.25 * max_a2 + 2.0 * alpha,
            sigma: SIGMA_MARGIN * sigma_enumerated,
            sigma_enumerated,
            g: 1.0 + 2.0 * alpha,
            f_star: 0.0,
            delta_f: self.value(&x1),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_nodes(&self) -> usize {
        self.shards.len()
    }

    pub fn shard(&self, node: usize) -> &Shard {
        &self.shards[node]
    }

    pub fn samples_per_node(&self, node: usize) -> usize {
        self.shards[node].len()
    }

    pub fn nonconvex_reg(&self) -> f64 {
        self.alpha
    }

    /// Generation parameters, when the problem came from a generator.
    pub fn config(&self) -> Option<&ProblemConfig> {
        self.config.as_ref()
    }

    pub fn constants(&self) -> &Constants {
        &self.constants
    }

    /// Default starting point, the origin.
    pub fn x1(&self) -> Vector {
        Vector::zeros(self.dim)
    }

    /// Single-node problem over the union of all shards.
    ///
    /// With equal shard sizes the pooled objective is identical to `f`.
    pub fn pooled(&self) -> Result<Problem> {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for s in &self.shards {
            features.extend_from_slice(&s.features);
            labels.extend_from_slice(&s.labels);
        }
        Problem::from_shards(
            self.dim,
            vec![Shard::new(0, self.dim, features, labels)?],
            self.alpha,
        )
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.shards.len() {
            return Err(LionError::InvalidParameter(format!(
                "node id {node} out of range (n = {})",
                self.shards.len()
            )));
        }
        Ok(())
    }

    fn check_x(&self, x: &Vector) -> Result<()> {
        if x.dim() != self.dim {
            return Err(LionError::Shape {
                expected: self.dim,
                got: x.dim(),
            });
        }
        Ok(())
    }

    fn add_reg_grad(&self, x: &[f64], out: &mut [f64]) {
        if self.alpha == 0.0 {
            return;
        }
        for (o, &xi) in out.iter_mut().zip(x) {
            let den = 1.0 + xi * xi;
            *o += self.alpha * 2.0 * xi / (den * den);
        }
    }

    fn reg_value(&self, x: &[f64]) -> f64 {
        self.alpha * x.iter().map(|&xi| xi * xi / (1.0 + xi * xi)).sum::<f64>()
    }

    /// Logistic part of the gradient of sample `i` added into `out` with weight `w`.
    #[inline]
    fn accumulate_logistic(&self, shard: &Shard, i: usize, x: &[f64], w: f64, out: &mut [f64]) {
        let (a, y) = shard.sample(i);
        let u: f64 = y * a.iter().zip(x).map(|(ak, xk)| ak * xk).sum::<f64>();
        let coeff = -y * sigmoid(-u) * w;
        for (o, &ak) in out.iter_mut().zip(a) {
            *o += coeff * ak;
        }
    }

    /// Gradient of sample `i` on `node` at `x`.
    pub fn sample_grad(&self, node: usize, i: usize, x: &Vector) -> Vector {
        let mut out = vec![0.0; self.dim];
        self.accumulate_logistic(&self.shards[node], i, x.as_slice(), 1.0, &mut out);
        self.add_reg_grad(x.as_slice(), &mut out);
        Vector::from_raw(out)
    }

    /// Exact `grad f_j(x)`.
    pub fn node_grad(&self, node: usize, x: &Vector) -> Result<Vector> {
        self.check_node(node)?;
        self.check_x(x)?;
        Ok(self.node_grad_unchecked(node, x))
    }

    fn node_grad_unchecked(&self, node: usize, x: &Vector) -> Vector {
        let shard = &self.shards[node];
        let mut out = vec![0.0; self.dim];
        for i in 0..shard.len() {
            self.accumulate_logistic(shard, i, x.as_slice(), 1.0, &mut out);
        }
        let inv = 1.0 / shard.len() as f64;
        for o in &mut out {
            *o *= inv;
        }
        self.add_reg_grad(x.as_slice(), &mut out);
        Vector::from_raw(out)
    }

    /// Exact `grad f(x) = (1/n) sum_j grad f_j(x)`.
    pub fn full_grad(&self, x: &Vector) -> Result<Vector> {
        self.check_x(x)?;
        let mut out = vec![0.0; self.dim];
        for j in 0..self.shards.len() {
            for (o, g) in out
                .iter_mut()
                .zip(self.node_grad_unchecked(j, x).as_slice())
            {
                *o += g;
            }
        }
        let inv = 1.0 / self.shards.len() as f64;
        for o in &mut out {
            *o *= inv;
        }
        Ok(Vector::from_raw(out))
    }

    /// `f(x)`.
    pub fn value(&self, x: &Vector) -> f64 {
        let xs = x.as_slice();
        let mut total = 0.0;
        for shard in &self.shards {
            let mut s = 0.0;
            for i in 0..shard.len() {
                let (a, y) = shard.sample(i);
                let u: f64 = y * a.iter().zip(xs).map(|(ak, xk)| ak * xk).sum::<f64>();
                s += softplus(-u);
            }
            total += s / shard.len() as f64;
        }
        total / self.shards.len() as f64 + self.reg_value(xs)
    }

    /// Largest per-node shard noise `(1/N) sum_i ||g_i(x) - grad f_j(x)||^2`.
    pub fn max_noise_sq(&self, x: &Vector) -> f64 {
        (0..self.shards.len())
            .map(|j| self.node_noise_sq(j, x))
            .fold(0.0, f64::max)
    }

    /// Exact noise of node `j`'s per-sample gradients at `x`, by enumeration.
    pub fn node_noise_sq(&self, node: usize, x: &Vector) -> f64 {
        let mean = self.node_grad_unchecked(node, x);
        let shard = &self.shards[node];
        let mut acc = 0.0;
        for i in 0..shard.len() {
            let g = self.sample_grad(node, i, x);
            acc += g
                .as_slice()
                .iter()
                .zip(mean.as_slice())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
        acc / shard.len() as f64
    }

    /// One uniformly drawn sample gradient: `(grad f_j(x; xi), xi)`.
    pub fn stoch_grad(
        &self,
        node: usize,
        x: &Vector,
        rng: &mut RandomStream,
    ) -> Result<(Vector, usize)> {
        self.check_node(node)?;
        self.check_x(x)?;
        let i = rng.gen_range(0..self.shards[node].len());
        Ok((self.sample_grad(node, i, x), i))
    }

    /// One drawn sample, gradients at both `x_curr` and `x_prev`.
    pub fn paired_grad(
        &self,
        node: usize,
        x_curr: &Vector,
        x_prev: &Vector,
        rng: &mut RandomStream,
    ) -> Result<PairedGrad> {
        self.check_node(node)?;
        self.check_x(x_curr)?;
        self.check_x(x_prev)?;
        let i = rng.gen_range(0..self.shards[node].len());
        Ok(PairedGrad {
            g_curr: self.sample_grad(node, i, x_curr),
            g_prev: self.sample_grad(node, i, x_prev),
            sample_id: i,
        })
    }

    /// Mean of `batch` sample gradients.
    pub fn batch_grad(
        &self,
        node: usize,
        x: &Vector,
        batch: usize,
        sampling: Sampling,
        rng: &mut RandomStream,
    ) -> Result<Vector> {
        self.check_node(node)?;
        self.check_x(x)?;
        let shard = &self.shards[node];
        if batch == 0 {
            return Err(LionError::InvalidParameter(
                "batch size must be >= 1".into(),
            ));
        }
        let ids: Vec<usize> = match sampling {
            Sampling::WithReplacement => {
                (0..batch).map(|_| rng.gen_range(0..shard.len())).collect()
            }
            Sampling::WithoutReplacement => {
                if batch > shard.len() {
                    return Err(LionError::InvalidParameter(format!(
                        "batch {batch} exceeds shard size {} without replacement",
                        shard.len()
                    )));
                }
                index::sample(rng, shard.len(), batch).into_vec()
            }
        };
        let mut out = vec![0.0; self.dim];
        for i in ids {
            self.accumulate_logistic(shard, i, x.as_slice(), 1.0, &mut out);
        }
        let inv = batch as f64;
        for o in &mut out {
            *o /= inv;
        }
        self.add_reg_grad(x.as_slice(), &mut out);
        Ok(Vector::from_raw(out))
    }
}

/// Per-node logistic regression with a bounded nonconvex regularizer.
///
/// Labels are fair coin flips. Features are `y * mu + 0.3 * N(0, I)` with a
/// shared class mean `mu`, shifted by `heterogeneity * u_j` for a random unit
/// vector `u_j` per node and clipped back into `[-1, 1]^d`.
pub fn make_logreg_problem(
    d: usize,
    n: usize,
    samples_per_node: usize,
    heterogeneity: f64,
    nonconvex_reg: f64,
    seed: u64,
) -> Result<Problem> {
    if d == 0 || n == 0 || samples_per_node == 0 {
        return Err(LionError::InvalidParameter(
            "d, n and samples_per_node must all be >= 1".into(),
        ));
    }
    if !(heterogeneity.is_finite() && heterogeneity >= 0.0) {
        return Err(LionError::InvalidParameter(format!(
            "heterogeneity must be >= 0, got {heterogeneity}"
        )));
    }
    let mut rng = stream(seed, 0, 0, Purpose::Problem);
    let class_mean: Vec<f64> = (0..d)
        .map(|_| CLASS_SEPARATION * rng.gen_range(-1.0..=1.0))
        .collect();
    let mut shards = Vec::with_capacity(n);
    for j in 0..n {
        let mut node_rng = stream(seed, j as u64, 0, Purpose::Problem);
        let shift = unit_vector(d, &mut node_rng);
        let mut features = Vec::with_capacity(d * samples_per_node);
        let mut labels = Vec::with_capacity(samples_per_node);
        for _ in 0..samples_per_node {
            let y = if node_rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            for (mu, u) in class_mean.iter().zip(&shift) {
                let e: f64 = StandardNormal.sample(&mut node_rng);
                features.push((y * mu + FEATURE_NOISE * e + heterogeneity * u).clamp(-1.0, 1.0));
            }
            labels.push(y);
        }
        shards.push(Shard::new(j, d, features, labels)?);
    }
    let mut p = Problem::from_shards(d, shards, nonconvex_reg)?;
    p.config = Some(ProblemConfig::logreg(
        d,
        n,
        samples_per_node,
        heterogeneity,
        nonconvex_reg,
        seed,
    ));
    Ok(p)
}

fn unit_vector(d: usize, rng: &mut RandomStream) -> Vec<f64> {
    loop {
        let u: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return u.into_iter().map(|v| v / norm).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn small() -> Problem {
        make_logreg_problem(5, 3, 40, 0.5, 0.1, 9).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(make_logreg_problem(0, 1, 1, 0.0, 0.0, 0).is_err());
        assert!(make_logreg_problem(1, 0, 1, 0.0, 0.0, 0).is_err());
        assert!(make_logreg_problem(1, 1, 0, 0.0, 0.0, 0).is_err());
        assert!(make_logreg_problem(1, 1, 1, -1.0, 0.0, 0).is_err());
        assert!(make_logreg_problem(1, 1, 1, 0.0, -1.0, 0).is_err());
    }

    #[test]
    fn constants_closed_forms() {
        let p = small();
        let c = p.constants();
        assert_eq!(c.g, 1.2);
        assert!(c.l <= 0.25 * 5.0 + 0.2 + 1e-12);
        assert!(c.sigma >= c.sigma_enumerated * 2.0 - 1e-15);
        assert_eq!(c.f_star, 0.0);
        assert!((c.delta_f - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn zero_data_has_zero_gradient_at_origin() {
        let shard = Shard::new(0, 2, vec![0.0; 8], vec![1.0, -1.0, 1.0, -1.0]).unwrap();
        let p = Problem::from_shards(2, vec![shard], 0.3).unwrap();
        let x = Vector::zeros(2);
        for i in 0..4 {
            assert_eq!(p.sample_grad(0, i, &x), Vector::zeros(2));
        }
        assert_eq!(p.full_grad(&x).unwrap(), Vector::zeros(2));
    }

    #[test]
    fn shard_validation() {
        assert!(Shard::new(0, 2, vec![0.0; 3], vec![1.0, 1.0]).is_err());
        assert!(Shard::new(0, 1, vec![2.0], vec![1.0]).is_err());
        assert!(Shard::new(0, 1, vec![0.5], vec![0.0]).is_err());
    }

    #[test]
    fn homogeneous_shards_share_distribution() {
        // heterogeneity 0: shift vectors have no effect; per-node feature
        // means agree up to sampling error.
        let p = make_logreg_problem(4, 4, 2000, 0.0, 0.0, 1).unwrap();
        let means: Vec<Vec<f64>> = (0..4)
            .map(|j| {
                let s = p.shard(j);
                (0..4)
                    .map(|k| (0..s.len()).map(|i| s.sample(i).0[k]).sum::<f64>() / s.len() as f64)
                    .collect()
            })
            .collect();
        for m in &means {
            for (a, b) in m.iter().zip(&means[0]) {
                assert!((a - b).abs() < 0.1);
            }
        }
    }

    #[test]
    fn heterogeneous_shards_differ() {
        let p = make_logreg_problem(4, 3, 500, 1.5, 0.0, 1).unwrap();
        let x = Vector::new(vec![0.3, -0.2, 0.1, 0.5]).unwrap();
        let g0 = p.node_grad(0, &x).unwrap();
        let g1 = p.node_grad(1, &x).unwrap();
        assert!(g0.dist_sq(&g1).unwrap() > 1e-4);
    }

    #[test]
    fn finite_sum_identity() {
        let p = small();
        let x = Vector::new(vec![0.4, -1.0, 2.0, 0.0, -0.3]).unwrap();
        for j in 0..p.num_nodes() {
            let n = p.samples_per_node(j);
            let mut acc = Vector::zeros(5);
            for i in 0..n {
                acc.add_assign(&p.sample_grad(j, i, &x)).unwrap();
            }
            let avg = acc.scale(1.0 / n as f64);
            let exact = p.node_grad(j, &x).unwrap();
            let rel = avg.dist_sq(&exact).unwrap().sqrt() / exact.l2().max(1e-300);
            assert!(rel <= 1e-12, "relative error {rel}");
        }
    }

    #[test]
    fn stoch_grad_is_deterministic_and_advances_once() {
        let p = small();
        let x = Vector::new(vec![0.1; 5]).unwrap();
        let mut a = seeded(4);
        let mut b = seeded(4);
        assert_eq!(
            p.stoch_grad(1, &x, &mut a).unwrap(),
            p.stoch_grad(1, &x, &mut b).unwrap()
        );
        let mut c = seeded(11);
        let mut d = seeded(11);
        let pair = p.paired_grad(2, &x, &Vector::zeros(5), &mut c).unwrap();
        let expected_id = d.gen_range(0..p.samples_per_node(2));
        assert_eq!(pair.sample_id, expected_id);
        // both streams now stand at the same position
        assert_eq!(c.gen::<u64>(), d.gen::<u64>());
    }

    #[test]
    fn paired_grad_same_point() {
        let p = small();
        let x = Vector::new(vec![0.7, -0.1, 0.2, 0.9, -2.0]).unwrap();
        let pair = p.paired_grad(0, &x, &x, &mut seeded(1)).unwrap();
        assert_eq!(pair.g_curr, pair.g_prev);
    }

    #[test]
    fn batch_of_one_equals_stoch_grad() {
        let p = small();
        let x = Vector::new(vec![0.3; 5]).unwrap();
        let (g, _) = p.stoch_grad(0, &x, &mut seeded(8)).unwrap();
        let b = p
            .batch_grad(0, &x, 1, Sampling::WithReplacement, &mut seeded(8))
            .unwrap();
        assert_eq!(g, b);
    }

    #[test]
    fn full_batch_without_replacement_is_exact() {
        let p = small();
        let x = Vector::new(vec![-0.3, 0.2, 0.0, 1.0, 0.5]).unwrap();
        let n = p.samples_per_node(1);
        let b = p
            .batch_grad(1, &x, n, Sampling::WithoutReplacement, &mut seeded(2))
            .unwrap();
        let exact = p.node_grad(1, &x).unwrap();
        assert!(b.dist_sq(&exact).unwrap().sqrt() <= 1e-12 * exact.l2());
        assert!(p
            .batch_grad(1, &x, n + 1, Sampling::WithoutReplacement, &mut seeded(2))
            .is_err());
        assert!(p
            .batch_grad(1, &x, 0, Sampling::WithReplacement, &mut seeded(2))
            .is_err());
    }

    #[test]
    fn pooled_problem_has_same_objective() {
        let p = small();
        let q = p.pooled().unwrap();
        assert_eq!(q.num_nodes(), 1);
        let x = Vector::new(vec![0.5, -0.5, 0.25, 0.0, 1.0]).unwrap();
        let a = p.full_grad(&x).unwrap();
        let b = q.full_grad(&x).unwrap();
        assert!(a.dist_sq(&b).unwrap().sqrt() <= 1e-12);
        assert!((p.value(&x) - q.value(&x)).abs() <= 1e-12);
    }

    #[test]
    fn bad_node_or_dim_rejected() {
        let p = small();
        let x = Vector::zeros(5);
        assert!(p.stoch_grad(3, &x, &mut seeded(0)).is_err());
        assert!(p.node_grad(0, &Vector::zeros(4)).is_err());
    }

    #[test]
    fn objective_nonnegative() {
        let p = small();
        let mut rng = seeded(5);
        for _ in 0..100 {
            let x = Vector::new((0..5).map(|_| rng.gen_range(-20.0..20.0)).collect()).unwrap();
            assert!(p.value(&x) >= 0.0);
        }
    }
}
