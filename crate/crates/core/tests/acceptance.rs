//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use lionlab::distributed::cluster_init;
use lionlab::harness::{
    compare_variants, median, median_by_horizon, run_variant, sweep, CompressorKind, Direction,
    Metric, SweepSpec, Trajectory,
};
use lionlab::lion::lion_init;
use lionlab::problems::benchmark_config;
use lionlab::rng::{seeded, stream, Purpose};
use lionlab::schedules::{REL_T_GE_N, REL_T_GE_N2};
use lionlab::{
    fit_rate, make_logreg_problem, schedule_for, unbiased_sign, CentralVariant, ClusterVariant,
    CommLedger, CompressorId, Hyper, Problem, Schedule, TheoremId, Variant, Vector,
};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Box<dyn Fn() -> Outcome>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn iterate_bounds() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded(0xacce_0001);
    let mut steps = 0usize;
    for i in 0..100u64 {
        let variant = Variant::ALL[rng.gen_range(0..Variant::ALL.len())];
        let d = rng.gen_range(1..=64usize);
        let horizon = rng.gen_range(10..=2000usize);
        let eta: f64 = rng.gen_range(1e-6..1.0);
        let beta2: f64 = rng.gen_range(0.01..=1.0);
        let n = if variant.is_centralized() {
            1
        } else {
            rng.gen_range(1..=4usize)
        };
        let (q1, q2) = match variant {
            Variant::CeV1 => (
                Some(CompressorKind::UnbiasedSign),
                Some(CompressorKind::UnbiasedSign),
            ),
            Variant::CeV2 => (Some(CompressorKind::Sign), Some(CompressorKind::Sign)),
            _ => (None, None),
        };
        let problem = make_logreg_problem(d, n, 16, 0.5, 0.1, i).map_err(|e| e.to_string())?;
        let schedule = Schedule {
            theorem: TheoremId::T1,
            eta,
            lambda: 1.0 / (2.0 * eta * horizon as f64),
            beta1: beta2.sqrt(),
            beta2,
            b0: rng.gen_range(1..=4),
            l: None,
            g: None,
        };
        let rec = run_variant(&problem, variant, &schedule, horizon, i, q1, q2)
            .map_err(|e| format!("config {i} ({variant}): {e}"))?;
        for r in &rec.series {
            ensure(r.x_inf <= eta * r.t as f64, || {
                format!(
                    "config {i} {variant}: ||x_{}||_inf = {} > ηt = {}",
                    r.t,
                    r.x_inf,
                    eta * r.t as f64
                )
            })?;
            ensure(r.step_sq <= 4.0 * eta * eta * d as f64, || {
                format!(
                    "config {i} {variant}: step^2 = {} > 4η^2 d at t = {}",
                    r.step_sq, r.t
                )
            })?;
        }
        steps += rec.series.len();
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "100 configs, {steps} steps, zero tolerance, {:.1}s",
        elapsed.as_secs_f64()
    ))
}

fn unbiased_sign_mean() -> Outcome {
    const R: f64 = 2.0;
    const N: usize = 1_000_000;
    let start = Instant::now();
    let mut gen = seeded(0xacce_0002);
    let mut worst = 0.0f64;
    for j in 0..5u64 {
        let v: Vec<f64> = (0..8).map(|_| gen.gen_range(-R..=R)).collect();
        let v = Vector::new(v).unwrap();
        let mut rng = stream(0xacce, j, 0, Purpose::Aux);
        let mut plus = [0u64; 8];
        for _ in 0..N {
            let s = unbiased_sign(&v, R, &mut rng).map_err(|e| e.to_string())?;
            for (k, &b) in s.as_slice().iter().enumerate() {
                plus[k] += (b > 0) as u64;
            }
        }
        for k in 0..8 {
            let mean = (2.0 * plus[k] as f64 - N as f64) / N as f64;
            let dev = (mean - v[k] / R).abs();
            worst = worst.max(dev);
            ensure(dev <= 5e-3, || {
                format!("vector {j} coordinate {k}: |mean - v/R| = {dev}")
            })?;
        }
    }
    let edge = Vector::new(vec![R, -R, R, R, -R, -R, R, -R]).unwrap();
    let mut rng = stream(0xacce, 99, 0, Purpose::Aux);
    for _ in 0..100_000 {
        let s = unbiased_sign(&edge, R, &mut rng).map_err(|e| e.to_string())?;
        for k in 0..8 {
            ensure(s.as_slice()[k] as f64 == edge[k].signum(), || {
                format!("boundary coordinate {k} flipped")
            })?;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "max deviation {worst:.2e}, boundaries deterministic, {:.1}s",
        elapsed.as_secs_f64()
    ))
}

fn iterates<Tr: Trajectory>(problem: &Problem, mut traj: Tr, horizon: usize) -> Vec<Vec<u64>> {
    let mut out = vec![traj.x().as_slice().iter().map(|v| v.to_bits()).collect()];
    for _ in 0..horizon {
        traj.step(problem).unwrap();
        out.push(traj.x().as_slice().iter().map(|v| v.to_bits()).collect());
    }
    out
}

fn reduction(
    cluster: ClusterVariant,
    central: CentralVariant,
    theorem: TheoremId,
    q: (CompressorId, CompressorId),
) -> Outcome {
    const T: usize = 500;
    let problem = benchmark_config(1).build().unwrap();
    let s = schedule_for(theorem, T, problem.dim(), 1, problem.constants()).unwrap();
    let hp = Hyper::from(&s);
    for seed in 1..=5u64 {
        let a = iterates(
            &problem,
            lion_init(&problem, hp, T, s.b0, central, seed, None).unwrap(),
            T,
        );
        let b = iterates(
            &problem,
            cluster_init(&problem, hp, T, s.b0, cluster, q.0, q.1, seed).unwrap(),
            T,
        );
        if let Some(t) = (0..a.len()).find(|&t| a[t] != b[t]) {
            return Err(format!("seed {seed}: iterates first differ at x_{}", t + 1));
        }
    }
    Ok(format!("T = {T}, seeds 1..5, bitwise equal"))
}

fn communication_accounting() -> Outcome {
    use CompressorKind::{Sign, UnbiasedSign};
    let s = Schedule {
        theorem: TheoremId::T1,
        eta: 1e-3,
        lambda: 0.0,
        beta1: 0.5,
        beta2: 0.25,
        b0: 3,
        l: None,
        g: None,
    };
    let mut runs = 0;
    for (t, n, d) in [(100usize, 4usize, 10usize), (50, 16, 32)] {
        let problem = make_logreg_problem(d, n, 8, 1.0, 0.1, 5).unwrap();
        let tnd = (t * n * d) as u64;
        let cases = [
            (Variant::DisV1, None, None),
            (Variant::DisV2, None, None),
            (Variant::CeV1, Some(UnbiasedSign), Some(Sign)),
            (Variant::CeV1, Some(Sign), Some(UnbiasedSign)),
            (Variant::CeV2, Some(UnbiasedSign), Some(UnbiasedSign)),
            (Variant::CeV2, Some(Sign), Some(Sign)),
        ];
        for (v, q1, q2) in cases {
            let rec = run_variant(&problem, v, &s, t, 1, q1, q2).map_err(|e| e.to_string())?;
            let expect = if v.is_compressed() {
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
            ensure(rec.ledger == expect, || {
                format!("{v} ({t},{n},{d}): {:?} != {expect:?}", rec.ledger)
            })?;
            runs += 1;
        }
    }
    Ok(format!("{runs} runs exact"))
}

fn schedule_validity() -> Outcome {
    let constants = benchmark_config(1).build().unwrap().constants().clone();
    let (mut accepted, mut rejected) = (0, 0);
    for th in TheoremId::ALL {
        for t in [100usize, 1_000, 10_000, 100_000] {
            for d in [1usize, 10, 100, 1000] {
                for n in [1usize, 4, 16, 64] {
                    let expected_violation = match th {
                        TheoremId::T3 | TheoremId::T7 if t < n => Some(REL_T_GE_N),
                        TheoremId::T4 if t < n * n => Some(REL_T_GE_N2),
                        _ => None,
                    };
                    match (schedule_for(th, t, d, n, &constants), expected_violation) {
                        (Ok(s), None) => {
                            ensure(s.failed(t, n).is_empty(), || {
                                format!("{th} T={t} d={d} n={n}: {:?}", s.failed(t, n))
                            })?;
                            let chain_ok = match th {
                                TheoremId::T2 => s.beta2 <= s.beta1,
                                TheoremId::T4 | TheoremId::T8 => true,
                                _ => s.beta2 * s.beta2 <= s.beta1,
                            } && s.beta1 <= s.beta2.sqrt();
                            ensure(chain_ok, || format!("{th} T={t} d={d} n={n}: beta chain"))?;
                            accepted += 1;
                        }
                        (Err(e), Some(rel)) => {
                            ensure(e.to_string().contains(rel), || {
                                format!("{th} T={t} n={n}: {e} lacks {rel}")
                            })?;
                            rejected += 1;
                        }
                        (Ok(_), Some(rel)) => {
                            return Err(format!("{th} T={t} d={d} n={n}: accepted despite {rel}"))
                        }
                        (Err(e), None) => {
                            return Err(format!("{th} T={t} d={d} n={n}: rejected: {e}"))
                        }
                    }
                }
            }
        }
    }
    Ok(format!(
        "{accepted} grid points valid, {rejected} rejected with the named side condition"
    ))
}

const SEEDS: [u64; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

fn rate_separation() -> Outcome {
    let start = Instant::now();
    let problem = benchmark_config(1).build().unwrap();
    let horizons = [100, 316, 1000, 3162, 10_000];
    let v1 = sweep(
        &problem,
        &SweepSpec::new(Variant::LionV1, TheoremId::T1),
        &horizons,
        &SEEDS,
    )
    .unwrap();
    let v2 = sweep(
        &problem,
        &SweepSpec::new(Variant::LionV2, TheoremId::T2),
        &horizons,
        &SEEDS,
    )
    .unwrap();
    let s1 = fit_rate(&v1).unwrap().slope;
    let s2 = fit_rate(&v2).unwrap().slope;
    let elapsed = start.elapsed();
    let detail = format!(
        "v1 slope {s1:.3}, VR slope {s2:.3}, {:.1}s",
        elapsed.as_secs_f64()
    );
    ensure(s1 <= -0.10, || format!("{detail}: v1 slope > -0.10"))?;
    ensure(s2 <= s1 - 0.03, || {
        format!("{detail}: separation {:.3} < 0.03", s1 - s2)
    })?;
    ensure(elapsed < Duration::from_secs(600), || {
        format!("{detail}: too slow")
    })?;
    Ok(detail)
}

fn n_scaling() -> Outcome {
    const T: usize = 10_000;
    let p16 = benchmark_config(16).build().unwrap();
    let p1 = p16.pooled().unwrap();
    let s16 = schedule_for(TheoremId::T3, T, p16.dim(), 16, p16.constants()).unwrap();
    let s1 = schedule_for(TheoremId::T3, T, p1.dim(), 1, p1.constants()).unwrap();
    let mut ratios = Vec::new();
    let mut no_worse = 0;
    for seed in SEEDS {
        let a = run_variant(&p16, Variant::DisV1, &s16, T, seed, None, None).unwrap();
        let b = run_variant(&p1, Variant::DisV1, &s1, T, seed, None, None).unwrap();
        ratios.push(b.summary.avg_est_err_v / a.summary.avg_est_err_v);
        no_worse += (a.summary.avg_grad_l1 <= b.summary.avg_grad_l1) as usize;
    }
    let factor = median(&mut ratios);
    let detail = format!("est_err_v median factor {factor:.2}, grad no worse in {no_worse}/10");
    ensure(factor >= 2.0 && no_worse >= 7, || detail.clone())?;
    Ok(detail)
}

fn vr_estimator() -> Outcome {
    let problem = benchmark_config(1).build().unwrap();
    let v2 = sweep(
        &problem,
        &SweepSpec::new(Variant::LionV2, TheoremId::T2),
        &[10_000],
        &SEEDS,
    )
    .unwrap();
    let v1 = sweep(
        &problem,
        &SweepSpec::new(Variant::LionV1, TheoremId::T1),
        &[10_000],
        &SEEDS,
    )
    .unwrap();
    let c = compare_variants(&v2, &v1, Metric::AvgEstErrM, Direction::LowerIsBetter).unwrap();
    let detail = format!(
        "wins {}/{}, medians {:.3e} vs {:.3e}",
        c.wins, c.total, c.median_a, c.median_b
    );
    ensure(c.wins >= 8, || detail.clone())?;
    Ok(detail)
}

fn ce_floor() -> Outcome {
    use CompressorKind::{Sign, UnbiasedSign};
    let problem = benchmark_config(8).build().unwrap();
    let run = |th, q2| {
        let spec = SweepSpec::new(Variant::CeV1, th).with_compressors(UnbiasedSign, q2);
        median_by_horizon(&sweep(&problem, &spec, &[1_000, 10_000], &SEEDS).unwrap())
    };
    let sign = run(TheoremId::T5b, Sign);
    let unbiased = run(TheoremId::T7, UnbiasedSign);
    let (a, b) = (sign[&1_000], sign[&10_000]);
    let plateau = a.max(b) / a.min(b);
    let decrease = unbiased[&1_000] / unbiased[&10_000];
    let detail = format!(
        "sign server: {a:.3} -> {b:.3} (x{plateau:.2}); unbiased server: decrease x{decrease:.2}"
    );
    ensure(plateau <= 1.5, || format!("{detail}: no plateau"))?;
    ensure(decrease >= 1.5, || format!("{detail}: decrease < 1.5"))?;
    Ok(detail)
}

fn main() {
    use CompressorId::{Identity, Sign};
    let criteria: Vec<Criterion> = vec![
        ("1  iterate bounds", Box::new(iterate_bounds)),
        ("2  unbiased sign", Box::new(unbiased_sign_mean)),
        (
            "3a reduction dis-v1 (n = 1) = lion-v1",
            Box::new(|| {
                reduction(
                    ClusterVariant::DisV1,
                    CentralVariant::V1,
                    TheoremId::T1,
                    (Identity, Sign),
                )
            }),
        ),
        (
            "3b reduction dis-v2 (n = 1) = lion-v2",
            Box::new(|| {
                reduction(
                    ClusterVariant::DisV2,
                    CentralVariant::V2,
                    TheoremId::T2,
                    (Identity, Sign),
                )
            }),
        ),
        (
            "3c reduction ce-v1 (n = 1, identity nodes) = lion-v1",
            Box::new(|| {
                reduction(
                    ClusterVariant::CeV1,
                    CentralVariant::V1,
                    TheoremId::T1,
                    (Identity, Sign),
                )
            }),
        ),
        (
            "4  communication accounting",
            Box::new(communication_accounting),
        ),
        ("5  schedule validity", Box::new(schedule_validity)),
        ("6  rate separation", Box::new(rate_separation)),
        ("7  n-scaling", Box::new(n_scaling)),
        ("8  VR estimator", Box::new(vr_estimator)),
        ("9  compressed floor", Box::new(ce_floor)),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
