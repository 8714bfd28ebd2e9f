//! DisV1 on 16 nodes against a single node holding the pooled data.

use lionlab::problems::benchmark_config;
use lionlab::{run_variant, schedule_for, TheoremId, Variant};

fn main() -> lionlab::Result<()> {
    let horizon = 3_000;
    let p16 = benchmark_config(16).build()?;
    let p1 = p16.pooled()?;
    for (label, problem, n) in [("n = 16", &p16, 16), ("pooled", &p1, 1)] {
        let s = schedule_for(
            TheoremId::T3,
            horizon,
            problem.dim(),
            n,
            problem.constants(),
        )?;
        let rec = run_variant(problem, Variant::DisV1, &s, horizon, 3, None, None)?;
        println!(
            "{label:>7}: avg ||grad||_1 = {:.4}, avg ||v - grad||^2 = {:.3e}, floats up = {}",
            rec.summary.avg_grad_l1, rec.summary.avg_est_err_v, rec.ledger.floats_up
        );
    }
    Ok(())
}
