//! Lion v1 on the benchmark problem under its theorem schedule.

use lionlab::problems::benchmark_config;
use lionlab::{lion_run, schedule_for, CentralVariant, TheoremId};

fn main() -> lionlab::Result<()> {
    let problem = benchmark_config(1).build()?;
    let horizon = 2_000;
    let schedule = schedule_for(
        TheoremId::T1,
        horizon,
        problem.dim(),
        1,
        problem.constants(),
    )?;
    println!(
        "eta = {:.3e}, lambda = {:.3e}, beta1 = {:.4}, beta2 = {:.4}",
        schedule.eta, schedule.lambda, schedule.beta1, schedule.beta2
    );
    let rec = lion_run(&problem, &schedule, horizon, 7, CentralVariant::V1)?;
    for row in rec.series.iter().step_by(400) {
        println!(
            "t = {:5}  ||grad||_1 = {:.4}  ||x||_inf = {:.4}",
            row.t, row.grad_l1, row.x_inf
        );
    }
    println!("average ||grad||_1 = {:.4}", rec.summary.avg_grad_l1);
    Ok(())
}
