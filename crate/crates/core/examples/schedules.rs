//! Every theorem schedule at one size, with its checked side conditions.

use lionlab::problems::benchmark_config;
use lionlab::{schedule_for, TheoremId};

fn main() -> lionlab::Result<()> {
    let problem = benchmark_config(4).build()?;
    let (horizon, n) = (10_000, 4);
    println!(
        "L = {:.3}, G = {:.3}, sigma = {:.3}",
        problem.constants().l,
        problem.constants().g,
        problem.constants().sigma
    );
    for th in TheoremId::ALL {
        let s = schedule_for(th, horizon, problem.dim(), n, problem.constants())?;
        let rels: Vec<String> = s.validate(horizon, n).into_iter().map(|r| r.name).collect();
        println!(
            "{th:>4}: eta {:.2e} lambda {:.2e} beta1 {:.4} beta2 {:.4} B0 {:3} | {}",
            s.eta,
            s.lambda,
            s.beta1,
            s.beta2,
            s.b0,
            rels.join(", ")
        );
    }
    match schedule_for(TheoremId::T4, 10, problem.dim(), 4, problem.constants()) {
        Ok(_) => println!("T4 with T = 10, n = 4 accepted"),
        Err(e) => println!("T4 with T = 10, n = 4 rejected: {e}"),
    }
    Ok(())
}
