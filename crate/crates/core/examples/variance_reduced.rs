//! Lion v2 (STORM momentum) against Lion v1: momentum estimation error.

use lionlab::harness::{compare_variants, sweep, Direction, Metric, SweepSpec};
use lionlab::problems::benchmark_config;
use lionlab::{TheoremId, Variant};

fn main() -> lionlab::Result<()> {
    let problem = benchmark_config(1).build()?;
    let seeds = [1, 2, 3, 4, 5];
    let v2 = sweep(
        &problem,
        &SweepSpec::new(Variant::LionV2, TheoremId::T2),
        &[5_000],
        &seeds,
    )?;
    let v1 = sweep(
        &problem,
        &SweepSpec::new(Variant::LionV1, TheoremId::T1),
        &[5_000],
        &seeds,
    )?;
    let c = compare_variants(&v2, &v1, Metric::AvgEstErrM, Direction::LowerIsBetter)?;
    println!(
        "lion-v2 lower ||m - grad||^2 in {}/{} seeds",
        c.wins, c.total
    );
    println!("median error: v2 {:.3e}, v1 {:.3e}", c.median_a, c.median_b);
    Ok(())
}
