//! Log-log slope of the average gradient norm across horizons.

use lionlab::harness::{median_by_horizon, SweepSpec};
use lionlab::problems::benchmark_config;
use lionlab::{fit_rate, sweep, TheoremId, Variant};

fn main() -> lionlab::Result<()> {
    let problem = benchmark_config(1).build()?;
    let horizons = [100, 316, 1_000, 3_162, 10_000];
    for (variant, theorem) in [
        (Variant::LionV1, TheoremId::T1),
        (Variant::LionV2, TheoremId::T2),
    ] {
        let recs = sweep(
            &problem,
            &SweepSpec::new(variant, theorem),
            &horizons,
            &[1, 2, 3, 4, 5],
        )?;
        let fit = fit_rate(&recs)?;
        println!(
            "{variant}: slope {:.3}, r^2 {:.3}",
            fit.slope, fit.r_squared
        );
        for (t, y) in median_by_horizon(&recs) {
            println!("  T = {t:6}: {y:.4}");
        }
    }
    Ok(())
}
