//! CeV1 with a biased and an unbiased server compressor.

use lionlab::harness::{median_by_horizon, sweep, CompressorKind, SweepSpec};
use lionlab::problems::benchmark_config;
use lionlab::{TheoremId, Variant};

fn main() -> lionlab::Result<()> {
    let problem = benchmark_config(8).build()?;
    let horizons = [500, 2_000, 8_000];
    let cases = [
        ("sign server", TheoremId::T5b, CompressorKind::Sign),
        (
            "unbiased server",
            TheoremId::T7,
            CompressorKind::UnbiasedSign,
        ),
    ];
    for (label, theorem, q2) in cases {
        let spec = SweepSpec::new(Variant::CeV1, theorem)
            .with_compressors(CompressorKind::UnbiasedSign, q2);
        let recs = sweep(&problem, &spec, &horizons, &[1, 2, 3])?;
        let bits = recs
            .last()
            .map(|r| r.ledger.bits_up + r.ledger.bits_down)
            .unwrap_or(0);
        println!(
            "{label}: {:?} (bits at T = 8000: {bits})",
            median_by_horizon(&recs)
        );
    }
    Ok(())
}
