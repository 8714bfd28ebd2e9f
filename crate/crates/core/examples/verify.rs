//! Runs every invariant suite and reports failing checks.

use lionlab::cli::{verify_suite, SUITES};

fn main() -> lionlab::Result<()> {
    for suite in SUITES {
        let report = verify_suite(suite)?;
        let failed: Vec<_> = report.checks.iter().filter(|c| !c.passed).collect();
        println!(
            "{suite}: {}/{} checks pass",
            report.checks.len() - failed.len(),
            report.checks.len()
        );
        for c in failed {
            println!("  FAIL {}: {}", c.name, c.detail);
        }
    }
    Ok(())
}
