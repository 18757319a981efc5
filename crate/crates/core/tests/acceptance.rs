//! One line per acceptance criterion. Criteria 6 and 11 are known to fail
//! against their stated tolerances (see the README); the target fails if
//! any other criterion fails or if either of those starts passing.

use std::process::ExitCode;

use lambda_scope::regression::{run_regression, RegressionOptions};
use lambda_scope::BareParams;

const KNOWN_FAILURES: [u32; 2] = [6, 11];

fn main() -> ExitCode {
    let report = match run_regression(&BareParams::default(), &RegressionOptions::default()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("acceptance: regression could not run: {e}");
            return ExitCode::FAILURE;
        }
    };
    println!("\nacceptance criteria");
    for check in &report.checks {
        println!("{check}");
    }
    let failed = report.failed_ids();
    let unexpected: Vec<u32> = failed.iter().copied().filter(|id| !KNOWN_FAILURES.contains(id)).collect();
    let recovered: Vec<u32> = KNOWN_FAILURES.iter().copied().filter(|id| !failed.contains(id)).collect();
    println!(
        "{} of {} criteria pass; known failures {:?}",
        report.checks.len() - failed.len(),
        report.checks.len(),
        KNOWN_FAILURES
    );
    if !unexpected.is_empty() {
        eprintln!("acceptance: unexpected failures {unexpected:?}");
    }
    if !recovered.is_empty() {
        eprintln!("acceptance: known failures {recovered:?} now pass; update KNOWN_FAILURES");
    }
    if unexpected.is_empty() && recovered.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
