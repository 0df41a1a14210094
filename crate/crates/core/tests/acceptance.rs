//! Acceptance suite: runs every criterion at full scale and prints one line
//! per criterion. Criteria listed in `KNOWN_RED` are measured and reported
//! like the others but do not fail the run; any other failure does.
//!
//! `CWL_ACCEPTANCE_SCALE=fast` runs the reduced smoke sizes instead, and
//! `CWL_ACCEPTANCE_ONLY=3,5` restricts the run to the listed ids.

use std::process::ExitCode;

use cwl_core::validation::{run_criteria, Scale, VerifyOptions};

/// Criteria that miss their stated tolerance at the stated sizes for
/// reasons measured and written up in the design notes:
/// 3 (finite-N flattening inside the fit window at N = 1024),
/// 5 (untagged runs at N = 1024 still carry long finite-N stays),
/// 8 (infinite interval variance at μ = 1.5 slows the stdev decay),
/// 13 (finite-N real-eigenvalue tail of the ϱ = 0 curve at N = 512).
const KNOWN_RED: [u32; 4] = [3, 5, 8, 13];

fn main() -> ExitCode {
    let scale = match std::env::var("CWL_ACCEPTANCE_SCALE").as_deref() {
        Ok("fast") => Scale::Fast,
        _ => Scale::Full,
    };
    let only: Vec<u32> = std::env::var("CWL_ACCEPTANCE_ONLY")
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect())
        .unwrap_or_default();
    println!("acceptance suite ({scale:?} scale)");
    let mut unexpected = 0;
    run_criteria(&only, &VerifyOptions::new(scale), |report| {
        let known = KNOWN_RED.contains(&report.id);
        let note = match (report.passed, known) {
            (false, true) => " [known red]",
            (true, true) => " [known red, passed this run]",
            _ => "",
        };
        println!("{report}{note}");
        if !report.passed && !known {
            unexpected += 1;
        }
    });
    if unexpected > 0 {
        println!("{unexpected} unexpected failure(s)");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
