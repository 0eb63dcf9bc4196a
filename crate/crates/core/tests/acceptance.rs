//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Set `CONEKERNEL_ACCEPTANCE_QUICK=1` for reduced sample counts.

use std::process::ExitCode;

use conekernel::selftest::{run_criterion, SelftestOptions, CRITERIA};

fn main() -> ExitCode {
    let quick = std::env::var("CONEKERNEL_ACCEPTANCE_QUICK").is_ok_and(|v| v == "1");
    let opts = SelftestOptions {
        quick,
        ..SelftestOptions::default()
    };
    let mut unacceptable = 0;
    for (id, _) in CRITERIA {
        let o = run_criterion(id, &opts);
        println!("{}", o.line());
        if !o.acceptable() {
            unacceptable += 1;
        }
    }
    let failed = CRITERIA.len() - unacceptable;
    println!("acceptance: {unacceptable} unexpected failures ({failed} criteria acceptable)");
    if unacceptable == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
