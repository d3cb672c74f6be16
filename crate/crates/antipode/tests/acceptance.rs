//! Runs every acceptance criterion and prints one PASS/FAIL line each.
//! Exits nonzero when any criterion fails.

use std::process::ExitCode;

fn main() -> ExitCode {
    let results = antipode::checks::all();
    println!();
    println!("acceptance criteria");
    let mut failed = 0;
    for r in &results {
        println!("{}", r.line());
        if !r.passed() {
            failed += 1;
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
