//! Full-size acceptance battery: one pass/fail line per criterion, with the
//! runtime budgets enforced.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::io::Write;

use varisk::battery::{run_criterion, BatteryConfig, CRITERIA};

#[test]
fn acceptance_battery() {
    let cfg = BatteryConfig::default();
    let mut failures = Vec::new();
    writeln!(std::io::stdout().lock()).unwrap();
    for (id, _, _) in CRITERIA {
        let outcome = run_criterion(id, &cfg).unwrap();
        // bypasses the test harness capture so the lines always show up
        writeln!(std::io::stdout().lock(), "{}", outcome.line()).unwrap();
        if !(outcome.passed && outcome.within_budget()) {
            failures.push(outcome.line());
        }
    }
    assert!(failures.is_empty(), "failed criteria:\n{}", failures.join("\n"));
}
