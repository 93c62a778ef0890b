//! Acceptance run: every criterion at its pinned order, tolerance and
//! precision, one PASS/FAIL line each. Failures are printed rather than
//! asserted so that known-unattainable criteria do not break the build;
//! the detailed rows are printed underneath each line. The target runs
//! without the libtest harness so the lines reach the test log.

use divlift::verify::{render_text, run_suite};

/// (criterion number, suite name, runtime budget in seconds if any).
const CRITERIA: [(u32, &str, Option<f64>); 16] = [
    (1, "hecke-system", Some(5.0)),
    (2, "p-plication", Some(5.0)),
    (3, "eigen-constant", None),
    (4, "mult-delta", Some(10.0)),
    (5, "dlift-equivariance", Some(10.0)),
    (6, "divmf-spot", None),
    (7, "akn", None),
    (8, "pointwise-hecke", Some(30.0)),
    (9, "laplacian", None),
    (10, "j0-hecke", None),
    (11, "trace-ratio", Some(60.0)),
    (12, "kronecker-limit", None),
    (13, "zagier-basis", Some(60.0)),
    (14, "bp", None),
    (15, "gbhe", None),
    (16, "trace-series", Some(120.0)),
];

fn main() {
    let mut summary = Vec::new();
    for (num, suite, budget) in CRITERIA {
        match run_suite(suite, None) {
            Ok(report) => {
                let within = budget.map_or(true, |b| report.seconds <= b);
                let budget_note = match budget {
                    Some(b) => format!(" (budget {b:.0} s{})", if within { "" } else { ", exceeded" }),
                    None => String::new(),
                };
                let verdict = if report.pass { "PASS" } else { "FAIL" };
                let line = format!("criterion {num:2} {suite}: {verdict} in {:.2} s{budget_note}", report.seconds);
                println!("{line}");
                print!("{}", render_text(std::slice::from_ref(&report)));
                summary.push(line);
            }
            Err(e) => {
                let line = format!("criterion {num:2} {suite}: FAIL ({e})");
                println!("{line}");
                summary.push(line);
            }
        }
    }
    println!("\nacceptance summary");
    for line in summary {
        println!("{line}");
    }
}
