//! Acceptance suite: one line per criterion. Criteria listed in
//! `KNOWN_FAILURES` are reported as FAIL without failing the run; any other
//! failure makes the process exit nonzero.

use rimflow_cli::verify::{checks, VerifyContext};

const KNOWN_FAILURES: &[(&str, &str)] = &[(
    "critical_eigenvalue_drift",
    "lambda(delta) is even in delta because H_{-delta}(theta) = H_delta(theta + pi), so the remainder after the delta^2 term is O(delta^4) and the ratio is 16, not 8",
)];

fn main() {
    let ctx = VerifyContext::default();
    let mut unexpected = Vec::new();
    for check in checks() {
        let report = check.run(&ctx);
        let known = KNOWN_FAILURES.iter().find(|(name, _)| *name == report.name);
        let measured = report.measured.map_or("-".to_string(), |m| format!("{m:.6e}"));
        let status = if report.passed() { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {:<30} {status}  measured {measured}  ({:.1} s) {}",
            report.criterion, report.name, report.seconds, report.detail
        );
        match (report.passed(), known) {
            (false, Some((_, reason))) => println!("             known failure: {reason}"),
            (false, None) => unexpected.push(report.name.clone()),
            (true, Some(_)) => println!("             listed as a known failure but passed"),
            (true, None) => {}
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: no unexpected failures");
    } else {
        println!("acceptance: unexpected failures: {}", unexpected.join(", "));
        std::process::exit(1);
    }
}
