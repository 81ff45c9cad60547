//! One line per acceptance criterion; exits non-zero if any fails.

use revq::selftest;

fn main() {
    let seed = std::env::var("REVQ_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(selftest::DEFAULT_SEED);
    let mut failed = 0;
    for r in selftest::run_all(seed) {
        println!("{r}");
        if !r.passed {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        selftest::CRITERIA.len() - failed,
        selftest::CRITERIA.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
