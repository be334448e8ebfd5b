//! Run individual sections of the property suite and the command-line entry
//! point from library code.
//!
//! `cargo run --release --example property_suite`

use distilcheck::cli;
use distilcheck::suite::{section_appendix, section_gamma_spectrum, SuiteScale, Tolerances};

fn main() -> distilcheck::Result<()> {
    let mut tol = Tolerances::default();
    tol.set("appendix", 1e-8).expect("known tolerance");
    let scale = SuiteScale::quick();

    for section in [section_gamma_spectrum(&tol)?, section_appendix(&tol, &scale, 0)?] {
        for c in &section.checks {
            println!("{:<28} {}  {}", c.name, if c.passed { "ok  " } else { "FAIL" }, c.detail);
        }
    }

    let outcome = cli::run(["distilcheck", "--threads", "1", "--output-format", "csv", "build-qn", "--n", "2"]);
    println!("build-qn exit code {}", outcome.code);
    for line in outcome.stdout.lines().filter(|l| l.contains("gamma_spectrum")) {
        println!("  {line}");
    }
    Ok(())
}
