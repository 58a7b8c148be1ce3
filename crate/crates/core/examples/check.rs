//! The property suites behind `qflow check`.

use quermass_flow::cli::{run_suite, LibraryTrig, Suite};

fn main() {
    for suite in Suite::ALL {
        for r in run_suite(suite, &LibraryTrig, 1, 1) {
            println!("{:<12} {:<36} worst {:.2e} tol {:.0e} {}", r.suite, r.name, r.worst, r.tol, if r.pass { "ok" } else { "FAIL" });
        }
    }
}
