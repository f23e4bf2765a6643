//! One PASS/FAIL line per acceptance criterion. Criteria 1 to 7 run the
//! oracle suite in process; criterion 8 runs `cyclepersist selfcheck` twice
//! and compares the reports byte for byte.
//!
//! `cargo test --test acceptance -- C5` runs only the named criteria.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use cyclepersist_core::selfcheck::{self, render_criterion, SelfcheckOptions, CRITERIA};

struct Outcome {
    pass: bool,
    detail: String,
}

fn suite_criterion(id: u8) -> Outcome {
    let c = selfcheck::criterion(id, &SelfcheckOptions::default());
    let mut detail = String::new();
    render_criterion(&mut detail, &c);
    Outcome { pass: c.pass, detail }
}

fn selfcheck_twice() -> Outcome {
    let limit = Duration::from_secs(60);
    let mut runs = Vec::new();
    let mut detail = String::new();
    for _ in 0..2 {
        let start = Instant::now();
        let out = Command::new(env!("CARGO_BIN_EXE_cyclepersist"))
            .arg("selfcheck")
            .env_remove("CYCLEPERSIST_TOL_SCALE")
            .output()
            .expect("selfcheck runs");
        let elapsed = start.elapsed();
        detail.push_str(&format!(
            "    exit {:?}, {}\n",
            out.status.code(),
            if elapsed < limit { "under 60 s" } else { "60 s or more" }
        ));
        runs.push((out, elapsed));
    }
    let identical = runs[0].0.stdout == runs[1].0.stdout;
    detail.push_str(&format!("    reports byte-identical: {identical}\n"));
    let pass = identical && runs.iter().all(|(o, e)| o.status.success() && *e < limit);
    if !pass {
        detail.push_str(&String::from_utf8_lossy(&runs[0].0.stdout));
    }
    Outcome { pass, detail }
}

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |name: &str| filters.is_empty() || filters.iter().any(|f| name.contains(f.as_str()));
    if std::env::args().any(|a| a == "--list") {
        for id in CRITERIA.iter().copied().chain([8]) {
            println!("C{id}: test");
        }
        return ExitCode::SUCCESS;
    }

    let mut failed = 0;
    let mut ran = 0;
    for id in CRITERIA.iter().copied().chain([8]) {
        let name = format!("C{id}");
        if !wanted(&name) {
            continue;
        }
        ran += 1;
        let title = if id == 8 { "determinism and runtime" } else { selfcheck::title(id) };
        let o = if id == 8 { selfcheck_twice() } else { suite_criterion(id) };
        println!("criterion {id} ({title}): {}", if o.pass { "PASS" } else { "FAIL" });
        if !o.pass {
            failed += 1;
            print!("{}", o.detail);
        }
    }
    println!("acceptance: {}/{ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
