//! Acceptance criteria, one line each. Exits non-zero if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use loewner::harness::{run_suite, Suite, SuiteReport, TrialConfig};

const SEED: u64 = 20_261_019;

struct Line {
    id: u32,
    title: &'static str,
    passed: bool,
    detail: String,
}

fn summary(r: &SuiteReport) -> String {
    let checks: Vec<String> = r
        .checks
        .iter()
        .map(|c| {
            format!(
                "{} max {:.1e} ({}/{} over {:.0e})",
                c.name, c.residuals.max, c.failures, c.count, c.budget
            )
        })
        .collect();
    checks.join("; ")
}

fn suite(id: u32, title: &'static str, suite: Suite, trials: usize, limit: Option<Duration>) -> Line {
    let cfg = TrialConfig::new(SEED, trials);
    let start = Instant::now();
    let report = run_suite(suite, &cfg);
    let elapsed = start.elapsed();
    match report {
        Ok(r) => {
            let in_time = limit.is_none_or(|l| elapsed < l);
            let limit_note = limit.map_or(String::new(), |l| format!(" (limit {:.0} s)", l.as_secs_f64()));
            Line {
                id,
                title,
                passed: r.passed && in_time,
                detail: format!("{}; {:.2} s{limit_note}", summary(&r), elapsed.as_secs_f64()),
            }
        }
        Err(e) => Line {
            id,
            title,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn both(id: u32, title: &'static str, a: Line, b: Line) -> Line {
    Line {
        id,
        title,
        passed: a.passed && b.passed,
        detail: format!("cone: {} | sa: {}", a.detail, b.detail),
    }
}

fn determinism() -> Line {
    let dir = std::env::temp_dir().join(format!("loewner-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    let run = |name: &str| -> (bool, Vec<u8>) {
        let out = dir.join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_loewner"))
            .args(["fuzz", "--suite", "all", "--trials", "100", "--seed", "42", "--out"])
            .arg(&out)
            .status()
            .expect("spawn loewner");
        (status.success(), std::fs::read(&out).unwrap_or_default())
    };
    let (ok1, r1) = run("first.json");
    let (ok2, r2) = run("second.json");
    let _ = std::fs::remove_dir_all(&dir);
    let identical = !r1.is_empty() && r1 == r2;
    Line {
        id: 10,
        title: "fuzz --suite all --trials 100 --seed 42 twice is byte-identical",
        passed: identical,
        detail: format!(
            "{} bytes, identical {identical}, exit codes {}/{}",
            r1.len(),
            if ok1 { 0 } else { 1 },
            if ok2 { 0 } else { 1 }
        ),
    }
}

fn main() {
    let lines = vec![
        suite(
            1,
            "homo certificates on t grid plus 200 random t",
            Suite::Homo,
            200,
            Some(Duration::from_secs(5)),
        ),
        suite(
            2,
            "orth by order matches direct on 500 pairs per algebra",
            Suite::Orth,
            500,
            Some(Duration::from_secs(10)),
        ),
        suite(3, "phi family roundtrips and closed forms", Suite::PhiFamily, 100, None),
        suite(
            4,
            "general formula roundtrip on 100 effect isomorphisms",
            Suite::GeneralFormula,
            100,
            Some(Duration::from_secs(60)),
        ),
        both(
            5,
            "cone and hermitian-part roundtrips",
            suite(5, "", Suite::Cone, 100, None),
            suite(5, "", Suite::Sa, 100, None),
        ),
        suite(6, "commutative product-form recovery", Suite::Commutative, 100, None),
        suite(7, "abelian central split", Suite::CentralSplit, 50, None),
        suite(
            8,
            "spectral staircase bounds and refinement",
            Suite::Staircase,
            100,
            None,
        ),
        suite(
            9,
            "Jordan maps fixing 1/2 are orthoisomorphisms",
            Suite::Orthoiso,
            50,
            None,
        ),
        determinism(),
    ];
    let mut failed = 0;
    for l in &lines {
        let verdict = if l.passed { "PASS" } else { "FAIL" };
        println!("[{verdict}] criterion {:>2}: {}: {}", l.id, l.title, l.detail);
        failed += usize::from(!l.passed);
    }
    println!(
        "acceptance: {} of {} criteria passed",
        lines.len() - failed,
        lines.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
