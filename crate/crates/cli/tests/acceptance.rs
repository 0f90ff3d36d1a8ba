//! Acceptance battery: one test and one PASS/FAIL line per criterion.
//!
//! Criteria 1-11 run through the engine's validation suites at full trial
//! counts; criterion 12 reruns the binary with different worker counts and
//! compares the primary output byte for byte.

use std::path::PathBuf;
use std::process::Command;
use std::sync::OnceLock;

use ouexact::validation::{run_criteria, CriterionReport, ValidationConfig};

fn config() -> ValidationConfig {
    ValidationConfig::default()
}

fn benchmark_rows() -> &'static [CriterionReport] {
    static ROWS: OnceLock<Vec<CriterionReport>> = OnceLock::new();
    ROWS.get_or_init(|| run_criteria(&[1, 2, 3, 4], &config()).expect("benchmark suites run"))
}

fn report(r: &CriterionReport) {
    println!("{}", r.summary_line());
    for c in &r.checks {
        if !c.passed {
            println!("    failed check: {} = {} (target {}, tolerance {})", c.label, c.value, c.target, c.tolerance);
        }
    }
    for n in &r.notes {
        println!("    note: {n}");
    }
    assert!(r.passed, "criterion {} ({}) failed", r.id, r.name);
}

fn standalone(id: u32) {
    let reports = run_criteria(&[id], &config()).expect("suite runs");
    report(&reports[0]);
}

fn shared(id: u32) {
    let r = benchmark_rows().iter().find(|r| r.id == id).expect("criterion present");
    report(r);
}

#[test]
fn criterion_01_dmean_moments() {
    shared(1);
}

#[test]
fn criterion_02_dmean_stack_sizes() {
    shared(2);
}

#[test]
fn criterion_03_dmean_stopping_counts() {
    shared(3);
}

#[test]
fn criterion_04_truncation_vs_exact() {
    shared(4);
}

#[test]
fn criterion_05_stack_size_shape() {
    standalone(5);
}

#[test]
fn criterion_06_return_moments() {
    standalone(6);
}

#[test]
fn criterion_07_forward_start() {
    standalone(7);
}

#[test]
fn criterion_08_martingale() {
    standalone(8);
}

#[test]
fn criterion_09_black_scholes_limit() {
    standalone(9);
}

#[test]
fn criterion_10_ggc_examples() {
    standalone(10);
}

#[test]
fn criterion_11_calibration() {
    standalone(11);
}

fn run_cli(args: &[&str], threads: &str) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_ouexact"))
        .args(args)
        .args(["--threads", threads])
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn quotes_file() -> PathBuf {
    let path = std::env::temp_dir().join(format!("ouexact-acceptance-quotes-{}.csv", std::process::id()));
    std::fs::write(
        &path,
        "strike,maturity_years,price\n90,0.5,11.74\n100,0.5,3.56\n110,0.5,0.20\n100,1,5.79\n",
    )
    .unwrap();
    path
}

#[test]
fn criterion_12_determinism() {
    let quotes = quotes_file();
    let quotes = quotes.to_str().unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["dmean", "--delta", "0.3,1,2.5", "--trials", "20000"],
        vec!["dmean", "--delta", "0.5,4", "--sampler", "stopping", "--trials", "20000", "--format", "csv"],
        vec!["returns", "--preset", "unit-gl", "--beta", "10", "--rho", "-1", "--trials", "20000"],
        vec!["price", "--preset", "calibrated-ou-gamma1", "--payoff", "forward-start", "--trials", "20000"],
        vec!["price", "--preset", "calibrated-gl2", "--strike", "105", "--trials", "20000"],
        vec!["paths", "--preset", "calibrated-gl2", "--times", "0.25,0.5,1", "--trials", "3000"],
        vec!["calibrate", "--quotes", quotes, "--s0", "100", "--r", "0.0319", "--max-iter", "15"],
        vec!["validate", "--suite", "black-scholes-limit"],
    ];
    let mut ok = true;
    for args in &commands {
        let one = run_cli(args, "1");
        for threads in ["2", "3"] {
            let other = run_cli(args, threads);
            if one != other {
                ok = false;
                println!("    output differs with --threads {threads}: {args:?}");
            }
        }
    }
    println!(
        "{} [12] determinism ({} commands, threads 1/2/3)",
        if ok { "PASS" } else { "FAIL" },
        commands.len()
    );
    assert!(ok, "criterion 12 (determinism) failed");
}
