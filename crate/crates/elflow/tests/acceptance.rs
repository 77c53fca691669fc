//! Acceptance suite: one test per release criterion, each printing its
//! measured-versus-bound lines. Run with `--nocapture` to see the lines
//! for passing criteria too.

use elflow::verify::{self, CheckResult};

fn gate(criterion: &str, checks: Vec<CheckResult>) {
    assert!(!checks.is_empty(), "{criterion}: no checks ran");
    for c in &checks {
        println!("{criterion} {}", c.line());
    }
    let failed: Vec<&CheckResult> = checks.iter().filter(|c| !c.pass).collect();
    assert!(
        failed.is_empty(),
        "{criterion}: {} check(s) failed:\n{}",
        failed.len(),
        failed.iter().map(|c| c.line()).collect::<Vec<_>>().join("\n")
    );
    println!("{criterion} PASS");
}

#[test]
fn criterion_01_operator_oracle_equivalence() {
    let start = std::time::Instant::now();
    gate("criterion 01", verify::criterion_operator_oracles(None));
    assert!(start.elapsed().as_secs() < 60, "oracle sweep must finish within a minute");
}

#[test]
fn criterion_02_mms_convergence() {
    let start = std::time::Instant::now();
    gate("criterion 02", verify::criterion_mms_convergence());
    assert!(start.elapsed().as_secs() < 300, "mms ladder must finish within five minutes");
}

#[test]
fn criterion_03_energy_equality() {
    gate("criterion 03", verify::criterion_energy_equality());
}

#[test]
fn criterion_04_energy_inequality() {
    gate("criterion 04", verify::criterion_energy_inequality());
}

#[test]
fn criterion_05_picard_vs_newton() {
    gate("criterion 05", verify::criterion_newton_oracle());
}

#[test]
fn criterion_06_contraction_direction() {
    gate("criterion 06", verify::criterion_contraction());
}

#[test]
fn criterion_07_formulation_equivalence() {
    gate("criterion 07", verify::criterion_formulation_equivalence());
}

#[test]
fn criterion_08_weak_strong_comparison() {
    gate("criterion 08", verify::criterion_weak_strong());
}

#[test]
fn criterion_09_small_data_boundedness() {
    gate("criterion 09", verify::criterion_small_data_boundedness());
}

#[test]
fn criterion_10_determinism() {
    gate("criterion 10", verify::criterion_determinism());
}
