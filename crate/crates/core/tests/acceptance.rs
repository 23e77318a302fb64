//! Acceptance suite: one test per verification criterion, each printing a
//! single pass/fail line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines; the CLI `suite` subcommand executes the same runners.

use a_geom::suite;

const SEED: u64 = 0;

fn check(outcome: suite::CriterionOutcome) {
    println!("{}", outcome.summary_line());
    assert!(outcome.passed, "{}", outcome.summary_line());
}

#[test]
fn acceptance_01_adjoint_calculus() {
    check(suite::criterion_1_adjoint_calculus(SEED));
}

#[test]
fn acceptance_02_compatible_projectors() {
    check(suite::criterion_2_compatible_projectors(SEED));
}

#[test]
fn acceptance_03_douglas_equivalence() {
    check(suite::criterion_3_douglas(SEED));
}

#[test]
fn acceptance_04_sequence_adjointability() {
    check(suite::criterion_4_sequence_adjointability(SEED));
}

#[test]
fn acceptance_05_divergence_demo() {
    check(suite::criterion_5_divergence(SEED));
}

#[test]
fn acceptance_06_krein_extension() {
    check(suite::criterion_6_krein_extension(SEED));
}

#[test]
fn acceptance_07_geodesic_invariants() {
    check(suite::criterion_7_geodesic_invariants(SEED));
}

#[test]
fn acceptance_08_minimality_race() {
    check(suite::criterion_8_race(SEED));
}

#[test]
fn acceptance_09_sections_and_conjugators() {
    check(suite::criterion_9_sections(SEED));
}

#[test]
fn acceptance_10_wold_decompositions() {
    check(suite::criterion_10_wold(SEED));
}
