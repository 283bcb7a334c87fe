#[allow(dead_code)]
mod common;

use common::props;

fn ok(r: Result<(), String>) {
    if let Err(e) = r {
        panic!("{e}");
    }
}

#[test]
fn decay_monotone_and_additive() {
    ok(props::decay_monotone_and_additive());
}

#[test]
fn crossing_never_increases() {
    ok(props::crossing_never_increases());
}

#[test]
fn clamp_idempotent() {
    ok(props::clamp_idempotent());
}

#[test]
fn composite_linear() {
    ok(props::composite_linear());
}

#[test]
fn parallel_permutation_invariant() {
    ok(props::parallel_permutation_invariant());
}

#[test]
fn portable_cost_le_naive() {
    ok(props::portable_cost_le_naive());
}

#[test]
fn replay_accepted_at_most_once() {
    ok(props::replay_accepted_at_most_once());
}

#[test]
fn parser_total() {
    ok(props::parser_total());
}
