//! Stage-expanded chain against its per-state closed form.
//!
//! The closed-form evaluator here is the independent oracle: the library
//! solves the stationary linear system, while the oracle multiplies out
//! the product-form density per expanded state.

mod common;

use common::*;
use csma_core::{
    staged_stationary, stationary_distribution, AccessParams, StageLaw, StagedResult, StagedSpec,
};

const C_REF: f64 = 0.186;

fn check_against_closed_form(result: &StagedResult, spec: &StagedSpec, links: usize, b: f64) {
    for (state, &p) in result.states.iter().zip(&result.probs) {
        let want = staged_closed_form(links, b, spec, state);
        assert!((p - want).abs() < 1e-10, "{state}: {p} vs {want}");
    }
}

#[test]
fn two_stage_chain_matches_closed_form_per_state() {
    let g = g1();
    let spec = StagedSpec::new(StageLaw::Fixed(2), StageLaw::Fixed(2), 0.093, 0.5).unwrap();
    let result = staged_stationary(&g, &spec).unwrap();
    assert!(result.residual < 1e-10, "residual {}", result.residual);
    assert!(!result.used_power_iteration);

    let exact = stationary_distribution(&g, &AccessParams::uniform(C_REF, 4).unwrap()).unwrap();
    check_against_closed_form(&result, &spec, g.len(), exact.normalizer());
    for (s, p) in exact.iter() {
        assert!((result.marginal.prob(s).unwrap() - p).abs() < 1e-10);
    }
}

#[test]
fn mixture_chain_marginalizes_to_the_product_form() {
    let g = g1();
    let spec = StagedSpec::new(
        StageLaw::Mixture(vec![(1, 0.5), (3, 0.5)]),
        StageLaw::Fixed(1),
        0.093,
        1.0,
    )
    .unwrap();
    assert!((spec.cd_mean() - C_REF).abs() < 1e-12);
    let result = staged_stationary(&g, &spec).unwrap();
    let exact = stationary_distribution(&g, &AccessParams::uniform(C_REF, 4).unwrap()).unwrap();
    check_against_closed_form(&result, &spec, g.len(), exact.normalizer());
    for (s, p) in exact.iter() {
        assert!((result.marginal.prob(s).unwrap() - p).abs() < 1e-10);
    }
}

#[test]
fn asymmetric_stage_counts_still_marginalize() {
    let g = k3();
    // Erlang-3 countdowns against two-stage transmissions, matched means.
    let spec = StagedSpec::new(StageLaw::Fixed(3), StageLaw::Fixed(2), 0.062, 0.5).unwrap();
    assert!((spec.overhead() - C_REF).abs() < 1e-12);
    let result = staged_stationary(&g, &spec).unwrap();
    let exact = stationary_distribution(&g, &AccessParams::uniform(C_REF, 3).unwrap()).unwrap();
    for (s, p) in exact.iter() {
        assert!((result.marginal.prob(s).unwrap() - p).abs() < 1e-10);
    }
}

#[test]
fn double_mixture_on_the_single_vertex() {
    let g = single();
    let spec = StagedSpec::new(
        StageLaw::Mixture(vec![(1, 0.25), (2, 0.75)]),
        StageLaw::Mixture(vec![(2, 0.5), (4, 0.5)]),
        0.2,
        0.4,
    )
    .unwrap();
    let result = staged_stationary(&g, &spec).unwrap();
    let c = spec.overhead();
    let exact = stationary_distribution(&g, &AccessParams::uniform(c, 1).unwrap()).unwrap();
    check_against_closed_form(&result, &spec, 1, exact.normalizer());
    for (s, p) in exact.iter() {
        assert!((result.marginal.prob(s).unwrap() - p).abs() < 1e-12);
    }
}

#[test]
fn expanded_space_counts() {
    // Transmitting links contribute z stages, idle links y stages.
    let g = g1();
    let spec = StagedSpec::new(StageLaw::Fixed(2), StageLaw::Fixed(2), 0.093, 0.5).unwrap();
    let result = staged_stationary(&g, &spec).unwrap();
    assert_eq!(result.states.len(), 16 + 4 * 16 + 2 * 16);
}
