use corrwalk::duality::*;
use corrwalk::models::{BepBoundary, ModelSpec};
use proptest::prelude::*;

#[test]
fn intertwining_holds_for_particle_models() {
    let cases = [
        (ModelSpec::sep(3, 1, 0.2, 0.7).unwrap(), 1),
        (ModelSpec::sep(4, 1, 0.2, 0.7).unwrap().with_lambdas(0.5, 1.0).unwrap(), 1),
        (ModelSpec::sep(4, 2, 0.3, 1.5).unwrap(), 2),
        (ModelSpec::sip(3, 2.0, 0.4, 1.2).unwrap(), 5),
        (ModelSpec::sip(4, 1.0, 0.4, 1.2).unwrap().with_lambdas(0.3, 0.8).unwrap(), 5),
        (ModelSpec::irw(4, 1.0, 0.5, 2.0).unwrap(), 5),
        (ModelSpec::irw(4, 2.5, 0.5, 2.0).unwrap(), 4),
        (ModelSpec::piles(3, 1, 0.2, 0.5).unwrap(), 5),
        (ModelSpec::piles(4, 2, 0.2, 0.5).unwrap(), 5),
    ];
    for (spec, cap) in cases {
        let r = check_duality_identity(&spec, cap, 2).unwrap();
        assert!(r.max_residual <= 1e-10, "{r:?}");
        assert!(r.tail_bound <= 1e-10, "{r:?}");
    }
}

#[test]
fn bep_thermal_is_dual_to_absorbing_inclusion() {
    let spec = ModelSpec::bep(4, 1.5, 0.4, 1.3).unwrap();
    assert!(bep_boundary_is_dual(&spec));
    let r = check_duality_identity(&spec, 4, 2).unwrap();
    assert!(r.max_residual <= 1e-10, "{r:?}");
}

#[test]
fn bep_stated_boundary_breaks_duality() {
    // with absorption 1/(2α) the dual matches only the thermal boundary
    let spec = ModelSpec::bep(4, 1.5, 0.4, 1.3)
        .unwrap()
        .with_bep_boundary(BepBoundary::Stated)
        .unwrap();
    let r = check_duality_identity(&spec, 4, 2).unwrap();
    assert!(r.max_residual > 1e-3, "{r:?}");
}

#[test]
fn empty_budget_gives_exact_zero() {
    let spec = ModelSpec::sip(4, 1.0, 0.4, 1.2).unwrap();
    assert_eq!(check_duality_identity(&spec, 4, 0).unwrap().max_residual, 0.0);
}

#[test]
fn oversized_enumeration_is_refused() {
    let spec = ModelSpec::sip(12, 1.0, 0.4, 1.2).unwrap();
    assert!(check_duality_identity(&spec, 9, 2).is_err());
}

#[test]
fn two_particle_dual_is_the_correlation_operator() {
    let specs = [
        ModelSpec::sep(6, 1, 0.2, 0.7).unwrap().with_lambdas(0.4, 0.9).unwrap(),
        ModelSpec::sep(6, 3, 0.2, 0.7).unwrap(),
        ModelSpec::sip(7, 1.5, 0.2, 0.7).unwrap().with_lambdas(1.0, 0.3).unwrap(),
        ModelSpec::irw(5, 2.0, 0.2, 0.7).unwrap(),
        ModelSpec::bep(6, 2.0, 0.5, 1.0).unwrap(),
        ModelSpec::piles(6, 1, 0.2, 0.5).unwrap(),
        ModelSpec::piles(6, 3, 0.2, 0.5).unwrap(),
    ];
    for spec in specs {
        let gap = two_particle_gap(&spec).unwrap();
        assert!(gap <= 1e-12, "{}: {gap:e}", spec.name());
    }
}

#[test]
fn report_serializes_with_fixed_keys() {
    let spec = ModelSpec::sep(3, 1, 0.2, 0.7).unwrap();
    let r = check_duality_identity(&spec, 1, 1).unwrap();
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    for k in ["model", "N", "cap", "budget", "max_residual", "tail_bound"] {
        assert!(v.get(k).is_some(), "{k}");
    }
}

fn sample(n: usize, bep: bool) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    let site = if bep {
        (0.0f64..4.0).boxed()
    } else {
        (0u32..6).prop_map(|v| v as f64).boxed()
    };
    prop::collection::vec((prop::collection::vec(site, n - 1), 0.01f64..1.0), 1..12).prop_map(|v| {
        let z: f64 = v.iter().map(|p| p.1).sum();
        v.into_iter().map(|(s, w)| (s, w / z)).unzip()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn duality_moments_equal_direct_ones((states, w) in sample(5, false), which in 0usize..3) {
        let spec = [
            ModelSpec::sip(5, 1.5, 0.2, 0.7).unwrap(),
            ModelSpec::irw(5, 1.0, 0.2, 0.7).unwrap(),
            ModelSpec::piles(5, 2, 0.2, 0.5).unwrap(),
        ][which].clone();
        let (r1, p1) = moments_via_duality(&spec, &states, &w).unwrap();
        let (r2, p2) = moments_direct(&spec, &states, &w).unwrap();
        for (a, b) in r1.values.iter().zip(&r2.values) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!(p1.max_abs_diff(&p2) < 1e-10);
    }

    #[test]
    fn bep_duality_moments((states, w) in sample(5, true)) {
        let spec = ModelSpec::bep(5, 0.7, 0.2, 0.7).unwrap();
        let (_, p1) = moments_via_duality(&spec, &states, &w).unwrap();
        let (_, p2) = moments_direct(&spec, &states, &w).unwrap();
        prop_assert!(p1.max_abs_diff(&p2) < 1e-10);
    }

    #[test]
    fn exclusion_moments_via_duality(states in prop::collection::vec(prop::collection::vec(0u32..=1, 4), 1..10)) {
        let spec = ModelSpec::sep(5, 1, 0.2, 0.7).unwrap();
        let st: Vec<Vec<f64>> = states.iter().map(|s| s.iter().map(|&v| v as f64).collect()).collect();
        let w = vec![1.0 / st.len() as f64; st.len()];
        let (_, p1) = moments_via_duality(&spec, &st, &w).unwrap();
        let (_, p2) = moments_direct(&spec, &st, &w).unwrap();
        prop_assert!(p1.max_abs_diff(&p2) < 1e-12);
    }
}
