use corrwalk::correlation::{evolve_correlation, CorrelationField};
use corrwalk::density::{evolve_density, stationary_density, stationary_density_solve, DensityField};
use corrwalk::models::{pile_block_rate, ModelSpec};
use proptest::prelude::*;

fn spec_strategy() -> impl Strategy<Value = ModelSpec> {
    (3usize..14, 0usize..5, 0.0f64..1.0, 0.0f64..1.0, 0.1f64..=1.0, 0.1f64..=1.0).prop_map(
        |(n, which, a, b, lm, lp)| match which {
            0 => ModelSpec::sep(n, 2, 2.0 * a, 2.0 * b).unwrap().with_lambdas(lm, lp).unwrap(),
            1 => ModelSpec::sip(n, 1.5, 3.0 * a, 3.0 * b).unwrap().with_lambdas(lm, lp).unwrap(),
            2 => ModelSpec::irw(n, 2.0, a, b).unwrap(),
            3 => ModelSpec::bep(n, 1.0, 0.1 + a, 0.1 + b).unwrap(),
            _ => ModelSpec::piles(n, 2, 0.9 * a, 0.9 * b).unwrap(),
        },
    )
}

fn profile(spec: &ModelSpec, vals: &[f64]) -> DensityField {
    DensityField::from_bulk(spec, &vals[..spec.n - 1]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn density_evolution_is_affine(
        spec in spec_strategy(),
        f in prop::collection::vec(0.0f64..1.0, 13),
        g in prop::collection::vec(0.0f64..1.0, 13),
        t in 0.0f64..0.5,
    ) {
        let (pf, pg) = (profile(&spec, &f), profile(&spec, &g));
        let mid: Vec<f64> = f.iter().zip(&g).map(|(a, b)| 0.5 * (a + b)).collect();
        let ef = evolve_density(&spec, &pf, t).unwrap();
        let eg = evolve_density(&spec, &pg, t).unwrap();
        let em = evolve_density(&spec, &profile(&spec, &mid), t).unwrap();
        for x in 0..=spec.n {
            prop_assert!((em.at(x) - 0.5 * (ef.at(x) + eg.at(x))).abs() < 1e-10);
        }
    }

    #[test]
    fn density_evolution_preserves_order(
        spec in spec_strategy(),
        f in prop::collection::vec(0.0f64..1.0, 13),
        bump in prop::collection::vec(0.0f64..0.5, 13),
        t in 0.0f64..0.5,
    ) {
        let g: Vec<f64> = f.iter().zip(&bump).map(|(a, b)| a + b).collect();
        let ef = evolve_density(&spec, &profile(&spec, &f), t).unwrap();
        let eg = evolve_density(&spec, &profile(&spec, &g), t).unwrap();
        for x in 0..=spec.n {
            prop_assert!(eg.at(x) >= ef.at(x) - 1e-12);
        }
    }

    #[test]
    fn closed_stationary_profile_matches_solve(
        n in 2usize..=256, a in 0.0f64..1.0, b in 0.0f64..1.0, lm in 0.05f64..=1.0, lp in 0.05f64..=1.0,
    ) {
        let spec = ModelSpec::sip(n, 2.0, a, 4.0 * b).unwrap().with_lambdas(lm, lp).unwrap();
        let c = stationary_density(&spec);
        let s = stationary_density_solve(&spec);
        for x in 0..=n {
            prop_assert!((c.at(x) - s.at(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn rates_are_nonnegative(
        spec in spec_strategy(),
        eta in prop::collection::vec(0u32..3, 13),
    ) {
        prop_assume!(spec.is_jump() && spec.name() != "piles");
        let eta = &eta[..spec.n - 1];
        if let Some(cap) = spec.max_occupation() {
            prop_assume!(eta.iter().all(|&k| k <= cap));
        }
        for x in 1..spec.n - 1 {
            prop_assert!(spec.bulk_rate(eta, x, x + 1).unwrap() >= 0.0);
            prop_assert!(spec.bulk_rate(eta, x + 1, x).unwrap() >= 0.0);
        }
        let r = spec.boundary_rates(eta).unwrap();
        for v in [r.r01, r.r10, r.r_out_right, r.r_in_right] {
            prop_assert!(v >= 0.0 && v.is_finite());
        }
    }

    #[test]
    fn pile_block_rates_are_finite(alpha in 1u32..5, m in 1u32..200) {
        let mut mass = 0.0;
        for j in 1..=m {
            let h = pile_block_rate(alpha, j, m);
            prop_assert!(h >= 0.0 && h.is_finite());
            mass += h;
        }
        prop_assert!(pile_block_rate(alpha, m + 1, m) == 0.0);
        prop_assert!(mass > 0.0 && mass.is_finite());
    }

    #[test]
    fn correlation_is_symmetric_under_reflection(
        n in 3usize..12, a in 0.0f64..1.0, b in 0.0f64..1.0, t in 0.01f64..0.5,
    ) {
        // swapping the reservoirs mirrors the lattice: φ(x, y) ↦ φ(N−y, N−x)
        let s1 = ModelSpec::sep(n, 2, 2.0 * a, 2.0 * b).unwrap();
        let s2 = ModelSpec::sep(n, 2, 2.0 * b, 2.0 * a).unwrap();
        let r0 = DensityField::from_fn(&s1, |_| 1.0);
        let z = CorrelationField::zeros_for(&s1).unwrap();
        let (_, p1) = evolve_correlation(&s1, &z, &r0, t).unwrap();
        let (_, p2) = evolve_correlation(&s2, &z, &r0, t).unwrap();
        for (x, y) in p1.defined_points() {
            prop_assert!((p1.get(x, y).unwrap() - p2.get(n - y, n - x).unwrap()).abs() < 1e-10);
        }
    }
}

#[test]
fn gradient_free_start_stays_uncorrelated_at_equilibrium() {
    let spec = ModelSpec::piles(9, 2, 0.3, 0.3).unwrap();
    let r0 = stationary_density(&spec);
    let (_, phi) = evolve_correlation(&spec, &CorrelationField::zeros_for(&spec).unwrap(), &r0, 1.0).unwrap();
    assert!(phi.max_abs() < 1e-13);
}
