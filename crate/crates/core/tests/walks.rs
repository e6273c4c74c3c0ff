use corrwalk::correlation::CorrelationField;
use corrwalk::models::{BepBoundary, ModelSpec};
use corrwalk::walks::*;
use proptest::prelude::*;

fn close(a: &CorrelationField, b: &CorrelationField, tol: f64) {
    let d = a.max_abs_diff(b);
    assert!(d <= tol, "max diff {d:e} > {tol:e}");
}

#[test]
fn occupation_closed_matches_solve() {
    for n in [4, 8, 16, 32, 64] {
        for (c, d) in [(1.0, -1.0), (1.0, 0.0), (2.0, 1.0)] {
            let p = WalkParams::new(n, c, d);
            let s = occupation_time_solve(&p).unwrap();
            let k = occupation_time_closed(&p).unwrap();
            let scale = k.max_abs();
            assert!(s.max_abs_diff(&k) <= 1e-12 * scale.max(1.0), "N={n} c={c} d={d}");
        }
    }
}

#[test]
fn occupation_maximum_is_order_one_over_n() {
    let p = WalkParams::new(64, 1.0, 0.0);
    let t = occupation_time_closed(&p).unwrap();
    let m = t.max_abs();
    assert!(m <= 1.0 / (4.0 * 64.0) * (1.0 + 1e-9));
    assert!(m >= 0.9 / (4.0 * 65.0));
}

#[test]
fn weaker_coupling_lengthens_occupation() {
    // absorption is slower, so the walk lingers: the ordering runs upward
    let r = max_principle_compare(&WalkParams::new(16, 1.0, -1.0).with_lambdas(0.3, 0.7)).unwrap();
    assert!(r.min_excess >= -1e-12);
    assert!(r.max_excess > 1e-3 && r.max_violation() > 0.0);
    let r = max_principle_compare(&WalkParams::new(8, 1.0, 0.0).with_lambdas(0.01, 0.01)).unwrap();
    assert!(r.min_excess >= -1e-12);
    assert!(r.max_ratio > 10.0);
}

#[test]
fn rate_family_closed_forms() {
    for (c, d) in [(1.0, -1.0), (2.0, -1.0), (1.0, 1.0), (2.5, 1.0), (1.0, 0.0)] {
        for n in [4, 9, 32, 64] {
            let spec = ModelSpec::rate_family(n, c, d, 0.1, 0.8).unwrap();
            let solve = stationary_correlation_solve(&spec).unwrap();
            let closed = stationary_correlation_closed(&spec).unwrap();
            close(&solve, &closed, 1e-10);
        }
    }
}

#[test]
fn sign_follows_interaction() {
    let cases = [
        (ModelSpec::sep(16, 1, 0.1, 0.9).unwrap(), -1.0),
        (ModelSpec::sip(16, 1.0, 0.1, 0.9).unwrap(), 1.0),
        (ModelSpec::bep(16, 1.0, 0.5, 2.0).unwrap(), 1.0),
        (ModelSpec::piles(16, 2, 0.1, 0.6).unwrap(), 1.0),
    ];
    for (spec, sign) in cases {
        let phi = stationary_correlation_solve(&spec).unwrap();
        for (x, y) in phi.geom.open_points().filter(|p| p.0 < p.1) {
            assert!(phi.get(x, y).unwrap() * sign > 0.0, "{} at {x},{y}", spec.name());
        }
    }
}

#[test]
fn piles_closed_form() {
    for alpha in 1..=3 {
        for n in [4, 7, 16, 64] {
            let spec = ModelSpec::piles(n, alpha, 0.2, 0.7).unwrap();
            let solve = stationary_correlation_solve(&spec).unwrap();
            let closed = stationary_correlation_closed(&spec).unwrap();
            close(&solve, &closed, 1e-10 * closed.max_abs().max(1.0));
        }
    }
    // Δρ = 1 at α = 1, N = 4: β/(1-β) from 0.25 to 1.25
    let spec = ModelSpec::piles(4, 1, 0.2, 1.25 / 2.25).unwrap();
    let phi = stationary_correlation_solve(&spec).unwrap();
    assert!((phi.get(1, 2).unwrap() - 0.025).abs() < 1e-12);
}

#[test]
fn bep_closed_form_at_half() {
    for n in [4, 8, 32, 64] {
        let spec = ModelSpec::bep(n, 0.5, 0.3, 1.7).unwrap();
        let solve = stationary_correlation_solve(&spec).unwrap();
        let closed = stationary_correlation_closed(&spec).unwrap();
        close(&solve, &closed, 1e-10);
        // (T+ - T-)² 𝒯_N with 𝒯_N for c = 1/2, d = 1
        let occ = occupation_time_closed(&WalkParams::new(n, 0.5, 1.0)).unwrap();
        let x = n / 3;
        let y = x + 1;
        assert!((closed.get(x, y).unwrap() - 1.4f64.powi(2) * occ.get(x, y).unwrap()).abs() < 1e-14);
    }
    let off = ModelSpec::bep(8, 1.0, 0.3, 1.7).unwrap();
    assert!(stationary_correlation_closed(&off).is_err());
}

#[test]
fn occupation_identity_any_coupling() {
    let specs = [
        ModelSpec::sep(12, 1, 0.2, 0.9).unwrap().with_lambdas(0.3, 0.8).unwrap(),
        ModelSpec::sip(12, 2.0, 0.2, 3.0).unwrap().with_lambdas(1.0, 0.4).unwrap(),
        ModelSpec::bep(12, 2.0, 0.5, 1.5).unwrap(),
        ModelSpec::bep(12, 1.5, 0.5, 0.6)
            .unwrap()
            .with_bep_boundary(BepBoundary::Stated)
            .unwrap(),
    ];
    for spec in specs {
        let solve = stationary_correlation_solve(&spec).unwrap();
        let via = stationary_via_occupation(&spec).unwrap();
        close(&solve, &via, 1e-11);
    }
}

#[test]
fn equilibrium_has_no_off_diagonal_correlation() {
    let specs = [
        ModelSpec::sep(10, 2, 0.7, 0.7).unwrap(),
        ModelSpec::bep(10, 1.0, 1.3, 1.3).unwrap(),
        ModelSpec::piles(10, 2, 0.4, 0.4).unwrap(),
    ];
    for spec in specs {
        assert!(stationary_correlation_solve(&spec).unwrap().max_abs() < 1e-14);
    }
}

#[test]
fn iterative_path_agrees_with_closed_form() {
    let spec = ModelSpec::sep(300, 1, 0.0, 1.0).unwrap();
    let solve = stationary_correlation_solve(&spec).unwrap();
    let closed = stationary_correlation_closed(&spec).unwrap();
    close(&solve, &closed, 1e-9 * closed.max_abs());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reduced_coupling_never_decreases_occupation(
        lm in 0.01f64..=1.0, lp in 0.01f64..=1.0, n in 4usize..20, d in prop::sample::select(vec![-1.0, 0.0, 1.0])
    ) {
        let r = max_principle_compare(&WalkParams::new(n, 1.0, d).with_lambdas(lm, lp)).unwrap();
        prop_assert!(r.min_excess >= -1e-12);
    }

    #[test]
    fn occupation_is_nonnegative(n in 3usize..24, c in 0.5f64..3.0, d in -0.5f64..2.0, lm in 0.05f64..=1.0) {
        let t = occupation_time_solve(&WalkParams::new(n, c, d).with_lambdas(lm, 1.0)).unwrap();
        for v in &t.values {
            prop_assert!(*v >= -1e-15);
        }
    }
}
