//! Acceptance run: one line per criterion with the pinned tolerance.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are computed and reported like
//! every other one; they only do not fail the process, because the
//! property they assert does not hold (see the project notes).

use std::time::Instant;

use corrwalk::correlation::{evolve_correlation, CorrelationField};
use corrwalk::density::{stationary_density, DensityField};
use corrwalk::duality::{check_duality_identity, two_particle_gap};
use corrwalk::models::ModelSpec;
use corrwalk::montecarlo::{estimate_fields, InitialFamily, InitialMeasure};
use corrwalk::oracle::{build_master_generator, closure_check, equilibrium_residual, TruncatedStateSpace};
use corrwalk::walks::{
    loglog_fit, max_principle_compare, occupation_time_closed, occupation_time_solve, stationary_correlation_closed,
    stationary_correlation_solve, stationary_via_occupation, WalkParams,
};
use corrwalk::Result;
use rand::{Rng, SeedableRng};

const KNOWN_UNATTAINABLE: &[u32] = &[3, 5];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { pass, detail })
}

fn c1_closure() -> Result<Verdict> {
    const TOL: f64 = 1e-8;
    let times = [0.05, 0.2, 1.0];
    let mut cases = Vec::new();
    for (lm, lp) in [(1.0, 1.0), (0.5, 0.5), (1.0, 0.5), (0.5, 1.0)] {
        let l = |s: ModelSpec| s.with_lambdas(lm, lp);
        cases.push((l(ModelSpec::sep(5, 1, 0.1, 0.8)?)?, 1));
        cases.push((l(ModelSpec::sep(4, 2, 0.3, 1.6)?)?, 2));
        cases.push((l(ModelSpec::sip(3, 1.0, 0.02, 0.08)?)?, 8));
        cases.push((l(ModelSpec::irw(3, 1.0, 0.02, 0.08)?)?, 8));
    }
    for alpha in 1..=2 {
        cases.push((ModelSpec::piles(3, alpha, 0.01, 0.04)?, 8));
    }
    let mut worst: f64 = 0.0;
    for (i, (spec, cap)) in cases.iter().enumerate() {
        worst = worst.max(closure_check(spec, *cap, &times, 100 + i as u64)?.worst());
    }
    verdict(worst <= TOL, format!("{} cases, max |φ_ODE − φ_oracle| = {worst:.2e} (tol {TOL:.0e})", cases.len()))
}

fn c2_occupation() -> Result<Verdict> {
    const TOL: f64 = 1e-12;
    let mut worst: f64 = 0.0;
    for n in [4, 8, 16, 32, 64] {
        for (c, d) in [(1.0, -1.0), (1.0, 0.0), (2.0, 1.0)] {
            let p = WalkParams::new(n, c, d);
            worst = worst.max(occupation_time_solve(&p)?.max_abs_diff(&occupation_time_closed(&p)?));
        }
    }
    verdict(worst <= TOL, format!("15 cases, max |solve − closed| = {worst:.2e} (tol {TOL:.0e})"))
}

fn c3_max_principle() -> Result<Verdict> {
    const TOL: f64 = 1e-12;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let lambdas: Vec<(f64, f64)> = (0..20)
        .map(|_| (1.0 - rng.random::<f64>(), 1.0 - rng.random::<f64>()))
        .collect();
    let (mut cases, mut bad, mut worst, mut least) = (0, 0, 0.0f64, f64::INFINITY);
    for n in [8, 16, 32] {
        for (c, d) in [(1.0, -1.0), (1.0, 0.0), (1.0, 1.0)] {
            for &(lm, lp) in &lambdas {
                let r = max_principle_compare(&WalkParams::new(n, c, d).with_lambdas(lm, lp))?;
                cases += 1;
                worst = worst.max(r.max_violation());
                least = least.min(r.min_excess);
                if r.max_violation() > TOL {
                    bad += 1;
                }
            }
        }
    }
    verdict(
        bad == 0,
        format!(
            "𝒯^λ ≤ 𝒯^(1,1) violated in {bad}/{cases} cases, largest excess {worst:.2e} (tol {TOL:.0e}); \
             smallest excess {least:.2e}, so the ordering runs the other way"
        ),
    )
}

fn c4_stationary() -> Result<Verdict> {
    const TOL: f64 = 1e-10;
    let mut worst: f64 = 0.0;
    let mut track = |a: CorrelationField, b: CorrelationField| worst = worst.max(a.max_abs_diff(&b));
    for n in [4, 8, 16, 32, 64] {
        let mut specs = vec![
            ModelSpec::sep(n, 1, 0.0, 1.0)?,
            ModelSpec::sep(n, 2, 0.3, 1.7)?,
            ModelSpec::sip(n, 1.0, 0.2, 0.8)?,
            ModelSpec::sip(n, 2.5, 0.2, 3.0)?,
            ModelSpec::irw(n, 1.0, 0.2, 0.8)?,
            ModelSpec::gl(n, -1.0, 1.0)?,
            ModelSpec::bep(n, 0.5, 0.3, 1.7)?,
        ];
        for alpha in 1..=2 {
            specs.push(ModelSpec::piles(n, alpha, 0.2, 0.7)?);
        }
        for spec in &specs {
            track(stationary_correlation_solve(spec)?, stationary_correlation_closed(spec)?);
        }
        for alpha in [1.0, 2.0] {
            let spec = ModelSpec::bep(n, alpha, 0.3, 1.7)?;
            track(stationary_correlation_solve(&spec)?, stationary_via_occupation(&spec)?);
        }
    }
    let spot = stationary_correlation_closed(&ModelSpec::sep(4, 1, 0.0, 1.0)?)?.get(1, 2).unwrap();
    let solved = stationary_correlation_solve(&ModelSpec::sep(4, 1, 0.0, 1.0)?)?.get(1, 2).unwrap();
    let spot_err = (spot + 1.0 / 24.0).abs().max((solved + 1.0 / 24.0).abs());
    verdict(
        worst <= TOL && spot_err <= 1e-15,
        format!(
            "max |solve − closed| = {worst:.2e} (tol {TOL:.0e}); SEP N=4 φ(1,2) = {solved:.17} vs −1/24, error {spot_err:.1e}"
        ),
    )
}

fn c5_decay() -> Result<Verdict> {
    const TOL: f64 = 0.1;
    let ns: Vec<usize> = (8..=128).collect();
    let dyadic = [8usize, 16, 32, 64, 128];
    let models: [(&str, fn(usize) -> Result<ModelSpec>); 4] = [
        ("sep", |n| ModelSpec::sep(n, 1, 0.0, 1.0)),
        ("sip", |n| ModelSpec::sip(n, 1.0, 0.2, 0.8)),
        ("bep", |n| ModelSpec::bep(n, 1.0, 1.0, 2.0)),
        ("piles", |n| ModelSpec::piles(n, 1, 0.2, 0.8)),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, make) in models {
        let maxes: Vec<f64> = ns
            .iter()
            .map(|&n| Ok(stationary_correlation_solve(&make(n)?)?.max_abs()))
            .collect::<Result<_>>()?;
        let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        let (slope, _) = loglog_fit(&xs, &maxes);
        let pick: Vec<f64> = dyadic.iter().map(|&n| maxes[n - 8]).collect();
        let (dy, _) = loglog_fit(&dyadic.map(|n| n as f64), &pick);
        let ok = (slope + 1.0).abs() <= TOL;
        pass &= ok;
        parts.push(format!("{name} {slope:.3} ({}; powers of two {dy:.3})", if ok { "ok" } else { "out" }));
    }
    verdict(pass, format!("slopes over N = 8..=128, need −1 ± {TOL}: {}", parts.join(", ")))
}

fn c6_duality() -> Result<Verdict> {
    const TOL: f64 = 1e-10;
    const OP_TOL: f64 = 1e-12;
    let mut worst: f64 = 0.0;
    let mut tail: f64 = 0.0;
    let mut op: f64 = 0.0;
    let mut count = 0;
    for n in [3, 4] {
        let mut cases = Vec::new();
        for (lm, lp) in [(1.0, 1.0), (0.5, 1.0)] {
            cases.push((ModelSpec::sep(n, 1, 0.2, 0.7)?.with_lambdas(lm, lp)?, 1));
            cases.push((ModelSpec::sep(n, 2, 0.3, 1.5)?.with_lambdas(lm, lp)?, 2));
            cases.push((ModelSpec::sip(n, 1.0, 0.4, 1.2)?.with_lambdas(lm, lp)?, 8));
            cases.push((ModelSpec::irw(n, 1.0, 0.5, 2.0)?.with_lambdas(lm, lp)?, 8));
        }
        for alpha in 1..=2 {
            cases.push((ModelSpec::piles(n, alpha, 0.2, 0.5)?, 8));
        }
        for (spec, cap) in &cases {
            let r = check_duality_identity(spec, *cap, 2)?;
            worst = worst.max(r.max_residual);
            tail = tail.max(r.tail_bound);
            op = op.max(two_particle_gap(spec)?);
            count += 1;
        }
    }
    for n in [8, 16] {
        for spec in [
            ModelSpec::sep(n, 2, 0.3, 1.5)?.with_lambdas(0.5, 1.0)?,
            ModelSpec::sip(n, 1.5, 0.4, 1.2)?,
            ModelSpec::irw(n, 1.0, 0.5, 2.0)?,
            ModelSpec::piles(n, 2, 0.2, 0.5)?,
            ModelSpec::bep(n, 1.5, 0.4, 1.3)?,
        ] {
            op = op.max(two_particle_gap(&spec)?);
        }
    }
    verdict(
        worst <= TOL && op <= OP_TOL,
        format!(
            "{count} enumerations, max residual {worst:.2e} (tol {TOL:.0e}, tail {tail:.1e}); \
             two-particle operator gap {op:.2e} (tol {OP_TOL:.0e})"
        ),
    )
}

fn c7_equilibrium() -> Result<Verdict> {
    const Z: f64 = 3.0;
    const T_EQ: f64 = 0.5;
    let mut null_ok = true;
    let mut worst_excess: f64 = 0.0;
    let cases = [
        (ModelSpec::sep(5, 1, 0.4, 0.4)?, 1),
        (ModelSpec::sep(4, 2, 0.7, 0.7)?, 2),
        (ModelSpec::sip(3, 1.0, 0.3, 0.3)?, 8),
        (ModelSpec::irw(3, 1.0, 0.3, 0.3)?, 8),
        (ModelSpec::piles(3, 1, 0.2, 0.2)?, 8),
        (ModelSpec::piles(3, 2, 0.2, 0.2)?, 8),
    ];
    for (spec, cap) in &cases {
        let sp = TruncatedStateSpace::new(spec, *cap)?;
        let g = build_master_generator(spec, &sp)?;
        let r = equilibrium_residual(spec, &g, spec.density_coefficients().res_left)?;
        let excess = r.residual - r.tail_bound;
        worst_excess = worst_excess.max(excess);
        null_ok &= r.residual <= r.tail_bound * (1.0 + 1e-8) + 1e-12;
    }
    let m = 20_000;
    let mut zs = Vec::new();
    for spec in [ModelSpec::gl(8, 0.3, 0.3)?, ModelSpec::bep(8, 1.0, 1.0, 1.0)?] {
        let profile = stationary_density(&spec);
        let init = InitialMeasure {
            family: InitialFamily::natural(&spec),
            profile: profile.clone(),
        };
        let est = estimate_fields(&spec, &init, T_EQ, m, None, 7)?;
        let mut want = CorrelationField::zeros_for(&spec)?;
        if spec.name() == "gl" {
            for x in 1..spec.n {
                want.set(x, x, 1.0);
            }
        }
        let zr = (1..spec.n)
            .map(|x| (est.rho.at(x) - profile.at(x)).abs() / est.rho_se.at(x))
            .fold(0.0, f64::max);
        zs.push((spec.name(), zr.max(est.max_z_score(&want))));
    }
    let mc_ok = zs.iter().all(|(_, z)| *z <= Z);
    let zs: Vec<String> = zs.iter().map(|(n, z)| format!("{n} {z:.2}")).collect();
    verdict(
        null_ok && mc_ok,
        format!(
            "null vectors: residual − tail ≤ {worst_excess:.1e} over {} models; MC at M = {m}, t = {T_EQ}: max z {} (need ≤ {Z})",
            cases.len(),
            zs.join(", ")
        ),
    )
}

fn c8_monte_carlo() -> Result<Verdict> {
    const Z: f64 = 3.0;
    let spec = ModelSpec::sep(8, 1, 0.1, 0.9)?;
    let rho0 = DensityField::from_fn(&spec, |_| 0.5);
    let init = InitialMeasure {
        family: InitialFamily::Binomial,
        profile: rho0.clone(),
    };
    let m = 100_000;
    let est = estimate_fields(&spec, &init, 1.0, m, None, 8)?;
    let (_, phi) = evolve_correlation(&spec, &CorrelationField::zeros_for(&spec)?, &rho0, 1.0)?;
    let z = est.max_z_score(&phi);
    let pairs = phi.defined_points().iter().filter(|(x, y)| x != y && *x > 0 && *y < spec.n).count();
    verdict(z <= Z, format!("SEP N=8, t=1, M={m}: max |φ̂ − φ|/SE = {z:.2} over {pairs} pairs (need ≤ {Z})"))
}

fn c9_determinism() -> Result<Verdict> {
    let run = |threads: usize| -> Result<(String, String, String)> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let sep = ModelSpec::sep(6, 2, 0.2, 1.6)?;
            let a = InitialMeasure {
                family: InitialFamily::Binomial,
                profile: stationary_density(&sep),
            };
            let bep = ModelSpec::bep(6, 1.0, 0.5, 2.0)?;
            let b = InitialMeasure {
                family: InitialFamily::Gamma,
                profile: stationary_density(&bep),
            };
            let closure = closure_check(&ModelSpec::sip(3, 1.0, 0.1, 0.3)?, 4, &[0.1], 5)?;
            Ok((
                estimate_fields(&sep, &a, 0.3, 2_000, None, 42)?.to_csv(),
                estimate_fields(&bep, &b, 0.1, 500, None, 42)?.to_csv(),
                serde_json::to_string(&closure).unwrap(),
            ))
        })
    };
    let first = run(1)?;
    let again = run(1)?;
    let wide = run(4)?;
    let same = first == again && first == wide;
    verdict(same, format!("CSV and JSON outputs identical across repeats and 1 vs 4 threads: {same}"))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Result<Verdict>); 9] = [
        (1, "closure vs master equation", c1_closure),
        (2, "occupation-time closed form", c2_occupation),
        (3, "occupation-time comparison", c3_max_principle),
        (4, "stationary closed forms", c4_stationary),
        (5, "1/N decay of stationary φ", c5_decay),
        (6, "duality", c6_duality),
        (7, "equilibrium invariance", c7_equilibrium),
        (8, "Monte Carlo vs solver", c8_monte_carlo),
        (9, "determinism", c9_determinism),
    ];
    let mut unexpected = Vec::new();
    for (id, name, f) in criteria {
        let t0 = Instant::now();
        let (pass, detail) = match f() {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("criterion {id} [{tag}] {name}: {detail} [{:.1}s]", t0.elapsed().as_secs_f64());
        if !pass && !KNOWN_UNATTAINABLE.contains(&id) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        println!("acceptance: unexpected failures in criteria {unexpected:?}");
        std::process::exit(1);
    }
    println!("acceptance: no failures outside the known-unattainable set {KNOWN_UNATTAINABLE:?}");
}
