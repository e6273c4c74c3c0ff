mod args;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;
use serde_json::{json, Value};

use args::{Cli, Command, DecayArgs, DensityArgs, OccupationArgs, SimulateArgs, StationaryArgs, Suite, TimeArgs, VerifyArgs};
use corrwalk::correlation::{evolve_correlation, CorrelationField};
use corrwalk::density::{evolve_density, stationary_density, DensityField};
use corrwalk::duality::{check_duality_identity, two_particle_gap};
use corrwalk::models::{Model, ModelSpec};
use corrwalk::montecarlo::{estimate_fields, InitialFamily, InitialMeasure, ProfileDoc};
use corrwalk::oracle::closure_check;
use corrwalk::walks::{
    loglog_fit, max_principle_compare, occupation_time_closed, occupation_time_solve, stationary_correlation_closed,
    stationary_correlation_solve, WalkParams,
};
use corrwalk::{Error, Result};

const SCHEMA_VERSION: u32 = 1;
const OUT_DIR_VAR: &str = "CORRWALK_OUT_DIR";

/// What a command produced: the main artifact, whether its checks passed,
/// and an optional line for stderr.
struct Outcome {
    body: String,
    ext: &'static str,
    pass: bool,
    note: Option<String>,
}

impl Outcome {
    fn ok(body: String, ext: &'static str) -> Self {
        Outcome {
            body,
            ext,
            pass: true,
            note: None,
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn parse_profile(spec: &ModelSpec, s: &str) -> Result<DensityField> {
    if s == "stationary" {
        return Ok(stationary_density(spec));
    }
    if let Some(v) = s.strip_prefix("flat:") {
        let v: f64 = v.parse().map_err(|_| Error::Usage(format!("bad flat value {v:?}")))?;
        return Ok(DensityField::from_fn(spec, |_| v));
    }
    let vals: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Usage(format!("bad profile {s:?}: expected flat:<v>, stationary or a list")))?;
    if vals.len() != spec.n + 1 {
        return Err(Error::Usage(format!("profile needs {} values, got {}", spec.n + 1, vals.len())));
    }
    DensityField::from_bulk(spec, &vals[1..spec.n])
}

/// Correlation of the model's product law: zero, except the unit variance
/// on the Ginzburg-Landau diagonal.
fn product_correlation(spec: &ModelSpec) -> Result<CorrelationField> {
    let mut phi = CorrelationField::zeros_for(spec)?;
    if matches!(spec.model, Model::GinzburgLandau { .. }) {
        for x in 1..spec.n {
            phi.set(x, x, 1.0);
        }
    }
    Ok(phi)
}

fn cmd_density(a: &DensityArgs) -> Result<Outcome> {
    let spec = a.model.build(None)?;
    let f = if a.stationary {
        stationary_density(&spec)
    } else {
        let t = a.t.ok_or_else(|| Error::Usage("give --t or --stationary".into()))?;
        evolve_density(&spec, &parse_profile(&spec, &a.init)?, t)?
    };
    Ok(Outcome::ok(f.to_csv(), "csv"))
}

fn cmd_correlation(a: &TimeArgs) -> Result<Outcome> {
    let spec = a.model.build(None)?;
    let rho0 = parse_profile(&spec, &a.init)?;
    let (_, phi) = evolve_correlation(&spec, &product_correlation(&spec)?, &rho0, a.t)?;
    Ok(Outcome::ok(phi.to_csv(), "csv"))
}

fn side_by_side(solve: &CorrelationField, closed: &CorrelationField) -> (String, f64) {
    let mut s = String::from("x,y,solve,closed\n");
    for (x, y) in solve.defined_points() {
        s.push_str(&format!(
            "{x},{y},{:.17e},{:.17e}\n",
            solve.get(x, y).unwrap(),
            closed.get(x, y).unwrap()
        ));
    }
    (s, solve.max_abs_diff(closed))
}

fn cmd_stationary(a: &StationaryArgs) -> Result<Outcome> {
    let spec = a.model.build(None)?;
    let solve = stationary_correlation_solve(&spec)?;
    if !a.closed_form {
        return Ok(Outcome::ok(solve.to_csv(), "csv"));
    }
    let closed = stationary_correlation_closed(&spec)?;
    let (body, diff) = side_by_side(&solve, &closed);
    Ok(Outcome {
        body,
        ext: "csv",
        pass: diff <= 1e-10,
        note: Some(format!("max |solve - closed| = {diff:.3e} (tolerance 1e-10)")),
    })
}

fn cmd_occupation(a: &OccupationArgs) -> Result<Outcome> {
    let p = WalkParams::new(a.n, a.c, a.d).with_lambdas(a.lambda_minus, a.lambda_plus);
    let solve = occupation_time_solve(&p)?;
    if !a.closed_form {
        return Ok(Outcome::ok(solve.to_csv(), "csv"));
    }
    let closed = occupation_time_closed(&p)?;
    let (body, diff) = side_by_side(&solve, &closed);
    Ok(Outcome {
        body,
        ext: "csv",
        pass: diff <= 1e-12,
        note: Some(format!("max |solve - closed| = {diff:.3e} (tolerance 1e-12)")),
    })
}

fn cmd_simulate(a: &SimulateArgs) -> Result<Outcome> {
    let spec = a.model.build(None)?;
    let cfg = match &a.model.config {
        Some(p) => Some(config::Config::load(p)?),
        None => None,
    };
    let from_cfg = |f: fn(&config::Config) -> Option<f64>| cfg.as_ref().and_then(f);
    let t = a
        .t
        .or(from_cfg(|c| c.t))
        .ok_or_else(|| Error::Usage("--t is required".into()))?;
    let m = a
        .m
        .or(cfg.as_ref().and_then(|c| c.m))
        .ok_or_else(|| Error::Usage("--M is required".into()))?;
    let dt = a.dt.or(from_cfg(|c| c.dt));
    let seed = a.seed.or(cfg.as_ref().and_then(|c| c.seed)).unwrap_or(0);
    let cfg_init = cfg.as_ref().and_then(|c| c.initial.clone());
    let family = match (a.family, &cfg_init) {
        (Some(f), _) => f.into(),
        (None, Some(i)) => i.family,
        (None, None) => InitialFamily::natural(&spec),
    };
    let profile = match (&a.init, &cfg_init) {
        (Some(s), _) => parse_profile(&spec, s)?,
        (None, Some(i)) => match &i.profile {
            ProfileDoc::Named(s) => parse_profile(&spec, s)?,
            ProfileDoc::Values(v) => parse_profile(
                &spec,
                &v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
            )?,
        },
        (None, None) => stationary_density(&spec),
    };
    let est = estimate_fields(&spec, &InitialMeasure { family, profile }, t, m, dt, seed)?;
    Ok(Outcome::ok(est.to_csv(), "csv"))
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
    pass: bool,
    #[serde(skip_serializing_if = "Value::is_null")]
    details: Value,
}

fn check(name: &'static str, value: f64, tolerance: f64, details: Value) -> Check {
    Check {
        name,
        value,
        tolerance,
        pass: value <= tolerance,
        details,
    }
}

fn walk_params(spec: &ModelSpec) -> Result<WalkParams> {
    match spec.model {
        Model::RateFamily {
            c,
            d,
            lambda_minus,
            lambda_plus,
            ..
        } => Ok(WalkParams::new(spec.n, c, d).with_lambdas(lambda_minus, lambda_plus)),
        _ => Err(Error::Unsupported(format!(
            "the comparison principle suite needs a rate-family model, not {}",
            spec.name()
        ))),
    }
}

fn run_suite(suite: Suite, spec: &ModelSpec, a: &VerifyArgs) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    match suite {
        Suite::Closure => {
            let r = closure_check(spec, a.cap, &a.times, a.seed)?;
            out.push(check("closure", r.worst(), 1e-8, serde_json::to_value(&r).unwrap()));
        }
        Suite::Duality => {
            let r = check_duality_identity(spec, a.cap, a.budget)?;
            out.push(check("intertwining", r.max_residual, 1e-10, serde_json::to_value(&r).unwrap()));
            out.push(check("two_particle_operator", two_particle_gap(spec)?, 1e-12, Value::Null));
        }
        Suite::MaxPrinciple => {
            let r = max_principle_compare(&walk_params(spec)?)?;
            out.push(check("comparison_violation", r.max_violation(), 1e-12, serde_json::to_value(r).unwrap()));
        }
        Suite::ClosedForm => {
            let solve = stationary_correlation_solve(spec)?;
            let closed = stationary_correlation_closed(spec)?;
            out.push(check("stationary_closed_form", solve.max_abs_diff(&closed), 1e-10, Value::Null));
            if let Ok(p) = walk_params(spec) {
                if let Ok(k) = occupation_time_closed(&p) {
                    let s = occupation_time_solve(&p)?;
                    out.push(check("occupation_closed_form", s.max_abs_diff(&k), 1e-12, Value::Null));
                }
            }
        }
        Suite::All => unreachable!(),
    }
    Ok(out)
}

fn cmd_verify(a: &VerifyArgs) -> Result<Outcome> {
    let spec = a.model.build(None)?;
    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    if a.suite == Suite::All {
        for s in [Suite::Closure, Suite::Duality, Suite::MaxPrinciple, Suite::ClosedForm] {
            match run_suite(s, &spec, a) {
                Ok(c) => checks.extend(c),
                Err(e @ (Error::Usage(_) | Error::Unsupported(_) | Error::Resource(_))) => {
                    skipped.push(json!({"suite": format!("{s:?}"), "reason": e.to_string()}))
                }
                Err(e) => return Err(e),
            }
        }
    } else {
        checks = run_suite(a.suite, &spec, a)?;
    }
    let pass = checks.iter().all(|c| c.pass);
    let failing: Vec<String> = checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{} = {:.3e} > {:.0e}", c.name, c.value, c.tolerance))
        .collect();
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "suite": format!("{:?}", a.suite),
        "spec": spec,
        "checks": checks,
        "skipped": skipped,
        "pass": pass,
    });
    Ok(Outcome {
        body: to_json(&report),
        ext: "json",
        pass,
        note: (!pass).then(|| format!("failed: {}", failing.join("; "))),
    })
}

fn cmd_decay(a: &DecayArgs) -> Result<Outcome> {
    if a.model.n.len() < 2 {
        return Err(Error::Usage("--N needs at least two sizes".into()));
    }
    let mut max_abs = Vec::new();
    for &n in &a.model.n {
        let spec = a.model.build(Some(n))?;
        let phi = match a.t {
            None => stationary_correlation_solve(&spec)?,
            Some(t) => {
                let rho0 = DensityField::from_fn(&spec, |_| spec.density_coefficients().res_left);
                evolve_correlation(&spec, &product_correlation(&spec)?, &rho0, t)?.1
            }
        };
        let m = phi.max_abs();
        if !(m > 0.0) {
            return Err(Error::Domain(format!("correlation vanishes at N = {n}; nothing to fit")));
        }
        max_abs.push(m);
    }
    let xs: Vec<f64> = a.model.n.iter().map(|&n| n as f64).collect();
    let (slope, intercept) = loglog_fit(&xs, &max_abs);
    let model = a.model.build(Some(a.model.n[0]))?.name();
    if let Some(path) = &a.csv {
        let mut s = String::from("N,max_abs\n");
        for (n, v) in a.model.n.iter().zip(&max_abs) {
            s.push_str(&format!("{n},{v:.17e}\n"));
        }
        std::fs::write(path, s).map_err(|e| Error::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "model": model,
        "mode": if a.t.is_some() { "fixed_time" } else { "stationary" },
        "t": a.t,
        "ns": a.model.n,
        "max_abs": max_abs,
        "slope": slope,
        "intercept": intercept,
    });
    Ok(Outcome::ok(to_json(&report), "json"))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Density(_) => "density",
        Command::Correlation(_) => "correlation",
        Command::Stationary(_) => "stationary",
        Command::Occupation(_) => "occupation",
        Command::Simulate(_) => "simulate",
        Command::Verify(_) => "verify",
        Command::DecayStudy(_) => "decay-study",
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Singular(_) => 1,
        _ => 2,
    }
}

fn emit(out: Option<PathBuf>, name: &str, o: &Outcome) -> std::io::Result<()> {
    let path = out.or_else(|| std::env::var_os(OUT_DIR_VAR).map(|d| PathBuf::from(d).join(format!("{name}.{}", o.ext))));
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, &o.body)
        }
        None => std::io::stdout().lock().write_all(o.body.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().ok();
    }
    let name = command_name(&cli.command);
    let res = match &cli.command {
        Command::Density(a) => cmd_density(a),
        Command::Correlation(a) => cmd_correlation(a),
        Command::Stationary(a) => cmd_stationary(a),
        Command::Occupation(a) => cmd_occupation(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::DecayStudy(a) => cmd_decay(a),
    };
    match res {
        Ok(o) => {
            if let Err(e) = emit(cli.out.clone(), name, &o) {
                eprintln!("error: cannot write output: {e}");
                return ExitCode::from(2);
            }
            if let Some(n) = &o.note {
                eprintln!("{n}");
            }
            ExitCode::from(if o.pass { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
