//! Batch front door: window / probe / solve / verify subcommands over a
//! TOML configuration.
//!
//! Exit codes: 0 success, 1 infeasible window or failed check,
//! 2 solver non-convergence, 3 configuration or parse error.

use clap::{Parser, Subcommand};
use qlrad::config::{Resolved, RunConfig};
use qlrad::error::Error;
use qlrad::exponents::{
    admissible_pair, alpha_star_branch_gap, exponent_window, remark_identity_gap,
    sobolev_exponents, window_at_origin,
};
use qlrad::grid::{bump, check_pointwise_bound, derivative, GridFunction};
use qlrad::potential::verify_hypotheses_with_profile;
use qlrad::probe::{annulus_bound, decay_study, radius_ladder, Prober, Side};
use qlrad::report::{
    write_json, write_probe_csv, write_profile_csv, CheckRow, OracleCheck, ProbeReport,
    SolveReport, VerifyReport, WindowReport,
};
use qlrad::solver::{audit_nonlinearity, MountainPass, Nonlinearity};
use rand::{Rng, SeedableRng};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qlrad", version, about = "exponent windows, embedding probes and mountain-pass solutions for weighted quasilinear radial problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive admissible exponent windows and decay rates.
    Window(CommonArgs),
    /// Estimate embedding suprema over radius ladders and check decay.
    Probe(CommonArgs),
    /// Compute a nonnegative mountain-pass critical point.
    Solve(CommonArgs),
    /// Run the cross-module invariant suite.
    Verify(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for reports (created if absent).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the seed from the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

const EXIT_INFEASIBLE: u8 = 1;
const EXIT_NO_CONVERGENCE: u8 = 2;
const EXIT_CONFIG: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (&CommonArgs, fn(&Resolved, &CommonArgs) -> Result<u8, Error>) =
        match &cli.command {
            Command::Window(a) => (a, cmd_window),
            Command::Probe(a) => (a, cmd_probe),
            Command::Solve(a) => (a, cmd_solve),
            Command::Verify(a) => (a, cmd_verify),
        };

    if let Err(e) = std::fs::create_dir_all(&args.out) {
        eprintln!("error: cannot create output directory: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let config = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let resolved = match config.resolve(args.seed) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(&resolved, args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::NonConvergence { .. } => EXIT_NO_CONVERGENCE,
                Error::OutOfWindow(_) => EXIT_CONFIG,
                Error::InvalidParams(_) | Error::Config(_) | Error::Parse { .. } => EXIT_CONFIG,
                _ => EXIT_CONFIG,
            };
            ExitCode::from(code)
        }
    }
}

fn cmd_window(res: &Resolved, args: &CommonArgs) -> Result<u8, Error> {
    let params = &res.params;
    let window = exponent_window(params);
    let (p0, p_inf) = sobolev_exponents(params);
    let q1_lo_existence = window.q1_lo.max(params.p);

    let mut diagnosis = Vec::new();
    if !window.feasible {
        diagnosis.push(format!(
            "empty q1 window: alpha0 = {} does not exceed the threshold; max(1, p*beta0) = {} meets q* = {}",
            params.alpha0, window.q1_lo, window.q1_hi
        ));
    }
    if window.feasible && !(q1_lo_existence < window.q1_hi) {
        diagnosis.push(format!(
            "window admits embeddings but not existence: q* = {} does not exceed p = {}",
            window.q1_hi, params.p
        ));
    }
    let mut notes = Vec::new();
    if params.beta_inf != 0.0 {
        let beta_zero_value = qlrad::exponents::q_star(params.a_inf, params.alpha_inf, 0.0, params.p, params.n);
        notes.push(format!(
            "infinity threshold uses the full definition with betaInf = {}: q* = {}; dropping the beta terms would give {} instead",
            params.beta_inf, window.infinity_decay.q_star, beta_zero_value
        ));
    }
    if res.fitted_profile.fit_residual0.max(res.fitted_profile.fit_residual_inf) > 1e-2 {
        notes.push("asymptotic fit residual is large; consider manual a0/aInf overrides".into());
    }

    let report = WindowReport {
        command: "window",
        n: params.n,
        p: params.p,
        a0: params.a0,
        a_inf: params.a_inf,
        alpha0: params.alpha0,
        beta0: params.beta0,
        alpha_inf: params.alpha_inf,
        beta_inf: params.beta_inf,
        fit_residual0: res.fitted_profile.fit_residual0,
        fit_residual_inf: res.fitted_profile.fit_residual_inf,
        p0,
        p_inf,
        window,
        q1_lo_existence,
        feasible: window.feasible,
        diagnosis,
        notes,
    };
    write_json(&args.out.join("report.json"), &report)?;

    println!(
        "q1 window ({}, {}) [existence: ({}, {})], q2 > {}",
        window.q1_lo, window.q1_hi, q1_lo_existence, window.q1_hi, window.q2_lo
    );
    for n in &report.notes {
        println!("note: {n}");
    }
    for d in &report.diagnosis {
        println!("infeasible: {d}");
    }
    Ok(if window.feasible { 0 } else { EXIT_INFEASIBLE })
}

fn cmd_probe(res: &Resolved, args: &CommonArgs) -> Result<u8, Error> {
    let params = &res.params;
    let (q1, q2) = match (res.q1, res.q2) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::Config(
                "probe needs exponents.q1 and exponents.q2 in the config".into(),
            ))
        }
    };
    // precondition: strictly inside the windows
    let (lo, hi) = window_at_origin(params);
    if !(q1 > lo && q1 < hi) {
        return Err(Error::OutOfWindow(format!(
            "q1 = {q1} is not strictly inside ({lo}, {hi})"
        )));
    }

    let prober = Prober::new(res.grid.clone(), &res.a, &res.v, &res.k, params)?;
    let origin_radii = radius_ladder(1.0, 0.5, 11);
    let infinity_radii = radius_ladder(1.0, 2.0, 7);
    let origin = decay_study(&prober, Side::Origin, q1, &origin_radii, params, &res.solver.ascent)?;
    let infinity = decay_study(
        &prober,
        Side::Infinity,
        q2,
        &infinity_radii,
        params,
        &res.solver.ascent,
    )?;

    let mut warnings = Vec::new();
    if !origin.converged {
        warnings.push("some origin-side ascents hit the iteration cap".to_string());
    }
    if !infinity.converged {
        warnings.push("some infinity-side ascents hit the iteration cap".to_string());
    }

    // oracle cross-check in the quadratic case
    let oracle = if params.p == 2.0 && q1 == 2.0 {
        let est = prober.estimate_s0(q1, params.r1, &res.solver.ascent)?;
        let eig = prober.eigen_oracle((0.0, params.r1))?;
        Some(OracleCheck {
            q: q1,
            radius: params.r1,
            side: "origin",
            ascent: est.value,
            eigenvalue: eig,
            agreement: (est.value - eig).abs(),
        })
    } else {
        None
    };

    let pass = origin.pass && infinity.pass;
    let report = ProbeReport {
        command: "probe",
        q1,
        q2,
        origin,
        infinity,
        oracle,
        warnings,
        pass,
    };
    write_json(&args.out.join("report.json"), &report)?;
    write_probe_csv(&args.out.join("probe_origin.csv"), &report.origin)?;
    write_probe_csv(&args.out.join("probe_infinity.csv"), &report.infinity)?;

    println!(
        "origin: fitted slope {} vs predicted {} ({})",
        report.origin.fitted_slope,
        report.origin.predicted_slope,
        if report.origin.pass { "pass" } else { "fail" }
    );
    println!(
        "infinity: fitted slope {} vs predicted {} ({})",
        report.infinity.fitted_slope,
        report.infinity.predicted_slope,
        if report.infinity.pass { "pass" } else { "fail" }
    );
    Ok(if pass { 0 } else { EXIT_INFEASIBLE })
}

fn cmd_solve(res: &Resolved, args: &CommonArgs) -> Result<u8, Error> {
    let params = &res.params;
    let nl = res
        .nonlinearity
        .clone()
        .ok_or_else(|| Error::Config("solve needs a [nonlinearity] section".into()))?;
    let admissible = admissible_pair(params, nl.q1, nl.q2, true);
    if !admissible.admissible {
        for f in &admissible.failures {
            eprintln!("infeasible: {f}");
        }
        return Ok(EXIT_INFEASIBLE);
    }

    let mp = MountainPass::new(
        res.grid.clone(),
        &res.a,
        &res.v,
        &res.k,
        nl,
        *params,
        res.s,
    )?;
    match mp.solve(&res.solver) {
        Ok(solution) => {
            let du = derivative(&solution.profile);
            write_profile_csv(&args.out.join("profile.csv"), &solution.profile, &du)?;
            let report = SolveReport::from_solution(&solution, "profile.csv");
            write_json(&args.out.join("report.json"), &report)?;
            println!(
                "converged: energy {}, residual {}, nehari gap {}",
                solution.energy, solution.residual_norm, solution.nehari_gap
            );
            Ok(0)
        }
        Err(Error::NonConvergence {
            message,
            best_residual,
        }) => {
            eprintln!("non-convergence: {message} (best residual {best_residual:.3e})");
            Ok(EXIT_NO_CONVERGENCE)
        }
        Err(e) => Err(e),
    }
}

fn cmd_verify(res: &Resolved, args: &CommonArgs) -> Result<u8, Error> {
    let params = &res.params;
    let mut checks = Vec::new();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(res.solver.seed);

    // exponent identities on random tuples
    {
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let n: u32 = rng.gen_range(3..=8);
            let p: f64 = rng.gen_range(1.0 + 1e-6..n as f64 - 1e-6);
            let a: f64 = rng.gen_range(p - n as f64 + 1e-9..=p);
            let beta: f64 = rng.gen_range(0.0..=1.0);
            worst = worst.max(remark_identity_gap(a, beta, p, n).abs());
            worst = worst.max(alpha_star_branch_gap(a, 1.0 / p, p, n).abs());
        }
        checks.push(CheckRow {
            name: "exponent-identities".into(),
            pass: worst <= 1e-12,
            detail: format!("worst residual {worst:.3e} over 1000 random tuples"),
        });
    }

    // hypothesis checks on the configured potentials
    {
        let rep = verify_hypotheses_with_profile(
            &res.a,
            &res.v,
            &res.k,
            params.n,
            params.p,
            res.s,
            Some(res.profile),
        )?;
        checks.push(CheckRow {
            name: "hypotheses".into(),
            pass: rep.all_ok(),
            detail: format!(
                "A_ok={} V_ok={} K_ok={} (a0={}, aInf={}); {}",
                rep.a_ok,
                rep.v_ok,
                rep.k_ok,
                rep.profile.a0,
                rep.profile.a_inf,
                if rep.notes.is_empty() {
                    "no notes".to_string()
                } else {
                    rep.notes.join("; ")
                }
            ),
        });
    }

    // pointwise decay bounds on random compactly supported profiles
    {
        let mut violations = 0;
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let lo: f64 = rng.gen_range(0.01..0.5);
            let hi: f64 = lo * rng.gen_range(4.0..40.0);
            let amp: f64 = rng.gen_range(0.2..5.0);
            let u = GridFunction::from_fn(res.grid.clone(), |r| bump(r, lo, hi, amp))?;
            let rep = check_pointwise_bound(&u, &res.a, &res.profile, hi, params.p, 1e-8)?;
            violations += rep.violations;
            worst = worst.max(rep.max_ratio_interior).max(rep.max_ratio_exterior);
        }
        checks.push(CheckRow {
            name: "pointwise-bounds".into(),
            pass: violations == 0,
            detail: format!("{violations} violations, max ratio {worst:.6}"),
        });
    }

    // annulus interpolation inequality on random profiles
    {
        let prober = Prober::new(res.grid.clone(), &res.a, &res.v, &res.k, params)?;
        let forms_norm = |u: &GridFunction| -> Result<f64, Error> {
            Ok(qlrad::grid::norm_x(u, &res.a, &res.v, params.p)?)
        };
        let _ = &forms_norm;
        let bound = annulus_bound(&prober, params.r1, params.r2, 2.5f64.max(params.p + 0.5), res.s, &res.k, params)?;
        let q = 2.5f64.max(params.p + 0.5);
        let mut ok = true;
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let lo: f64 = rng.gen_range(0.02..0.3);
            let hi: f64 = lo * rng.gen_range(5.0..50.0);
            let amp: f64 = rng.gen_range(0.2..4.0);
            let u = GridFunction::from_fn(res.grid.clone(), |r| bump(r, lo, hi, amp))?;
            let lhs = annulus_k_mass(&res, &u, q, params.r1, params.r2)?;
            let norm = qlrad::grid::norm_x(&u, &res.a, &res.v, params.p)?;
            let lp_ann = annulus_lp_mass(&res, &u, params.p, params.r1, params.r2)?;
            let rhs = bound.c_tilde
                * bound.k_norm_s
                * norm.powf(q - bound.l * params.p)
                * lp_ann.powf(bound.l);
            if lhs > rhs * (1.0 + 1e-9) {
                ok = false;
            }
            if rhs > 0.0 {
                worst = worst.max(lhs / rhs);
            }
        }
        checks.push(CheckRow {
            name: "annulus-inequality".into(),
            pass: ok,
            detail: format!("max lhs/rhs {worst:.3e} over 20 random profiles"),
        });
    }

    // nonlinearity audits for all kinds
    {
        let p = params.p;
        let q1 = p + 1.0;
        let q2 = p + 2.0;
        let mut pass = true;
        let mut details = Vec::new();
        for nl in [
            Nonlinearity::double_power_min(q1, q2)?,
            Nonlinearity::smooth_quotient(q1, q2)?,
            Nonlinearity::pure_power(q1)?,
        ] {
            let audit = audit_nonlinearity(&nl, 10_000);
            pass &= audit.pass;
            details.push(format!(
                "{:?}: excess {:.2e}, growth {:.6}",
                nl.kind, audit.superlinearity_excess, audit.growth_constant
            ));
        }
        checks.push(CheckRow {
            name: "nonlinearity-audits".into(),
            pass,
            detail: details.join("; "),
        });
    }

    let all_pass = checks.iter().all(|c| c.pass);
    let report = VerifyReport {
        command: "verify",
        checks,
        all_pass,
    };
    write_json(&args.out.join("report.json"), &report)?;
    for c in &report.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(if all_pass { 0 } else { EXIT_INFEASIBLE })
}

fn annulus_k_mass(
    res: &Resolved,
    u: &GridFunction,
    q: f64,
    r_lo: f64,
    r_hi: f64,
) -> Result<f64, Error> {
    let grid = u.grid();
    let tw = grid.trapezoid_weights();
    let nm1 = (grid.dim() - 1) as i32;
    let mut total = 0.0;
    for ((&r, &uv), &w) in grid.nodes().iter().zip(u.values()).zip(&tw) {
        if r >= r_lo && r < r_hi {
            total += res.k.eval(r)? * uv.abs().powf(q) * r.powi(nm1) * w;
        }
    }
    Ok(total * grid.omega_n())
}

fn annulus_lp_mass(
    res: &Resolved,
    u: &GridFunction,
    p: f64,
    r_lo: f64,
    r_hi: f64,
) -> Result<f64, Error> {
    let _ = res;
    let grid = u.grid();
    let tw = grid.trapezoid_weights();
    let nm1 = (grid.dim() - 1) as i32;
    let mut total = 0.0;
    for ((&r, &uv), &w) in grid.nodes().iter().zip(u.values()).zip(&tw) {
        if r >= r_lo && r < r_hi {
            total += uv.abs().powf(p) * r.powi(nm1) * w;
        }
    }
    Ok(total * grid.omega_n())
}
