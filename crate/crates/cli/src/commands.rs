use std::fs;
use std::path::Path;

use expansive_core::action::{MeshKind, TailMode};
use expansive_core::asymptotics::{b_projection_decay, chazy_classify, expansion_residual, ChazyClass, ExpansionSpec};
use expansive_core::central_config::{
    central_configuration_start, cluster_partition, clustered_central_configuration, select_best, SolverOptions,
};
use expansive_core::reference::{gamma_coefficients, newtonian_log_coefficient};
use expansive_core::trajectory::{
    energy_drift, euler_lagrange_residual, integrate_newton, log_spaced, synthesize_trajectory, GridSpec, InitialGuess,
    RegimeData,
};
use expansive_core::{CentralConfiguration, Configuration, Error, PotentialModel, Provenance, Trajectory};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::files::{
    configuration, read_json, read_trajectory, rows, write_json, write_trajectory, RegimeRecord, SystemFile,
    TrajectoryMeta,
};
use crate::manifest::RunTimer;
use crate::*;

pub const CENTRAL_CONFIG_FILE: &str = "central_config.json";
pub const GAMMA_FILE: &str = "gamma.json";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const REPORT_FILE: &str = "report.json";
pub const VERIFY_FILE: &str = "verify.json";

/// Pair fits below this coefficient of determination draw a warning.
const MIN_R_SQUARED: f64 = 0.99;

fn prepare(out: &Path) -> CliResult<()> {
    fs::create_dir_all(out).map_err(|e| Failure::validation(format!("{}: {e}", out.display())))
}

fn solver_options(starts: usize, tol: f64, max_iters: usize) -> CliResult<SolverOptions> {
    if starts == 0 {
        return Err(Failure::validation("at least one start is required"));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Failure::validation("tolerance must be positive"));
    }
    Ok(SolverOptions { starts, tol, max_iters })
}

/// Runs the starts on the worker pool; the pick does not depend on its size.
fn search_central_configuration(
    model: &PotentialModel,
    seed: u64,
    opts: &SolverOptions,
) -> CliResult<CentralConfiguration> {
    let runs: Vec<_> =
        (0..opts.starts).into_par_iter().map(|k| central_configuration_start(model, seed, k, opts)).collect();
    Ok(select_best(runs)?)
}

#[derive(Debug, Serialize)]
struct CentralConfigOutput {
    alpha: f64,
    dim: usize,
    masses: Vec<f64>,
    positions: Vec<Vec<f64>>,
    u_min: f64,
    beta: f64,
    residual: f64,
    converged: bool,
    seed: u64,
    starts: usize,
}

pub fn central_config(args: &CentralConfigArgs) -> CliResult<u8> {
    let timer = RunTimer::start("central-config");
    let (file, raw): (SystemFile, _) = read_json(&args.config)?;
    let model = file.model(args.alpha)?;
    if args.mode == CentralMode::Parabolic && model.alpha() >= 2.0 {
        return Err(Failure::validation(format!("parabolic mode needs α ∈ (0, 2), got {}", model.alpha())));
    }
    let opts = solver_options(args.starts, args.tol, args.max_iters)?;
    prepare(&args.out)?;
    let cc = search_central_configuration(&model, args.seed, &opts)?;
    let sys = model.system();
    let out = CentralConfigOutput {
        alpha: model.alpha(),
        dim: sys.dim(),
        masses: sys.masses().to_vec(),
        positions: rows(cc.b_m.coords(), sys.dim()),
        u_min: cc.u_min,
        beta: cc.beta,
        residual: cc.gradient_residual,
        converged: cc.converged,
        seed: args.seed,
        starts: args.starts,
    };
    write_json(&args.out.join(CENTRAL_CONFIG_FILE), &out)?;
    let parameters = json!({
        "alpha": model.alpha(), "mode": format!("{:?}", args.mode).to_lowercase(), "starts": args.starts,
        "tol": args.tol, "max_iters": args.max_iters,
    });
    timer.finish(&args.out, json!({ "config": raw }), parameters, args.seed)?;
    println!("u_min = {:e}  beta = {:e}  residual = {:e}", cc.u_min, cc.beta, cc.gradient_residual);
    if cc.converged {
        Ok(EXIT_OK)
    } else {
        eprintln!("central configuration search did not reach tol {:e}", args.tol);
        Ok(EXIT_NON_CONVERGENCE)
    }
}

#[derive(Debug, Serialize)]
struct GammaOutput {
    alpha: f64,
    dim: usize,
    masses: Vec<f64>,
    target: Vec<Vec<f64>>,
    expansion_order: usize,
    /// `Γ_k` multiplies `t^{exponents[k-1]}`.
    exponents: Vec<f64>,
    gammas: Vec<Vec<Vec<f64>>>,
    /// Coefficient of `log t`, when the expansion has one.
    log_coefficient: Option<Vec<Vec<f64>>>,
}

pub fn gamma(args: &GammaArgs) -> CliResult<u8> {
    let timer = RunTimer::start("gamma");
    let (file, raw): (SystemFile, _) = read_json(&args.config)?;
    let (target, raw_target): (SystemFile, _) = read_json(&args.target)?;
    file.same_bodies(&target, "target")?;
    let model = file.model(args.alpha)?;
    let sys = model.system();
    let a = target.positions(sys)?;
    let d = sys.dim();
    let out = if model.alpha() == 1.0 {
        GammaOutput {
            alpha: 1.0,
            dim: d,
            masses: sys.masses().to_vec(),
            target: rows(a.coords(), d),
            expansion_order: 0,
            exponents: Vec::new(),
            gammas: Vec::new(),
            log_coefficient: Some(rows(&newtonian_log_coefficient(&model, &a)?, d)),
        }
    } else {
        let g = gamma_coefficients(&model, &a)?;
        GammaOutput {
            alpha: model.alpha(),
            dim: d,
            masses: sys.masses().to_vec(),
            target: rows(a.coords(), d),
            expansion_order: g.expansion_order,
            exponents: (1..=g.gammas.len()).map(|k| 1.0 - k as f64 * model.alpha()).collect(),
            gammas: g.gammas.iter().map(|v| rows(v, d)).collect(),
            log_coefficient: g.tilde_gamma.as_ref().map(|v| rows(v, d)),
        }
    };
    prepare(&args.out)?;
    write_json(&args.out.join(GAMMA_FILE), &out)?;
    timer.finish(&args.out, json!({ "config": raw, "target": raw_target }), json!({ "alpha": model.alpha() }), 0)?;
    println!("{} coefficient(s), expansion order {}", out.gammas.len(), out.expansion_order);
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct SynthesisOutput {
    mode: &'static str,
    alpha: f64,
    horizon: f64,
    intervals: usize,
    converged: bool,
    hit_collision_guard: bool,
    iterations: usize,
    gradient_norm: f64,
    el_residual: f64,
    initial_action: f64,
    final_action: f64,
    initial_guess: &'static str,
    homotopy_t_star: Option<f64>,
    terminal_energy: f64,
    u_min: Option<f64>,
    beta: Option<f64>,
    clusters: Option<Vec<Vec<usize>>>,
}

fn target_configuration(
    path: Option<&Path>,
    file: &SystemFile,
    model: &PotentialModel,
) -> CliResult<(Configuration, Value)> {
    let path = path.ok_or_else(|| Failure::validation("this mode needs --target"))?;
    let (target, raw): (SystemFile, _) = read_json(path)?;
    file.same_bodies(&target, "target")?;
    Ok((target.positions(model.system())?, raw))
}

pub fn synthesize(args: &SynthesizeArgs) -> CliResult<u8> {
    let timer = RunTimer::start("synthesize");
    let (file, raw): (SystemFile, _) = read_json(&args.initial)?;
    let model = file.model(Some(args.alpha))?;
    let sys = model.system().clone();
    let x = file.positions(&sys)?;
    let opts = solver_options(args.starts, args.cc_tol, DEFAULT_CC_ITERS)?;
    let mut inputs = json!({ "initial": raw });
    let mut record = RegimeRecord { regime: args.mode.label().to_string(), seed: args.seed, ..RegimeRecord::default() };
    let mut cc_summary = (None, None);
    let mut clusters = None;
    let data = match args.mode {
        Mode::Hyperbolic => {
            let (a, raw_a) = target_configuration(args.target.as_deref(), &file, &model)?;
            inputs["target"] = raw_a;
            record.target = Some(rows(a.coords(), sys.dim()));
            RegimeData::Hyperbolic { a }
        }
        Mode::Parabolic => {
            if !(args.alpha > 0.0 && args.alpha < 2.0) {
                return Err(Failure::validation(format!("parabolic motions need α ∈ (0, 2), got {}", args.alpha)));
            }
            let cc = match &args.bm {
                Some(path) => {
                    let (bm, raw_bm): (SystemFile, _) = read_json(path)?;
                    file.same_bodies(&bm, "bm")?;
                    inputs["bm"] = raw_bm;
                    let cc = CentralConfiguration::from_configuration(&model, &bm.positions(&sys)?, BM_RESIDUAL_TOL)?;
                    if !cc.converged {
                        return Err(Failure::validation(format!(
                            "bm is not a central configuration (residual {:e})",
                            cc.gradient_residual
                        )));
                    }
                    cc
                }
                None => search_central_configuration(&model, args.seed, &opts)?,
            };
            cc_summary = (Some(cc.u_min), Some(cc.beta));
            record.bm = Some(rows(cc.b_m.coords(), sys.dim()));
            RegimeData::Parabolic { cc }
        }
        Mode::Hp => {
            if !(args.alpha > 0.5 && args.alpha < 2.0) {
                return Err(Failure::validation(format!(
                    "hyperbolic-parabolic motions need α ∈ (1/2, 2), got {}",
                    args.alpha
                )));
            }
            let (a, raw_a) = target_configuration(args.target.as_deref(), &file, &model)?;
            inputs["target"] = raw_a;
            record.target = Some(rows(a.coords(), sys.dim()));
            record.eps_cluster = Some(args.eps_cluster);
            let partition = cluster_partition(&sys, &a, Some(args.eps_cluster));
            let clustered = clustered_central_configuration(&model, &partition, args.seed, &opts)?;
            clusters = Some(partition.classes.clone());
            RegimeData::HyperbolicParabolic { a, partition, clustered }
        }
    };
    let spec = GridSpec {
        horizon: args.horizon,
        intervals: args.nodes,
        mesh_kind: match args.mesh {
            Mesh::Geometric => MeshKind::Geometric,
            Mesh::Uniform => MeshKind::Uniform,
        },
        tail_mode: match args.tail {
            Tail::Analytic => TailMode::AnalyticTail,
            Tail::Truncate => TailMode::Truncate,
        },
        opt_tol: args.opt_tol,
        max_iters: args.max_iters,
    };
    let rep = synthesize_trajectory(&model, &x, &data, &spec)?;
    prepare(&args.out)?;
    let meta = TrajectoryMeta::new(&model, &rep.trajectory, Some(record));
    write_trajectory(&args.out.join(TRAJECTORY_FILE), &rep.trajectory, &meta)?;
    let (guess, t_star) = match rep.initial_guess {
        InitialGuess::Zero => ("zero", None),
        InitialGuess::Homotopy { t_star } => ("homotopy", Some(t_star)),
        InitialGuess::Given => ("given", None),
    };
    let out = SynthesisOutput {
        mode: args.mode.label(),
        alpha: args.alpha,
        horizon: args.horizon,
        intervals: args.nodes,
        converged: rep.converged,
        hit_collision_guard: rep.hit_collision_guard,
        iterations: rep.iterations,
        gradient_norm: rep.gradient_norm,
        el_residual: rep.el_residual,
        initial_action: rep.initial_action,
        final_action: rep.final_action,
        initial_guess: guess,
        homotopy_t_star: t_star,
        terminal_energy: rep.trajectory.energy(),
        u_min: cc_summary.0,
        beta: cc_summary.1,
        clusters,
    };
    write_json(&args.out.join(REPORT_FILE), &out)?;
    let parameters = json!({
        "mode": args.mode.label(), "alpha": args.alpha, "horizon": args.horizon, "nodes": args.nodes,
        "mesh": format!("{:?}", args.mesh).to_lowercase(), "tail": format!("{:?}", args.tail).to_lowercase(),
        "opt_tol": args.opt_tol, "max_iters": args.max_iters, "starts": args.starts, "cc_tol": args.cc_tol,
        "eps_cluster": args.eps_cluster,
    });
    timer.finish(&args.out, inputs, parameters, args.seed)?;
    println!(
        "iterations {}  gradient {:e}  EL residual {:e}  energy {:e}",
        rep.iterations,
        rep.gradient_norm,
        rep.el_residual,
        rep.trajectory.energy()
    );
    if rep.hit_collision_guard {
        eprintln!("line search was held back by the collision guard");
        Ok(EXIT_COLLISION)
    } else if !rep.converged {
        eprintln!("gradient norm {:e} above tolerance {:e}", rep.gradient_norm, args.opt_tol);
        Ok(EXIT_NON_CONVERGENCE)
    } else {
        Ok(EXIT_OK)
    }
}

const DEFAULT_CC_ITERS: usize = expansive_core::central_config::DEFAULT_MAX_ITERS;
/// Residual accepted for a central configuration read from a file.
const BM_RESIDUAL_TOL: f64 = 1e-8;

pub fn integrate(args: &IntegrateArgs) -> CliResult<u8> {
    let timer = RunTimer::start("integrate");
    let (file, raw): (SystemFile, _) = read_json(&args.state)?;
    let model = file.model(Some(args.alpha))?;
    let sys = model.system();
    let x0 = file.positions(sys)?;
    let v0 = file.velocities(sys)?;
    if args.samples < 2 {
        return Err(Failure::validation("at least two samples are required"));
    }
    let (lo, hi) = if args.t0 <= args.t1 { (args.t0, args.t1) } else { (args.t1, args.t0) };
    let times = log_spaced(lo, hi, args.samples);
    let traj = integrate_newton(&model, &x0, &v0, args.t0, args.t1, args.rtol, &times)?;
    let drift = energy_drift(&model, &traj)?;
    prepare(&args.out)?;
    let meta = TrajectoryMeta::new(&model, &traj, None);
    write_trajectory(&args.out.join(TRAJECTORY_FILE), &traj, &meta)?;
    let parameters = json!({
        "alpha": args.alpha, "t0": args.t0, "t1": args.t1, "rtol": args.rtol, "atol": args.rtol * 1e-3,
        "samples": args.samples,
    });
    timer.finish(&args.out, json!({ "state": raw }), parameters, 0)?;
    println!("terminal energy {:e}", traj.energy());
    println!("energy drift {drift:e}");
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct PairOutput {
    i: usize,
    j: usize,
    exponent: f64,
    r_squared: f64,
}

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    value: Option<f64>,
    bound: Option<f64>,
    /// Upper bounds can only be certified one way from finite data.
    one_sided: bool,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct VerifyOutput {
    classification: Option<&'static str>,
    classification_error: Option<String>,
    window: (f64, f64),
    pairs: Vec<PairOutput>,
    regime: Option<String>,
    checks: Vec<Check>,
    energy_drift: Option<f64>,
    el_residual: Option<f64>,
    warnings: Vec<String>,
    passed: bool,
}

fn expected_class(mode: Mode) -> ChazyClass {
    match mode {
        Mode::Hyperbolic => ChazyClass::Hyperbolic,
        Mode::Parabolic => ChazyClass::Parabolic,
        Mode::Hp => ChazyClass::HyperbolicParabolic,
    }
}

fn regime_spec(
    model: &PotentialModel,
    rec: &RegimeRecord,
    mode: Mode,
) -> CliResult<(ExpansionSpec, Option<CentralConfiguration>)> {
    let sys = model.system();
    let target = || -> CliResult<Configuration> {
        let rows = rec.target.as_ref().ok_or_else(|| Failure::validation("the regime record has no target"))?;
        configuration(sys, rows)
    };
    Ok(match mode {
        Mode::Hyperbolic => (ExpansionSpec::hyperbolic(model, &target()?)?, None),
        Mode::Parabolic => {
            let cc = match &rec.bm {
                Some(bm) => CentralConfiguration::from_configuration(model, &configuration(sys, bm)?, BM_RESIDUAL_TOL)?,
                None => search_central_configuration(model, rec.seed, &SolverOptions::default())?,
            };
            (ExpansionSpec::parabolic(model, &cc)?, Some(cc))
        }
        Mode::Hp => {
            let a = target()?;
            let partition = cluster_partition(sys, &a, rec.eps_cluster);
            let clustered = clustered_central_configuration(model, &partition, rec.seed, &SolverOptions::default())?;
            (ExpansionSpec::hyperbolic_parabolic(model, &a, &clustered)?, None)
        }
    })
}

fn upper_bound_check(name: &'static str, value: f64, bound: f64, margin: f64, warnings: &mut Vec<String>) -> Check {
    let passed = value <= bound + margin;
    if passed && value > bound {
        warnings.push(format!("{name}: exponent {value:.4} exceeds {bound:.4} but lies within the margin"));
    }
    Check { name, value: Some(value), bound: Some(bound), one_sided: true, passed }
}

pub fn verify(args: &VerifyArgs) -> CliResult<u8> {
    let timer = RunTimer::start("verify");
    let (traj, meta) = read_trajectory(&args.traj)?;
    let model = meta.model()?;
    let mut inputs = json!({ "meta": serde_json::to_value(&meta).map_err(|e| Failure::validation(e.to_string()))? });
    let record = if args.spec == "auto" {
        meta.regime.clone()
    } else {
        let (rec, raw): (RegimeRecord, _) = read_json(Path::new(&args.spec))?;
        inputs["spec"] = raw;
        Some(rec)
    };
    inputs["trajectory"] = json!(fs::read_to_string(&args.traj)?);
    let horizon = traj.horizon();
    let window = (args.t_lo.unwrap_or(horizon / 10.0), args.t_hi.unwrap_or(horizon));
    let mut out = VerifyOutput {
        classification: None,
        classification_error: None,
        window,
        pairs: Vec::new(),
        regime: record.as_ref().map(|r| r.regime.clone()),
        checks: Vec::new(),
        energy_drift: None,
        el_residual: None,
        warnings: Vec::new(),
        passed: true,
    };
    let class = match chazy_classify(&traj, Some(window)) {
        Ok(r) => {
            for p in &r.pairs {
                if p.fit.r_squared < MIN_R_SQUARED {
                    out.warnings.push(format!(
                        "pair ({}, {}): poorly conditioned fit, R² = {:.4}",
                        p.i + 1,
                        p.j + 1,
                        p.fit.r_squared
                    ));
                }
                out.pairs.push(PairOutput {
                    i: p.i + 1,
                    j: p.j + 1,
                    exponent: p.fit.exponent,
                    r_squared: p.fit.r_squared,
                });
            }
            out.classification = Some(r.class.label());
            out.checks.push(Check { name: "expansive", value: None, bound: None, one_sided: false, passed: true });
            Some(r.class)
        }
        Err(Error::NotExpansive(msg)) => {
            out.classification_error = Some(msg);
            out.checks.push(Check { name: "expansive", value: None, bound: None, one_sided: false, passed: false });
            None
        }
        Err(e) => return Err(e.into()),
    };
    if let (Some(rec), Some(class)) = (&record, class) {
        let mode = Mode::from_label(&rec.regime)
            .ok_or_else(|| Failure::validation(format!("unknown regime {:?}", rec.regime)))?;
        out.checks.push(Check {
            name: "classification",
            value: None,
            bound: None,
            one_sided: false,
            passed: class == expected_class(mode),
        });
        let (spec, cc) = regime_spec(&model, rec, mode)?;
        let residual = expansion_residual(&traj, &spec, mode == Mode::Hyperbolic, Some(window))?;
        out.warnings.extend(residual.warnings.iter().cloned());
        let range = traj.window(window.0, window.1);
        let size = range.clone().map(|k| model.system().norm(&traj.positions()[k])).fold(0.0, f64::max);
        let floor = args.resolution * size;
        let largest = range.map(|k| residual.norms[k]).fold(0.0, f64::max);
        let resolved = largest <= floor;
        if resolved && residual.fit.is_some() {
            out.warnings.push(format!("expansion remainder {largest:e} is below the resolution; exponent not checked"));
        }
        out.checks.push(match &residual.fit {
            Some(fit) if !resolved => {
                upper_bound_check("expansion_remainder", fit.exponent, residual.bound, args.margin, &mut out.warnings)
            }
            _ => Check {
                name: "expansion_remainder",
                value: None,
                bound: Some(residual.bound),
                one_sided: true,
                passed: true,
            },
        });
        if let Some(cc) = cc {
            let decay = b_projection_decay(&model, &traj, &cc, Some(window))?;
            let largest = decay
                .psi_b
                .iter()
                .zip(&decay.times)
                .filter(|(_, t)| **t >= window.0 && **t <= window.1)
                .fold(0.0f64, |m, (p, _)| m.max(p.abs()));
            out.checks.push(if largest <= floor {
                out.warnings.push(format!("ψ_b of size {largest:e} is below the resolution; exponent not checked"));
                Check { name: "psi_b_decay", value: None, bound: Some(decay.bound), one_sided: true, passed: true }
            } else {
                upper_bound_check("psi_b_decay", decay.fit.exponent, decay.bound, args.margin, &mut out.warnings)
            });
        }
    }
    if traj.provenance() != Provenance::Reference {
        out.energy_drift = energy_drift(&model, &traj).ok();
        out.el_residual = euler_lagrange_residual(&model, &traj).ok();
    }
    out.passed = out.checks.iter().all(|c| c.passed);
    prepare(&args.out)?;
    write_json(&args.out.join(VERIFY_FILE), &out)?;
    let parameters = json!({
        "spec": args.spec, "margin": args.margin, "resolution": args.resolution, "window": [window.0, window.1],
    });
    timer.finish(&args.out, inputs, parameters, record.as_ref().map_or(0, |r| r.seed))?;
    summarize(&out, &traj);
    Ok(if out.passed { EXIT_OK } else { EXIT_VERIFICATION })
}

fn summarize(out: &VerifyOutput, traj: &Trajectory) {
    match (&out.classification, &out.classification_error) {
        (Some(c), _) => {
            println!("classification {c} on [{:e}, {:e}] ({} samples)", out.window.0, out.window.1, traj.len())
        }
        (None, Some(e)) => println!("classification failed: {e}"),
        _ => {}
    }
    for c in &out.checks {
        let value = c.value.map_or(String::from("-"), |v| format!("{v:.4}"));
        let bound = c.bound.map_or(String::new(), |b| format!(" (bound {b:.4})"));
        println!("{} {}: {value}{bound}", if c.passed { "PASS" } else { "FAIL" }, c.name);
    }
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
}
