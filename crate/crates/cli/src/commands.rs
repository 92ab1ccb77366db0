use std::path::Path;

use coevolve::analysis::{fast_limit_study, graph_limit_study, slow_limit_study, StudyOptions};
use coevolve::dynamics::{eta_sup_envelope, tv_envelope, PicardLog};
use coevolve::fields::{estimate_omega_constants, estimate_velocity_constants};
use coevolve::scenario::{Scenario, Solver};
use coevolve::{
    contraction_report, integrate, picard_solve, preset_names, ConvergenceStudy, Error, Trajectory,
};
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{ensure_dir, write_json, write_trajectory_csv};
use crate::CliError;

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn build(cfg: &RunConfig) -> Result<Scenario, CliError> {
    Ok(cfg.scenario.build()?)
}

#[derive(Serialize)]
struct AuditRow {
    time: f64,
    total_mass: f64,
    mass_drift: f64,
    tv_norm: f64,
    tv_envelope: f64,
    eta_sup: f64,
    eta_sup_envelope: f64,
}

fn audit_json(sc: &Scenario, traj: &Trajectory) -> serde_json::Value {
    let m0 = traj.audit.first().map_or(0.0, |a| a.total_mass);
    let tv0 = sc.rho0.tv_norm();
    let eta0 = sc.eta0.sup_norm();
    let mut eta_running = eta0;
    let rows: Vec<AuditRow> = traj
        .audit
        .iter()
        .map(|a| {
            eta_running = eta_running.max(a.eta_sup);
            AuditRow {
                time: a.time,
                total_mass: a.total_mass,
                mass_drift: (a.total_mass - m0).abs(),
                tv_norm: a.tv_norm,
                tv_envelope: tv_envelope(&sc.spec, tv0, eta_running, a.time),
                eta_sup: a.eta_sup,
                eta_sup_envelope: eta_sup_envelope(&sc.spec, eta0, a.time),
            }
        })
        .collect();
    let tv_ok = rows
        .iter()
        .all(|r| r.tv_norm <= 1.1 * r.tv_envelope + 1e-12);
    let eta_ok = rows
        .iter()
        .all(|r| r.eta_sup <= r.eta_sup_envelope * (1.0 + 1e-9) + 1e-12);
    json!({
        "max_mass_drift": traj.max_mass_drift(),
        "tv_within_envelope": tv_ok,
        "eta_sup_within_envelope": eta_ok,
        "warnings": traj.warnings,
        "entries": rows,
    })
}

fn final_digest(traj: &Trajectory) -> serde_json::Value {
    match (traj.final_rho(), traj.final_eta()) {
        (Some(r), Some(e)) => json!({
            "time": traj.times.last(),
            "rho": r,
            "total_mass": r.total(),
            "tv_norm": r.tv_norm(),
            "eta_sup": e.sup_norm(),
            "eta_min_off_diagonal": e.min_off_diagonal(),
        }),
        _ => serde_json::Value::Null,
    }
}

fn write_run_outputs(
    out: &Path,
    cfg: &RunConfig,
    sc: &Scenario,
    traj: &Trajectory,
    status: &str,
    truncation: Option<&str>,
    picard: Option<&PicardLog>,
) -> Result<(), CliError> {
    ensure_dir(out)?;
    if cfg.output.trajectory {
        write_trajectory_csv(
            &out.join("trajectory.csv"),
            traj,
            cfg.output.eta_stride,
            truncation,
        )?;
    }
    if cfg.output.audit {
        write_json(&out.join("audit.json"), &audit_json(sc, traj))?;
    }
    if cfg.output.summary {
        let summary = json!({
            "command": "simulate",
            "version": VERSION,
            "status": status,
            "truncation": truncation,
            "samples": traj.len(),
            "initial_total_mass": sc.rho0.total(),
            "max_mass_drift": traj.max_mass_drift(),
            "final": final_digest(traj),
            "warnings": traj.warnings,
            "picard": picard,
            "config": cfg,
        });
        write_json(&out.join("summary.json"), &summary)?;
    }
    Ok(())
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let sc = build(cfg)?;
    let result = match sc.solver {
        Solver::Integrate => {
            integrate(&sc.spec, &sc.rho0, &sc.eta0, &sc.integrator).map(|t| (t, None))
        }
        Solver::Picard => {
            picard_solve(&sc.spec, &sc.rho0, &sc.eta0, &sc.picard).map(|(t, l)| (t, Some(l)))
        }
    };
    match result {
        Ok((traj, log)) => {
            for w in &traj.warnings {
                eprintln!("warning: {w}");
            }
            write_run_outputs(out, cfg, &sc, &traj, "ok", None, log.as_ref())
        }
        Err(Error::Divergence {
            step,
            time,
            partial,
        }) => {
            let note = format!("diverged at step {step} (t = {time})");
            write_run_outputs(out, cfg, &sc, &partial, "diverged", Some(&note), None)?;
            Err(CliError::Runtime(note))
        }
        Err(e) => Err(e.into()),
    }
}

fn probes(cfg: &RunConfig) -> usize {
    cfg.scenario.study.as_ref().map_or(64, |s| s.probes.max(1))
}

pub fn constants(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let sc = build(cfg)?;
    let spec = &sc.spec;
    let seed = cfg.scenario.seed;
    let k = probes(cfg);
    let velocity = estimate_velocity_constants(
        &spec.velocity,
        &spec.graph,
        spec.horizon,
        k,
        spec.mass_bound,
        seed,
    )?;
    let omega = estimate_omega_constants(
        &spec.omega,
        &spec.graph,
        spec.horizon,
        k,
        spec.mass_bound,
        seed,
    )?;
    let report = contraction_report(&cfg.scenario.report_constants(&sc), spec.horizon)?;
    let verdict = if report.within_window {
        "contraction_guaranteed"
    } else {
        "contraction_not_guaranteed"
    };
    let doc = json!({
        "command": "constants",
        "version": VERSION,
        "T_star": report.t_star,
        "horizon": spec.horizon,
        "verdict": verdict,
        "contraction": report,
        "velocity_constants": velocity,
        "omega_constants": omega,
        "config": cfg,
    });
    ensure_dir(out)?;
    write_json(&out.join("constants.json"), &doc)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&doc).map_err(|e| CliError::Runtime(e.to_string()))?
    );
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum StudyArg {
    Slow,
    Fast,
    GraphLimit,
}

fn write_study_csvs(
    out: &Path,
    study: &ConvergenceStudy,
    eta_stride: usize,
) -> Result<Vec<String>, CliError> {
    let mut names = Vec::new();
    for (k, t) in study.trajectories.iter().enumerate() {
        let name = format!("rung_{k:02}.csv");
        write_trajectory_csv(&out.join(&name), t, eta_stride, None)?;
        names.push(name);
    }
    write_trajectory_csv(
        &out.join("reference.csv"),
        &study.reference_trajectory,
        eta_stride,
        None,
    )?;
    names.push("reference.csv".into());
    Ok(names)
}

pub fn study(kind: StudyArg, cfg: &RunConfig, out: &Path, jobs: usize) -> Result<(), CliError> {
    let sc_cfg = &cfg.scenario;
    let section = sc_cfg.study.as_ref().ok_or_else(|| {
        CliError::Config("missing field `study` (the study section is required)".into())
    })?;
    let opts = StudyOptions {
        dt: sc_cfg.integrator.dt,
        jobs,
        seed: sc_cfg.seed,
        probes: section.probes,
    };
    let study = match kind {
        StudyArg::Slow | StudyArg::Fast => {
            if section.epsilons.is_empty() {
                return Err(CliError::Config("missing field `study.epsilons`".into()));
            }
            let sc = build(cfg)?;
            if kind == StudyArg::Slow {
                slow_limit_study(&sc.spec, &sc.rho0, &sc.eta0, &section.epsilons, &opts)?
            } else {
                fast_limit_study(
                    &sc.spec,
                    &sc.rho0,
                    &sc.eta0,
                    &section.epsilons,
                    section.well_prepared,
                    &opts,
                )?
            }
        }
        StudyArg::GraphLimit => {
            if section.ladder.len() < 2 {
                return Err(CliError::Config(format!(
                    "study.ladder: graph-limit study needs at least 2 rungs, got {}",
                    section.ladder.len()
                )));
            }
            graph_limit_study(&sc_cfg.graph_limit_config()?, &opts)?
        }
    };

    let slope = study.fit.as_ref().map(|f| f.slope);
    let slope_gate = section.slope_gate.map(|g| {
        let passed = slope.is_some_and(|s| (g.min..=g.max).contains(&s));
        json!({ "min": g.min, "max": g.max, "value": slope, "passed": passed, "required": g.required })
    });
    let slope_failed = section
        .slope_gate
        .is_some_and(|g| g.required && !slope.is_some_and(|s| (g.min..=g.max).contains(&s)));

    ensure_dir(out)?;
    let files = write_study_csvs(out, &study, cfg.output.eta_stride)?;
    let doc = json!({
        "command": "study",
        "version": VERSION,
        "ladder": study.ladder,
        "errors": study.errors(),
        "bounds": study.rungs.iter().map(|r| r.bound).collect::<Vec<_>>(),
        "slope": slope,
        "study": study,
        "gates": {
            "slope": slope_gate,
            "monotone": study.monotone,
            "within_bounds": study.all_within_bound,
        },
        "files": files,
        "config": cfg,
    });
    write_json(&out.join("study.json"), &doc)?;
    for f in &study.flags {
        eprintln!("note: {f}");
    }
    if slope_failed {
        return Err(CliError::Runtime(format!(
            "required slope gate failed (slope = {slope:?})"
        )));
    }
    Ok(())
}

pub fn presets_list() {
    for (name, description) in preset_names() {
        println!("{name:<22} {description}");
    }
}
