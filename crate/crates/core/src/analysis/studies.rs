use rayon::prelude::*;
use serde::Serialize;

use super::{fit_rate, ConstantSet, RateFit};
use crate::dynamics::{integrate, EtaUpdate, IntegratorConfig, Regime, SystemSpec};
use crate::error::{Error, Result};
use crate::fields::eval_omega;
use crate::graph::{d_infinity_parts, MassVector, Trajectory, WeightMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    SlowGraph,
    FastGraph,
    GraphLimit,
}

/// Settings shared by all studies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StudyOptions {
    /// Base step; fast-graph rungs refine it to `ε/5`.
    pub dt: f64,
    /// Worker threads for the rungs; `0` lets the pool decide.
    pub jobs: usize,
    /// Seed for the sampled constants.
    pub seed: u64,
    /// Probes per sampled constant; `0` uses closed-form constants only.
    pub probes: usize,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            jobs: 0,
            seed: 0,
            probes: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RungResult {
    /// `ε`, or the vertex count for the graph limit.
    pub parameter: f64,
    pub dt: f64,
    pub error: f64,
    /// Mass part of the error (test-function part for the graph limit).
    pub error_rho: f64,
    /// Weight part of the error (pair-observable part for the graph limit).
    pub error_eta: f64,
    pub bound: Option<f64>,
    pub bound_rho: Option<f64>,
    pub bound_eta: Option<f64>,
    pub within_bound: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceStudy {
    pub kind: StudyKind,
    pub ladder: Vec<f64>,
    pub reference: String,
    pub rungs: Vec<RungResult>,
    pub fit: Option<RateFit>,
    pub fit_note: Option<String>,
    /// Errors decrease along the ladder, up to the allowed slack.
    pub monotone: bool,
    pub all_within_bound: Option<bool>,
    pub bound_label: Option<String>,
    pub constants: Option<ConstantSet>,
    /// Graph limit only: `max_t |⟨1, ρⁿ_t⟩ − ⟨1, ρᴺ_t⟩|` over all rungs.
    pub mass_discrepancy: Option<f64>,
    pub flags: Vec<String>,
    #[serde(skip)]
    pub trajectories: Vec<Trajectory>,
    #[serde(skip)]
    pub reference_trajectory: Trajectory,
}

impl ConvergenceStudy {
    pub fn errors(&self) -> Vec<f64> {
        self.rungs.iter().map(|r| r.error).collect()
    }
}

pub(crate) fn run_parallel<T, R, F>(jobs: usize, items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Validation(format!("cannot start worker pool: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect())
}

fn check_ladder(ladder: &[f64]) -> Result<()> {
    if ladder.is_empty() {
        return Err(Error::Validation("ε ladder is empty".into()));
    }
    if let Some(e) = ladder.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
        return Err(Error::Validation(format!(
            "ε = {e} must be finite and nonnegative"
        )));
    }
    if ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Validation(
            "ε ladder must be strictly decreasing".into(),
        ));
    }
    Ok(())
}

/// `k` with `errors[k+1] > (1 + slack) errors[k]`.
pub(crate) fn monotonicity_breaks(errors: &[f64], slack: f64) -> Vec<usize> {
    (0..errors.len().saturating_sub(1))
        .filter(|&k| errors[k + 1] > (1.0 + slack) * errors[k])
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn finish(
    kind: StudyKind,
    ladder: Vec<f64>,
    reference: String,
    rungs: Vec<RungResult>,
    trajectories: Vec<Trajectory>,
    reference_trajectory: Trajectory,
    constants: ConstantSet,
    bound_label: &str,
) -> ConvergenceStudy {
    let errors: Vec<f64> = rungs.iter().map(|r| r.error).collect();
    let mut flags = Vec::new();
    let breaks = monotonicity_breaks(&errors, 0.05);
    for &k in &breaks {
        flags.push(format!(
            "error increases from {} to {} between ε = {} and ε = {}",
            errors[k],
            errors[k + 1],
            ladder[k],
            ladder[k + 1]
        ));
    }
    let (fit, fit_note) = match fit_rate(&ladder, &errors) {
        Ok(f) => {
            let note = f.note.clone();
            (Some(f), note)
        }
        Err(e) => (None, Some(e.to_string())),
    };
    let all_within = rungs.iter().all(|r| r.within_bound.unwrap_or(true));
    if !all_within {
        flags.push("some rung exceeds its theoretical bound".into());
    }
    ConvergenceStudy {
        kind,
        ladder,
        reference,
        rungs,
        fit,
        fit_note,
        monotone: breaks.is_empty(),
        all_within_bound: Some(all_within),
        bound_label: Some(bound_label.into()),
        constants: Some(constants),
        mass_discrepancy: None,
        flags,
        trajectories,
        reference_trajectory,
    }
}

/// Per-rung bounds `(ρ part, η part)` for the slow-graph limit.
///
/// `η`: `ε e^{εT} 2 L_ω M T`; `ρ`: `ε exp(2 L_Φ (M_η C_V + L_V M ‖η₀‖) T + εT) 4 L_Φ C_V L_ω M² T²`
/// with `M_η = max(‖η₀‖_∞, C_ω)`.
pub fn slow_limit_bounds(c: &ConstantSet, epsilon: f64, horizon: f64) -> (f64, f64) {
    let (t, m) = (horizon, c.mass_bound);
    let eta = epsilon * (epsilon * t).exp() * 2.0 * c.l_omega * m * t;
    let growth = 2.0 * c.l_phi * (c.eta_bound() * c.c_v + c.l_v * m * c.eta0_sup) * t + epsilon * t;
    let rho = epsilon * growth.exp() * 4.0 * c.l_phi * c.c_v * c.l_omega * m * m * t * t;
    (rho, eta)
}

/// Runs the slow-graph system for each `ε` in the (strictly decreasing)
/// ladder and measures `d_∞` against the static-graph solution. `ε = 0`
/// is the static graph itself.
pub fn slow_limit_study(
    spec: &SystemSpec,
    rho0: &MassVector,
    eta0: &WeightMatrix,
    ladder: &[f64],
    opts: &StudyOptions,
) -> Result<ConvergenceStudy> {
    check_ladder(ladder)?;
    let cfg = IntegratorConfig::rk4(opts.dt);
    let reference = integrate(&spec.with_regime(Regime::StaticGraph), rho0, eta0, &cfg)?;
    let constants = study_constants(spec, eta0, opts)?;
    let runs = run_parallel(opts.jobs, ladder, |&eps| {
        let regime = if eps == 0.0 {
            Regime::StaticGraph
        } else {
            Regime::SlowGraph { epsilon: eps }
        };
        let traj = integrate(&spec.with_regime(regime), rho0, eta0, &cfg)?;
        let (er, ee) = d_infinity_parts(&traj, &reference)?;
        let (br, be) = slow_limit_bounds(&constants, eps, spec.horizon);
        let rung = RungResult {
            parameter: eps,
            dt: cfg.steps(spec.horizon).1,
            error: er + ee,
            error_rho: er,
            error_eta: ee,
            bound: Some(br + be),
            bound_rho: Some(br),
            bound_eta: Some(be),
            within_bound: Some(er <= br && ee <= be),
        };
        Ok((rung, traj))
    })?;
    let (rungs, trajs) = runs.into_iter().unzip();
    Ok(finish(
        StudyKind::SlowGraph,
        ladder.to_vec(),
        "static-graph run (η ≡ η₀) on the same grid".into(),
        rungs,
        trajs,
        reference,
        constants,
        "per-part Grönwall bounds for the slow-graph limit (ρ part taken from the estimate as displayed, proof-extracted)",
    ))
}

fn study_constants(
    spec: &SystemSpec,
    eta0: &WeightMatrix,
    opts: &StudyOptions,
) -> Result<ConstantSet> {
    if opts.probes == 0 {
        Ok(ConstantSet::from_spec(spec, eta0))
    } else {
        ConstantSet::conservative(spec, eta0, opts.probes, opts.seed)
    }
}

/// Grönwall constant `C = 2 L_Φ (M_η C_V + L_V M C_ω) + max(1, L_ω)` and
/// effective target drift `C̃_ω + 2 L_ω L_Φ M_η C_V M` of the fast-limit bound.
fn fast_constants(c: &ConstantSet) -> (f64, f64) {
    let m_eta = c.eta_bound();
    let big_c =
        2.0 * c.l_phi * (m_eta * c.c_v + c.l_v * c.mass_bound * c.c_omega) + c.l_omega.max(1.0);
    let drift = c.c_omega_dot + 2.0 * c.l_omega * c.l_phi * m_eta * c.c_v * c.mass_bound;
    (big_c, drift)
}

/// `(δ + C̃ ε)(1 + C T e^{CT})` with `δ = ‖η₀ − ω₀[ρ₀]‖_∞`.
pub fn fast_limit_bounds(c: &ConstantSet, delta: f64, epsilon: f64, horizon: f64) -> f64 {
    let (big_c, drift) = fast_constants(c);
    (delta + drift * epsilon) * (1.0 + big_c * horizon * (big_c * horizon).exp())
}

/// Runs the fast-graph system for each `ε` and measures `d_∞` against the
/// quasi-static solution `(ρ, ω[ρ])`.
///
/// Rungs use the exponential weight update with `dt ≤ min(ε/5, base dt)`,
/// sampled on the reference grid. With `well_prepared`, `η₀` is replaced by
/// `ω₀[ρ₀]`.
pub fn fast_limit_study(
    spec: &SystemSpec,
    rho0: &MassVector,
    eta0: &WeightMatrix,
    ladder: &[f64],
    well_prepared: bool,
    opts: &StudyOptions,
) -> Result<ConvergenceStudy> {
    check_ladder(ladder)?;
    if let Some(e) = ladder.iter().find(|e| **e == 0.0) {
        return Err(Error::Validation(format!(
            "fast-graph rungs need ε > 0, got {e}"
        )));
    }
    let omega0 = eval_omega(&spec.omega, 0.0, &spec.graph, rho0)?;
    let eta0 = if well_prepared {
        omega0.clone()
    } else {
        eta0.clone()
    };
    let delta = eta0.sup_distance(&omega0);

    let ref_cfg = IntegratorConfig::rk4(opts.dt);
    let reference = integrate(
        &spec.with_regime(Regime::QuasiStatic),
        rho0,
        &eta0,
        &ref_cfg,
    )?;
    let (ref_steps, ref_h) = ref_cfg.steps(spec.horizon);
    let constants = study_constants(spec, &eta0, opts)?;

    let runs = run_parallel(opts.jobs, ladder, |&eps| {
        let target = (eps / 5.0).min(ref_h);
        let refine = ((ref_h / target) - 1e-9).ceil().max(1.0) as usize;
        let cfg = IntegratorConfig::rk4(spec.horizon / (ref_steps * refine) as f64)
            .with_eta_update(EtaUpdate::ExponentialEuler)
            .with_audit_every(refine);
        let traj = integrate(
            &spec.with_regime(Regime::FastGraph { epsilon: eps }),
            rho0,
            &eta0,
            &cfg,
        )?;
        let (er, ee) = d_infinity_parts(&traj, &reference)?;
        let b = fast_limit_bounds(&constants, delta, eps, spec.horizon);
        let rung = RungResult {
            parameter: eps,
            dt: cfg.dt,
            error: er + ee,
            error_rho: er,
            error_eta: ee,
            bound: Some(b),
            bound_rho: None,
            bound_eta: None,
            within_bound: Some(er + ee <= b),
        };
        Ok((rung, traj))
    })?;
    let (rungs, trajs) = runs.into_iter().unzip();
    let mut study = finish(
        StudyKind::FastGraph,
        ladder.to_vec(),
        "quasi-static run (η = ω[ρ]) on the same grid".into(),
        rungs,
        trajs,
        reference,
        constants,
        "reconstructed Grönwall bound for the fast-graph limit",
    );
    if !well_prepared {
        study.fit_note = Some(format!(
            "initial layer δ = {delta}; the rate fit is only meaningful for well-prepared data"
        ));
    }
    Ok(study)
}
