use serde::Serialize;

use super::{eta_rate, eval_stage, Regime, SystemSpec};
use crate::analysis::{contraction_report, ConstantSet};
use crate::error::{Error, Result};
use crate::graph::{tv_distance, EdgeMatrix, MassVector, Trajectory, WeightMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PicardConfig {
    /// Grid size `K + 1`, endpoints included.
    pub grid_points: usize,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            grid_points: 1001,
            tol: 1e-12,
            max_iters: 100,
        }
    }
}

impl PicardConfig {
    fn validate(&self) -> Result<()> {
        if self.grid_points < 2 {
            return Err(Error::Validation(
                "Picard grid needs at least 2 points".into(),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Validation(format!(
                "Picard tolerance {} must be positive",
                self.tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Validation(
                "Picard needs at least one iteration".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct PicardLog {
    /// `gaps[k − 1] = d_∞(iterate k, iterate k − 1)`.
    pub gaps: Vec<f64>,
    /// `gaps[k] / gaps[k − 1]`, where defined.
    pub ratios: Vec<f64>,
    pub iterations: usize,
    pub t_star: f64,
    /// `κ(T) T` at the requested horizon.
    pub contraction_factor: f64,
    pub warnings: Vec<String>,
}

struct Curve {
    rho: Vec<MassVector>,
    eta: Vec<WeightMatrix>,
}

/// One application of the solution maps with cumulative trapezoidal
/// quadrature on `times`.
fn apply_maps(spec: &SystemSpec, times: &[f64], curve: &Curve) -> Result<Curve> {
    let k = times.len();
    let mut d_rho = Vec::with_capacity(k);
    let mut d_eta = Vec::with_capacity(k);
    for ((&t, r), e) in times.iter().zip(&curve.rho).zip(&curve.eta) {
        let s = eval_stage(spec, t, r, e)?;
        d_eta.push(eta_rate(&spec.regime, s.omega.as_ref(), e));
        d_rho.push(s.rho_rate);
    }
    let n = spec.n();
    let mut rho = Vec::with_capacity(k);
    let mut eta = Vec::with_capacity(k);
    rho.push(curve.rho[0].clone());
    eta.push(curve.eta[0].clone());
    for j in 1..k {
        let h = 0.5 * (times[j] - times[j - 1]);
        let prev_r = &rho[j - 1];
        let r: Vec<f64> = (0..n)
            .map(|i| prev_r.0[i] + h * (d_rho[j - 1][i] + d_rho[j][i]))
            .collect();
        let prev_e: &WeightMatrix = &eta[j - 1];
        let v = (0..n * n)
            .map(|p| {
                prev_e.as_slice()[p] + h * (d_eta[j - 1].as_slice()[p] + d_eta[j].as_slice()[p])
            })
            .collect();
        rho.push(MassVector(r));
        eta.push(EdgeMatrix::from_row_major(n, v)?);
    }
    Ok(Curve { rho, eta })
}

fn gap(a: &Curve, b: &Curve) -> f64 {
    a.rho
        .iter()
        .zip(&b.rho)
        .zip(a.eta.iter().zip(&b.eta))
        .map(|((ra, rb), (ea, eb))| tv_distance(&ra.0, &rb.0) + ea.sup_distance(eb))
        .fold(0.0, f64::max)
}

/// Fixed-point iteration of the integral solution maps for the coupled
/// system, starting from the constant curve at `(ρ₀, η₀)`.
///
/// Stops at the first iterate whose `d_∞` distance to its predecessor is
/// below `tol`. A horizon beyond `T*` is attempted anyway, with a warning.
pub fn picard_solve(
    spec: &SystemSpec,
    rho0: &MassVector,
    eta0: &WeightMatrix,
    cfg: &PicardConfig,
) -> Result<(Trajectory, PicardLog)> {
    spec.validate()?;
    cfg.validate()?;
    if spec.regime != Regime::Coupled {
        return Err(Error::Validation(
            "Picard iteration is implemented for the coupled regime only".into(),
        ));
    }
    spec.check_initial(rho0, eta0)?;

    let report = contraction_report(&ConstantSet::from_spec(spec, eta0), spec.horizon)?;
    let mut log = PicardLog {
        t_star: report.t_star,
        contraction_factor: report.kappa * spec.horizon,
        ..PicardLog::default()
    };
    if !report.within_window {
        log.warnings.push(format!(
            "horizon T = {} is not below T* = {}; contraction is not guaranteed",
            spec.horizon, report.t_star
        ));
    }

    let k = cfg.grid_points - 1;
    let times: Vec<f64> = (0..=k)
        .map(|j| spec.horizon * j as f64 / k as f64)
        .collect();
    let mut curve = Curve {
        rho: vec![rho0.clone(); k + 1],
        eta: vec![eta0.clone(); k + 1],
    };
    for it in 1..=cfg.max_iters {
        let next = apply_maps(spec, &times, &curve)?;
        let g = gap(&next, &curve);
        if let Some(&prev) = log.gaps.last() {
            if prev > 0.0 {
                log.ratios.push(g / prev);
            }
        }
        log.gaps.push(g);
        log.iterations = it;
        curve = next;
        if !g.is_finite() {
            break;
        }
        if g < cfg.tol {
            let mut traj = Trajectory::default();
            for ((t, r), e) in times.into_iter().zip(curve.rho).zip(curve.eta) {
                traj.push(t, r, e);
            }
            traj.warnings = log.warnings.clone();
            return Ok((traj, log));
        }
    }
    Err(Error::NonConvergence { gaps: log.gaps })
}
