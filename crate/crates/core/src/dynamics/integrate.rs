use serde::{Deserialize, Serialize};

use super::{eta_rate, eval_stage, Regime, SystemSpec};
use crate::error::{Error, Result};
use crate::fields::eval_omega;
use crate::graph::{EdgeMatrix, MassVector, Trajectory, WeightMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ExplicitEuler,
    Rk4,
}

/// How the weight equation is advanced within a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EtaUpdate {
    /// The weights are part of the state advanced by the scheme.
    InScheme,
    /// Exact relaxation towards a target frozen at the step midpoint:
    /// `η ← e^{−h/τ} η + (1 − e^{−h/τ}) ω̂`. Unconditionally stable in `ε`.
    ExponentialEuler,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub eta_update: EtaUpdate,
    /// Record every `audit_every`-th step. The final step is always kept.
    pub audit_every: usize,
}

impl IntegratorConfig {
    pub fn new(scheme: Scheme, dt: f64) -> Self {
        Self {
            scheme,
            dt,
            eta_update: EtaUpdate::InScheme,
            audit_every: 1,
        }
    }

    pub fn rk4(dt: f64) -> Self {
        Self::new(Scheme::Rk4, dt)
    }

    /// RK4, with the exponential weight update whenever the fast regime's
    /// `ε` is below `dt`.
    pub fn for_regime(regime: &Regime, dt: f64) -> Self {
        let mut cfg = Self::rk4(dt);
        if matches!(regime, Regime::FastGraph { epsilon } if *epsilon < dt) {
            cfg.eta_update = EtaUpdate::ExponentialEuler;
        }
        cfg
    }

    pub fn with_eta_update(mut self, u: EtaUpdate) -> Self {
        self.eta_update = u;
        self
    }

    pub fn with_audit_every(mut self, k: usize) -> Self {
        self.audit_every = k;
        self
    }

    /// Number of steps and the step actually used, `T / steps ≤ dt`.
    pub fn steps(&self, horizon: f64) -> (usize, f64) {
        let steps = ((horizon / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (steps, horizon / steps as f64)
    }

    fn validate(&self, spec: &SystemSpec) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Validation(format!(
                "dt = {} must be positive",
                self.dt
            )));
        }
        if self.dt > spec.horizon {
            return Err(Error::Validation(format!(
                "dt = {} exceeds the horizon T = {}",
                self.dt, spec.horizon
            )));
        }
        if self.audit_every == 0 {
            return Err(Error::Validation("sample stride must be at least 1".into()));
        }
        if let Regime::FastGraph { epsilon } = spec.regime {
            if epsilon < self.dt && self.eta_update == EtaUpdate::InScheme {
                return Err(Error::Validation(format!(
                    "fast regime with ε = {epsilon} < dt = {} needs the exponential weight update",
                    self.dt
                )));
            }
        }
        Ok(())
    }
}

fn axpy(y: &[f64], h: f64, k: &[f64]) -> MassVector {
    MassVector(y.iter().zip(k).map(|(a, b)| a + h * b).collect())
}

fn axpy_m(y: &EdgeMatrix, h: f64, k: &EdgeMatrix) -> EdgeMatrix {
    let v = y
        .as_slice()
        .iter()
        .zip(k.as_slice())
        .map(|(a, b)| a + h * b)
        .collect();
    EdgeMatrix::from_row_major(y.n(), v).expect("same shape")
}

fn combine(y: &[f64], h: f64, k: [&[f64]; 4]) -> Vec<f64> {
    (0..y.len())
        .map(|i| y[i] + h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]))
        .collect()
}

fn step_in_scheme(
    spec: &SystemSpec,
    scheme: Scheme,
    t: f64,
    h: f64,
    rho: &MassVector,
    eta: &WeightMatrix,
) -> Result<(MassVector, WeightMatrix)> {
    let f = |t: f64, r: &MassVector, e: &WeightMatrix| -> Result<(Vec<f64>, WeightMatrix)> {
        let s = eval_stage(spec, t, r, e)?;
        let de = eta_rate(&spec.regime, s.omega.as_ref(), e);
        Ok((s.rho_rate, de))
    };
    let (k1r, k1e) = f(t, rho, eta)?;
    match scheme {
        Scheme::ExplicitEuler => Ok((axpy(&rho.0, h, &k1r), axpy_m(eta, h, &k1e))),
        Scheme::Rk4 => {
            let (k2r, k2e) = f(
                t + h / 2.0,
                &axpy(&rho.0, h / 2.0, &k1r),
                &axpy_m(eta, h / 2.0, &k1e),
            )?;
            let (k3r, k3e) = f(
                t + h / 2.0,
                &axpy(&rho.0, h / 2.0, &k2r),
                &axpy_m(eta, h / 2.0, &k2e),
            )?;
            let (k4r, k4e) = f(t + h, &axpy(&rho.0, h, &k3r), &axpy_m(eta, h, &k3e))?;
            let r = combine(&rho.0, h, [&k1r, &k2r, &k3r, &k4r]);
            let e = combine(
                eta.as_slice(),
                h,
                [
                    k1e.as_slice(),
                    k2e.as_slice(),
                    k3e.as_slice(),
                    k4e.as_slice(),
                ],
            );
            Ok((MassVector(r), EdgeMatrix::from_row_major(eta.n(), e)?))
        }
    }
}

fn step_exponential(
    spec: &SystemSpec,
    scheme: Scheme,
    rate: f64,
    t: f64,
    h: f64,
    rho: &MassVector,
    eta: &WeightMatrix,
) -> Result<(MassVector, WeightMatrix)> {
    let k1 = eval_stage(spec, t, rho, eta)?.rho_rate;
    let mid = axpy(&rho.0, h / 2.0, &k1);
    let target = eval_omega(&spec.omega, t + h / 2.0, &spec.graph, &mid)?;
    let relaxed = |s: f64| {
        let decay = (-rate * s).exp();
        let v = eta
            .as_slice()
            .iter()
            .zip(target.as_slice())
            .map(|(e, w)| decay * e + (1.0 - decay) * w)
            .collect();
        EdgeMatrix::from_row_major(eta.n(), v).expect("same shape")
    };
    let eta_half = relaxed(h / 2.0);
    let eta_end = relaxed(h);
    let rho_next = match scheme {
        Scheme::ExplicitEuler => axpy(&rho.0, h, &k1),
        Scheme::Rk4 => {
            let k2 = eval_stage(spec, t + h / 2.0, &mid, &eta_half)?.rho_rate;
            let k3 =
                eval_stage(spec, t + h / 2.0, &axpy(&rho.0, h / 2.0, &k2), &eta_half)?.rho_rate;
            let k4 = eval_stage(spec, t + h, &axpy(&rho.0, h, &k3), &eta_end)?.rho_rate;
            MassVector(combine(&rho.0, h, [&k1, &k2, &k3, &k4]))
        }
    };
    Ok((rho_next, eta_end))
}

/// A-priori envelope for `TV(ρ_t)`: `TV(ρ₀) exp(2 L_Φ ‖η‖_∞ C_V t)`.
pub fn tv_envelope(spec: &SystemSpec, tv0: f64, eta_sup: f64, t: f64) -> f64 {
    tv0 * (2.0 * spec.interp.lipschitz * spec.velocity_constants().c_v * eta_sup * t).exp()
}

/// A-priori envelope for `‖η_t‖_∞` in the spec's regime.
pub fn eta_sup_envelope(spec: &SystemSpec, eta0_sup: f64, t: f64) -> f64 {
    let c_omega = spec.omega_constants().c_omega;
    match spec.regime {
        Regime::Coupled => (eta0_sup + c_omega * t) * t.exp(),
        Regime::SlowGraph { .. } | Regime::FastGraph { .. } => eta0_sup.max(c_omega),
        Regime::StaticGraph => eta0_sup,
        Regime::QuasiStatic => c_omega,
    }
}

/// Running a-priori checks; each kind of excursion is reported once.
struct Auditor<'a> {
    spec: &'a SystemSpec,
    tv0: f64,
    eta0_sup: f64,
    eta_running: f64,
    warned: [bool; 3],
}

impl<'a> Auditor<'a> {
    fn new(spec: &'a SystemSpec, rho0: &MassVector, eta0: &WeightMatrix) -> Self {
        Self {
            spec,
            tv0: rho0.tv_norm(),
            eta0_sup: eta0.sup_norm(),
            eta_running: eta0.sup_norm(),
            warned: [false; 3],
        }
    }

    fn check(&mut self, t: f64, rho: &MassVector, eta_sup: f64, out: &mut Vec<String>) {
        self.eta_running = self.eta_running.max(eta_sup);
        let tv = rho.tv_norm();
        let m = self.spec.mass_bound;
        if !self.warned[0] && tv > 1.1 * m {
            self.warned[0] = true;
            out.push(format!(
                "t = {t}: total variation {tv} exceeds 1.1 M = {}",
                1.1 * m
            ));
        }
        let tv_bound = tv_envelope(self.spec, self.tv0, self.eta_running, t);
        if !self.warned[1] && tv > 1.1 * tv_bound + 1e-12 {
            self.warned[1] = true;
            out.push(format!("t = {t}: total variation {tv} exceeds its a-priori bound {tv_bound} by more than 10%"));
        }
        let eb = eta_sup_envelope(self.spec, self.eta0_sup, t);
        if !self.warned[2] && eta_sup > eb * (1.0 + 1e-9) + 1e-12 {
            self.warned[2] = true;
            out.push(format!(
                "t = {t}: ‖η‖_∞ = {eta_sup} exceeds its a-priori bound {eb}"
            ));
        }
    }
}

/// Integrates the system from `(ρ₀, η₀)` over `[0, T]`.
///
/// A non-finite state aborts with [`Error::Divergence`], which carries the
/// samples recorded so far.
pub fn integrate(
    spec: &SystemSpec,
    rho0: &MassVector,
    eta0: &WeightMatrix,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    spec.validate()?;
    spec.check_initial(rho0, eta0)?;
    cfg.validate(spec)?;

    let (steps, h) = cfg.steps(spec.horizon);
    let mut traj = Trajectory::default();
    let mut audit = Auditor::new(spec, rho0, eta0);

    let cv = spec.velocity_constants().c_v;
    let c_omega = spec.omega_constants().c_omega;
    let eta_scale = match spec.regime {
        Regime::StaticGraph => eta0.sup_norm(),
        Regime::QuasiStatic => c_omega,
        _ => eta0.sup_norm().max(c_omega),
    };
    let cfl = h * spec.interp.lipschitz * eta_scale * cv;
    if cfl > 0.5 {
        traj.warnings.push(format!(
            "step-size guard: dt·L_Φ·‖η‖·C_V = {cfl} > 0.5; results may be inaccurate"
        ));
    }

    let record = |traj: &mut Trajectory,
                  audit: &mut Auditor,
                  t: f64,
                  rho: &MassVector,
                  eta: &WeightMatrix|
     -> Result<()> {
        let shown = match spec.regime {
            Regime::QuasiStatic => eval_omega(&spec.omega, t, &spec.graph, rho)?,
            _ => eta.clone(),
        };
        audit.check(t, rho, shown.sup_norm(), &mut traj.warnings);
        traj.push(t, rho.clone(), shown);
        Ok(())
    };

    let mut rho = rho0.clone();
    let mut eta = eta0.clone();
    record(&mut traj, &mut audit, 0.0, &rho, &eta)?;

    let exp_rate = match cfg.eta_update {
        EtaUpdate::ExponentialEuler => spec.regime.relaxation_rate(),
        EtaUpdate::InScheme => None,
    };
    for k in 1..=steps {
        let t = (k - 1) as f64 * h;
        let (r, e) = match exp_rate {
            Some(rate) => step_exponential(spec, cfg.scheme, rate, t, h, &rho, &eta)?,
            None => step_in_scheme(spec, cfg.scheme, t, h, &rho, &eta)?,
        };
        let t_new = k as f64 * h;
        if r.as_slice().iter().any(|x| !x.is_finite()) || !e.is_finite() {
            return Err(Error::Divergence {
                step: k,
                time: t_new,
                partial: Box::new(traj),
            });
        }
        rho = r;
        eta = e;
        if k % cfg.audit_every == 0 || k == steps {
            record(&mut traj, &mut audit, t_new, &rho, &eta)?;
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{OmegaFunctional, Table, VelocityField};
    use crate::flux::FluxInterpolation;
    use crate::graph::VertexSet;

    fn transfer_spec(regime: Regime, horizon: f64) -> SystemSpec {
        let g = VertexSet::on_line(&[0.0, 1.0], vec![1.0, 1.0]).unwrap();
        let v = EdgeMatrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        SystemSpec::new(
            g,
            FluxInterpolation::upwind(),
            VelocityField::tabulated(Table::new(vec![0.0], vec![v]).unwrap()),
            OmegaFunctional::constant(EdgeMatrix::filled(2, 1.0)),
            regime,
            horizon,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn two_vertex_transfer_is_exponential() {
        // ρ₀' = −ρ₀ with η ≡ 1: ρ₀(t) = e^{−t}.
        let spec = transfer_spec(Regime::StaticGraph, 1.0);
        let traj = integrate(
            &spec,
            &MassVector(vec![1.0, 0.0]),
            &EdgeMatrix::filled(2, 1.0),
            &IntegratorConfig::rk4(0.01),
        )
        .unwrap();
        let r = traj.final_rho().unwrap();
        assert!((r.0[0] - (-1.0f64).exp()).abs() < 1e-9);
        assert!((r.total() - 1.0).abs() < 1e-14);
        assert_eq!(traj.len(), 101);
    }

    #[test]
    fn sampling_stride_keeps_last() {
        let spec = transfer_spec(Regime::Coupled, 1.0);
        let cfg = IntegratorConfig::rk4(0.03).with_audit_every(10);
        let traj = integrate(
            &spec,
            &MassVector(vec![1.0, 0.0]),
            &EdgeMatrix::filled(2, 1.0),
            &cfg,
        )
        .unwrap();
        let (steps, _) = cfg.steps(1.0);
        assert_eq!(steps, 34);
        assert_eq!(traj.len(), 5);
        assert_eq!(*traj.times.last().unwrap(), 1.0);
    }

    #[test]
    fn exact_step_count_for_divisible_horizon() {
        assert_eq!(IntegratorConfig::rk4(0.1).steps(1.0).0, 10);
        assert_eq!(IntegratorConfig::rk4(1e-3).steps(1.0).0, 1000);
    }

    #[test]
    fn fast_regime_guard() {
        let spec = transfer_spec(Regime::FastGraph { epsilon: 1e-4 }, 1.0);
        let rho = MassVector(vec![1.0, 0.0]);
        let eta = EdgeMatrix::filled(2, 0.0);
        let err = integrate(&spec, &rho, &eta, &IntegratorConfig::rk4(0.01));
        assert!(matches!(err, Err(Error::Validation(_))));
        let cfg = IntegratorConfig::for_regime(&spec.regime, 0.01);
        let traj = integrate(&spec, &rho, &eta, &cfg).unwrap();
        let e = traj.final_eta().unwrap();
        assert!((e.get(0, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn excessive_initial_mass_rejected() {
        let spec = transfer_spec(Regime::Coupled, 1.0);
        let err = integrate(
            &spec,
            &MassVector(vec![1.0, 1.0]),
            &EdgeMatrix::filled(2, 1.0),
            &IntegratorConfig::rk4(0.1),
        );
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn divergence_keeps_partial_output() {
        let g = VertexSet::on_line(&[0.0, 1.0], vec![1.0, 1.0]).unwrap();
        let v = EdgeMatrix::from_rows(&[vec![0.0, 1e200], vec![-1e200, 0.0]]).unwrap();
        let spec = SystemSpec::new(
            g,
            FluxInterpolation::upwind(),
            VelocityField::tabulated(Table::new(vec![0.0], vec![v]).unwrap()),
            OmegaFunctional::constant(EdgeMatrix::filled(2, 1e200)),
            Regime::Coupled,
            1.0,
            1.0,
        )
        .unwrap();
        let err = integrate(
            &spec,
            &MassVector(vec![1.0, 0.0]),
            &EdgeMatrix::filled(2, 1e200),
            &IntegratorConfig::rk4(0.1),
        );
        match err {
            Err(Error::Divergence { step, partial, .. }) => {
                assert!(step >= 1);
                assert_eq!(partial.len(), step);
                assert!(!partial.warnings.is_empty());
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
