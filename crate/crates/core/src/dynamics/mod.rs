//! Time integration of the coupled mass/weight system in its five regimes,
//! and the Picard iteration of the integral solution maps.

mod exact;
mod integrate;
mod picard;

pub use exact::{eta_exact, eta_exact_all, eta_nonnegativity_gate};
pub use integrate::{
    eta_sup_envelope, integrate, tv_envelope, EtaUpdate, IntegratorConfig, Scheme,
};
pub use picard::{picard_solve, PicardConfig, PicardLog};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{
    eval_omega, eval_velocity, OmegaConstants, OmegaFunctional, VelocityConstants, VelocityField,
};
use crate::flux::{assemble_unchecked, FluxInterpolation, ANTISYMMETRY_TOL};
use crate::graph::{nonlocal_divergence, EdgeMatrix, MassVector, VertexSet, WeightMatrix};

/// How the weights evolve relative to the mass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Regime {
    /// `∂_t η = ω[ρ] − η`
    Coupled,
    /// `∂_t η = ε (ω[ρ] − η)`
    SlowGraph { epsilon: f64 },
    /// `ε ∂_t η = ω[ρ] − η`
    FastGraph { epsilon: f64 },
    /// `η ≡ η₀`
    StaticGraph,
    /// `η_t = ω_t[ρ_t]`, substituted directly into the flux.
    QuasiStatic,
}

impl Regime {
    /// Relaxation rate `1/τ` of the weight equation, if the weights evolve.
    pub fn relaxation_rate(&self) -> Option<f64> {
        match *self {
            Regime::Coupled => Some(1.0),
            Regime::SlowGraph { epsilon } => Some(epsilon),
            Regime::FastGraph { epsilon } => Some(1.0 / epsilon),
            Regime::StaticGraph | Regime::QuasiStatic => None,
        }
    }

    fn needs_omega(&self) -> bool {
        !matches!(self, Regime::StaticGraph)
    }
}

/// Everything that defines one instance of the system, apart from the
/// initial data.
#[derive(Clone, Debug)]
pub struct SystemSpec {
    pub graph: VertexSet,
    pub interp: FluxInterpolation,
    pub velocity: VelocityField,
    pub omega: OmegaFunctional,
    pub regime: Regime,
    pub horizon: f64,
    pub mass_bound: f64,
}

impl SystemSpec {
    pub fn new(
        graph: VertexSet,
        interp: FluxInterpolation,
        velocity: VelocityField,
        omega: OmegaFunctional,
        regime: Regime,
        horizon: f64,
        mass_bound: f64,
    ) -> Result<Self> {
        let spec = Self {
            graph,
            interp,
            velocity,
            omega,
            regime,
            horizon,
            mass_bound,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Validation(format!(
                "horizon T = {} must be positive",
                self.horizon
            )));
        }
        if !(self.mass_bound > 0.0 && self.mass_bound.is_finite()) {
            return Err(Error::Validation(format!(
                "mass bound M = {} must be positive",
                self.mass_bound
            )));
        }
        match self.regime {
            Regime::SlowGraph { epsilon } | Regime::FastGraph { epsilon }
                if !(epsilon > 0.0 && epsilon.is_finite()) =>
            {
                Err(Error::Validation(format!(
                    "time-scale parameter ε = {epsilon} must be positive"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn with_regime(&self, regime: Regime) -> Self {
        Self {
            regime,
            ..self.clone()
        }
    }

    pub fn n(&self) -> usize {
        self.graph.len()
    }

    /// `max(declared, closed form)` for the velocity constants.
    pub fn velocity_constants(&self) -> VelocityConstants {
        let c = self
            .velocity
            .closed_form_constants(&self.graph, self.mass_bound);
        match self.velocity.declared {
            Some(d) => VelocityConstants {
                c_v: c.c_v.max(d.c_v),
                l_v: c.l_v.max(d.l_v),
            },
            None => c,
        }
    }

    /// `max(declared, closed form)` for the weight-target constants.
    pub fn omega_constants(&self) -> OmegaConstants {
        let c = self.omega.closed_form_constants(self.mass_bound);
        match self.omega.declared {
            Some(d) => OmegaConstants {
                c_omega: c.c_omega.max(d.c_omega),
                l_omega: c.l_omega.max(d.l_omega),
                c_omega_dot: c.c_omega_dot.max(d.c_omega_dot),
            },
            None => c,
        }
    }

    fn check_initial(&self, rho0: &MassVector, eta0: &WeightMatrix) -> Result<()> {
        let n = self.n();
        if rho0.len() != n {
            return Err(Error::Dimension {
                context: "initial mass",
                expected: n,
                found: rho0.len(),
            });
        }
        if eta0.n() != n {
            return Err(Error::Dimension {
                context: "initial weights",
                expected: n,
                found: eta0.n(),
            });
        }
        if rho0.as_slice().iter().any(|r| !r.is_finite()) || !eta0.is_finite() {
            return Err(Error::Validation("initial data must be finite".into()));
        }
        let tv = rho0.tv_norm();
        if tv > self.mass_bound * (1.0 + 1e-12) {
            return Err(Error::Validation(format!(
                "initial total variation {tv} exceeds the mass bound M = {}",
                self.mass_bound
            )));
        }
        Ok(())
    }
}

/// Velocity, weight target and effective weights at one state.
struct StageEval {
    rho_rate: Vec<f64>,
    omega: Option<WeightMatrix>,
}

fn eval_stage(
    spec: &SystemSpec,
    t: f64,
    rho: &MassVector,
    eta: &WeightMatrix,
) -> Result<StageEval> {
    let v = eval_velocity(&spec.velocity, t, &spec.graph, rho)?;
    // Non-finite stages are left to the caller's divergence check.
    if v.is_finite() {
        v.check_antisymmetric(ANTISYMMETRY_TOL)?;
    }
    let omega = if spec.regime.needs_omega() {
        Some(eval_omega(&spec.omega, t, &spec.graph, rho)?)
    } else {
        None
    };
    let eta_eff = match (&spec.regime, &omega) {
        (Regime::QuasiStatic, Some(w)) => w,
        _ => eta,
    };
    let f = assemble_unchecked(&spec.graph, eta_eff, rho, &v, &spec.interp);
    let mut rho_rate = nonlocal_divergence(&f);
    rho_rate.iter_mut().for_each(|d| *d = -*d);
    Ok(StageEval { rho_rate, omega })
}

fn eta_rate(regime: &Regime, omega: Option<&WeightMatrix>, eta: &WeightMatrix) -> WeightMatrix {
    let n = eta.n();
    match (regime.relaxation_rate(), omega) {
        (Some(rate), Some(w)) => {
            EdgeMatrix::from_fn(n, |i, j| rate * (w.get(i, j) - eta.get(i, j)))
        }
        _ => EdgeMatrix::zeros(n),
    }
}

/// Right-hand side `(∂_t ρ, ∂_t η)` of the system at `(t, ρ, η)`.
///
/// The mass part is `−∇̄·F^Φ[μ, η_eff; ρ, V_t[ρ]]`, with `η_eff = ω_t[ρ]` in
/// the quasi-static regime and `η` otherwise.
pub fn rhs(
    spec: &SystemSpec,
    t: f64,
    rho: &MassVector,
    eta: &WeightMatrix,
) -> Result<(Vec<f64>, WeightMatrix)> {
    let n = spec.n();
    if rho.len() != n || eta.n() != n {
        return Err(Error::Dimension {
            context: "rhs state",
            expected: n,
            found: if rho.len() != n { rho.len() } else { eta.n() },
        });
    }
    let stage = eval_stage(spec, t, rho, eta)?;
    let d_eta = eta_rate(&spec.regime, stage.omega.as_ref(), eta);
    Ok((stage.rho_rate, d_eta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::PairKernel;

    fn two_vertex_spec(regime: Regime) -> SystemSpec {
        let g = VertexSet::on_line(&[0.0, 1.0], vec![1.0, 1.0]).unwrap();
        let v = EdgeMatrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let field =
            VelocityField::tabulated(crate::fields::Table::new(vec![0.0], vec![v]).unwrap());
        SystemSpec::new(
            g,
            FluxInterpolation::upwind(),
            field,
            OmegaFunctional::constant(EdgeMatrix::filled(2, 0.5)),
            regime,
            1.0,
            2.0,
        )
        .unwrap()
    }

    #[test]
    fn static_regime_freezes_weights() {
        let spec = two_vertex_spec(Regime::StaticGraph);
        let (_, d_eta) = rhs(
            &spec,
            0.0,
            &MassVector(vec![1.0, 0.0]),
            &EdgeMatrix::filled(2, 3.0),
        )
        .unwrap();
        assert!(d_eta.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn coupled_equilibrium() {
        let spec = two_vertex_spec(Regime::Coupled);
        let (_, d_eta) = rhs(
            &spec,
            0.0,
            &MassVector(vec![1.0, 0.0]),
            &EdgeMatrix::filled(2, 0.5),
        )
        .unwrap();
        assert!(d_eta.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn two_vertex_mass_rate() {
        let spec = two_vertex_spec(Regime::Coupled);
        let (d_rho, _) = rhs(
            &spec,
            0.0,
            &MassVector(vec![1.0, 0.0]),
            &EdgeMatrix::filled(2, 1.0),
        )
        .unwrap();
        assert_eq!(d_rho, vec![-1.0, 1.0]);
    }

    #[test]
    fn time_scale_factors() {
        let eta = EdgeMatrix::filled(2, 1.5);
        let rho = MassVector(vec![1.0, 0.0]);
        let base = rhs(&two_vertex_spec(Regime::Coupled), 0.0, &rho, &eta)
            .unwrap()
            .1;
        let slow = rhs(
            &two_vertex_spec(Regime::SlowGraph { epsilon: 0.1 }),
            0.0,
            &rho,
            &eta,
        )
        .unwrap()
        .1;
        let fast = rhs(
            &two_vertex_spec(Regime::FastGraph { epsilon: 0.1 }),
            0.0,
            &rho,
            &eta,
        )
        .unwrap()
        .1;
        assert_eq!(base.get(0, 1), -1.0);
        assert!((slow.get(0, 1) + 0.1).abs() < 1e-15);
        assert!((fast.get(0, 1) + 10.0).abs() < 1e-12);
    }

    #[test]
    fn quasi_static_uses_omega_in_flux() {
        let spec = two_vertex_spec(Regime::QuasiStatic);
        let (d_rho, d_eta) = rhs(
            &spec,
            0.0,
            &MassVector(vec![1.0, 0.0]),
            &EdgeMatrix::filled(2, 100.0),
        )
        .unwrap();
        assert_eq!(d_rho, vec![-0.5, 0.5]);
        assert!(d_eta.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn epsilon_must_be_positive() {
        let g = VertexSet::on_line(&[0.0], vec![1.0]).unwrap();
        let err = SystemSpec::new(
            g,
            FluxInterpolation::upwind(),
            VelocityField::interaction(PairKernel::Gaussian { sigma: 1.0 }, 1.0),
            OmegaFunctional::constant(EdgeMatrix::zeros(1)),
            Regime::FastGraph { epsilon: 0.0 },
            1.0,
            1.0,
        );
        assert!(err.is_err());
    }
}
