//! Contraction constants of the fixed-point argument, convergence studies
//! for the three limits, and log-log rate fitting.

mod graph_limit;
mod studies;

pub use graph_limit::{
    graph_limit_study, ContinuumProfile, GraphLimitConfig, ObservablePanel, VertexRecipe,
};
pub use studies::{
    fast_limit_bounds, fast_limit_study, slow_limit_bounds, slow_limit_study, ConvergenceStudy,
    RungResult, StudyKind, StudyOptions,
};

use serde::Serialize;

use crate::dynamics::SystemSpec;
use crate::error::{Error, Result};
use crate::fields::{estimate_omega_constants, estimate_velocity_constants};
use crate::graph::WeightMatrix;

/// The structural constants that enter the a-priori estimates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ConstantSet {
    pub l_phi: f64,
    pub c_v: f64,
    pub l_v: f64,
    pub mass_bound: f64,
    pub c_omega: f64,
    pub l_omega: f64,
    pub eta0_sup: f64,
    /// `C̃_ω`; only the fast limit uses it.
    pub c_omega_dot: f64,
}

impl ConstantSet {
    /// Closed-form constants, raised to any declared values.
    pub fn from_spec(spec: &SystemSpec, eta0: &WeightMatrix) -> Self {
        let v = spec.velocity_constants();
        let w = spec.omega_constants();
        Self {
            l_phi: spec.interp.lipschitz,
            c_v: v.c_v,
            l_v: v.l_v,
            mass_bound: spec.mass_bound,
            c_omega: w.c_omega,
            l_omega: w.l_omega,
            eta0_sup: eta0.sup_norm(),
            c_omega_dot: w.c_omega_dot,
        }
    }

    /// [`ConstantSet::from_spec`], raised further to sampled estimates.
    pub fn conservative(
        spec: &SystemSpec,
        eta0: &WeightMatrix,
        probes: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut c = Self::from_spec(spec, eta0);
        let v = estimate_velocity_constants(
            &spec.velocity,
            &spec.graph,
            spec.horizon,
            probes,
            spec.mass_bound,
            seed,
        )?
        .working();
        let w = estimate_omega_constants(
            &spec.omega,
            &spec.graph,
            spec.horizon,
            probes,
            spec.mass_bound,
            seed,
        )?
        .working();
        c.c_v = c.c_v.max(v.c_v);
        c.l_v = c.l_v.max(v.l_v);
        c.c_omega = c.c_omega.max(w.c_omega);
        c.l_omega = c.l_omega.max(w.l_omega);
        c.c_omega_dot = c.c_omega_dot.max(w.c_omega_dot);
        Ok(c)
    }

    /// `max(‖η₀‖_∞, C_ω)`, a uniform bound on the weights whenever they relax
    /// towards `ω`.
    pub fn eta_bound(&self) -> f64 {
        self.eta0_sup.max(self.c_omega)
    }

    fn validate(&self) -> Result<()> {
        let named = [
            ("l_phi", self.l_phi),
            ("c_v", self.c_v),
            ("l_v", self.l_v),
            ("c_omega", self.c_omega),
            ("l_omega", self.l_omega),
            ("eta0_sup", self.eta0_sup),
        ];
        if let Some((name, v)) = named.iter().find(|(_, v)| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Validation(format!(
                "constant {name} = {v} must be finite and nonnegative"
            )));
        }
        if !(self.mass_bound > 0.0 && self.mass_bound.is_finite()) {
            return Err(Error::Validation(format!(
                "mass bound M = {} must be positive",
                self.mass_bound
            )));
        }
        Ok(())
    }

    fn transport(&self) -> f64 {
        2.0 * self.l_phi * (self.c_v + self.l_v * self.mass_bound)
    }

    /// `σ = L_ω`.
    pub fn sigma(&self) -> f64 {
        self.l_omega
    }

    /// `γ = 2 L_Φ (C_V + L_V M) ‖η₀‖_∞`.
    pub fn gamma(&self) -> f64 {
        self.transport() * self.eta0_sup
    }

    /// `χ = 2 L_Φ (C_V + L_V M) C_ω`.
    pub fn chi(&self) -> f64 {
        self.transport() * self.c_omega
    }

    /// `α(T) = σ + γ eᵀ + χ T eᵀ`.
    pub fn alpha(&self, t: f64) -> f64 {
        self.sigma() + (self.gamma() + self.chi() * t) * t.exp()
    }

    /// `β = 2 L_Φ C_V M + 1`.
    pub fn beta(&self) -> f64 {
        2.0 * self.l_phi * self.c_v * self.mass_bound + 1.0
    }

    pub fn kappa(&self, t: f64) -> f64 {
        self.alpha(t).max(self.beta())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionReport {
    pub constants: ConstantSet,
    pub horizon: f64,
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub chi: f64,
    pub t_star: f64,
    /// `κ(T*) T* − 1`.
    pub t_star_residual: f64,
    /// Which of `α`, `β` attains `κ` at `T*`.
    pub binding: &'static str,
    pub within_window: bool,
}

/// Evaluates `α, β, κ` at `horizon` and solves `κ(T*) T* = 1` by bisection.
pub fn contraction_report(c: &ConstantSet, horizon: f64) -> Result<ContractionReport> {
    c.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Validation(format!(
            "horizon T = {horizon} must be positive"
        )));
    }
    let f = |t: f64| c.kappa(t) * t - 1.0;
    let mut hi = 1.0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let t_star = if f(hi).abs() < f(lo).abs() { hi } else { lo };
    Ok(ContractionReport {
        constants: *c,
        horizon,
        alpha: c.alpha(horizon),
        beta: c.beta(),
        kappa: c.kappa(horizon),
        sigma: c.sigma(),
        gamma: c.gamma(),
        chi: c.chi(),
        t_star,
        t_star_residual: f(t_star),
        binding: if c.alpha(t_star) >= c.beta() {
            "alpha"
        } else {
            "beta"
        },
        within_window: horizon < t_star,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    /// Ladder indices that entered the fit.
    pub used: Vec<usize>,
    pub excluded: Vec<usize>,
    pub note: Option<String>,
}

/// Least-squares line through `(log x, log err)`. Entries with a zero or
/// non-finite error are left out and listed in `excluded`.
pub fn fit_rate(ladder: &[f64], errors: &[f64]) -> Result<RateFit> {
    if ladder.len() != errors.len() {
        return Err(Error::Dimension {
            context: "rate fit",
            expected: ladder.len(),
            found: errors.len(),
        });
    }
    let (used, excluded): (Vec<usize>, Vec<usize>) = (0..ladder.len()).partition(|&k| {
        ladder[k] > 0.0 && ladder[k].is_finite() && errors[k] > 0.0 && errors[k].is_finite()
    });
    if used.len() < 3 {
        return Err(Error::InsufficientData { usable: used.len() });
    }
    let xs: Vec<f64> = used.iter().map(|&k| ladder[k].ln()).collect();
    let ys: Vec<f64> = used.iter().map(|&k| errors[k].ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Validation(
            "rate fit needs at least two distinct ladder values".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    let note = (!excluded.is_empty()).then(|| {
        format!(
            "excluded ladder entries {:?} (zero or non-finite error / parameter)",
            excluded.iter().map(|&k| ladder[k]).collect::<Vec<_>>()
        )
    });
    Ok(RateFit {
        slope,
        intercept,
        residual,
        used,
        excluded,
        note,
    })
}
