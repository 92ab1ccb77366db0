//! Declarative scenario descriptions and the built-in presets.
//!
//! A [`ScenarioConfig`] names every ingredient by value or by preset string,
//! so it round-trips through any serde format. [`ScenarioConfig::build`]
//! turns it into a [`SystemSpec`] plus initial data and solver settings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    ConstantSet, ContinuumProfile, GraphLimitConfig, ObservablePanel, VertexRecipe,
};
use crate::dynamics::{EtaUpdate, IntegratorConfig, PicardConfig, Regime, Scheme, SystemSpec};
use crate::error::{Error, Result};
use crate::fields::{
    eval_omega, parse_call, Modulation, OmegaFunctional, PairKernel, VelocityField,
};
use crate::flux::{FluxInterpolation, InterpolationKind};
use crate::graph::{EdgeMatrix, MassVector, VertexSet, WeightMatrix};

fn invalid(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Validation(format!("{field}: {msg}"))
}

fn one() -> usize {
    1
}

fn unit() -> String {
    "unit".into()
}

fn default_total_mass() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    /// Cell midpoints of a tensor grid on `[0, 1]^d`.
    UniformGrid,
    /// Halton points in `[0, 1]^d`.
    Halton,
    /// Uniform random points in `[0, 1]^d`, drawn from the scenario seed.
    Random,
    /// `positions` and `masses` given verbatim.
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub kind: GraphKind,
    #[serde(default)]
    pub n: usize,
    #[serde(default = "one")]
    pub dim: usize,
    /// Extra vertices with zero base mass, each placed a quarter cell from
    /// one of the first vertices.
    #[serde(default)]
    pub ghosts: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub positions: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub masses: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VelocityConfig {
    Zero,
    /// `v_ij = −s g(t) ((K∗ρ)(x_j) − (K∗ρ)(x_i))`
    Interaction {
        kernel: String,
        strength: f64,
        #[serde(default = "unit")]
        modulation: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OmegaConfig {
    /// `ω_ij = s h(t) Σ_k k(x_i, x_k) k(x_j, x_k) ρ_k`
    Convolution {
        kernel: String,
        scale: f64,
        #[serde(default = "unit")]
        modulation: String,
    },
    /// `ω_ij ≡ value`
    Constant { value: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxConfig {
    pub interpolation: InterpolationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
}

impl Default for FluxConfig {
    fn default() -> Self {
        Self {
            interpolation: InterpolationKind::Upwind,
            lipschitz: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// A density profile (`constant(c)`, `bump(c, w, b)`, `cosine(a, f)`)
    /// multiplied by the base masses, or `random(lo, hi)` per vertex.
    /// Either way the result is scaled to `total_mass`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<String>,
    /// Explicit initial masses; used verbatim.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0_values: Option<Vec<f64>>,
    #[serde(default = "default_total_mass")]
    pub total_mass: f64,
    /// A kernel preset `η₀(x, y) = k(|x − y|)`, `random(lo, hi)` (symmetric),
    /// or `well-prepared` for `η₀ = ω₀[ρ₀]`.
    pub eta0: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    #[default]
    Integrate,
    Picard,
}

fn default_scheme() -> Scheme {
    Scheme::Rk4
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub dt: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    /// Defaults to the exponential update for a fast graph with `ε < dt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_update: Option<EtaUpdate>,
    #[serde(default = "one")]
    pub audit_every: usize,
    #[serde(default)]
    pub solver: Solver,
}

fn default_grid_points() -> usize {
    PicardConfig::default().grid_points
}
fn default_tol() -> f64 {
    PicardConfig::default().tol
}
fn default_max_iters() -> usize {
    PicardConfig::default().max_iters
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSection {
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

impl Default for PicardSection {
    fn default() -> Self {
        Self {
            grid_points: default_grid_points(),
            tol: default_tol(),
            max_iters: default_max_iters(),
        }
    }
}

/// Constants supplied by the user. In the fields they act as lower bounds on
/// the working constants; in a constants report they replace them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclaredConstants {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta0_sup: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_omega_dot: Option<f64>,
}

impl DeclaredConstants {
    pub fn apply(&self, c: &ConstantSet) -> ConstantSet {
        ConstantSet {
            l_phi: self.l_phi.unwrap_or(c.l_phi),
            c_v: self.c_v.unwrap_or(c.c_v),
            l_v: self.l_v.unwrap_or(c.l_v),
            mass_bound: self.mass_bound.unwrap_or(c.mass_bound),
            c_omega: self.c_omega.unwrap_or(c.c_omega),
            l_omega: self.l_omega.unwrap_or(c.l_omega),
            eta0_sup: self.eta0_sup.unwrap_or(c.eta0_sup),
            c_omega_dot: self.c_omega_dot.unwrap_or(c.c_omega_dot),
        }
    }
}

/// Acceptance gate on a fitted slope.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlopeGate {
    pub min: f64,
    pub max: f64,
    /// A failed required gate makes the study command fail.
    #[serde(default)]
    pub required: bool,
}

fn default_true() -> bool {
    true
}
fn default_probes() -> usize {
    64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    /// `ε` ladder for the slow- and fast-graph studies.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_true")]
    pub well_prepared: bool,
    /// Vertex counts for the graph-limit study.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ladder: Vec<usize>,
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default)]
    pub panel: ObservablePanel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_gate: Option<SlopeGate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub horizon: f64,
    pub mass_bound: f64,
    #[serde(default)]
    pub seed: u64,
    pub graph: GraphConfig,
    pub velocity: VelocityConfig,
    pub omega: OmegaConfig,
    #[serde(default)]
    pub flux: FluxConfig,
    pub regime: Regime,
    pub initial: InitialConfig,
    pub integrator: IntegratorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub picard: Option<PicardSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<DeclaredConstants>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudyConfig>,
}

/// A fully built scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub spec: SystemSpec,
    pub rho0: MassVector,
    pub eta0: WeightMatrix,
    pub integrator: IntegratorConfig,
    pub solver: Solver,
    pub picard: PicardConfig,
}

fn parse_random(s: &str) -> Option<(f64, f64)> {
    match parse_call(s) {
        Ok(("random", a)) if a.len() == 2 => Some((a[0], a[1])),
        _ => None,
    }
}

impl ScenarioConfig {
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }

    pub fn build_graph(&self) -> Result<VertexSet> {
        let g = &self.graph;
        if g.dim == 0 {
            return Err(invalid("graph.dim", "must be at least 1"));
        }
        let base = match g.kind {
            GraphKind::UniformGrid | GraphKind::Halton | GraphKind::Random if g.n == 0 => {
                return Err(invalid("graph.n", "must be at least 1"));
            }
            GraphKind::UniformGrid => VertexRecipe::UniformGrid.build(g.n, g.dim),
            GraphKind::Halton => VertexRecipe::Halton.build(g.n, g.dim),
            GraphKind::Random => {
                let mut rng = self.rng(1);
                let pos = (0..g.n)
                    .map(|_| (0..g.dim).map(|_| rng.gen::<f64>()).collect())
                    .collect();
                VertexSet::new(pos, vec![1.0 / g.n as f64; g.n])
            }
            GraphKind::Explicit => VertexSet::new(g.positions.clone(), g.masses.clone()),
        }
        .map_err(|e| invalid("graph", e))?;
        if g.ghosts == 0 {
            return Ok(base);
        }
        if g.ghosts > base.len() {
            return Err(invalid("graph.ghosts", "at most one ghost per vertex"));
        }
        let shift = 0.25 / base.len() as f64;
        let mut pos: Vec<Vec<f64>> = (0..base.len()).map(|i| base.position(i).to_vec()).collect();
        let mut masses = base.base_masses().to_vec();
        for k in 0..g.ghosts {
            pos.push(base.position(k).iter().map(|x| x + shift).collect());
            masses.push(0.0);
        }
        VertexSet::new(pos, masses).map_err(|e| invalid("graph.ghosts", e))
    }

    pub fn build_velocity(&self) -> Result<VelocityField> {
        Ok(match &self.velocity {
            VelocityConfig::Zero => VelocityField::zero(),
            VelocityConfig::Interaction {
                kernel,
                strength,
                modulation,
            } => {
                let k: PairKernel = kernel.parse().map_err(|e| invalid("velocity.kernel", e))?;
                let m: Modulation = modulation
                    .parse()
                    .map_err(|e| invalid("velocity.modulation", e))?;
                if !strength.is_finite() {
                    return Err(invalid("velocity.strength", "must be finite"));
                }
                VelocityField::interaction(k, *strength).with_modulation(m)
            }
        })
    }

    pub fn build_omega(&self, n: usize) -> Result<OmegaFunctional> {
        Ok(match &self.omega {
            OmegaConfig::Convolution {
                kernel,
                scale,
                modulation,
            } => {
                let k: PairKernel = kernel.parse().map_err(|e| invalid("omega.kernel", e))?;
                let m: Modulation = modulation
                    .parse()
                    .map_err(|e| invalid("omega.modulation", e))?;
                if !scale.is_finite() {
                    return Err(invalid("omega.scale", "must be finite"));
                }
                OmegaFunctional::convolution(k, *scale).with_modulation(m)
            }
            OmegaConfig::Constant { value } => {
                OmegaFunctional::constant(EdgeMatrix::filled(n, *value))
            }
        })
    }

    pub fn build_interp(&self) -> Result<FluxInterpolation> {
        let i = FluxInterpolation::new(self.flux.interpolation);
        match self.flux.lipschitz {
            Some(l) if !(l >= i.lipschitz) => Err(invalid(
                "flux.lipschitz",
                format!(
                    "declared {l} is below the interpolation's own constant {}",
                    i.lipschitz
                ),
            )),
            Some(l) => Ok(i.with_lipschitz(l)),
            None => Ok(i),
        }
    }

    fn build_rho0(&self, graph: &VertexSet) -> Result<MassVector> {
        let n = graph.len();
        let init = &self.initial;
        if let Some(v) = &init.rho0_values {
            if v.len() != n {
                return Err(invalid(
                    "initial.rho0_values",
                    format!("expected {n} entries, found {}", v.len()),
                ));
            }
            return Ok(MassVector(v.clone()));
        }
        let Some(profile) = &init.rho0 else {
            return Err(invalid(
                "initial",
                "one of `rho0` or `rho0_values` is required",
            ));
        };
        let m = graph.base_masses();
        let raw: Vec<f64> = if let Some((lo, hi)) = parse_random(profile) {
            if !(lo <= hi) {
                return Err(invalid("initial.rho0", "random(lo, hi) needs lo ≤ hi"));
            }
            let mut rng = self.rng(2);
            m.iter().map(|&mi| rng.gen_range(lo..=hi) * mi).collect()
        } else {
            let p: ContinuumProfile = profile.parse().map_err(|e| invalid("initial.rho0", e))?;
            (0..n).map(|i| p.eval(graph.position(i)) * m[i]).collect()
        };
        let total: f64 = raw.iter().sum();
        if total == 0.0 || !total.is_finite() {
            return Err(invalid("initial.rho0", "initial mass sums to zero"));
        }
        Ok(MassVector(
            raw.iter().map(|r| r * init.total_mass / total).collect(),
        ))
    }

    fn build_eta0(
        &self,
        graph: &VertexSet,
        omega: &OmegaFunctional,
        rho0: &MassVector,
    ) -> Result<WeightMatrix> {
        let s = self.initial.eta0.trim();
        let n = graph.len();
        if s == "well-prepared" {
            return eval_omega(omega, 0.0, graph, rho0);
        }
        if let Some((lo, hi)) = parse_random(s) {
            if !(lo <= hi) {
                return Err(invalid("initial.eta0", "random(lo, hi) needs lo ≤ hi"));
            }
            let mut rng = self.rng(3);
            let mut w = EdgeMatrix::zeros(n);
            for i in 0..n {
                for j in i + 1..n {
                    let x = rng.gen_range(lo..=hi);
                    w.set(i, j, x);
                    w.set(j, i, x);
                }
            }
            return Ok(w);
        }
        let k: PairKernel = s.parse().map_err(|e| invalid("initial.eta0", e))?;
        Ok(EdgeMatrix::from_fn(n, |i, j| {
            k.eval(graph.position(i), graph.position(j))
        }))
    }

    pub fn build(&self) -> Result<Scenario> {
        let graph = self.build_graph()?;
        let velocity = self.build_velocity()?;
        let omega = self.build_omega(graph.len())?;
        let interp = self.build_interp()?;
        let rho0 = self.build_rho0(&graph)?;
        let eta0 = self.build_eta0(&graph, &omega, &rho0)?;
        let spec = SystemSpec::new(
            graph,
            interp,
            velocity,
            omega,
            self.regime,
            self.horizon,
            self.mass_bound,
        )?;

        let it = &self.integrator;
        let mut integrator = IntegratorConfig::for_regime(&self.regime, it.dt);
        integrator.scheme = it.scheme;
        integrator.audit_every = it.audit_every;
        if let Some(u) = it.eta_update {
            integrator.eta_update = u;
        }
        let p = self.picard.unwrap_or_default();
        Ok(Scenario {
            spec,
            rho0,
            eta0,
            integrator,
            solver: it.solver,
            picard: PicardConfig {
                grid_points: p.grid_points,
                tol: p.tol,
                max_iters: p.max_iters,
            },
        })
    }

    /// Constants for a contraction report: closed form raised to declared
    /// field constants, then replaced by anything in `[constants]`.
    pub fn report_constants(&self, scenario: &Scenario) -> ConstantSet {
        let c = ConstantSet::from_spec(&scenario.spec, &scenario.eta0);
        match &self.constants {
            Some(d) => d.apply(&c),
            None => c,
        }
    }

    /// The graph-limit ladder built from this scenario's fields, initial
    /// profiles and study section.
    pub fn graph_limit_config(&self) -> Result<GraphLimitConfig> {
        let study = self
            .study
            .as_ref()
            .ok_or_else(|| invalid("study", "section is required for a graph-limit study"))?;
        let recipe = match self.graph.kind {
            GraphKind::UniformGrid => VertexRecipe::UniformGrid,
            GraphKind::Halton => VertexRecipe::Halton,
            other => {
                return Err(invalid(
                    "graph.kind",
                    format!("graph-limit rungs need uniform-grid or halton, got {other:?}"),
                ))
            }
        };
        let rho0 = self
            .initial
            .rho0
            .as_deref()
            .ok_or_else(|| {
                invalid(
                    "initial.rho0",
                    "a density profile is required for a graph-limit study",
                )
            })?
            .parse()
            .map_err(|e| invalid("initial.rho0", e))?;
        let eta0 = self
            .initial
            .eta0
            .parse()
            .map_err(|e| invalid("initial.eta0", e))?;
        let omega = self.build_omega(1)?;
        Ok(GraphLimitConfig {
            ladder: study.ladder.clone(),
            dim: self.graph.dim,
            recipe,
            rho0,
            eta0,
            total_mass: self.initial.total_mass,
            velocity: self.build_velocity()?,
            omega,
            interp: self.build_interp()?,
            horizon: self.horizon,
            mass_bound: self.mass_bound,
            panel: study.panel,
        })
    }
}

fn grid(n: usize) -> GraphConfig {
    GraphConfig {
        kind: GraphKind::UniformGrid,
        n,
        dim: 1,
        ghosts: 0,
        positions: Vec::new(),
        masses: Vec::new(),
    }
}

fn interaction(kernel: &str, strength: f64) -> VelocityConfig {
    VelocityConfig::Interaction {
        kernel: kernel.into(),
        strength,
        modulation: unit(),
    }
}

fn convolution(kernel: &str, scale: f64) -> OmegaConfig {
    OmegaConfig::Convolution {
        kernel: kernel.into(),
        scale,
        modulation: unit(),
    }
}

fn initial(rho0: &str, eta0: &str) -> InitialConfig {
    InitialConfig {
        rho0: Some(rho0.into()),
        rho0_values: None,
        total_mass: 1.0,
        eta0: eta0.into(),
    }
}

fn rk4(dt: f64) -> IntegratorSection {
    IntegratorSection {
        dt,
        scheme: Scheme::Rk4,
        eta_update: None,
        audit_every: 1,
        solver: Solver::Integrate,
    }
}

fn opinion_line(n: usize, dt: f64) -> ScenarioConfig {
    ScenarioConfig {
        horizon: 1.0,
        mass_bound: 1.0,
        seed: 0,
        graph: grid(n),
        velocity: interaction("gaussian(0.2)", 1.0),
        omega: convolution("gaussian(0.3)", 1.0),
        flux: FluxConfig::default(),
        regime: Regime::Coupled,
        initial: initial("bump(0.3, 0.2, 0.5)", "gaussian(0.5)"),
        integrator: rk4(dt),
        picard: None,
        constants: None,
        study: None,
    }
}

fn epsilon_ladder() -> Vec<f64> {
    [-1.0, -1.5, -2.0, -2.5, -3.0]
        .iter()
        .map(|e| 10f64.powf(*e))
        .collect()
}

const PRESETS: &[(&str, &str)] = &[
    (
        "zero-velocity",
        "8 vertices, no transport; weights relax towards a Gaussian target",
    ),
    (
        "opinion-line-16",
        "16 vertices on [0, 1], Gaussian interaction and weight target, coupled",
    ),
    (
        "opinion-line-50",
        "50 vertices on [0, 1], Gaussian interaction and weight target, coupled",
    ),
    (
        "slow-line-20",
        "20 vertices, ε ladder for the slow-graph limit",
    ),
    (
        "fast-line-20",
        "20 vertices, well-prepared ε ladder for the fast-graph limit",
    ),
    (
        "graph-limit-line",
        "uniform grids n = 8 … 128 on [0, 1], finest grid as reference",
    ),
    (
        "window-worked-example",
        "declared constants (1, 1, 0, 1, 0, 0, 1) for the contraction window",
    ),
    (
        "zero-constants",
        "no transport, zero target and weights; contraction window T* = 1",
    ),
    (
        "picard-10",
        "10 random vertices, weak coupling, solved by Picard iteration at T = 0.25",
    ),
    (
        "positivity-ghosts",
        "upwind transport with two zero-mass ghost vertices and a sign-changing target",
    ),
];

/// Names and one-line descriptions of the built-in presets.
pub fn preset_names() -> &'static [(&'static str, &'static str)] {
    PRESETS
}

/// A built-in preset by name.
pub fn preset(name: &str) -> Option<ScenarioConfig> {
    let cfg = match name {
        "zero-velocity" => ScenarioConfig {
            velocity: VelocityConfig::Zero,
            ..opinion_line(8, 1e-2)
        },
        "opinion-line-16" => opinion_line(16, 1e-3),
        "opinion-line-50" => opinion_line(50, 1e-3),
        "slow-line-20" | "fast-line-20" => {
            let slow = name == "slow-line-20";
            ScenarioConfig {
                regime: if slow {
                    Regime::SlowGraph { epsilon: 0.1 }
                } else {
                    Regime::FastGraph { epsilon: 0.1 }
                },
                initial: initial(
                    "bump(0.3, 0.2, 0.5)",
                    if slow {
                        "constant(0.5)"
                    } else {
                        "well-prepared"
                    },
                ),
                study: Some(StudyConfig {
                    epsilons: epsilon_ladder(),
                    well_prepared: true,
                    ladder: Vec::new(),
                    probes: 64,
                    panel: ObservablePanel::default(),
                    slope_gate: Some(if slow {
                        SlopeGate {
                            min: 0.9,
                            max: 1.1,
                            required: true,
                        }
                    } else {
                        SlopeGate {
                            min: 0.85,
                            max: 1.15,
                            required: true,
                        }
                    }),
                }),
                ..opinion_line(20, 1e-2)
            }
        }
        "graph-limit-line" => ScenarioConfig {
            study: Some(StudyConfig {
                epsilons: Vec::new(),
                well_prepared: true,
                ladder: vec![8, 16, 32, 64, 128],
                probes: 0,
                panel: ObservablePanel::default(),
                slope_gate: None,
            }),
            ..opinion_line(128, 1e-2)
        },
        "window-worked-example" => ScenarioConfig {
            constants: Some(DeclaredConstants {
                l_phi: Some(1.0),
                c_v: Some(1.0),
                l_v: Some(0.0),
                mass_bound: Some(1.0),
                c_omega: Some(0.0),
                l_omega: Some(0.0),
                eta0_sup: Some(1.0),
                c_omega_dot: Some(0.0),
            }),
            ..opinion_line(4, 1e-2)
        },
        "zero-constants" => ScenarioConfig {
            velocity: VelocityConfig::Zero,
            omega: OmegaConfig::Constant { value: 0.0 },
            initial: initial("constant(1)", "constant(0)"),
            ..opinion_line(4, 1e-2)
        },
        "picard-10" => ScenarioConfig {
            horizon: 0.25,
            seed: 7,
            graph: GraphConfig {
                kind: GraphKind::Random,
                ..grid(10)
            },
            velocity: interaction("gaussian(0.3)", 0.05),
            omega: convolution("gaussian(0.4)", 0.2),
            initial: InitialConfig {
                rho0: Some("random(0.2, 1)".into()),
                rho0_values: None,
                total_mass: 1.0,
                eta0: "random(0.4, 0.5)".into(),
            },
            integrator: IntegratorSection {
                solver: Solver::Picard,
                ..rk4(2.5e-4)
            },
            picard: Some(PicardSection {
                grid_points: 1001,
                tol: 1e-13,
                max_iters: 60,
            }),
            ..opinion_line(10, 1e-3)
        },
        "positivity-ghosts" => ScenarioConfig {
            graph: GraphConfig {
                ghosts: 2,
                ..grid(10)
            },
            omega: convolution("gaussian(0.3)", -0.5),
            initial: initial("bump(0.5, 0.15, 0)", "constant(1)"),
            ..opinion_line(10, 1e-2)
        },
        _ => return None,
    };
    Some(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::contraction_report;

    #[test]
    fn all_presets_build() {
        for (name, _) in preset_names() {
            let cfg = preset(name).unwrap();
            let s = cfg.build().unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(s.rho0.tv_norm() <= cfg.mass_bound * (1.0 + 1e-12), "{name}");
        }
        assert!(preset("nope").is_none());
    }

    #[test]
    fn worked_example_window() {
        let cfg = preset("window-worked-example").unwrap();
        let s = cfg.build().unwrap();
        let r = contraction_report(&cfg.report_constants(&s), cfg.horizon).unwrap();
        assert!((r.t_star - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn zero_constants_window() {
        let cfg = preset("zero-constants").unwrap();
        let s = cfg.build().unwrap();
        let r = contraction_report(&cfg.report_constants(&s), cfg.horizon).unwrap();
        assert!((r.t_star - 1.0).abs() < 1e-12);
    }

    #[test]
    fn picard_preset_window() {
        let cfg = preset("picard-10").unwrap();
        let s = cfg.build().unwrap();
        let r = contraction_report(&cfg.report_constants(&s), cfg.horizon).unwrap();
        assert!(r.t_star >= 0.5, "{}", r.t_star);
        assert!(r.within_window);
    }

    #[test]
    fn ghosts_have_no_mass() {
        let s = preset("positivity-ghosts").unwrap().build().unwrap();
        assert_eq!(s.spec.n(), 12);
        assert_eq!(&s.spec.graph.base_masses()[10..], &[0.0, 0.0]);
        assert_eq!(&s.rho0.0[10..], &[0.0, 0.0]);
    }

    #[test]
    fn seed_changes_random_scenario() {
        let mut cfg = preset("picard-10").unwrap();
        let a = cfg.build().unwrap();
        cfg.seed += 1;
        let b = cfg.build().unwrap();
        assert_ne!(a.rho0, b.rho0);
    }

    #[test]
    fn slow_preset_weights_within_target_bound() {
        let s = preset("slow-line-20").unwrap().build().unwrap();
        assert!(s.eta0.sup_norm() <= s.spec.omega_constants().c_omega);
    }
}
