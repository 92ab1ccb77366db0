use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use super::fit_rate;
use super::studies::{run_parallel, ConvergenceStudy, RungResult, StudyKind, StudyOptions};
use crate::dynamics::{integrate, IntegratorConfig, Regime, SystemSpec};
use crate::error::{Error, Result};
use crate::fields::{parse_call, OmegaFunctional, PairKernel, VelocityField};
use crate::flux::FluxInterpolation;
use crate::graph::{EdgeMatrix, MassVector, Trajectory, VertexSet};

/// How the `n` vertices of a rung are placed in `[0, 1]^d`. Every vertex
/// gets mass `1/n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexRecipe {
    /// Cell midpoints of a tensor grid; `n` must be a `d`-th power.
    UniformGrid,
    /// The first `n` points of the Halton sequence.
    Halton,
}

const HALTON_BASES: [u32; 6] = [2, 3, 5, 7, 11, 13];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let (mut x, mut f) = (0.0, 1.0 / b);
    while i > 0 {
        x += f * (i % base as u64) as f64;
        i /= base as u64;
        f /= b;
    }
    x
}

impl VertexRecipe {
    pub fn build(&self, n: usize, dim: usize) -> Result<VertexSet> {
        if n == 0 || dim == 0 {
            return Err(Error::Validation(
                "vertex recipe needs n ≥ 1 and d ≥ 1".into(),
            ));
        }
        let positions: Vec<Vec<f64>> = match self {
            VertexRecipe::UniformGrid => {
                let side = (n as f64).powf(1.0 / dim as f64).round() as usize;
                if side.pow(dim as u32) != n {
                    return Err(Error::Validation(format!(
                        "uniform grid in dimension {dim} needs a perfect power, got n = {n}"
                    )));
                }
                (0..n)
                    .map(|mut k| {
                        (0..dim)
                            .map(|_| {
                                let c = k % side;
                                k /= side;
                                (c as f64 + 0.5) / side as f64
                            })
                            .collect()
                    })
                    .collect()
            }
            VertexRecipe::Halton => {
                if dim > HALTON_BASES.len() {
                    return Err(Error::Validation(format!(
                        "Halton points supported up to dimension {}",
                        HALTON_BASES.len()
                    )));
                }
                (1..=n as u64)
                    .map(|k| {
                        HALTON_BASES[..dim]
                            .iter()
                            .map(|&b| radical_inverse(k, b))
                            .collect()
                    })
                    .collect()
            }
        };
        VertexSet::new(positions, vec![1.0 / n as f64; n])
    }
}

/// A density on `[0, 1]^d`, sampled to give the initial mass of each rung.
///
/// | preset             | density                                  |
/// |--------------------|------------------------------------------|
/// | `constant(c)`      | `c`                                      |
/// | `bump(c, w, b)`    | `b + exp(−|x − c·1|² / w²)`               |
/// | `cosine(a, f)`     | `1 + a cos(2π f x₁)`                      |
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ContinuumProfile {
    Constant { value: f64 },
    Bump { center: f64, width: f64, base: f64 },
    Cosine { amplitude: f64, frequency: f64 },
}

impl ContinuumProfile {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            ContinuumProfile::Constant { value } => value,
            ContinuumProfile::Bump {
                center,
                width,
                base,
            } => {
                let r2: f64 = x.iter().map(|xi| (xi - center).powi(2)).sum();
                base + (-r2 / (width * width)).exp()
            }
            ContinuumProfile::Cosine {
                amplitude,
                frequency,
            } => 1.0 + amplitude * (2.0 * std::f64::consts::PI * frequency * x[0]).cos(),
        }
    }
}

impl FromStr for ContinuumProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, a) = parse_call(s)?;
        let p = match (name, a.as_slice()) {
            ("constant", [c]) => ContinuumProfile::Constant { value: *c },
            ("bump", [c, w, b]) if *w > 0.0 => ContinuumProfile::Bump {
                center: *c,
                width: *w,
                base: *b,
            },
            ("cosine", [a, f]) => ContinuumProfile::Cosine {
                amplitude: *a,
                frequency: *f,
            },
            _ => {
                return Err(Error::Validation(format!(
                    "unknown profile `{s}`: expected constant(c), bump(c, w, b) or cosine(a, f)"
                )))
            }
        };
        Ok(p)
    }
}

impl fmt::Display for ContinuumProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContinuumProfile::Constant { value } => write!(f, "constant({value})"),
            ContinuumProfile::Bump {
                center,
                width,
                base,
            } => write!(f, "bump({center}, {width}, {base})"),
            ContinuumProfile::Cosine {
                amplitude,
                frequency,
            } => write!(f, "cosine({amplitude}, {frequency})"),
        }
    }
}

impl Serialize for ContinuumProfile {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Smooth test functions used to compare solutions on different vertex
/// sets.
///
/// Single-vertex functions: `bumps` Gaussians of width `width` centred at
/// `(ℓ + ½)/bumps` along the diagonal, the constant 1, and each coordinate.
/// Pair functions: the constant 1 and products `g_a(x) g_b(y)` of every
/// second bump.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservablePanel {
    pub bumps: usize,
    pub width: f64,
}

impl Default for ObservablePanel {
    fn default() -> Self {
        Self {
            bumps: 8,
            width: 0.15,
        }
    }
}

impl ObservablePanel {
    fn bump(&self, l: usize, x: &[f64]) -> f64 {
        let c = (l as f64 + 0.5) / self.bumps as f64;
        let r2: f64 = x.iter().map(|xi| (xi - c).powi(2)).sum();
        (-r2 / (self.width * self.width)).exp()
    }

    /// Values of the single-vertex panel at `x`; index 0 is the constant.
    fn singles(&self, x: &[f64]) -> Vec<f64> {
        let mut v = vec![1.0];
        v.extend((0..self.bumps).map(|l| self.bump(l, x)));
        v.extend_from_slice(x);
        v
    }

    fn pair_indices(&self) -> Vec<(usize, usize)> {
        let every_other: Vec<usize> = (0..self.bumps).step_by(2).collect();
        every_other
            .iter()
            .flat_map(|&a| every_other.iter().map(move |&b| (a, b)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphLimitConfig {
    /// Vertex counts, strictly increasing; the last is the reference.
    pub ladder: Vec<usize>,
    pub dim: usize,
    pub recipe: VertexRecipe,
    pub rho0: ContinuumProfile,
    /// Initial weights `η₀(x, y) = k(|x − y|)`.
    pub eta0: PairKernel,
    /// Total initial mass shared by all rungs.
    pub total_mass: f64,
    #[serde(skip)]
    pub velocity: VelocityField,
    #[serde(skip)]
    pub omega: OmegaFunctional,
    #[serde(skip)]
    pub interp: FluxInterpolation,
    pub horizon: f64,
    pub mass_bound: f64,
    pub panel: ObservablePanel,
}

impl GraphLimitConfig {
    fn validate(&self) -> Result<()> {
        if self.ladder.len() < 2 {
            return Err(Error::Validation(format!(
                "graph-limit ladder needs at least 2 rungs, got {}",
                self.ladder.len()
            )));
        }
        if self.ladder.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation(
                "graph-limit ladder must be strictly increasing".into(),
            ));
        }
        if !self.velocity.is_kernel_based() || !self.omega.is_kernel_based() {
            return Err(Error::Validation(
                "graph-limit rungs need kernel-defined velocity and weight target".into(),
            ));
        }
        if !(self.total_mass > 0.0 && self.total_mass <= self.mass_bound) {
            return Err(Error::Validation(format!(
                "total mass {} must lie in (0, M = {}]",
                self.total_mass, self.mass_bound
            )));
        }
        if self.panel.bumps == 0 || !(self.panel.width > 0.0) {
            return Err(Error::Validation(
                "observable panel needs bumps ≥ 1 and width > 0".into(),
            ));
        }
        Ok(())
    }

    /// Vertex set, spec and initial data of the rung with `n` vertices.
    pub fn rung(&self, n: usize) -> Result<(SystemSpec, MassVector, EdgeMatrix)> {
        let graph = self.recipe.build(n, self.dim)?;
        let raw: Vec<f64> = (0..n)
            .map(|i| self.rho0.eval(graph.position(i)) * graph.base_masses()[i])
            .collect();
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Validation(format!(
                "initial profile {} has no positive mass",
                self.rho0
            )));
        }
        let rho0 = MassVector(raw.iter().map(|r| r * self.total_mass / total).collect());
        let eta0 = EdgeMatrix::from_fn(n, |i, j| {
            self.eta0.eval(graph.position(i), graph.position(j))
        });
        let spec = SystemSpec::new(
            graph,
            self.interp,
            self.velocity.clone(),
            self.omega.clone(),
            Regime::Coupled,
            self.horizon,
            self.mass_bound,
        )?;
        Ok((spec, rho0, eta0))
    }
}

/// Panel observables along a trajectory: `singles[t][ℓ] = ⟨φ_ℓ, ρ_t⟩`,
/// `pairs[t][ℓ] = Σ_{i≠j} ψ_ℓ(x_i, x_j) η_ij ρ_i m_j`.
struct Observables {
    singles: Vec<Vec<f64>>,
    pairs: Vec<Vec<f64>>,
}

fn observe(panel: &ObservablePanel, graph: &VertexSet, traj: &Trajectory) -> Observables {
    let n = graph.len();
    let phi: Vec<Vec<f64>> = (0..n).map(|i| panel.singles(graph.position(i))).collect();
    let bumps: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..panel.bumps)
                .map(|l| panel.bump(l, graph.position(i)))
                .collect()
        })
        .collect();
    let pairs_idx = panel.pair_indices();
    let m = graph.base_masses();
    let mut singles = Vec::with_capacity(traj.len());
    let mut pairs = Vec::with_capacity(traj.len());
    for (rho, eta) in traj.rho.iter().zip(&traj.eta) {
        let mut s = vec![0.0; phi[0].len()];
        for (i, r) in rho.as_slice().iter().enumerate() {
            for (acc, f) in s.iter_mut().zip(&phi[i]) {
                *acc += f * r;
            }
        }
        singles.push(s);
        let mut p = vec![0.0; 1 + pairs_idx.len()];
        for i in 0..n {
            let ri = rho.0[i];
            for j in (0..n).filter(|&j| j != i) {
                let w = eta.get(i, j) * ri * m[j];
                p[0] += w;
                for (acc, &(a, b)) in p[1..].iter_mut().zip(&pairs_idx) {
                    *acc += bumps[i][a] * bumps[j][b] * w;
                }
            }
        }
        pairs.push(p);
    }
    Observables { singles, pairs }
}

/// `(max_t Σ_ℓ |Δφ_ℓ|, max_t max_ℓ |Δψ_ℓ|, max_t [Σ_ℓ |Δφ_ℓ| + max_ℓ |Δψ_ℓ|], max_t |Δ mass|)`.
fn compare(a: &Observables, b: &Observables) -> (f64, f64, f64, f64) {
    let mut out = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for k in 0..a.singles.len() {
        let s: f64 = a.singles[k]
            .iter()
            .zip(&b.singles[k])
            .map(|(x, y)| (x - y).abs())
            .sum();
        let p = a.pairs[k]
            .iter()
            .zip(&b.pairs[k])
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        let mass = (a.singles[k][0] - b.singles[k][0]).abs();
        out = (
            out.0.max(s),
            out.1.max(p),
            out.2.max(s + p),
            out.3.max(mass),
        );
    }
    out
}

/// Runs the coupled system on each rung of a vertex-count ladder and
/// measures the weak-form distance to the finest rung.
///
/// Atomic measures on different supports are always far apart in total
/// variation, so rungs are compared through the panel observables instead.
/// The finest rung is a self-convergence reference, not a continuum
/// solution.
pub fn graph_limit_study(cfg: &GraphLimitConfig, opts: &StudyOptions) -> Result<ConvergenceStudy> {
    cfg.validate()?;
    let icfg = IntegratorConfig::rk4(opts.dt);
    let runs = run_parallel(opts.jobs, &cfg.ladder, |&n| {
        let (spec, rho0, eta0) = cfg.rung(n)?;
        let traj = integrate(&spec, &rho0, &eta0, &icfg)?;
        let obs = observe(&cfg.panel, &spec.graph, &traj);
        Ok((traj, obs))
    })?;
    let (mut trajs, obs): (Vec<Trajectory>, Vec<Observables>) = runs.into_iter().unzip();
    let reference_trajectory = trajs.pop().expect("ladder has ≥ 2 rungs");
    let reference = obs.last().expect("ladder has ≥ 2 rungs");

    let dt = icfg.steps(cfg.horizon).1;
    let mut mass_discrepancy = 0.0f64;
    let rungs: Vec<RungResult> = cfg.ladder[..cfg.ladder.len() - 1]
        .iter()
        .zip(&obs)
        .map(|(&n, o)| {
            let (s, p, total, mass) = compare(o, reference);
            mass_discrepancy = mass_discrepancy.max(mass);
            RungResult {
                parameter: n as f64,
                dt,
                error: total,
                error_rho: s,
                error_eta: p,
                bound: None,
                bound_rho: None,
                bound_eta: None,
                within_bound: None,
            }
        })
        .collect();

    let errors: Vec<f64> = rungs.iter().map(|r| r.error).collect();
    let mut flags = Vec::new();
    let mut slack_used = 0;
    let mut monotone = true;
    for k in 0..errors.len().saturating_sub(1) {
        if errors[k + 1] < errors[k] {
            continue;
        }
        if errors[k + 1] <= 1.05 * errors[k] && slack_used == 0 {
            slack_used += 1;
            flags.push(format!(
                "error not decreasing from n = {} to n = {} (within 5%)",
                cfg.ladder[k],
                cfg.ladder[k + 1]
            ));
        } else {
            monotone = false;
            flags.push(format!(
                "error not decreasing from n = {} to n = {}: {} → {}",
                cfg.ladder[k],
                cfg.ladder[k + 1],
                errors[k],
                errors[k + 1]
            ));
        }
    }
    let ladder: Vec<f64> = rungs.iter().map(|r| r.parameter).collect();
    let (fit, fit_note) = match fit_rate(&ladder, &errors) {
        Ok(f) => {
            let note = f.note.clone();
            (Some(f), note)
        }
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(ConvergenceStudy {
        kind: StudyKind::GraphLimit,
        ladder: cfg.ladder.iter().map(|&n| n as f64).collect(),
        reference: format!(
            "finest rung n = {} (self-convergence, observed slope only)",
            cfg.ladder.last().expect("non-empty")
        ),
        rungs,
        fit,
        fit_note,
        monotone,
        all_within_bound: None,
        bound_label: None,
        constants: None,
        mass_discrepancy: Some(mass_discrepancy),
        flags,
        trajectories: trajs,
        reference_trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(ladder: Vec<usize>) -> GraphLimitConfig {
        GraphLimitConfig {
            ladder,
            dim: 1,
            recipe: VertexRecipe::UniformGrid,
            rho0: ContinuumProfile::Bump {
                center: 0.3,
                width: 0.2,
                base: 0.5,
            },
            eta0: PairKernel::Gaussian { sigma: 0.5 },
            total_mass: 1.0,
            velocity: VelocityField::interaction(PairKernel::Gaussian { sigma: 0.3 }, 1.0),
            omega: OmegaFunctional::convolution(PairKernel::Gaussian { sigma: 0.3 }, 1.0),
            interp: FluxInterpolation::upwind(),
            horizon: 0.5,
            mass_bound: 1.0,
            panel: ObservablePanel::default(),
        }
    }

    #[test]
    fn grid_and_halton() {
        let g = VertexRecipe::UniformGrid.build(4, 1).unwrap();
        assert_eq!(g.position(0), &[0.125]);
        assert_eq!(g.position(3), &[0.875]);
        let g2 = VertexRecipe::UniformGrid.build(9, 2).unwrap();
        assert_eq!(g2.position(4), &[0.5, 0.5]);
        assert!(VertexRecipe::UniformGrid.build(8, 2).is_err());
        let h = VertexRecipe::Halton.build(3, 2).unwrap();
        assert_eq!(h.position(0), &[0.5, 1.0 / 3.0]);
        assert_eq!(h.position(2), &[0.75, 1.0 / 9.0]);
    }

    #[test]
    fn profiles_parse() {
        for s in ["constant(2)", "bump(0.5, 0.1, 0)", "cosine(0.5, 1)"] {
            let p: ContinuumProfile = s.parse().unwrap();
            assert_eq!(p.to_string().parse::<ContinuumProfile>().unwrap(), p);
        }
        assert!("bump(0.5, 0, 1)".parse::<ContinuumProfile>().is_err());
    }

    #[test]
    fn rung_masses_normalised() {
        let cfg = config(vec![8, 16]);
        for n in [8, 16] {
            let (spec, rho0, _) = cfg.rung(n).unwrap();
            assert!((rho0.total() - 1.0).abs() < 1e-15);
            assert!((spec.graph.total_base_mass() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn identical_rungs_compare_to_zero() {
        let cfg = config(vec![8, 16]);
        let (spec, rho0, eta0) = cfg.rung(8).unwrap();
        let traj = integrate(&spec, &rho0, &eta0, &IntegratorConfig::rk4(0.05)).unwrap();
        let a = observe(&cfg.panel, &spec.graph, &traj);
        let b = observe(&cfg.panel, &spec.graph, &traj);
        assert_eq!(compare(&a, &b), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn single_rung_rejected() {
        let r = graph_limit_study(&config(vec![16]), &StudyOptions::default());
        assert!(matches!(r, Err(Error::Validation(_))));
    }

    #[test]
    fn small_ladder_decreases() {
        let opts = StudyOptions {
            dt: 0.05,
            ..StudyOptions::default()
        };
        let st = graph_limit_study(&config(vec![4, 8, 16, 32]), &opts).unwrap();
        assert_eq!(st.rungs.len(), 3);
        assert!(st.monotone, "{:?}", st.errors());
        assert!(st.mass_discrepancy.unwrap() < 1e-12);
    }
}
