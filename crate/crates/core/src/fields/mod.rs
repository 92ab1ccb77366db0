//! Velocity fields `V_t[ρ]` and weight targets `ω_t[ρ]`, with closed-form
//! and sampled estimates of their structural constants.

mod constants;
mod kernel;

pub use constants::{
    estimate_omega_constants, estimate_velocity_constants, ConstantsEstimate, OmegaConstants,
    VelocityConstants,
};
pub(crate) use kernel::parse_call;
pub use kernel::{Modulation, PairKernel};

use crate::error::{Error, Result};
use crate::flux::ANTISYMMETRY_TOL;
use crate::graph::{EdgeMatrix, MassVector, VertexSet, WeightMatrix};

/// Piecewise-constant table of edge matrices, looked up nearest-left.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    times: Vec<f64>,
    values: Vec<EdgeMatrix>,
}

impl Table {
    pub fn new(times: Vec<f64>, values: Vec<EdgeMatrix>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::Validation(format!(
                "a table needs matching, nonempty time and value lists ({} vs {})",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Validation(
                "table times must be strictly increasing".into(),
            ));
        }
        let n = values[0].n();
        if let Some(bad) = values.iter().find(|v| v.n() != n) {
            return Err(Error::Dimension {
                context: "table entry",
                expected: n,
                found: bad.n(),
            });
        }
        Ok(Self { times, values })
    }

    /// The entry at the largest tabulated time `<= t` (the first entry before
    /// the table starts).
    pub fn lookup(&self, t: f64) -> &EdgeMatrix {
        let k = self.times.partition_point(|&s| s <= t);
        &self.values[k.saturating_sub(1)]
    }

    pub fn values(&self) -> &[EdgeMatrix] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values[0].n()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum VelocityKind {
    Zero,
    /// `v_ij = −s g(t) [ (K∗ρ)(x_j) − (K∗ρ)(x_i) ]`, `(K∗ρ)(x) = Σ_k K(x, x_k) ρ_k`.
    Interaction {
        kernel: PairKernel,
        strength: f64,
        modulation: Modulation,
    },
    Tabulated(Table),
}

#[derive(Clone, Debug, PartialEq)]
pub struct VelocityField {
    pub kind: VelocityKind,
    /// User-declared `(C_V, L_V)`; estimates are compared against these.
    pub declared: Option<VelocityConstants>,
}

impl VelocityField {
    pub fn zero() -> Self {
        Self {
            kind: VelocityKind::Zero,
            declared: None,
        }
    }

    pub fn interaction(kernel: PairKernel, strength: f64) -> Self {
        Self {
            kind: VelocityKind::Interaction {
                kernel,
                strength,
                modulation: Modulation::Unit,
            },
            declared: None,
        }
    }

    pub fn tabulated(table: Table) -> Self {
        Self {
            kind: VelocityKind::Tabulated(table),
            declared: None,
        }
    }

    pub fn with_modulation(mut self, m: Modulation) -> Self {
        if let VelocityKind::Interaction { modulation, .. } = &mut self.kind {
            *modulation = m;
        }
        self
    }

    pub fn with_declared(mut self, c: VelocityConstants) -> Self {
        self.declared = Some(c);
        self
    }

    pub fn is_kernel_based(&self) -> bool {
        !matches!(self.kind, VelocityKind::Tabulated(_))
    }

    /// `(C_V, L_V)` from the kernel bound `sup|K|`, or exactly from the table.
    pub fn closed_form_constants(&self, graph: &VertexSet, mass_bound: f64) -> VelocityConstants {
        match &self.kind {
            VelocityKind::Zero => VelocityConstants { c_v: 0.0, l_v: 0.0 },
            VelocityKind::Interaction {
                kernel,
                strength,
                modulation,
            } => {
                let k = strength.abs() * kernel.sup_abs() * modulation.sup_abs();
                let m = graph.total_base_mass();
                VelocityConstants {
                    c_v: 2.0 * k * mass_bound * m,
                    l_v: 2.0 * k * m,
                }
            }
            VelocityKind::Tabulated(table) => VelocityConstants {
                c_v: table
                    .values()
                    .iter()
                    .map(|v| compressibility(v, graph))
                    .fold(0.0, f64::max),
                l_v: 0.0,
            },
        }
    }
}

/// `max_i Σ_{j≠i} |v_ij| m_j`.
pub fn compressibility(v: &EdgeMatrix, graph: &VertexSet) -> f64 {
    let m = graph.base_masses();
    (0..v.n())
        .map(|i| {
            v.row(i)
                .iter()
                .zip(m)
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, (vij, mj))| vij.abs() * mj)
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

fn check_len(graph: &VertexSet, rho: &MassVector) -> Result<()> {
    if rho.len() != graph.len() {
        return Err(Error::Dimension {
            context: "mass vector",
            expected: graph.len(),
            found: rho.len(),
        });
    }
    Ok(())
}

/// `(K∗ρ)(x_i) = Σ_k K(x_i, x_k) ρ_k`.
pub fn convolve(kernel: &PairKernel, graph: &VertexSet, rho: &[f64]) -> Vec<f64> {
    let n = graph.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|k| kernel.eval_dist2(graph.dist2(i, k)) * rho[k])
                .sum()
        })
        .collect()
}

/// Evaluates `V_t[ρ]` on all vertex pairs. The result is antisymmetric.
pub fn eval_velocity(
    field: &VelocityField,
    t: f64,
    graph: &VertexSet,
    rho: &MassVector,
) -> Result<EdgeMatrix> {
    check_len(graph, rho)?;
    let n = graph.len();
    match &field.kind {
        VelocityKind::Zero => Ok(EdgeMatrix::zeros(n)),
        VelocityKind::Interaction {
            kernel,
            strength,
            modulation,
        } => {
            let potential = convolve(kernel, graph, rho.as_slice());
            let s = strength * modulation.eval(t);
            Ok(EdgeMatrix::from_fn(n, |i, j| {
                if i == j {
                    0.0
                } else {
                    -s * (potential[j] - potential[i])
                }
            }))
        }
        VelocityKind::Tabulated(table) => {
            if table.n() != n {
                return Err(Error::Dimension {
                    context: "tabulated velocity",
                    expected: n,
                    found: table.n(),
                });
            }
            let v = table.lookup(t);
            v.check_antisymmetric(ANTISYMMETRY_TOL)?;
            Ok(v.clone())
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OmegaKind {
    /// `ω_t[ρ]_ij = Σ_k K(t, x_i, x_j, x_k) ρ_k` with the separable kernel
    /// `K(t, x, y, z) = s h(t) k(x, z) k(y, z)`.
    Convolution {
        kernel: PairKernel,
        scale: f64,
        modulation: Modulation,
    },
    Constant(WeightMatrix),
    Tabulated(Table),
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmegaFunctional {
    pub kind: OmegaKind,
    /// User-declared `(C_ω, L_ω, C̃_ω)`.
    pub declared: Option<OmegaConstants>,
}

impl OmegaFunctional {
    pub fn convolution(kernel: PairKernel, scale: f64) -> Self {
        Self {
            kind: OmegaKind::Convolution {
                kernel,
                scale,
                modulation: Modulation::Unit,
            },
            declared: None,
        }
    }

    pub fn constant(w: WeightMatrix) -> Self {
        Self {
            kind: OmegaKind::Constant(w),
            declared: None,
        }
    }

    pub fn tabulated(table: Table) -> Self {
        Self {
            kind: OmegaKind::Tabulated(table),
            declared: None,
        }
    }

    pub fn with_modulation(mut self, m: Modulation) -> Self {
        if let OmegaKind::Convolution { modulation, .. } = &mut self.kind {
            *modulation = m;
        }
        self
    }

    pub fn with_declared(mut self, c: OmegaConstants) -> Self {
        self.declared = Some(c);
        self
    }

    pub fn is_kernel_based(&self) -> bool {
        matches!(self.kind, OmegaKind::Convolution { .. })
    }

    /// Closed-form `(C_ω, L_ω, C̃_ω)`. A table jumps in time, so its `C̃_ω`
    /// is infinite.
    pub fn closed_form_constants(&self, mass_bound: f64) -> OmegaConstants {
        match &self.kind {
            OmegaKind::Convolution {
                kernel,
                scale,
                modulation,
            } => {
                let k = scale.abs() * kernel.sup_abs() * kernel.sup_abs();
                OmegaConstants {
                    c_omega: k * modulation.sup_abs() * mass_bound,
                    l_omega: k * modulation.sup_abs(),
                    c_omega_dot: k * modulation.sup_abs_derivative() * mass_bound,
                }
            }
            OmegaKind::Constant(w) => OmegaConstants {
                c_omega: w.sup_norm(),
                l_omega: 0.0,
                c_omega_dot: 0.0,
            },
            OmegaKind::Tabulated(table) => {
                let c = table
                    .values()
                    .iter()
                    .map(|w| w.sup_norm())
                    .fold(0.0, f64::max);
                let jumps = table
                    .values()
                    .windows(2)
                    .any(|w| w[0].sup_distance(&w[1]) > 0.0);
                OmegaConstants {
                    c_omega: c,
                    l_omega: 0.0,
                    c_omega_dot: if jumps { f64::INFINITY } else { 0.0 },
                }
            }
        }
    }
}

/// Evaluates `ω_t[ρ]` on all vertex pairs.
pub fn eval_omega(
    func: &OmegaFunctional,
    t: f64,
    graph: &VertexSet,
    rho: &MassVector,
) -> Result<WeightMatrix> {
    check_len(graph, rho)?;
    let n = graph.len();
    match &func.kind {
        OmegaKind::Convolution {
            kernel,
            scale,
            modulation,
        } => {
            let r = rho.as_slice();
            let k = EdgeMatrix::from_fn(n, |i, j| kernel.eval_dist2(graph.dist2(i, j)));
            // weighted[i][z] = k(x_i, x_z) ρ_z
            let weighted = EdgeMatrix::from_fn(n, |i, z| k.get(i, z) * r[z]);
            let s = scale * modulation.eval(t);
            let mut out = EdgeMatrix::zeros(n);
            for i in 0..n {
                let wi = weighted.row(i);
                for j in i..n {
                    let kj = k.row(j);
                    let v = s * wi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>();
                    out.set(i, j, v);
                    out.set(j, i, v);
                }
            }
            Ok(out)
        }
        OmegaKind::Constant(w) => {
            if w.n() != n {
                return Err(Error::Dimension {
                    context: "constant omega",
                    expected: n,
                    found: w.n(),
                });
            }
            Ok(w.clone())
        }
        OmegaKind::Tabulated(table) => {
            if table.n() != n {
                return Err(Error::Dimension {
                    context: "tabulated omega",
                    expected: n,
                    found: table.n(),
                });
            }
            Ok(table.lookup(t).clone())
        }
    }
}
