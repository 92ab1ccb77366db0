//! Vertex and edge containers, the discrete nonlocal gradient and divergence,
//! and the norms every other module measures against.
//!
//! Edge quantities are stored as dense row-major `n × n` matrices. The
//! diagonal is stored but never read: all sums run over ordered pairs
//! `i != j`.

use serde::Serialize;

use crate::error::{Error, Result};

/// The vertices of an atomic base measure `μ = Σ m_i δ_{x_i}`.
///
/// A base mass of zero is allowed. Such a "ghost" vertex lies outside the
/// support of `μ`; no mass can ever flow onto it.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexSet {
    dim: usize,
    positions: Vec<f64>,
    base_masses: Vec<f64>,
    total_base_mass: f64,
}

impl VertexSet {
    /// Builds a vertex set from `n` points (each of length `dim`) and `n`
    /// base masses.
    pub fn new(positions: Vec<Vec<f64>>, base_masses: Vec<f64>) -> Result<Self> {
        let n = positions.len();
        if n == 0 {
            return Err(Error::Validation(
                "a vertex set needs at least one vertex".into(),
            ));
        }
        if base_masses.len() != n {
            return Err(Error::Dimension {
                context: "base masses",
                expected: n,
                found: base_masses.len(),
            });
        }
        let dim = positions[0].len();
        if dim == 0 {
            return Err(Error::Validation(
                "positions must have dimension >= 1".into(),
            ));
        }
        let mut flat = Vec::with_capacity(n * dim);
        for p in &positions {
            if p.len() != dim {
                return Err(Error::Dimension {
                    context: "vertex position",
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::Validation("vertex positions must be finite".into()));
            }
            flat.extend_from_slice(p);
        }
        for (i, &m) in base_masses.iter().enumerate() {
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::Validation(format!(
                    "base mass m[{i}] = {m} must be finite and nonnegative"
                )));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if flat[i * dim..(i + 1) * dim] == flat[j * dim..(j + 1) * dim] {
                    return Err(Error::Validation(format!(
                        "vertices {i} and {j} share a position"
                    )));
                }
            }
        }
        let total_base_mass = base_masses.iter().sum();
        Ok(Self {
            dim,
            positions: flat,
            base_masses,
            total_base_mass,
        })
    }

    /// One-dimensional vertex set from scalar positions.
    pub fn on_line(points: &[f64], base_masses: Vec<f64>) -> Result<Self> {
        Self::new(points.iter().map(|&x| vec![x]).collect(), base_masses)
    }

    pub fn len(&self) -> usize {
        self.base_masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base_masses.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn base_masses(&self) -> &[f64] {
        &self.base_masses
    }

    pub fn total_base_mass(&self) -> f64 {
        self.total_base_mass
    }

    /// Squared Euclidean distance between vertices `i` and `j`.
    pub fn dist2(&self, i: usize, j: usize) -> f64 {
        self.position(i)
            .iter()
            .zip(self.position(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// Signed vertex masses `ρ_i`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct MassVector(pub Vec<f64>);

impl MassVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn tv_norm(&self) -> f64 {
        tv_norm(&self.0)
    }
}

impl From<Vec<f64>> for MassVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Dense `n × n` matrix indexed by ordered vertex pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeMatrix {
    n: usize,
    values: Vec<f64>,
}

/// Edge weights `η_ij`. Neither symmetry nor sign is required.
pub type WeightMatrix = EdgeMatrix;

impl EdgeMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            values: vec![0.0; n * n],
        }
    }

    pub fn filled(n: usize, c: f64) -> Self {
        Self {
            n,
            values: vec![c; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(i, j));
            }
        }
        Self { n, values }
    }

    /// Row-major data of length `n²`.
    pub fn from_row_major(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Dimension {
                context: "edge matrix data",
                expected: n * n,
                found: values.len(),
            });
        }
        Ok(Self { n, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut values = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::Dimension {
                    context: "edge matrix row",
                    expected: n,
                    found: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    /// `max_{i≠j} |a_ij|`.
    pub fn sup_norm(&self) -> f64 {
        let mut s = 0.0_f64;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s = s.max(self.get(i, j).abs());
                }
            }
        }
        s
    }

    /// `min_{i≠j} a_ij`, or `+∞` for a single vertex.
    pub fn min_off_diagonal(&self) -> f64 {
        let mut s = f64::INFINITY;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s = s.min(self.get(i, j));
                }
            }
        }
        s
    }

    /// Off-diagonal sup distance to another matrix of the same size.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.n, other.n);
        let mut s = 0.0_f64;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s = s.max((self.get(i, j) - other.get(i, j)).abs());
                }
            }
        }
        s
    }

    /// Largest `|a_ij + a_ji|` over `i < j`, with the pair attaining it.
    pub fn antisymmetry_defect(&self) -> (f64, usize, usize) {
        let mut worst = (0.0, 0, 0);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let r = (self.get(i, j) + self.get(j, i)).abs();
                if r > worst.0 {
                    worst = (r, i, j);
                }
            }
        }
        worst
    }

    /// Checks `|a_ij + a_ji| <= tol · max(1, |a_ij|, |a_ji|)` for every pair.
    pub fn check_antisymmetric(&self, tol: f64) -> Result<()> {
        let mut worst: Option<(f64, usize, usize, f64)> = None;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let (a, b) = (self.get(i, j), self.get(j, i));
                let r = (a + b).abs();
                let scale = 1.0_f64.max(a.abs()).max(b.abs());
                let excess = r / scale;
                if !(excess <= tol) && worst.is_none_or(|w| excess > w.3) {
                    worst = Some((r, i, j, excess));
                }
            }
        }
        match worst {
            None => Ok(()),
            Some((residual, i, j, _)) => Err(Error::Antisymmetry { i, j, residual }),
        }
    }

    /// Replaces `a` with `(a − aᵀ)/2`. Never applied implicitly.
    pub fn antisymmetrize(&self) -> Self {
        Self::from_fn(self.n, |i, j| 0.5 * (self.get(i, j) - self.get(j, i)))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Nonlocal gradient: `(∇̄φ)_ij = φ_j − φ_i`.
pub fn nonlocal_gradient(phi: &[f64], n: usize) -> Result<EdgeMatrix> {
    if phi.len() != n {
        return Err(Error::Dimension {
            context: "nonlocal_gradient",
            expected: n,
            found: phi.len(),
        });
    }
    Ok(EdgeMatrix::from_fn(n, |i, j| {
        if i == j {
            0.0
        } else {
            phi[j] - phi[i]
        }
    }))
}

/// Nonlocal divergence, the adjoint of [`nonlocal_gradient`]:
/// `(∇̄·J)_i = ½ Σ_{j≠i} (J_ij − J_ji)`.
pub fn nonlocal_divergence(flux: &EdgeMatrix) -> Vec<f64> {
    let n = flux.n();
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for j in 0..n {
            if j != i {
                s += flux.get(i, j) - flux.get(j, i);
            }
        }
        *o = 0.5 * s;
    }
    out
}

/// Total variation norm of an atomic signed measure, `Σ|ρ_i|`.
pub fn tv_norm(rho: &[f64]) -> f64 {
    rho.iter().map(|r| r.abs()).sum()
}

/// `Σ|a_i − b_i|`.
pub fn tv_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Conserved quantities recorded alongside every trajectory sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AuditEntry {
    pub time: f64,
    pub total_mass: f64,
    pub tv_norm: f64,
    pub eta_sup: f64,
}

impl AuditEntry {
    pub fn of(time: f64, rho: &MassVector, eta: &WeightMatrix) -> Self {
        Self {
            time,
            total_mass: rho.total(),
            tv_norm: rho.tv_norm(),
            eta_sup: eta.sup_norm(),
        }
    }
}

/// Time-gridded samples of `(ρ_t, η_t)` with an audit trail.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub rho: Vec<MassVector>,
    pub eta: Vec<WeightMatrix>,
    pub audit: Vec<AuditEntry>,
    /// Non-fatal diagnostics (step-size guard, a-priori bound excursions).
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn push(&mut self, time: f64, rho: MassVector, eta: WeightMatrix) {
        self.audit.push(AuditEntry::of(time, &rho, &eta));
        self.times.push(time);
        self.rho.push(rho);
        self.eta.push(eta);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.rho.first().map_or(0, |r| r.len())
    }

    pub fn final_rho(&self) -> Option<&MassVector> {
        self.rho.last()
    }

    pub fn final_eta(&self) -> Option<&WeightMatrix> {
        self.eta.last()
    }

    /// Largest `|Σρ(t) − Σρ(0)|` over the audit trail.
    pub fn max_mass_drift(&self) -> f64 {
        let Some(first) = self.audit.first() else {
            return 0.0;
        };
        self.audit
            .iter()
            .map(|a| (a.total_mass - first.total_mass).abs())
            .fold(0.0, f64::max)
    }
}

/// Grid-sampled `d_∞`: `max_k [ ‖ρ^a_k − ρ^b_k‖_TV + ‖η^a_k − η^b_k‖_∞ ]`.
pub fn d_infinity(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    check_aligned(a, b)?;
    Ok(a.rho
        .iter()
        .zip(&b.rho)
        .zip(a.eta.iter().zip(&b.eta))
        .map(|((ra, rb), (ea, eb))| tv_distance(&ra.0, &rb.0) + ea.sup_distance(eb))
        .fold(0.0, f64::max))
}

/// `(max_k ‖ρ^a_k − ρ^b_k‖_TV, max_k ‖η^a_k − η^b_k‖_∞)`, the two parts of
/// the metric taken separately.
pub fn d_infinity_parts(a: &Trajectory, b: &Trajectory) -> Result<(f64, f64)> {
    check_aligned(a, b)?;
    let rho = a
        .rho
        .iter()
        .zip(&b.rho)
        .map(|(x, y)| tv_distance(&x.0, &y.0))
        .fold(0.0, f64::max);
    let eta = a
        .eta
        .iter()
        .zip(&b.eta)
        .map(|(x, y)| x.sup_distance(y))
        .fold(0.0, f64::max);
    Ok((rho, eta))
}

fn check_aligned(a: &Trajectory, b: &Trajectory) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Alignment(format!(
            "{} vs {} time samples",
            a.len(),
            b.len()
        )));
    }
    if a.vertex_count() != b.vertex_count() {
        return Err(Error::Alignment(format!(
            "{} vs {} vertices",
            a.vertex_count(),
            b.vertex_count()
        )));
    }
    for (k, (s, t)) in a.times.iter().zip(&b.times).enumerate() {
        if (s - t).abs() > 1e-12 * s.abs().max(1.0) {
            return Err(Error::Alignment(format!(
                "sample {k} at t = {s} vs t = {t}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_step(rho0: &[f64], rho1: &[f64], eta: f64) -> Trajectory {
        let mut t = Trajectory::default();
        let n = rho0.len();
        t.push(0.0, rho0.to_vec().into(), EdgeMatrix::filled(n, eta));
        t.push(1.0, rho1.to_vec().into(), EdgeMatrix::filled(n, eta));
        t
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = nonlocal_gradient(&[2.5; 4], 4).unwrap();
        assert!(g.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_two_vertices() {
        let g = nonlocal_gradient(&[0.0, 1.0], 2).unwrap();
        assert_eq!(g.get(0, 1), 1.0);
        assert_eq!(g.get(1, 0), -1.0);
    }

    #[test]
    fn gradient_length_mismatch() {
        assert!(matches!(
            nonlocal_gradient(&[0.0, 1.0], 3),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn divergence_examples() {
        let sym = EdgeMatrix::from_rows(&[
            vec![0.0, 2.0, 1.0],
            vec![2.0, 0.0, 3.0],
            vec![1.0, 3.0, 0.0],
        ])
        .unwrap();
        assert_eq!(nonlocal_divergence(&sym), vec![0.0; 3]);

        let anti = EdgeMatrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(nonlocal_divergence(&anti), vec![1.0, -1.0]);
    }

    #[test]
    fn divergence_ignores_diagonal() {
        let mut j = EdgeMatrix::zeros(2);
        j.set(0, 0, 100.0);
        j.set(1, 1, -7.0);
        assert_eq!(nonlocal_divergence(&j), vec![0.0, 0.0]);
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_norm(&[0.0; 3]), 0.0);
        assert_eq!(tv_norm(&[1.0, -2.0, 0.5]), 3.5);
        assert_eq!(tv_norm(&[-1.0, 2.0, -0.5]), 3.5);
    }

    #[test]
    fn d_infinity_examples() {
        let a = single_step(&[1.0, 0.0], &[1.0, 0.0], 0.5);
        assert_eq!(d_infinity(&a, &a).unwrap(), 0.0);

        let b = single_step(&[1.0, 0.0], &[1.0, 0.0], 0.75);
        assert_eq!(d_infinity(&a, &b).unwrap(), 0.25);

        // TV gap 0.3 at t = 0, 0.1 at t = T.
        let c = single_step(&[0.0, 0.0], &[0.0, 0.0], 1.0);
        let d = single_step(&[0.2, -0.1], &[0.05, 0.05], 1.0);
        assert!((d_infinity(&c, &d).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn d_infinity_rejects_mismatched_grids() {
        let a = single_step(&[1.0, 0.0], &[1.0, 0.0], 0.5);
        let mut b = a.clone();
        b.times[1] = 0.9;
        assert!(matches!(d_infinity(&a, &b), Err(Error::Alignment(_))));
        let mut c = a.clone();
        c.times.pop();
        c.rho.pop();
        c.eta.pop();
        assert!(matches!(d_infinity(&a, &c), Err(Error::Alignment(_))));
    }

    #[test]
    fn vertex_set_validation() {
        assert!(VertexSet::on_line(&[], vec![]).is_err());
        assert!(VertexSet::on_line(&[0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(VertexSet::on_line(&[0.0, 1.0], vec![1.0, -1.0]).is_err());
        assert!(VertexSet::on_line(&[0.0, 1.0], vec![1.0]).is_err());
        let g = VertexSet::on_line(&[0.0, 1.0, 2.0], vec![0.5, 0.0, 0.25]).unwrap();
        assert_eq!(g.total_base_mass(), 0.75);
        assert_eq!(g.dist2(0, 2), 4.0);
    }

    #[test]
    fn antisymmetry_check_names_worst_pair() {
        let mut v = EdgeMatrix::zeros(3);
        v.set(0, 1, 1.0);
        v.set(1, 0, -1.0);
        v.set(1, 2, 0.5);
        v.set(2, 1, -0.4);
        match v.check_antisymmetric(1e-10) {
            Err(Error::Antisymmetry { i, j, .. }) => assert_eq!((i, j), (1, 2)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(v.antisymmetrize().check_antisymmetric(1e-10).is_ok());
    }
}
