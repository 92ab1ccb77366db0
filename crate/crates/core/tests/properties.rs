use coevolve::fields::compressibility;
use coevolve::graph::tv_distance;
use coevolve::{
    d_infinity, eval_omega, eval_velocity, integrate, mass_rhs, nonlocal_divergence,
    nonlocal_gradient, tv_norm, EdgeMatrix, FluxInterpolation, IntegratorConfig, MassVector,
    OmegaFunctional, PairKernel, Regime, SystemSpec, Trajectory, VelocityField, VertexSet,
};
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn vec_of(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, n)
}

fn matrix(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = EdgeMatrix> {
    vec_of(n * n, lo, hi).prop_map(move |v| EdgeMatrix::from_row_major(n, v).unwrap())
}

/// A graph with positions in [0, 1], positive base masses, nonnegative
/// weights with a zero diagonal, masses and an antisymmetric velocity.
#[derive(Debug, Clone)]
struct Instance {
    graph: VertexSet,
    eta: EdgeMatrix,
    rho: MassVector,
    v: EdgeMatrix,
}

fn instance(signed: bool) -> impl Strategy<Value = Instance> {
    (2usize..9).prop_flat_map(move |n| {
        let lo = if signed { -2.0 } else { 0.0 };
        (
            vec_of(n, 0.0, 1.0),
            vec_of(n, 0.05, 2.0),
            matrix(n, 0.0, 3.0),
            vec_of(n, lo, 2.0),
            matrix(n, -4.0, 4.0),
        )
            .prop_map(|(pts, m, eta, rho, v)| {
                let n = pts.len();
                Instance {
                    graph: VertexSet::on_line(&pts, m).unwrap(),
                    eta: EdgeMatrix::from_fn(n, |i, j| if i == j { 0.0 } else { eta.get(i, j) }),
                    rho: MassVector(rho),
                    v: v.antisymmetrize(),
                }
            })
    })
}

fn interpolation() -> impl Strategy<Value = FluxInterpolation> {
    prop_oneof![
        Just(FluxInterpolation::upwind()),
        Just(FluxInterpolation::arithmetic_mean()),
        Just(FluxInterpolation::max()),
    ]
}

fn trajectory(n: usize, len: usize) -> impl Strategy<Value = Trajectory> {
    prop::collection::vec((vec_of(n, -1.0, 1.0), matrix(n, 0.0, 1.0)), len).prop_map(|samples| {
        let mut t = Trajectory::default();
        for (k, (r, e)) in samples.into_iter().enumerate() {
            t.push(k as f64, MassVector(r), e);
        }
        t
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn divergence_is_adjoint_of_gradient(
        (phi, j) in (1usize..10).prop_flat_map(|n| (vec_of(n, -5.0, 5.0), matrix(n, -5.0, 5.0)))
    ) {
        let n = phi.len();
        let grad = nonlocal_gradient(&phi, n).unwrap();
        let div = nonlocal_divergence(&j);
        let lhs: f64 = phi.iter().zip(&div).map(|(p, d)| p * d).sum();
        let rhs = -0.5 * grad.as_slice().iter().zip(j.as_slice()).map(|(g, f)| g * f).sum::<f64>();
        prop_assert!(close(lhs, rhs, 1e-12), "{lhs} vs {rhs}");
    }

    #[test]
    fn gradient_is_antisymmetric(phi in (1usize..10).prop_flat_map(|n| vec_of(n, -5.0, 5.0))) {
        let g = nonlocal_gradient(&phi, phi.len()).unwrap();
        prop_assert_eq!(g.antisymmetry_defect().0, 0.0);
    }

    #[test]
    fn d_infinity_is_a_metric(
        (a, b, c) in (1usize..5, 1usize..5).prop_flat_map(|(n, len)| (trajectory(n, len), trajectory(n, len), trajectory(n, len)))
    ) {
        let ab = d_infinity(&a, &b).unwrap();
        prop_assert_eq!(d_infinity(&a, &a).unwrap(), 0.0);
        prop_assert_eq!(ab, d_infinity(&b, &a).unwrap());
        prop_assert!(ab >= 0.0);
        let ac = d_infinity(&a, &c).unwrap();
        let cb = d_infinity(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-12);
    }

    #[test]
    fn tv_norm_is_a_norm(
        (x, y, s) in (1usize..10).prop_flat_map(|n| (vec_of(n, -3.0, 3.0), vec_of(n, -3.0, 3.0), -4.0f64..4.0))
    ) {
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        prop_assert!(tv_norm(&sum) <= tv_norm(&x) + tv_norm(&y) + 1e-12);
        let scaled: Vec<f64> = x.iter().map(|a| s * a).collect();
        prop_assert!(close(tv_norm(&scaled), s.abs() * tv_norm(&x), 1e-14));
        prop_assert!(close(tv_distance(&x, &y), tv_norm(&x.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>()), 1e-14));
    }

    #[test]
    fn mass_rhs_sums_to_zero(inst in instance(true), interp in interpolation()) {
        let rates = mass_rhs(&inst.graph, &inst.eta, &inst.rho, &inst.v, &interp).unwrap();
        let scale: f64 = rates.iter().map(|r| r.abs()).sum::<f64>() + 1.0;
        prop_assert!(rates.iter().sum::<f64>().abs() <= 1e-13 * scale);
    }

    #[test]
    fn upwind_never_drains_an_empty_vertex(inst in instance(false), empty in 0usize..8) {
        let mut rho = inst.rho.clone();
        let k = empty % rho.len();
        rho.0[k] = 0.0;
        let rates = mass_rhs(&inst.graph, &inst.eta, &rho, &inst.v, &FluxInterpolation::upwind()).unwrap();
        prop_assert!(rates[k] >= 0.0, "rate {} at empty vertex", rates[k]);
    }

    #[test]
    fn flux_on_one_edge_only_moves_its_endpoints(inst in instance(true), interp in interpolation(), a in 0usize..8, b in 0usize..8, bump in 0.1f64..5.0) {
        let n = inst.graph.len();
        let (a, b) = (a % n, b % n);
        prop_assume!(a != b);
        let mut eta = inst.eta.clone();
        eta.set(a, b, eta.get(a, b) + bump);
        let before = mass_rhs(&inst.graph, &inst.eta, &inst.rho, &inst.v, &interp).unwrap();
        let after = mass_rhs(&inst.graph, &eta, &inst.rho, &inst.v, &interp).unwrap();
        for k in (0..n).filter(|&k| k != a && k != b) {
            prop_assert_eq!(before[k], after[k]);
        }
    }

    #[test]
    fn mass_rhs_is_positively_homogeneous(inst in instance(true), interp in interpolation(), alpha in 0.01f64..100.0) {
        let scaled = MassVector(inst.rho.as_slice().iter().map(|r| alpha * r).collect());
        let base = mass_rhs(&inst.graph, &inst.eta, &inst.rho, &inst.v, &interp).unwrap();
        let out = mass_rhs(&inst.graph, &inst.eta, &scaled, &inst.v, &interp).unwrap();
        for (x, y) in base.iter().zip(&out) {
            prop_assert!(close(alpha * x, *y, 1e-12), "{} vs {}", alpha * x, y);
        }
    }

    #[test]
    fn convolution_target_is_linear(
        inst in instance(true),
        sigma in 0.05f64..1.0,
        scale in -2.0f64..2.0,
        t in 0.0f64..1.0,
        c in -3.0f64..3.0,
    ) {
        let n = inst.graph.len();
        let other = MassVector((0..n).map(|i| (i as f64 * 0.37).sin()).collect());
        let om = OmegaFunctional::convolution(PairKernel::Gaussian { sigma }, scale);
        let combo = MassVector(inst.rho.as_slice().iter().zip(other.as_slice()).map(|(a, b)| a + c * b).collect());
        let w1 = eval_omega(&om, t, &inst.graph, &inst.rho).unwrap();
        let w2 = eval_omega(&om, t, &inst.graph, &other).unwrap();
        let w = eval_omega(&om, t, &inst.graph, &combo).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert!(close(w.get(i, j), w1.get(i, j) + c * w2.get(i, j), 1e-12));
            }
        }
        prop_assert_eq!(w.sup_distance(&w.transpose()), 0.0);
    }

    #[test]
    fn velocity_lipschitz_quotient_below_closed_form(
        inst in instance(true),
        sigma in 0.05f64..1.0,
        strength in -2.0f64..2.0,
    ) {
        let n = inst.graph.len();
        let field = VelocityField::interaction(PairKernel::Gaussian { sigma }, strength);
        let other = MassVector((0..n).map(|i| (i as f64 * 1.3).cos()).collect());
        let d = tv_distance(inst.rho.as_slice(), other.as_slice());
        prop_assume!(d > 1e-9);
        let va = eval_velocity(&field, 0.0, &inst.graph, &inst.rho).unwrap();
        let vb = eval_velocity(&field, 0.0, &inst.graph, &other).unwrap();
        let diff = EdgeMatrix::from_fn(n, |i, j| va.get(i, j) - vb.get(i, j));
        let q = compressibility(&diff, &inst.graph) / d;
        let lv = field.closed_form_constants(&inst.graph, 1.0).l_v;
        prop_assert!(q <= lv * (1.0 + 1e-12), "quotient {q} above closed form {lv}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn integration_preserves_mass(
        inst in instance(true),
        interp in interpolation(),
        regime in prop_oneof![
            Just(Regime::Coupled),
            Just(Regime::StaticGraph),
            Just(Regime::QuasiStatic),
            (0.1f64..10.0).prop_map(|epsilon| Regime::SlowGraph { epsilon }),
        ],
    ) {
        let spec = SystemSpec::new(
            inst.graph.clone(),
            interp,
            VelocityField::interaction(PairKernel::Gaussian { sigma: 0.3 }, 0.5),
            OmegaFunctional::convolution(PairKernel::Gaussian { sigma: 0.4 }, 0.5),
            regime,
            0.2,
            tv_norm(inst.rho.as_slice()) + 1.0,
        )
        .unwrap();
        let traj = integrate(&spec, &inst.rho, &inst.eta, &IntegratorConfig::rk4(0.01)).unwrap();
        let m0 = inst.rho.total();
        for r in &traj.rho {
            prop_assert!((r.total() - m0).abs() <= 1e-12 * (1.0 + tv_norm(inst.rho.as_slice())));
        }
    }
}
