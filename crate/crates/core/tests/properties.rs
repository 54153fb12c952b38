use ldg_core::asymptotics::{compute_xyz, corrector_a, linearized_apply};
use ldg_core::bulk::{f_bulk_shifted, grad_f_bulk, f_bulk, BulkCoeffs};
use ldg_core::eigen::eig3;
use ldg_core::experiment::{BoundarySpec, BulkParams, ExperimentConfig};
use ldg_core::fields::{boundary_near_constant, energy_ldg, GridSpec, TensorField, TiltPattern};
use ldg_core::geometry::sampling::{normal_basis, tangent_basis};
use ldg_core::geometry::{Geometry, HarmonicForm, ManifoldPoint};
use ldg_core::solver::{solve_harmonic, solve_ldg, SolveConfig};
use ldg_core::tensor::poly_min;
use ldg_core::{MaterialParams, QTensor, SymMatrix};
use proptest::prelude::*;

fn sym() -> impl Strategy<Value = SymMatrix> {
    prop::array::uniform6(-10.0..10.0f64).prop_map(|c| SymMatrix::new(c[0], c[1], c[2], c[3], c[4], c[5]))
}

fn qtensor(bound: f64) -> impl Strategy<Value = QTensor> {
    prop::array::uniform5(-bound..bound).prop_map(QTensor::from_components)
}

fn director() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-1.0..1.0f64)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-2)
        .prop_map(|v| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            [v[0] / n, v[1] / n, v[2] / n]
        })
}

fn params() -> impl Strategy<Value = MaterialParams> {
    (0.2..3.0f64, 0.2..3.0f64, 0.2..3.0f64, 0.01..2.0f64)
        .prop_map(|(a, b, c, l)| MaterialParams::new(a, b, c, l).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn eig3_reconstructs_and_is_orthonormal(a in sym()) {
        let e = eig3(&a);
        let scale = a.norm().max(1.0);
        prop_assert!((e.reconstruct() - a).norm() <= 1e-12 * scale);
        let v = e.vectors;
        let vtv = v.transpose() * v;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                prop_assert!((vtv.0[i][j] - target).abs() < 1e-12);
            }
        }
        prop_assert!(e.values[0] >= e.values[1] && e.values[1] >= e.values[2]);
    }
}

proptest! {
    #[test]
    fn qtensor_operations_stay_traceless(a in qtensor(5.0), b in qtensor(5.0), k in -3.0..3.0f64) {
        for m in [a + b, a - b, a * k, -a, QTensor::from_sym(a.square()), QTensor::from_sym(a.as_sym().anticommutator(b.as_sym()))] {
            let full = m.to_mat3();
            prop_assert!(full.trace().abs() <= 1e-14 * full.norm().max(1.0));
            prop_assert_eq!(full.transpose(), full);
        }
    }

    #[test]
    fn trace_of_square_is_frobenius_norm(a in qtensor(5.0)) {
        prop_assert!((a.tr2() - a.norm_sq()).abs() <= 1e-13 * a.norm_sq().max(1.0));
        prop_assert!((a.square().trace() - a.norm_sq()).abs() <= 1e-13 * a.norm_sq().max(1.0));
    }

    #[test]
    fn projection_is_idempotent(n in director(), pert in qtensor(0.3), p in params()) {
        let s = p.s_plus();
        let geom = Geometry::new(&p);
        let q = QTensor::uniaxial(n, s) + pert * s;
        if let Ok(first) = geom.project(&q, 0.1 * s) {
            let second = geom.project(first.q(), 0.1 * s).unwrap();
            prop_assert!((*second.q() - *first.q()).norm() <= 1e-12 * s.max(1.0));
        }
    }

    #[test]
    fn splitting_is_a_direct_sum(n in director(), a in sym(), p in params()) {
        let geom = Geometry::new(&p);
        let base = ManifoldPoint::from_director(n, p.s_plus()).unwrap();
        let split = geom.split(&a, &base);
        let again = geom.split(split.tangential.as_sym(), &base);
        prop_assert!(again.normal.norm() <= 1e-10 * a.norm().max(1.0));
        prop_assert!((split.tangential.to_sym() + split.normal - a).norm() <= 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn tangent_and_normal_bases_are_orthogonal(n in director(), p in params()) {
        let s = p.s_plus();
        let base = ManifoldPoint::from_director(n, s).unwrap();
        let t = tangent_basis(&base, s);
        let nb = normal_basis(&base);
        let gram = |u: &QTensor, v: &QTensor| u.dot(v);
        for x in &t {
            for y in &nb {
                prop_assert!(gram(x, y).abs() <= 1e-10 * x.norm() * y.norm());
            }
        }
        prop_assert!(gram(&t[0], &t[1]).abs() <= 1e-10 * t[0].norm() * t[1].norm());
        prop_assert!(t.iter().all(|x| x.norm() > 1e-3));
        let normals: Vec<SymMatrix> = nb.iter().map(|x| *x.as_sym()).collect();
        let det = {
            let g = |i: usize, j: usize| normals[i].dot(&normals[j]);
            g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1)) - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
                + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0))
        };
        prop_assert!(det > 1e-6);
    }

    #[test]
    fn second_form_is_symmetric(n in director(), c in prop::array::uniform4(-2.0..2.0f64), p in params()) {
        let s = p.s_plus();
        let geom = Geometry::new(&p);
        let base = ManifoldPoint::from_director(n, s).unwrap();
        let t = tangent_basis(&base, s);
        let x = t[0] * c[0] + t[1] * c[1];
        let y = t[0] * c[2] + t[1] * c[3];
        let xy = geom.second_fundamental_form(&x, &y, &base).unwrap();
        let yx = geom.second_fundamental_form(&y, &x, &base).unwrap();
        prop_assert!((xy - yx).norm() <= 1e-12 * (x.norm() * y.norm()).max(1.0));
    }

    #[test]
    fn harmonic_forms_agree(n in director(), c in prop::array::uniform6(-2.0..2.0f64), p in params()) {
        let s = p.s_plus();
        let geom = Geometry::new(&p);
        let base = ManifoldPoint::from_director(n, s).unwrap();
        let t = tangent_basis(&base, s);
        let grads = [t[0] * c[0] + t[1] * c[1], t[0] * c[2] + t[1] * c[3], t[0] * c[4] + t[1] * c[5]];
        let forms = [HarmonicForm::Trace, HarmonicForm::Right, HarmonicForm::Left]
            .map(|f| geom.harmonic_rhs(&base, &grads, f).unwrap());
        let scale = grads.iter().map(|g| g.norm_sq()).sum::<f64>().max(1.0);
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((forms[i] - forms[j]).norm() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn bulk_gradient_matches_central_differences(q in qtensor(1.5), d in qtensor(1.0), p in params()) {
        let h = 1e-5;
        let fd = (f_bulk(&(q + d * h), &p) - f_bulk(&(q - d * h), &p)) / (2.0 * h);
        let exact = grad_f_bulk(&q, &p).dot(&d);
        prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0));
    }

    #[test]
    fn shifted_bulk_is_nonnegative(q in qtensor(3.0), p in params()) {
        let v = f_bulk_shifted(&q, &p);
        let scale = f_bulk(&QTensor::ZERO, &p).abs().max(p.s_plus().powi(4));
        prop_assert!(v >= -1e-13 * scale);
        if v.abs() <= 1e-14 * scale {
            prop_assert!(poly_min(&q, p.s_plus()).norm() <= 1e-5 * p.s_plus().powi(2));
        }
    }

    #[test]
    fn minimal_polynomial_square_expansion(q in qtensor(3.0), s in 0.2..4.0f64) {
        let (t2, t3) = (q.tr2(), q.tr3());
        let g = 0.5 * t2 * t2 - 2.0 / 3.0 * s * t3 - s * s / 3.0 * t2 + 4.0 / 27.0 * s.powi(4);
        let direct = poly_min(&q, s).norm_sq();
        prop_assert!((g - direct).abs() <= 1e-12 * (1.0 + t2 * t2 + s.powi(4)));
        let h = BulkCoeffs::poly_min_square().eval(&q, s);
        prop_assert!((h - s * s * direct).abs() <= 1e-12 * s * s * (1.0 + t2 * t2 + s.powi(4)));
    }
}

fn random_field(g: &GridSpec, seed: &[f64; 5], amp: f64) -> TensorField {
    TensorField::from_fn(g, |_, x| {
        let w = |k: usize| amp * (seed[k] * (x[0] + 2.0 * x[1]) + x[2] * seed[(k + 1) % 5]).sin();
        QTensor::new(w(0), w(1), w(2), w(3), w(4))
    })
}

fn manifold_field(g: &GridSpec, seed: &[f64; 3], s: f64) -> TensorField {
    TensorField::from_fn(g, |_, x| {
        let v = [
            (seed[0] * x[0] + x[1]).sin() + 0.2,
            (seed[1] * x[1] - x[2]).cos(),
            1.0 + 0.5 * (seed[2] * x[2] + x[0]).sin(),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        QTensor::uniaxial([v[0] / n, v[1] / n, v[2] / n], s)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn energy_parts_are_nonnegative(seed in prop::array::uniform5(-3.0..3.0f64), amp in 0.0..2.0f64, p in params()) {
        let g = GridSpec::cube(5, 1.0).unwrap();
        let f = random_field(&g, &seed, amp);
        let e = energy_ldg(&f, &p);
        prop_assert!(e.dirichlet >= 0.0);
        prop_assert!(e.bulk >= -1e-12);
        prop_assert!((e.total - (0.5 * p.l() * e.dirichlet + e.bulk)).abs() <= 1e-12 * e.total.abs().max(1.0));
    }

    #[test]
    fn x_field_definition(seed in prop::array::uniform5(-3.0..3.0f64), amp in 0.0..2.0f64, p in params()) {
        let g = GridSpec::cube(4, 1.0).unwrap();
        let f = random_field(&g, &seed, amp);
        let s = p.s_plus();
        let d = compute_xyz(&f, &p);
        for i in g.interior_indices() {
            let q = *f.get(i).as_sym();
            let lhs = d.x.get(i) * p.l() + q * (s / 3.0) + SymMatrix::scaled_identity(2.0 / 9.0 * s * s);
            prop_assert!((lhs - q.square()).norm() <= 1e-12 * (1.0 + q.norm_sq() + s * s));
        }
    }

    #[test]
    fn corrector_a_is_normal(seed in prop::array::uniform3(-2.0..2.0f64), p in params()) {
        let g = GridSpec::cube(5, 1.0).unwrap();
        let s = p.s_plus();
        let geom = Geometry::new(&p);
        let f = manifold_field(&g, &seed, s);
        let a = corrector_a(&f, &p).unwrap();
        for i in g.interior_indices() {
            let av = a.get(i);
            let tangential = geom.tangential_part(av.as_sym(), &f.get(i));
            prop_assert!(tangential.norm() <= 1e-8 * av.norm().max(1e-12));
            prop_assert!(av.as_sym().commutator(f.get(i).as_sym()).norm() <= 1e-8 * av.norm().max(1.0));
        }
    }

    #[test]
    fn linearized_operator_is_linear(
        seed in prop::array::uniform3(-2.0..2.0f64),
        s1 in prop::array::uniform5(-3.0..3.0f64),
        s2 in prop::array::uniform5(-3.0..3.0f64),
        alpha in -2.0..2.0f64,
        beta in -2.0..2.0f64,
    ) {
        let p = MaterialParams::unit(1.0).unwrap();
        let g = GridSpec::cube(5, 1.0).unwrap();
        let star = manifold_field(&g, &seed, p.s_plus());
        let zero_boundary = |f: TensorField| f.map(|i, v| if g.is_boundary(i) { QTensor::ZERO } else { *v });
        let psi1 = zero_boundary(random_field(&g, &s1, 1.0));
        let psi2 = zero_boundary(random_field(&g, &s2, 1.0));
        let combo = psi1.map(|i, v| *v * alpha + psi2.get(i) * beta);
        let (l1, l2, lc) = (
            linearized_apply(&star, &psi1, &p).unwrap(),
            linearized_apply(&star, &psi2, &p).unwrap(),
            linearized_apply(&star, &combo, &p).unwrap(),
        );
        for i in g.interior_indices() {
            let expect = l1.get(i) * alpha + l2.get(i) * beta;
            prop_assert!((lc.get(i) - expect).norm() <= 1e-12 * expect.norm().max(1.0) * 100.0);
        }
    }

    #[test]
    fn linearized_operator_at_constant_is_laplacian(n in director(), s1 in prop::array::uniform5(-3.0..3.0f64)) {
        let p = MaterialParams::unit(1.0).unwrap();
        let g = GridSpec::cube(5, 1.0).unwrap();
        let star = TensorField::filled(&g, QTensor::uniaxial(n, p.s_plus()));
        let psi = random_field(&g, &s1, 1.0).map(|i, v| if g.is_boundary(i) { QTensor::ZERO } else { *v });
        let out = linearized_apply(&star, &psi, &p).unwrap();
        for i in g.interior_indices() {
            prop_assert_eq!(out.get(i), psi.laplacian_at(i).to_mat3());
        }
    }

    #[test]
    fn config_round_trip(
        seed in any::<u64>(),
        dims in prop::array::uniform3(3usize..20),
        half in 1.0..10.0f64,
        ladder in prop::collection::vec(0.001..1.0f64, 1..6),
        eps in 0.0..1.0f64,
        saddle in any::<bool>(),
        hedgehog in any::<bool>(),
        bulk in prop::array::uniform3(0.1..3.0f64),
        tol in 1e-14..1e-6f64,
    ) {
        let mut ladder = ladder;
        ladder.sort_by(|a, b| b.total_cmp(a));
        ladder.dedup();
        let grid = GridSpec::new(dims, [-half; 3], [half; 3]).unwrap();
        let h = grid.spacing().into_iter().fold(0.0, f64::max);
        let boundary = if hedgehog {
            BoundarySpec::Hedgehog
        } else {
            BoundarySpec::NearConstant { eps, pattern: if saddle { TiltPattern::Saddle } else { TiltPattern::Tilt } }
        };
        let cfg = ExperimentConfig {
            seed,
            margin: 2.0 * h,
            output_dir: "out/x".into(),
            l_ladder: ladder,
            params: BulkParams { a2: bulk[0], b2: bulk[1], c2: bulk[2] },
            grid,
            boundary,
            solver: SolveConfig { residual_tol: tol, ..Default::default() },
        };
        prop_assume!(cfg.validate().is_ok());
        let text = cfg.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn solvers_keep_boundary_and_decrease_energy(eps in 0.0..0.5f64, saddle in any::<bool>(), l in 0.02..0.5f64) {
        let pattern = if saddle { TiltPattern::Saddle } else { TiltPattern::Tilt };
        let g = GridSpec::cube(5, 1.0).unwrap();
        let p = MaterialParams::unit(l).unwrap();
        let s = p.s_plus();
        let init = boundary_near_constant(&g, &p, eps, pattern).unwrap();
        let cfg = SolveConfig { residual_tol: 1e-10, max_iters: 20_000, ..Default::default() };
        let h = solve_harmonic(&init, &p, &cfg).unwrap();
        let ldg = solve_ldg(&h.field, &p, &cfg).unwrap();
        for r in [&h, &ldg] {
            for i in 0..g.len() {
                if g.is_boundary(i) {
                    prop_assert_eq!(r.field.get(i).components(), init.get(i).components());
                }
            }
            prop_assert!(r.energy_history.windows(2).all(|w| w[1] <= w[0]));
            prop_assert!(r.field.values().iter().all(|q| q.to_mat3().trace().abs() <= 1e-13 * s));
        }
        prop_assert!(h.field.values().iter().all(|q| poly_min(q, s).norm() <= 1e-10));
        let bound = (2.0f64 / 3.0).sqrt() * s + 1e-6;
        prop_assert!(ldg.field.values().iter().all(|q| q.norm() <= bound));
    }
}

#[test]
fn stencil_error_is_second_order() {
    let err = |n: usize| {
        let g = GridSpec::cube(n, 1.0).unwrap();
        let k = [1.1, 0.7, 1.3];
        let f = TensorField::from_fn(&g, |_, x| {
            let w = (k[0] * x[0]).sin() * (k[1] * x[1]).cos() * (k[2] * x[2]).sin();
            QTensor::new(w, 0.5 * w, -w, 0.2 * w, w)
        });
        let c = -(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
        let mut lap_err: f64 = 0.0;
        let mut grad_err: f64 = 0.0;
        for i in g.interior_indices() {
            let x = g.position(i);
            let w = (k[0] * x[0]).sin() * (k[1] * x[1]).cos() * (k[2] * x[2]).sin();
            let exact = QTensor::new(w, 0.5 * w, -w, 0.2 * w, w) * c;
            lap_err = lap_err.max((f.laplacian_at(i) - exact).norm());
            let dw = [
                k[0] * (k[0] * x[0]).cos() * (k[1] * x[1]).cos() * (k[2] * x[2]).sin(),
                -k[1] * (k[0] * x[0]).sin() * (k[1] * x[1]).sin() * (k[2] * x[2]).sin(),
                k[2] * (k[0] * x[0]).sin() * (k[1] * x[1]).cos() * (k[2] * x[2]).cos(),
            ];
            let gr = f.gradient_at(i);
            for a in 0..3 {
                grad_err = grad_err.max((gr[a] - QTensor::new(1.0, 0.5, -1.0, 0.2, 1.0) * dw[a]).norm());
            }
        }
        (g.spacing()[0], lap_err, grad_err)
    };
    let (h1, l1, g1) = err(9);
    let (h2, l2, g2) = err(19);
    let expected = (h1 / h2).powi(2);
    for ratio in [l1 / l2, g1 / g2] {
        assert!((ratio / expected - 1.0).abs() < 0.2, "ratio {ratio} expected {expected}");
    }
}

#[test]
fn harmonic_solutions_converge_under_refinement() {
    let p = MaterialParams::unit(1.0).unwrap();
    let s = p.s_plus();
    let cfg = SolveConfig { residual_tol: 1e-9, ..Default::default() };
    let solve = |cells: usize| {
        let g = GridSpec::cube(cells - 1, 1.0).unwrap();
        let init = boundary_near_constant(&g, &p, 0.3, TiltPattern::Saddle).unwrap();
        solve_harmonic(&init, &p, &cfg).unwrap().field
    };
    let fields = [solve(6), solve(12), solve(24)];
    // Difference on nodes of the coarser grid, excluding the boundary.
    let diff = |coarse: &TensorField, fine: &TensorField| {
        let gc = coarse.grid();
        let gf = fine.grid();
        let mut worst: f64 = 0.0;
        for i in gc.interior_indices() {
            let c = gc.coords(i);
            let j = gf.index([2 * c[0], 2 * c[1], 2 * c[2]]);
            worst = worst.max((coarse.get(i) - fine.get(j)).norm());
        }
        worst
    };
    let d1 = diff(&fields[0], &fields[1]);
    let d2 = diff(&fields[1], &fields[2]);
    let ratio = d1 / d2;
    assert!(d1 > 1e-6 * s);
    assert!((ratio / 4.0 - 1.0).abs() < 0.3, "ratio {ratio} ({d1:e}, {d2:e})");
}
