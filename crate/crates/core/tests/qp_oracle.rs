mod support;

use autopath::qp::{solve_qp, ConvexQp, QpSettings};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::{dense_qp_oracle, random_dense_qp};

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[test]
fn matches_active_set_oracle_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..60 {
        let eq = if i % 2 == 0 { 0 } else { 5 };
        let dense = random_dense_qp(&mut rng, 50, 30, eq);
        let (x_ref, f_ref) = dense_qp_oracle(&dense);
        let sol = solve_qp(&dense.to_sparse(), &QpSettings::default()).unwrap();
        assert!(relative(sol.objective, f_ref) <= 1e-5, "instance {i}: {} vs {f_ref}", sol.objective);
        let x = DVector::from_vec(sol.x.clone());
        assert!(f_ref <= dense.objective(&x) + 1e-9 * f_ref.abs().max(1.0), "instance {i}");
        assert!((dense.objective(&x_ref) - f_ref).abs() < 1e-9);
        assert!((&dense.g * &x - &dense.h).max() <= 1e-6);
        if eq > 0 {
            assert!((&dense.a * &x - &dense.b).amax() <= 1e-6);
        }
    }
}

#[test]
fn equality_only_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let dense = random_dense_qp(&mut rng, 20, 0, 6);
        let n = 20;
        let me = 6;
        let mut k = DMatrix::zeros(n + me, n + me);
        k.view_mut((0, 0), (n, n)).copy_from(&dense.p);
        k.view_mut((n, 0), (me, n)).copy_from(&dense.a);
        k.view_mut((0, n), (n, me)).copy_from(&dense.a.transpose());
        let mut rhs = DVector::zeros(n + me);
        rhs.rows_mut(0, n).copy_from(&(-&dense.q));
        rhs.rows_mut(n, me).copy_from(&dense.b);
        let exact = k.lu().solve(&rhs).unwrap().rows(0, n).into_owned();
        let sol = solve_qp(&dense.to_sparse(), &QpSettings::default()).unwrap();
        let x = DVector::from_vec(sol.x);
        assert!((&x - &exact).amax() < 1e-6);
    }
}

#[test]
fn unconstrained_minimum_of_a_separable_bowl() {
    let mut qp = ConvexQp::new(3);
    for (i, c) in [1.0, -2.0, 0.5].into_iter().enumerate() {
        qp.add_quad(i, i, 1.0);
        qp.q[i] = -2.0 * c;
    }
    let sol = solve_qp(&qp, &QpSettings::default()).unwrap();
    for (x, c) in sol.x.iter().zip([1.0, -2.0, 0.5]) {
        assert!((x - c).abs() < 1e-7);
    }
}
