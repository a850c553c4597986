mod support;

use autopath::mpc::{linearize, step_unwrapped, ControlInput, MpcParams, VehicleState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::central_jacobian;

fn random_point(rng: &mut ChaCha8Rng) -> (VehicleState, ControlInput) {
    let v: f64 = rng.random_range(0.5..10.0);
    let a_lo = (-3.0f64).max((0.25 - v * v) / 2.0);
    let s = VehicleState::new(
        rng.random_range(-50.0..50.0),
        rng.random_range(-50.0..50.0),
        rng.random_range(-3.5..3.5),
        v,
        rng.random_range(-0.5..0.5),
    );
    let u = ControlInput::new(rng.random_range(a_lo..3.0), rng.random_range(-0.05..0.05));
    (s, u)
}

fn stacked(p: &MpcParams) -> impl Fn(&[f64]) -> Vec<f64> + '_ {
    move |z: &[f64]| {
        let s = VehicleState::from_array([z[0], z[1], z[2], z[3], z[4]]);
        step_unwrapped(&s, &ControlInput::new(z[5], z[6]), p).to_array().to_vec()
    }
}

fn check_jacobians(p: &MpcParams, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let (s, u) = random_point(&mut rng);
        let lin = linearize(&s, &u, p);
        let mut z = s.to_array().to_vec();
        z.extend([u.accel, u.steer_change]);
        let fd = central_jacobian(stacked(p), &z, 1e-5);
        for r in 0..5 {
            for c in 0..7 {
                let analytic = if c < 5 { lin.a[r][c] } else { lin.b[r][c - 5] };
                let rel = (analytic - fd[r][c]).abs() / fd[r][c].abs().max(1e-2);
                worst = worst.max(rel);
                assert!(rel <= 1e-4, "point {i} entry ({r},{c}): {analytic} vs {}", fd[r][c]);
            }
        }
    }
    assert!(worst <= 1e-4);
}

#[test]
fn jacobians_match_central_differences() {
    check_jacobians(&MpcParams::default(), 1);
}

#[test]
fn jacobians_match_central_differences_with_steered_travel() {
    let p = MpcParams {
        steering_in_position: true,
        ..Default::default()
    };
    check_jacobians(&p, 2);
}

#[test]
fn affine_map_is_exact_at_the_expansion_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for steered in [false, true] {
        let p = MpcParams {
            steering_in_position: steered,
            ..Default::default()
        };
        for _ in 0..100 {
            let (s, u) = random_point(&mut rng);
            let exact = step_unwrapped(&s, &u, &p).to_array();
            let affine = linearize(&s, &u, &p).apply(&s, &u).to_array();
            for (a, b) in exact.iter().zip(affine) {
                assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            }
        }
    }
}

#[test]
fn heading_sensitivity_to_steering_change_is_step_over_wheelbase_when_straight() {
    let p = MpcParams::default();
    let s = VehicleState::new(0.0, 0.0, 0.3, 5.0, 0.0);
    let lin = linearize(&s, &ControlInput::new(0.0, 0.0), &p);
    assert_eq!(lin.b[2][1], p.step / p.wheelbase);
    assert_eq!(lin.a[2][4], p.step / p.wheelbase);
}
