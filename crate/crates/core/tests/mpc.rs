mod support;

use autopath::corridor::Corridor;
use autopath::mpc::{
    assemble_subproblem, linearize_dynamics, mpc_tick, rollout, scp_solve_from, ControlInput, MpcParams,
    SubproblemOptions, TickStatus, VehicleState, STAGE_VARS,
};
use autopath::qp::{solve_qp, QpSettings};
use support::{straight_corridor, straight_path};

const LANE_HALF: f64 = 1.85;

fn coast(n: usize) -> Vec<ControlInput> {
    vec![ControlInput::new(0.0, 0.0); n]
}

#[test]
fn standing_start_accelerates() {
    let params = MpcParams::default();
    let corridor = straight_corridor(40, LANE_HALF, LANE_HALF, 5.0, true);
    let tick = mpc_tick(&VehicleState::new(0.0, 0.0, 0.0, 0.0, 0.0), &straight_path(60, true), &corridor, &params, None);
    assert_eq!(tick.status, TickStatus::Solved);
    assert!(tick.control.accel > 0.0);
}

#[test]
fn steady_state_needs_no_correction() {
    let params = MpcParams::default();
    let corridor = straight_corridor(40, LANE_HALF, LANE_HALF, 5.0, true);
    let tick = mpc_tick(&VehicleState::new(0.0, 0.0, 0.0, 5.0, 0.0), &straight_path(60, true), &corridor, &params, None);
    assert_eq!(tick.status, TickStatus::Solved);
    let u = tick.control;
    assert!(u.accel.hypot(u.steer_change) < 1e-3, "{u:?}");
}

#[test]
fn pinched_corridor_falls_back_to_braking() {
    let params = MpcParams::default();
    let corridor = straight_corridor(40, 0.95, 0.95, 5.0, true);
    let tick = mpc_tick(&VehicleState::new(0.0, 0.0, 0.0, 5.0, 0.0), &straight_path(60, true), &corridor, &params, None);
    assert!(matches!(tick.status, TickStatus::Fallback { .. }));
    assert_eq!(tick.control, ControlInput::new(-params.limits.a_max, 0.0));
    assert!(tick.solution.is_none());
}

fn subproblem(corridor: &Corridor, params: &MpcParams) -> (autopath::qp::ConvexQp, autopath::mpc::Layout) {
    let n = params.horizon;
    let start = VehicleState::new(0.0, 0.0, 0.0, 5.0, 0.0);
    let controls = coast(n);
    let states = rollout(&start, &controls, params);
    let dynamics = linearize_dynamics(&states[..n], &controls, params);
    assemble_subproblem(&states, &controls, &dynamics, corridor, params, SubproblemOptions::default()).unwrap()
}

#[test]
fn nine_variables_per_stage() {
    let params = MpcParams::default();
    let (qp, lay) = subproblem(&straight_corridor(40, LANE_HALF, LANE_HALF, 5.0, true), &params);
    assert_eq!(STAGE_VARS, 9);
    assert_eq!(lay.len(), 9 * params.horizon);
    assert_eq!(qp.n, lay.len());
}

#[test]
fn position_tracking_is_off_where_there_is_no_reference() {
    let params = MpcParams::default();
    let mut corridor = straight_corridor(40, LANE_HALF, LANE_HALF, 5.0, true);
    for step in &mut corridor.steps[10..20] {
        step.reference = None;
    }
    let (qp, lay) = subproblem(&corridor, &params);
    for k in 0..params.horizon {
        let gated = (10..20).contains(&k);
        for c in [0, 1] {
            let i = lay.state(k, c);
            let quad = qp.p.iter().any(|&(a, b, _)| a == i || b == i);
            assert_eq!(quad, !gated, "stage {k} coordinate {c}");
        }
        assert_eq!(qp.q[lay.state(k, 0)] != 0.0, !gated, "stage {k} linear term");
    }
}

/// Corridor half-width that forces `overlap` metres of combined slack.
fn squeezed(params: &MpcParams, overlap: f64) -> f64 {
    params.sigma_buffer + params.body_half_width + params.hard_margin - 0.5 * overlap
}

#[test]
fn slack_equals_the_hinge_of_the_violation() {
    let params = MpcParams {
        scp_iterations: 1,
        ..Default::default()
    };
    let half = squeezed(&params, 0.3);
    let corridor = straight_corridor(40, half, half, 5.0, true);
    let (qp, lay) = subproblem(&corridor, &params);
    let sol = solve_qp(&qp, &QpSettings::default()).unwrap();
    for k in 0..params.horizon {
        for slack in [lay.slack_left(k), lay.slack_right(k)] {
            let worst = qp
                .ineq
                .iter()
                .zip(&qp.ineq_rhs)
                .filter(|(row, _)| row.len() > 1 && row.contains(&(slack, -1.0)))
                .map(|(row, rhs)| {
                    row.iter().filter(|&&(c, _)| c != slack).map(|&(c, v)| v * sol.x[c]).sum::<f64>() - rhs
                })
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((sol.x[slack] - worst.max(0.0)).abs() < 1e-5, "stage {k}: {} vs {}", sol.x[slack], worst);
        }
    }
}

#[test]
fn slack_enters_the_buffer_band_and_vanishes_when_widened() {
    let params = MpcParams::default();
    let start = VehicleState::new(0.0, 0.0, 0.0, 5.0, 0.0);
    let half = squeezed(&params, 0.3);
    let narrow = scp_solve_from(&start, &coast(30), &straight_corridor(40, half, half, 5.0, true), &params).unwrap();
    let wide_half = half + params.sigma_buffer;
    let wide = scp_solve_from(&start, &coast(30), &straight_corridor(40, wide_half, wide_half, 5.0, true), &params).unwrap();

    let total: f64 = narrow.slacks.iter().map(|(l, r)| l + r).sum();
    for &(l, r) in &narrow.slacks {
        assert!(l > 1e-3 && r > 1e-3);
        assert!(l <= params.sigma_buffer + 1e-6 && r <= params.sigma_buffer + 1e-6);
    }
    let w = params.weights.slack_left;
    assert_eq!(w, params.weights.slack_right);
    let increase = narrow.cost - wide.cost;
    assert!(increase > 0.0);
    assert!((increase - w * total).abs() <= 1e-3 * increase, "{increase} vs {}", w * total);
    for &(l, r) in &wide.slacks {
        assert!(l.abs() < 1e-6 && r.abs() < 1e-6);
    }
}
