use serde::{Deserialize, Serialize};

use crate::geometry::normalize_angle;

use super::{ControlInput, MpcParams, VehicleState};

/// One step without heading renormalisation, so trajectories stay continuous.
pub fn step_unwrapped(s: &VehicleState, u: &ControlInput, p: &MpcParams) -> VehicleState {
    let d = p.step;
    let steer = s.psi + u.steer_change;
    let travel = if p.steering_in_position { steer } else { s.theta };
    VehicleState {
        x: s.x + d * travel.cos(),
        y: s.y + d * travel.sin(),
        theta: s.theta + d * steer.tan() / p.wheelbase,
        v: (s.v * s.v + 2.0 * u.accel * d).max(0.0).sqrt(),
        psi: steer,
    }
}

pub fn step_dynamics(s: &VehicleState, u: &ControlInput, p: &MpcParams) -> VehicleState {
    let mut next = step_unwrapped(s, u, p);
    next.theta = normalize_angle(next.theta);
    next
}

/// `x⁺ ≈ a·x + b·u + c`, exact at the expansion point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineStep {
    pub a: [[f64; 5]; 5],
    pub b: [[f64; 2]; 5],
    pub c: [f64; 5],
}

impl AffineStep {
    pub fn apply(&self, x: &VehicleState, u: &ControlInput) -> VehicleState {
        let xs = x.to_array();
        let us = [u.accel, u.steer_change];
        let mut out = self.c;
        for r in 0..5 {
            for c in 0..5 {
                out[r] += self.a[r][c] * xs[c];
            }
            for c in 0..2 {
                out[r] += self.b[r][c] * us[c];
            }
        }
        VehicleState::from_array(out)
    }
}

pub fn linearize(s: &VehicleState, u: &ControlInput, p: &MpcParams) -> AffineStep {
    let d = p.step;
    let steer = s.psi + u.steer_change;
    let sec2 = 1.0 / steer.cos().powi(2);
    let next = step_unwrapped(s, u, p);
    let denom = next.v.max(p.v_floor);

    let mut a = [[0.0; 5]; 5];
    let mut b = [[0.0; 2]; 5];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    if p.steering_in_position {
        a[0][4] = -d * steer.sin();
        a[1][4] = d * steer.cos();
        b[0][1] = -d * steer.sin();
        b[1][1] = d * steer.cos();
    } else {
        a[0][2] = -d * s.theta.sin();
        a[1][2] = d * s.theta.cos();
    }
    a[2][4] = d * sec2 / p.wheelbase;
    b[2][1] = d * sec2 / p.wheelbase;
    a[3][3] = s.v / denom;
    b[3][0] = d / denom;
    b[4][1] = 1.0;

    let xs = s.to_array();
    let us = [u.accel, u.steer_change];
    let mut c = next.to_array();
    for r in 0..5 {
        for k in 0..5 {
            c[r] -= a[r][k] * xs[k];
        }
        for k in 0..2 {
            c[r] -= b[r][k] * us[k];
        }
    }
    AffineStep { a, b, c }
}

/// Affine maps about each `(states[k], controls[k])` pair.
pub fn linearize_dynamics(states: &[VehicleState], controls: &[ControlInput], p: &MpcParams) -> Vec<AffineStep> {
    states.iter().zip(controls).map(|(s, u)| linearize(s, u, p)).collect()
}
