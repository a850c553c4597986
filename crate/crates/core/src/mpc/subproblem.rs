use crate::corridor::{Corridor, HalfPlane};
use crate::qp::ConvexQp;

use super::dynamics::AffineStep;
use super::{ControlInput, MpcError, MpcParams, VehicleState};

/// Variables per stage: `[a, Δψ, x, y, θ, v, ψ, σ_left, σ_right]`, where the
/// state is the one reached at the end of the stage.
pub const STAGE_VARS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub stages: usize,
}

impl Layout {
    pub fn len(&self) -> usize {
        self.stages * STAGE_VARS
    }

    pub fn is_empty(&self) -> bool {
        self.stages == 0
    }

    pub fn accel(&self, k: usize) -> usize {
        k * STAGE_VARS
    }

    pub fn steer_change(&self, k: usize) -> usize {
        k * STAGE_VARS + 1
    }

    /// Component `c` of the state after stage `k`.
    pub fn state(&self, k: usize, c: usize) -> usize {
        k * STAGE_VARS + 2 + c
    }

    pub fn slack_left(&self, k: usize) -> usize {
        k * STAGE_VARS + 7
    }

    pub fn slack_right(&self, k: usize) -> usize {
        k * STAGE_VARS + 8
    }

    pub fn extract(&self, x: &[f64]) -> (Vec<VehicleState>, Vec<ControlInput>, Vec<(f64, f64)>) {
        let mut states = Vec::with_capacity(self.stages);
        let mut controls = Vec::with_capacity(self.stages);
        let mut slacks = Vec::with_capacity(self.stages);
        for k in 0..self.stages {
            controls.push(ControlInput::new(x[self.accel(k)], x[self.steer_change(k)]));
            states.push(VehicleState::from_array(std::array::from_fn(|c| x[self.state(k, c)])));
            slacks.push((x[self.slack_left(k)].max(0.0), x[self.slack_right(k)].max(0.0)));
        }
        (states, controls, slacks)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubproblemOptions {
    /// Cap slacks at the buffer width.
    pub cap_slack: bool,
    pub use_trust_region: bool,
}

impl Default for SubproblemOptions {
    fn default() -> Self {
        Self {
            cap_slack: true,
            use_trust_region: true,
        }
    }
}

/// Builds the convex subproblem about the expansion trajectory.
///
/// `expansion[0]` is the measured state; `expansion[k + 1]` and `controls[k]`
/// are the expansion point of stage `k`. Corridor step `k` constrains the
/// state after stage `k`.
pub fn assemble_subproblem(
    expansion: &[VehicleState],
    controls: &[ControlInput],
    dynamics: &[AffineStep],
    corridor: &Corridor,
    params: &MpcParams,
    options: SubproblemOptions,
) -> Result<(ConvexQp, Layout), MpcError> {
    let stages = controls.len().min(corridor.len()).min(dynamics.len()).min(expansion.len().saturating_sub(1));
    if stages < 2 {
        return Err(MpcError::HorizonTooShort(stages));
    }
    let lay = Layout { stages };
    let mut qp = ConvexQp::new(lay.len());
    let w = &params.weights;
    let lim = &params.limits;
    let x0 = expansion[0].to_array();

    for k in 0..stages {
        let step = &corridor.steps[k];
        let v_idx = lay.state(k, 3);
        qp.add_quad(v_idx, v_idx, w.speed);
        qp.q[v_idx] -= 2.0 * w.speed * step.v_ref;
        qp.constant += w.speed * step.v_ref * step.v_ref;
        qp.add_quad(lay.state(k, 4), lay.state(k, 4), w.steering);
        qp.add_quad(lay.accel(k), lay.accel(k), w.accel);
        qp.add_quad(lay.steer_change(k), lay.steer_change(k), w.steer_change);
        if let Some(r) = step.reference {
            for (c, target) in [(0, r.x), (1, r.y)] {
                let i = lay.state(k, c);
                qp.add_quad(i, i, w.position);
                qp.q[i] -= 2.0 * w.position * target;
                qp.constant += w.position * target * target;
            }
        }
        qp.q[lay.slack_left(k)] += w.slack_left;
        qp.q[lay.slack_right(k)] += w.slack_right;
        if k + 1 < stages && w.accel_change > 0.0 {
            let (a, b) = (lay.accel(k), lay.accel(k + 1));
            qp.add_quad(a, a, w.accel_change);
            qp.add_quad(b, b, w.accel_change);
            qp.add_quad(a, b, -2.0 * w.accel_change);
        }

        // dynamics
        let dynk = &dynamics[k];
        for r in 0..5 {
            let mut row = vec![(lay.state(k, r), 1.0)];
            let mut rhs = dynk.c[r];
            for c in 0..5 {
                let coef = dynk.a[r][c];
                if coef == 0.0 {
                    continue;
                }
                if k == 0 {
                    rhs += coef * x0[c];
                } else {
                    row.push((lay.state(k - 1, c), -coef));
                }
            }
            for (c, idx) in [lay.accel(k), lay.steer_change(k)].into_iter().enumerate() {
                if dynk.b[r][c] != 0.0 {
                    row.push((idx, -dynk.b[r][c]));
                }
            }
            qp.add_eq(row, rhs);
        }

        // corridor half-planes on body points
        let bar = &expansion[k + 1];
        let shrink = corridor.sigma_buffer + params.body_half_width + params.hard_margin;
        for &offset in &params.body_points {
            let shift = (offset / params.step).round() as isize;
            let j = (k as isize + shift).clamp(0, stages as isize - 1) as usize;
            let target = &corridor.steps[j];
            for (plane, slack) in [(target.left, lay.slack_left(k)), (target.right, lay.slack_right(k))] {
                let (row, rhs) = body_point_row(&lay, k, bar, offset, &plane, shrink, slack);
                qp.add_ineq(row, rhs);
            }
        }

        // boxes
        let slack_hi = if options.cap_slack { corridor.sigma_buffer } else { f64::INFINITY };
        qp.add_bounds(lay.slack_left(k), 0.0, slack_hi);
        qp.add_bounds(lay.slack_right(k), 0.0, slack_hi);
        qp.add_bounds(lay.accel(k), -lim.a_max, lim.a_max);
        qp.add_bounds(lay.steer_change(k), -lim.steer_change_max, lim.steer_change_max);

        let unwind = expansion[0].psi.abs() - (k + 1) as f64 * lim.steer_change_max;
        let v_cap = bar.v.max(step.v_ref);
        let psi_bound = params.lateral_steer_bound(v_cap).max(unwind + 1e-9);
        let mut bounds = [
            (f64::NEG_INFINITY, f64::INFINITY),
            (f64::NEG_INFINITY, f64::INFINITY),
            (f64::NEG_INFINITY, f64::INFINITY),
            (0.0, lim.v_max),
            (-psi_bound, psi_bound),
        ];
        if options.use_trust_region {
            if let Some(tr) = params.trust_region {
                let b = bar.to_array();
                for (c, half) in [(0, tr.position), (1, tr.position), (2, tr.angle), (4, tr.angle)] {
                    let (lo, hi) = (bounds[c].0.max(b[c] - half), bounds[c].1.min(b[c] + half));
                    if lo <= hi {
                        bounds[c] = (lo, hi);
                    }
                }
            }
        }
        for (c, (lo, hi)) in bounds.into_iter().enumerate() {
            qp.add_bounds(lay.state(k, c), lo, hi);
        }
    }
    Ok((qp, lay))
}

/// `plane·p(offset) ≤ γ − shrink + σ` with the body point linearised in θ.
fn body_point_row(
    lay: &Layout,
    k: usize,
    bar: &VehicleState,
    offset: f64,
    plane: &HalfPlane,
    shrink: f64,
    slack: usize,
) -> (Vec<(usize, f64)>, f64) {
    let mut row = vec![(lay.state(k, 0), plane.alpha), (lay.state(k, 1), plane.beta), (slack, -1.0)];
    let mut rhs = plane.gamma - shrink;
    if offset != 0.0 {
        let (s, c) = bar.theta.sin_cos();
        let along = plane.alpha * c + plane.beta * s;
        let turn = -plane.alpha * s + plane.beta * c;
        row.push((lay.state(k, 2), offset * turn));
        rhs += -offset * along + offset * turn * bar.theta;
    }
    (row, rhs)
}
