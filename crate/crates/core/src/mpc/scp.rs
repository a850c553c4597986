use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corridor::Corridor;
use crate::geometry::{angle_diff, Point2};
use crate::planner::PlannedPath;
use crate::qp::{solve_qp, QpSettings};

use super::dynamics::{linearize_dynamics, step_unwrapped};
use super::subproblem::{assemble_subproblem, SubproblemOptions};
use super::{ControlInput, MpcError, MpcParams, VehicleState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationDiagnostics {
    pub cost: f64,
    /// Largest nonlinear-dynamics defect of the iterate.
    pub defect: f64,
    /// Wall-clock seconds spent assembling and solving.
    pub solve_time: f64,
    pub qp_iterations: usize,
    /// The trust region, and possibly the slack cap, had to be dropped.
    pub relaxed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySolution {
    pub start: VehicleState,
    /// States after each step (the start state excluded).
    pub states: Vec<VehicleState>,
    pub controls: Vec<ControlInput>,
    /// `(left, right)` corridor slack per step.
    pub slacks: Vec<(f64, f64)>,
    pub cost: f64,
    pub initial_defect: f64,
    pub defect: f64,
    pub iterations: Vec<IterationDiagnostics>,
}

impl TrajectorySolution {
    pub fn total_solve_time(&self) -> f64 {
        self.iterations.iter().map(|d| d.solve_time).sum()
    }

    pub fn relaxed(&self) -> bool {
        self.iterations.iter().any(|d| d.relaxed)
    }

    /// Equality ignoring wall-clock timings.
    pub fn same_result(&self, other: &Self) -> bool {
        let strip = |s: &Self| {
            let mut c = s.clone();
            c.iterations.iter_mut().for_each(|d| d.solve_time = 0.0);
            c
        };
        strip(self) == strip(other)
    }
}

/// States reached by applying `controls` from `start`, start included.
pub fn rollout(start: &VehicleState, controls: &[ControlInput], params: &MpcParams) -> Vec<VehicleState> {
    let mut out = Vec::with_capacity(controls.len() + 1);
    out.push(*start);
    for u in controls {
        let next = step_unwrapped(out.last().unwrap(), u, params);
        out.push(next);
    }
    out
}

fn max_defect(states: &[VehicleState], controls: &[ControlInput], params: &MpcParams) -> f64 {
    controls
        .iter()
        .enumerate()
        .map(|(k, u)| {
            let pred = step_unwrapped(&states[k], u, params).to_array();
            let got = states[k + 1].to_array();
            pred.iter().zip(got).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max)
}

fn path_point_ahead(path: &PlannedPath, from: usize, ahead: f64) -> Point2 {
    let last = path.poses.len() - 1;
    let steps = (ahead / path.spacing).round() as usize;
    let idx = from + steps;
    if idx <= last {
        return path.poses[idx].pose.position();
    }
    let end = &path.poses[last];
    let extra = (idx - last) as f64 * path.spacing;
    end.pose.position() + end.pose.direction() * extra
}

fn closest_near(path: &PlannedPath, p: Point2, hint: usize) -> usize {
    let lo = hint.saturating_sub(5);
    let hi = (hint + 15).min(path.poses.len());
    (lo..hi)
        .min_by(|&a, &b| {
            path.poses[a]
                .pose
                .position()
                .distance_squared(p)
                .total_cmp(&path.poses[b].pose.position().distance_squared(p))
        })
        .unwrap_or(hint)
}

/// Dynamically consistent guess: pure pursuit along `path` with speed eased
/// toward each corridor step's target.
pub fn initial_guess(
    start: &VehicleState,
    path: &PlannedPath,
    corridor: &Corridor,
    params: &MpcParams,
) -> Result<Vec<ControlInput>, MpcError> {
    if path.poses.len() < 2 {
        return Err(MpcError::PathTooShort);
    }
    let n = params.horizon.min(corridor.len());
    let lim = &params.limits;
    let mut s = *start;
    let mut idx = path.closest_index(s.position());
    let mut controls = Vec::with_capacity(n);
    for k in 0..n {
        idx = closest_near(path, s.position(), idx);
        let target = path_point_ahead(path, idx, params.lookahead);
        let to = target - s.position();
        let dist = to.norm().max(1e-6);
        let alpha = angle_diff(to.angle(), s.theta);
        let curvature = 2.0 * alpha.sin() / dist;
        let bound = params.lateral_steer_bound(s.v.max(corridor.steps[k].v_ref));
        let psi_des = (params.wheelbase * curvature).atan().clamp(-bound, bound);
        let dpsi = (psi_des - s.psi).clamp(-lim.steer_change_max, lim.steer_change_max);
        let v_ref = corridor.steps[k].v_ref;
        let accel = ((v_ref * v_ref - s.v * s.v) / (2.0 * params.step)).clamp(-lim.a_max, lim.a_max);
        let u = ControlInput::new(accel, dpsi);
        s = step_unwrapped(&s, &u, params);
        controls.push(u);
    }
    Ok(controls)
}

/// Runs the SCP iterations starting from the rollout of `guess`.
pub fn scp_solve_from(
    start: &VehicleState,
    guess: &[ControlInput],
    corridor: &Corridor,
    params: &MpcParams,
) -> Result<TrajectorySolution, MpcError> {
    params.validate()?;
    let n = params.horizon.min(corridor.len()).min(guess.len());
    if n < 2 {
        return Err(MpcError::HorizonTooShort(n));
    }
    let base = corridor.truncated(n);
    let min_width = base.vehicle_width + 2.0 * params.hard_margin;
    if let Some((step, s)) = base.steps.iter().enumerate().find(|(_, s)| s.width < min_width) {
        return Err(MpcError::PinchedCorridor { step, width: s.width });
    }
    let mut controls = guess[..n].to_vec();
    let mut states = rollout(start, &controls, params);
    let initial_defect = max_defect(&states, &controls, params);
    let settings = QpSettings {
        tolerance: params.qp_tolerance,
        max_iterations: params.qp_max_iterations,
        ..Default::default()
    };

    let mut corr = base.clone();
    let mut iterations = Vec::with_capacity(params.scp_iterations);
    let mut slacks = Vec::new();
    let mut cost = 0.0;
    for it in 0..params.scp_iterations {
        let t0 = Instant::now();
        if it > 0 {
            let positions: Vec<Point2> = states[1..].iter().map(VehicleState::position).collect();
            let headings: Vec<f64> = states[1..].iter().map(|s| s.theta).collect();
            let next = base.relinearize(&positions, &headings)?;
            if next.steps.iter().all(|s| s.width >= min_width) {
                corr = next;
            }
        }
        let dynamics = linearize_dynamics(&states[..n], &controls, params);
        let mut relaxed = false;
        let attempt = |opts: SubproblemOptions| {
            let (qp, lay) = assemble_subproblem(&states, &controls, &dynamics, &corr, params, opts)?;
            solve_qp(&qp, &settings)
                .map(|sol| (sol, lay))
                .map_err(|source| MpcError::Qp { iteration: it + 1, source })
        };
        let fallbacks = [
            SubproblemOptions {
                use_trust_region: false,
                cap_slack: true,
            },
            SubproblemOptions {
                use_trust_region: false,
                cap_slack: false,
            },
        ];
        let mut result = attempt(SubproblemOptions::default());
        for opts in fallbacks {
            if !matches!(result, Err(MpcError::Qp { .. })) {
                break;
            }
            relaxed = true;
            result = attempt(opts);
        }
        let (sol, lay) = result?;
        let (new_states, new_controls, new_slacks) = lay.extract(&sol.x);
        states.truncate(1);
        states.extend(new_states);
        controls = new_controls;
        slacks = new_slacks;
        cost = sol.objective;
        iterations.push(IterationDiagnostics {
            cost,
            defect: max_defect(&states, &controls, params),
            solve_time: t0.elapsed().as_secs_f64(),
            qp_iterations: sol.iterations,
            relaxed,
        });
    }
    let defect = iterations.last().map_or(initial_defect, |d| d.defect);
    Ok(TrajectorySolution {
        start: *start,
        states: states[1..].to_vec(),
        controls,
        slacks,
        cost,
        initial_defect,
        defect,
        iterations,
    })
}

/// SCP from the pure-pursuit guess along `path`.
pub fn scp_solve(
    start: &VehicleState,
    path: &PlannedPath,
    corridor: &Corridor,
    params: &MpcParams,
) -> Result<TrajectorySolution, MpcError> {
    let guess = initial_guess(start, path, corridor, params)?;
    scp_solve_from(start, &guess, corridor, params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum TickStatus {
    Solved,
    /// Solved after dropping the trust region or the slack cap.
    Relaxed,
    Fallback { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickResult {
    pub control: ControlInput,
    pub solution: Option<TrajectorySolution>,
    pub status: TickStatus,
    pub warm_started: bool,
}

fn shifted_guess(
    measured: &VehicleState,
    previous: &TrajectorySolution,
    n: usize,
    params: &MpcParams,
) -> Option<Vec<ControlInput>> {
    if previous.controls.is_empty() {
        return None;
    }
    let travelled = previous.start.position().distance(measured.position());
    let shift = (travelled / params.step).round() as usize;
    let mut controls: Vec<ControlInput> = previous.controls.iter().skip(shift).copied().collect();
    let pad = ControlInput::new(controls.last().map_or(0.0, |u| u.accel), 0.0);
    controls.resize(n, pad);
    let tr = params.trust_region.unwrap_or_default();
    let rolled = rollout(measured, &controls, params);
    let consistent = rolled[1..]
        .iter()
        .zip(previous.states.iter().skip(shift))
        .all(|(a, b)| a.position().distance(b.position()) <= tr.position);
    consistent.then_some(controls)
}

/// One control update: solve, return the first control, and fall back to
/// braking straight when no solution is available.
pub fn mpc_tick(
    measured: &VehicleState,
    path: &PlannedPath,
    corridor: &Corridor,
    params: &MpcParams,
    previous: Option<&TrajectorySolution>,
) -> TickResult {
    let n = params.horizon.min(corridor.len());
    let warm = previous.filter(|_| params.warm_start).and_then(|p| shifted_guess(measured, p, n, params));
    let warm_started = warm.is_some();
    let outcome = match warm {
        Some(g) => scp_solve_from(measured, &g, corridor, params),
        None => scp_solve(measured, path, corridor, params),
    };
    match outcome {
        Ok(sol) => TickResult {
            control: sol.controls[0],
            status: if sol.relaxed() { TickStatus::Relaxed } else { TickStatus::Solved },
            solution: Some(sol),
            warm_started,
        },
        Err(e) => TickResult {
            control: ControlInput::new(-params.limits.a_max, 0.0),
            solution: None,
            status: TickStatus::Fallback { reason: e.to_string() },
            warm_started,
        },
    }
}
