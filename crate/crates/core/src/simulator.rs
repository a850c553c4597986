//! Closed-loop simulation: plan, build a corridor, run the MPC and integrate
//! a kinematic bicycle with a lagged steering actuator.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::collision::{footprint_clearance, ObstacleSet, VehicleFootprint};
use crate::corridor::{build_corridor, classify_boundary_points, Classified, CorridorParams};
use crate::geometry::{normalize_angle, Pose2};
use crate::mpc::{mpc_tick, MpcParams, TickStatus, TrajectorySolution, VehicleState};
use crate::planner::{plan, PathPose, PlannedPath, PlannerConfig, PoseSource};
use crate::roadmap::RoadMap;
use crate::scenario::{ScenarioError, ScenarioSpec};

/// Tolerance applied when checking traces against the limits.
pub const LIMIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub pose: Pose2,
    pub v: f64,
    pub psi: f64,
    pub t: f64,
}

impl PlantState {
    pub fn at_rest(pose: Pose2) -> Self {
        Self {
            pose,
            v: 0.0,
            psi: 0.0,
            t: 0.0,
        }
    }

    pub fn vehicle_state(&self) -> VehicleState {
        VehicleState::new(self.pose.x, self.pose.y, self.pose.heading(), self.v, self.psi)
    }
}

/// What the actuators are asked for over one plant step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ActuatorCommand {
    pub accel: f64,
    /// Steering angle the first-order actuator moves toward.
    pub steer_target: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantParams {
    pub wheelbase: f64,
    pub steer_tau: f64,
    pub a_max: f64,
    pub psi_max: f64,
    pub jerk_max: f64,
    pub lat_accel_max: f64,
    /// Share of the lateral limit the steering saturation allows at the current speed.
    pub lat_accel_fraction: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            wheelbase: 1.4,
            steer_tau: 0.2,
            a_max: 3.0,
            psi_max: 0.52,
            jerk_max: 0.9,
            lat_accel_max: 3.0,
            lat_accel_fraction: 0.9,
        }
    }
}

fn derivative(s: &[f64; 5], cmd: &ActuatorCommand, p: &PlantParams) -> [f64; 5] {
    let [_, _, theta, v, psi] = *s;
    let v = v.max(0.0);
    let accel = if v <= 0.0 && cmd.accel < 0.0 { 0.0 } else { cmd.accel };
    [
        v * theta.cos(),
        v * theta.sin(),
        v * psi.tan() / p.wheelbase,
        accel,
        (cmd.steer_target - psi) / p.steer_tau,
    ]
}

/// RK4 step of the kinematic bicycle. Commands are saturated first; speed
/// never goes negative.
pub fn plant_step(state: &PlantState, cmd: &ActuatorCommand, dt: f64, p: &PlantParams) -> PlantState {
    let cmd = ActuatorCommand {
        accel: cmd.accel.clamp(-p.a_max, p.a_max),
        steer_target: cmd.steer_target.clamp(-p.psi_max, p.psi_max),
    };
    let s0 = [state.pose.x, state.pose.y, state.pose.heading(), state.v, state.psi];
    let add = |a: &[f64; 5], k: &[f64; 5], h: f64| -> [f64; 5] { std::array::from_fn(|i| a[i] + h * k[i]) };
    let k1 = derivative(&s0, &cmd, p);
    let k2 = derivative(&add(&s0, &k1, 0.5 * dt), &cmd, p);
    let k3 = derivative(&add(&s0, &k2, 0.5 * dt), &cmd, p);
    let k4 = derivative(&add(&s0, &k3, dt), &cmd, p);
    let s: [f64; 5] = std::array::from_fn(|i| s0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    PlantState {
        pose: Pose2::new(s[0], s[1], normalize_angle(s[2])),
        v: s[3].max(0.0),
        psi: s[4].clamp(-p.psi_max, p.psi_max),
        t: state.t + dt,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub control_hz: f64,
    pub plant_hz: f64,
    pub replan_deviation: f64,
    pub goal_tolerance: f64,
    /// Deceleration used to shape the speed target before the goal.
    pub stop_decel: f64,
    /// Floor on the speed target while the stop point is still ahead.
    pub approach_speed: f64,
    /// Distance past the goal at which the speed target reaches zero.
    pub stop_overshoot: f64,
    /// Straight continuation appended past the goal for the horizon.
    pub path_extension: f64,
    pub plant: PlantParams,
    pub footprint: VehicleFootprint,
    /// Keep every MPC solution in the outcome.
    pub record_solutions: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            control_hz: 10.0,
            plant_hz: 100.0,
            replan_deviation: 1.5,
            goal_tolerance: 1.0,
            stop_decel: 0.5,
            approach_speed: 0.6,
            stop_overshoot: 2.0,
            path_extension: 35.0,
            plant: PlantParams::default(),
            footprint: VehicleFootprint::default(),
            record_solutions: false,
        }
    }
}

impl SimConfig {
    pub fn substeps(&self) -> Result<usize, String> {
        let ratio = self.plant_hz / self.control_hz;
        let n = ratio.round();
        if !(self.control_hz > 0.0) || n < 1.0 || (ratio - n).abs() > 1e-9 {
            return Err(format!(
                "plant rate {} must be a positive multiple of control rate {}",
                self.plant_hz, self.control_hz
            ));
        }
        let dt = 1.0 / self.plant_hz;
        if dt > 0.1 {
            return Err("plant step must not exceed 0.1 s".into());
        }
        Ok(n as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RunFailure {
    NoPath { reason: String },
    Collision { obstacle_id: u32, t: f64 },
    Timeout,
    LimitViolation { limits: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ModuleTiming {
    pub planning: f64,
    pub corridor: f64,
    pub mpc: f64,
    pub mpc_ticks: usize,
    /// Mean SCP solve time per tick.
    pub mean_scp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub success: bool,
    pub goal_reached: bool,
    pub failure: Option<RunFailure>,
    pub min_obstacle_distance: f64,
    pub max_long_accel: f64,
    pub max_long_jerk: f64,
    pub max_lat_accel: f64,
    pub max_steering_angle: f64,
    pub max_steering_rate: f64,
    pub path_length: f64,
    pub duration: f64,
    pub replans: usize,
    pub fallback_ticks: usize,
    pub relaxed_ticks: usize,
    pub timing: ModuleTiming,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub psi: f64,
    /// Acceleration delivered to the plant over the step ending here.
    pub a_cmd: f64,
    pub steer_cmd: f64,
    pub min_obst_dist: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub t: f64,
    pub status: TickStatus,
    pub accel: f64,
    pub steer_change: f64,
    pub scp_time: f64,
    pub solution: Option<TrajectorySolution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub metrics: RunMetrics,
    pub trace: Vec<TraceSample>,
    pub ticks: Vec<TickRecord>,
    pub paths: Vec<PlannedPath>,
}

impl RunOutcome {
    pub fn trace_csv(&self) -> String {
        trace_csv(&self.trace)
    }
}

pub fn trace_csv(trace: &[TraceSample]) -> String {
    let mut out = String::from("t,x,y,theta,v,psi,a_cmd,steer_cmd,min_obst_dist\n");
    for s in trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.t, s.x, s.y, s.theta, s.v, s.psi, s.a_cmd, s.steer_cmd, s.min_obst_dist
        );
    }
    out
}

/// Maxima and limit checks over a plant-rate trace.
pub fn trace_metrics(trace: &[TraceSample], dt: f64, p: &PlantParams) -> (RunMetrics, Vec<String>) {
    let mut m = RunMetrics {
        success: false,
        goal_reached: false,
        failure: None,
        min_obstacle_distance: f64::INFINITY,
        max_long_accel: 0.0,
        max_long_jerk: 0.0,
        max_lat_accel: 0.0,
        max_steering_angle: 0.0,
        max_steering_rate: 0.0,
        path_length: 0.0,
        duration: trace.last().map_or(0.0, |s| s.t),
        replans: 0,
        fallback_ticks: 0,
        relaxed_ticks: 0,
        timing: ModuleTiming::default(),
    };
    for (i, s) in trace.iter().enumerate() {
        m.min_obstacle_distance = m.min_obstacle_distance.min(s.min_obst_dist);
        m.max_long_accel = m.max_long_accel.max(s.a_cmd.abs());
        m.max_lat_accel = m.max_lat_accel.max(s.v * s.v * s.psi.tan().abs() / p.wheelbase);
        m.max_steering_angle = m.max_steering_angle.max(s.psi.abs());
        if i > 0 {
            let prev = &trace[i - 1];
            m.max_long_jerk = m.max_long_jerk.max((s.a_cmd - prev.a_cmd).abs() / dt);
            m.max_steering_rate = m.max_steering_rate.max((s.psi - prev.psi).abs() / dt);
            m.path_length += (s.x - prev.x).hypot(s.y - prev.y);
        }
    }
    let mut violations = Vec::new();
    let checks = [
        ("long_accel", m.max_long_accel, p.a_max),
        ("long_jerk", m.max_long_jerk, p.jerk_max),
        ("lat_accel", m.max_lat_accel, p.lat_accel_max),
        ("steering_angle", m.max_steering_angle, p.psi_max),
    ];
    for (name, value, limit) in checks {
        if value > limit + LIMIT_TOLERANCE {
            violations.push(format!("{name} {value:.4} > {limit}"));
        }
    }
    (m, violations)
}

/// Path with a straight continuation past its end so the horizon always has
/// corridor steps ahead.
pub fn extend_path(path: &PlannedPath, extension: f64) -> PlannedPath {
    let mut out = path.clone();
    let Some(end) = path.poses.last().copied() else {
        return out;
    };
    let count = (extension / path.spacing).ceil() as usize;
    for k in 1..=count {
        let ahead = k as f64 * path.spacing;
        out.poses.push(PathPose {
            pose: end.pose.offset(ahead, 0.0),
            s: path.length + ahead,
            source: PoseSource::Goal,
            ..end
        });
    }
    out
}

/// Speed target per path pose: cruise, then a constant-deceleration taper
/// that reaches zero just past `goal_s`.
pub fn speed_profile(path: &PlannedPath, goal_s: f64, v_ref: f64, cfg: &SimConfig) -> Vec<f64> {
    path.poses
        .iter()
        .map(|p| {
            let remaining = goal_s + cfg.stop_overshoot - p.s;
            if remaining <= 0.0 {
                0.0
            } else {
                v_ref.min((2.0 * cfg.stop_decel * remaining).sqrt().max(cfg.approach_speed))
            }
        })
        .collect()
}

struct Route {
    path: PlannedPath,
    extended: PlannedPath,
    classified: Vec<Classified>,
    speeds: Vec<f64>,
    last_original: usize,
    hint: usize,
}

fn make_route(
    map: &mut RoadMap,
    from: Pose2,
    scenario: &ScenarioSpec,
    obstacles: &ObstacleSet,
    planner: &PlannerConfig,
    cfg: &SimConfig,
) -> Result<Route, String> {
    let outcome = plan(map, from, scenario.destination, obstacles, planner).map_err(|e| e.to_string())?;
    let path = outcome.path;
    let extended = extend_path(&path, cfg.path_extension);
    let classified = classify_boundary_points(&extended, map, obstacles).map_err(|e| e.to_string())?;
    let speeds = speed_profile(&extended, path.length, scenario.v_ref, cfg);
    Ok(Route {
        last_original: path.poses.len() - 1,
        path,
        extended,
        classified,
        speeds,
        hint: 0,
    })
}

fn closest_from(path: &PlannedPath, p: crate::geometry::Point2, hint: usize) -> usize {
    let lo = hint.saturating_sub(3);
    let hi = (hint + 40).min(path.poses.len());
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

/// Full closed-loop run of `scenario`. Input problems are errors; every
/// driving outcome, including failure to find a path, is reported in the
/// metrics.
pub fn run_closed_loop(
    scenario: &ScenarioSpec,
    base: Option<&Path>,
    planner: &PlannerConfig,
    mpc: &MpcParams,
    cfg: &SimConfig,
) -> Result<RunOutcome, ScenarioError> {
    let mut map = scenario.load_map(base)?;
    let obstacles = scenario.obstacle_set()?;
    let substeps = cfg.substeps().map_err(ScenarioError::Schema)?;
    mpc.validate().map_err(|e| ScenarioError::Schema(e.to_string()))?;
    let dt = 1.0 / cfg.plant_hz;
    let mut planner = planner.clone();
    planner.footprint = cfg.footprint;
    let corridor_params = CorridorParams {
        sigma_buffer: mpc.sigma_buffer,
        vehicle_width: cfg.footprint.width,
    };

    let mut state = PlantState::at_rest(scenario.start);
    let mut trace = Vec::new();
    let mut ticks = Vec::new();
    let mut paths = Vec::new();
    let mut timing = ModuleTiming::default();
    let mut replans = 0;
    let mut fallback_ticks = 0;
    let mut relaxed_ticks = 0;
    let mut failure = None;
    let mut goal_reached = false;
    let mut applied_accel = 0.0;
    let mut previous: Option<TrajectorySolution> = None;
    let goal = scenario.destination.position();

    let (d0, _) = footprint_clearance(&state.pose, &cfg.footprint, &obstacles);
    trace.push(TraceSample {
        t: 0.0,
        x: state.pose.x,
        y: state.pose.y,
        theta: state.pose.heading(),
        v: state.v,
        psi: state.psi,
        a_cmd: 0.0,
        steer_cmd: 0.0,
        min_obst_dist: d0,
    });

    let t_plan = Instant::now();
    let mut route = match make_route(&mut map, state.pose, scenario, &obstacles, &planner, cfg) {
        Ok(r) => Some(r),
        Err(reason) => {
            failure = Some(RunFailure::NoPath { reason });
            None
        }
    };
    timing.planning += t_plan.elapsed().as_secs_f64();

    'run: while let Some(r) = route.as_mut() {
        if state.t >= scenario.timeout - 1e-9 {
            failure = Some(RunFailure::Timeout);
            break;
        }
        let here = state.pose.position();
        r.hint = closest_from(&r.extended, here, r.hint);
        let deviation = r.extended.poses[r.hint].pose.position().distance(here);
        if deviation > cfg.replan_deviation || r.hint > r.last_original {
            let t_plan = Instant::now();
            let next = make_route(&mut map, state.pose, scenario, &obstacles, &planner, cfg);
            timing.planning += t_plan.elapsed().as_secs_f64();
            replans += 1;
            previous = None;
            match next {
                Ok(nr) => {
                    paths.push(std::mem::replace(r, nr).path);
                    continue;
                }
                Err(reason) => {
                    failure = Some(RunFailure::NoPath { reason });
                    break;
                }
            }
        }

        let t_corr = Instant::now();
        let window = r.hint + 1..r.hint + 1 + mpc.horizon;
        let corridor = build_corridor(&r.extended, &r.classified, window, &r.speeds, &corridor_params);
        timing.corridor += t_corr.elapsed().as_secs_f64();

        let measured = state.vehicle_state();
        let t_mpc = Instant::now();
        let tick = match &corridor {
            Ok(c) => mpc_tick(&measured, &r.extended, c, mpc, previous.as_ref()),
            Err(e) => crate::mpc::TickResult {
                control: crate::mpc::ControlInput::new(-mpc.limits.a_max, 0.0),
                solution: None,
                status: TickStatus::Fallback { reason: e.to_string() },
                warm_started: false,
            },
        };
        timing.mpc += t_mpc.elapsed().as_secs_f64();
        timing.mpc_ticks += 1;
        let scp_time = tick.solution.as_ref().map_or(0.0, |s| s.total_solve_time());
        timing.mean_scp += scp_time;
        match tick.status {
            TickStatus::Fallback { .. } => fallback_ticks += 1,
            TickStatus::Relaxed => relaxed_ticks += 1,
            TickStatus::Solved => {}
        }

        let p = &cfg.plant;
        let a_cmd = tick.control.accel.clamp(-p.a_max, p.a_max);
        let lat_bound = (p.lat_accel_fraction * p.lat_accel_max * p.wheelbase / (state.v * state.v).max(1e-6))
            .atan()
            .min(p.psi_max);
        let steer_target = (state.psi + tick.control.steer_change).clamp(-lat_bound, lat_bound);
        ticks.push(TickRecord {
            t: state.t,
            status: tick.status.clone(),
            accel: tick.control.accel,
            steer_change: tick.control.steer_change,
            scp_time,
            solution: if cfg.record_solutions { tick.solution.clone() } else { None },
        });
        previous = tick.solution;

        for _ in 0..substeps {
            let step = p.jerk_max * dt;
            applied_accel += (a_cmd - applied_accel).clamp(-step, step);
            let cmd = ActuatorCommand {
                accel: applied_accel,
                steer_target,
            };
            state = plant_step(&state, &cmd, dt, p);
            let (dist, hit) = footprint_clearance(&state.pose, &cfg.footprint, &obstacles);
            trace.push(TraceSample {
                t: state.t,
                x: state.pose.x,
                y: state.pose.y,
                theta: state.pose.heading(),
                v: state.v,
                psi: state.psi,
                a_cmd: applied_accel,
                steer_cmd: tick.control.steer_change,
                min_obst_dist: dist,
            });
            if dist <= 0.0 {
                failure = Some(RunFailure::Collision {
                    obstacle_id: hit.unwrap_or(0),
                    t: state.t,
                });
                break 'run;
            }
            if state.pose.position().distance(goal) <= cfg.goal_tolerance {
                goal_reached = true;
                break 'run;
            }
        }
    }
    if let Some(r) = route {
        paths.push(r.path);
    }

    let (mut metrics, violations) = trace_metrics(&trace, dt, &cfg.plant);
    if failure.is_none() && !violations.is_empty() {
        failure = Some(RunFailure::LimitViolation { limits: violations });
    }
    if timing.mpc_ticks > 0 {
        timing.mean_scp /= timing.mpc_ticks as f64;
    }
    metrics.goal_reached = goal_reached;
    metrics.success = goal_reached && failure.is_none();
    metrics.failure = failure;
    metrics.replans = replans;
    metrics.fallback_ticks = fallback_ticks;
    metrics.relaxed_ticks = relaxed_ticks;
    metrics.timing = timing;
    Ok(RunOutcome {
        metrics,
        trace,
        ticks,
        paths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_coast_covers_distance() {
        let p = PlantParams::default();
        let mut s = PlantState::at_rest(Pose2::new(0.0, 0.0, 0.0));
        s.v = 5.0;
        for _ in 0..100 {
            s = plant_step(&s, &ActuatorCommand::default(), 0.01, &p);
        }
        assert!((s.pose.x - 5.0).abs() < 1e-9);
        assert!(s.pose.y.abs() < 1e-12);
    }

    #[test]
    fn accel_is_saturated() {
        let p = PlantParams::default();
        let mut s = PlantState::at_rest(Pose2::new(0.0, 0.0, 0.0));
        s.v = 5.0;
        let n = plant_step(&s, &ActuatorCommand { accel: -10.0, steer_target: 0.0 }, 0.1, &p);
        assert!((n.v - (5.0 - 0.3)).abs() < 1e-12);
    }

    #[test]
    fn speed_never_negative() {
        let p = PlantParams::default();
        let mut s = PlantState::at_rest(Pose2::new(0.0, 0.0, 0.0));
        s.v = 0.1;
        for _ in 0..50 {
            s = plant_step(&s, &ActuatorCommand { accel: -3.0, steer_target: 0.0 }, 0.01, &p);
            assert!(s.v >= 0.0);
        }
        assert_eq!(s.v, 0.0);
    }

    #[test]
    fn substep_ratio_checked() {
        let cfg = SimConfig {
            plant_hz: 95.0,
            ..Default::default()
        };
        assert!(cfg.substeps().is_err());
        assert_eq!(SimConfig::default().substeps(), Ok(10));
    }
}
