//! Corridor-constrained model predictive control solved by sequential convex
//! programming over a spatially discretised kinematic car.

mod dynamics;
mod scp;
mod subproblem;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corridor::CorridorError;
use crate::qp::QpError;

pub use dynamics::{linearize, linearize_dynamics, step_dynamics, step_unwrapped, AffineStep};
pub use scp::{
    initial_guess, mpc_tick, rollout, scp_solve, scp_solve_from, IterationDiagnostics, TickResult,
    TickStatus, TrajectorySolution,
};
pub use subproblem::{assemble_subproblem, Layout, SubproblemOptions, STAGE_VARS};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub psi: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, theta: f64, v: f64, psi: f64) -> Self {
        Self { x, y, theta, v, psi }
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.x, self.y, self.theta, self.v, self.psi]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4])
    }

    pub fn position(&self) -> crate::geometry::Point2 {
        crate::geometry::Point2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    /// Longitudinal acceleration, m/s².
    pub accel: f64,
    /// Steering change over one horizon step, rad.
    pub steer_change: f64,
}

impl ControlInput {
    pub fn new(accel: f64, steer_change: f64) -> Self {
        Self { accel, steer_change }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MpcWeights {
    pub speed: f64,
    pub steering: f64,
    pub accel: f64,
    pub steer_change: f64,
    pub position: f64,
    pub slack_left: f64,
    pub slack_right: f64,
    /// Penalty on acceleration change between consecutive steps.
    pub accel_change: f64,
}

impl Default for MpcWeights {
    fn default() -> Self {
        Self {
            speed: 1.0,
            steering: 5.0,
            accel: 1.0,
            steer_change: 50.0,
            position: 0.5,
            slack_left: 1000.0,
            slack_right: 1000.0,
            accel_change: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MpcLimits {
    pub v_max: f64,
    pub psi_max: f64,
    pub a_max: f64,
    pub steer_change_max: f64,
    pub lat_accel_max: f64,
    /// Fraction of `lat_accel_max` used when bounding steering by speed.
    pub lat_accel_fraction: f64,
}

impl Default for MpcLimits {
    fn default() -> Self {
        Self {
            v_max: 10.0,
            psi_max: 0.52,
            a_max: 3.0,
            steer_change_max: 0.05,
            lat_accel_max: 3.0,
            lat_accel_fraction: 0.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustRegion {
    pub position: f64,
    pub angle: f64,
}

impl Default for TrustRegion {
    fn default() -> Self {
        Self {
            position: 2.0,
            angle: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MpcParams {
    pub horizon: usize,
    pub step: f64,
    pub wheelbase: f64,
    pub weights: MpcWeights,
    pub sigma_buffer: f64,
    /// Lateral half-extent of the body kept inside each half-plane.
    pub body_half_width: f64,
    /// Clearance kept beyond the buffer band even at full slack.
    pub hard_margin: f64,
    /// Offsets along the body axis, from the rear axle, of the points held
    /// inside the corridor.
    pub body_points: Vec<f64>,
    pub limits: MpcLimits,
    pub scp_iterations: usize,
    pub qp_tolerance: f64,
    pub qp_max_iterations: usize,
    pub trust_region: Option<TrustRegion>,
    pub v_floor: f64,
    /// Use the steering angle, not the heading, in the position update.
    pub steering_in_position: bool,
    /// Pure-pursuit lookahead for the initial guess.
    pub lookahead: f64,
    /// Seed each tick from the previous tick's solution.
    pub warm_start: bool,
}

impl Default for MpcParams {
    fn default() -> Self {
        Self {
            horizon: 30,
            step: 1.0,
            wheelbase: 1.4,
            weights: MpcWeights::default(),
            sigma_buffer: 0.3,
            body_half_width: 0.9,
            hard_margin: 0.1,
            body_points: vec![-0.9, 0.0, 1.4, 2.8, 3.7],
            limits: MpcLimits::default(),
            scp_iterations: 4,
            qp_tolerance: 1e-6,
            qp_max_iterations: 100,
            trust_region: Some(TrustRegion::default()),
            v_floor: 0.1,
            steering_in_position: false,
            lookahead: 4.0,
            warm_start: true,
        }
    }
}

impl MpcParams {
    pub fn validate(&self) -> Result<(), MpcError> {
        let w = &self.weights;
        let weights = [
            w.speed,
            w.steering,
            w.accel,
            w.steer_change,
            w.position,
            w.slack_left,
            w.slack_right,
            w.accel_change,
        ];
        let bad = |m: &str| Err(MpcError::InvalidParams(m.into()));
        if self.horizon < 2 {
            return bad("horizon must be at least 2");
        }
        if !(self.step > 0.0 && self.wheelbase > 0.0) {
            return bad("step and wheelbase must be positive");
        }
        if !weights.iter().all(|w| *w >= 0.0) {
            return bad("weights must be nonnegative");
        }
        if self.scp_iterations < 1 {
            return bad("at least one SCP iteration is required");
        }
        if !(self.sigma_buffer >= 0.0 && self.hard_margin >= 0.0 && self.v_floor > 0.0 && self.qp_tolerance > 0.0) {
            return bad("sigma_buffer, v_floor and qp_tolerance out of range");
        }
        let l = &self.limits;
        if !(l.v_max > 0.0 && l.psi_max > 0.0 && l.a_max > 0.0 && l.steer_change_max > 0.0) {
            return bad("limits must be positive");
        }
        if self.body_points.is_empty() {
            return bad("at least one body point is required");
        }
        Ok(())
    }

    /// Steering bound that keeps lateral acceleration inside the limit at `v`.
    pub fn lateral_steer_bound(&self, v: f64) -> f64 {
        let l = &self.limits;
        let v2 = (v * v).max(1e-6);
        (l.lat_accel_fraction * l.lat_accel_max * self.wheelbase / v2)
            .atan()
            .min(l.psi_max)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MpcError {
    #[error("horizon of {0} steps is too short")]
    HorizonTooShort(usize),
    #[error(transparent)]
    Corridor(#[from] CorridorError),
    #[error("corridor step {step} is {width:.3} m wide, too narrow for the vehicle")]
    PinchedCorridor { step: usize, width: f64 },
    #[error("QP failed in SCP iteration {iteration}: {source}")]
    Qp { iteration: usize, source: QpError },
    #[error("invalid MPC parameters: {0}")]
    InvalidParams(String),
    #[error("path needs at least two poses")]
    PathTooShort,
}
