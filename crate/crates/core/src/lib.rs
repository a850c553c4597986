//! Hybrid lattice/sampling path planning with corridor-constrained
//! sequential convex MPC for a kinematic car.

pub mod collision;
pub mod corridor;
pub mod geometry;
pub(crate) mod heap;
pub mod maps;
pub mod mpc;
pub mod planner;
pub mod qp;
pub mod roadmap;
pub mod scenario;
pub mod simulator;
pub mod spatial;
