//! Scenario descriptions, built-in reconstructions and seeded perturbation.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::ObstacleSet;
use crate::geometry::{Point2, PolygonObstacle, Pose2};
use crate::maps;
use crate::roadmap::{load_map, MapError, RoadMap};

pub const SCENARIO_VERSION: &str = "autopath-scenario/1";

/// Sides used to approximate round obstacles.
const ROUND_SIDES: usize = 8;
const MAX_REJECTIONS: usize = 1000;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario schema error: {0}")]
    Schema(String),
    #[error("unknown builtin map {0:?}")]
    UnknownBuiltin(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("obstacle {0} is invalid: {1}")]
    Obstacle(u32, String),
    #[error("could not keep obstacle {0} on the road after {MAX_REJECTIONS} draws")]
    PerturbationRejected(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum ObstacleShape {
    /// Regular polygon circumscribed by a circle of `radius`.
    Round { radius: f64 },
    Box { length: f64, width: f64, heading: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSpec {
    pub id: u32,
    pub shape: ObstacleShape,
    pub position: Point2,
}

impl ObstacleSpec {
    pub fn barrel(id: u32, x: f64, y: f64) -> Self {
        Self {
            id,
            shape: ObstacleShape::Round { radius: 0.3 },
            position: Point2::new(x, y),
        }
    }

    pub fn polygon(&self) -> Result<PolygonObstacle, ScenarioError> {
        match self.shape {
            ObstacleShape::Round { radius } => {
                if !(radius > 0.0) {
                    return Err(ScenarioError::Obstacle(self.id, "radius must be positive".into()));
                }
                let verts = (0..ROUND_SIDES)
                    .map(|i| {
                        let a = i as f64 * std::f64::consts::TAU / ROUND_SIDES as f64;
                        self.position + Point2::from_angle(a) * radius
                    })
                    .collect();
                PolygonObstacle::new(self.id, verts)
                    .map_err(|e| ScenarioError::Obstacle(self.id, e.to_string()))
            }
            ObstacleShape::Box { length, width, heading } => {
                if !(length > 0.0 && width > 0.0) {
                    return Err(ScenarioError::Obstacle(self.id, "box sides must be positive".into()));
                }
                Ok(PolygonObstacle::rectangle(self.id, self.position, heading, length, width))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub sigma: f64,
    pub keep_on_road: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub version: String,
    pub name: String,
    /// `builtin:<name>` or a path to a map file.
    pub map: String,
    pub start: Pose2,
    pub destination: Pose2,
    pub obstacles: Vec<ObstacleSpec>,
    pub v_ref: f64,
    pub rng_seed: u64,
    #[serde(default)]
    pub perturbation: Option<Perturbation>,
    /// Simulated seconds before a run is abandoned.
    #[serde(default = "default_timeout")]
    pub timeout: f64,
}

fn default_timeout() -> f64 {
    120.0
}

impl ScenarioSpec {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let spec: ScenarioSpec =
            serde_json::from_str(text).map_err(|e| ScenarioError::Schema(e.to_string()))?;
        if spec.version != SCENARIO_VERSION {
            return Err(ScenarioError::Schema(format!(
                "unsupported scenario version {:?} (expected {SCENARIO_VERSION:?})",
                spec.version
            )));
        }
        if !(spec.v_ref > 0.0) || !(spec.timeout > 0.0) {
            return Err(ScenarioError::Schema("v_ref and timeout must be positive".into()));
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Loads the referenced map; relative paths resolve against `base`.
    pub fn load_map(&self, base: Option<&Path>) -> Result<RoadMap, ScenarioError> {
        if let Some(name) = self.map.strip_prefix("builtin:") {
            return maps::builtin(name).ok_or_else(|| ScenarioError::UnknownBuiltin(name.into()));
        }
        let path = match base {
            Some(b) => b.join(&self.map),
            None => Path::new(&self.map).to_path_buf(),
        };
        let bytes = std::fs::read(&path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(load_map(&bytes)?)
    }

    pub fn obstacle_set(&self) -> Result<ObstacleSet, ScenarioError> {
        let polys = self
            .obstacles
            .iter()
            .map(ObstacleSpec::polygon)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ObstacleSet::new(polys))
    }
}

fn on_road(map: &RoadMap, obstacle: &PolygonObstacle) -> bool {
    obstacle.vertices().iter().all(|&v| map.road_clearance(v) >= 0.0)
}

/// `count` copies of `root` with every obstacle displaced by an independent
/// 2-D Gaussian, redrawn until it lies on the road when requested.
pub fn generate_perturbed_scenarios(
    root: &ScenarioSpec,
    map: &RoadMap,
    count: usize,
    seed: u64,
) -> Result<Vec<ScenarioSpec>, ScenarioError> {
    let pert = root
        .perturbation
        .ok_or_else(|| ScenarioError::Schema("root scenario has no perturbation".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut spec = root.clone();
        spec.name = format!("{}-{i:03}", root.name);
        spec.rng_seed = seed.wrapping_add(i as u64 + 1);
        if pert.sigma > 0.0 {
            let normal = Normal::new(0.0, pert.sigma).expect("positive sigma");
            for ob in spec.obstacles.iter_mut() {
                let home = ob.position;
                let mut tries = 0;
                loop {
                    let moved = ObstacleSpec {
                        position: home + Point2::new(normal.sample(&mut rng), normal.sample(&mut rng)),
                        ..*ob
                    };
                    if !pert.keep_on_road || on_road(map, &moved.polygon()?) {
                        *ob = moved;
                        break;
                    }
                    tries += 1;
                    if tries >= MAX_REJECTIONS {
                        return Err(ScenarioError::PerturbationRejected(ob.id));
                    }
                }
            }
        }
        out.push(spec);
    }
    Ok(out)
}

fn base(name: &str, map: &str, start: Pose2, destination: Pose2, v_ref: f64) -> ScenarioSpec {
    ScenarioSpec {
        version: SCENARIO_VERSION.into(),
        name: name.into(),
        map: format!("builtin:{map}"),
        start,
        destination,
        obstacles: Vec::new(),
        v_ref,
        rng_seed: 1,
        perturbation: None,
        timeout: default_timeout(),
    }
}

/// Four barrels 7 m apart in the right lane of a straight two-lane road.
pub fn scenario_a() -> ScenarioSpec {
    let mut s = base(
        "scenario-a",
        "straight",
        Pose2::new(10.0, 0.0, 0.0),
        Pose2::new(190.0, 0.0, 0.0),
        5.0,
    );
    s.obstacles = (0..4).map(|i| ObstacleSpec::barrel(i, 80.0 + 7.0 * i as f64, 0.0)).collect();
    s
}

/// Two blocks leaving a single narrow passage straddling the lane line.
pub fn scenario_b() -> ScenarioSpec {
    let gap = SCENARIO_B_GAP;
    let centre = 0.5 * maps::LANE_WIDTH;
    let road_lo = -0.5 * maps::LANE_WIDTH;
    let road_hi = 1.5 * maps::LANE_WIDTH;
    let right_top = centre - 0.5 * gap;
    let left_bottom = centre + 0.5 * gap;
    let mut s = base(
        "scenario-b",
        "straight",
        Pose2::new(10.0, 0.0, 0.0),
        Pose2::new(190.0, 0.0, 0.0),
        5.0,
    );
    let block = |id: u32, lo: f64, hi: f64| ObstacleSpec {
        id,
        shape: ObstacleShape::Box {
            length: 2.0,
            width: hi - lo,
            heading: 0.0,
        },
        position: Point2::new(90.0, 0.5 * (lo + hi)),
    };
    s.obstacles = vec![block(0, road_lo, right_top), block(1, left_bottom, road_hi)];
    s
}

/// Free width between the two scenario-B blocks.
pub const SCENARIO_B_GAP: f64 = 2.6;

/// Four barrels 6 m apart in alternating lanes, a bend, and a stop at the end.
pub fn barrel_course() -> ScenarioSpec {
    let spec = maps::builtin_spec("curved").expect("builtin");
    let end = spec.total_length();
    let mut s = base(
        "barrel-course",
        "curved",
        spec.reference_pose(5.0),
        spec.reference_pose(end - 10.0),
        4.0,
    );
    s.obstacles = (0..4)
        .map(|i| {
            let lane = (i % 2) as f64 * maps::LANE_WIDTH;
            ObstacleSpec::barrel(i, 40.0 + 6.0 * i as f64, lane)
        })
        .collect();
    s.timeout = 150.0;
    s
}

/// Root of the perturbation study: four barrels on a 100 m straight.
pub fn scp_root() -> ScenarioSpec {
    let mut s = base(
        "scp-root",
        "short",
        Pose2::new(5.0, 0.0, 0.0),
        Pose2::new(95.0, 0.0, 0.0),
        4.0,
    );
    s.obstacles = vec![
        ObstacleSpec::barrel(0, 35.0, 0.0),
        ObstacleSpec::barrel(1, 45.0, 3.7),
        ObstacleSpec::barrel(2, 55.0, 0.0),
        ObstacleSpec::barrel(3, 65.0, 3.7),
    ];
    s.perturbation = Some(Perturbation {
        sigma: 1.0,
        keep_on_road: true,
    });
    s.timeout = 90.0;
    s
}

/// Names accepted by [`builtin`].
pub const BUILTIN_SCENARIOS: &[&str] = &["scenario-a", "scenario-b", "barrel-course", "scp-root"];

pub fn builtin(name: &str) -> Option<ScenarioSpec> {
    Some(match name {
        "scenario-a" => scenario_a(),
        "scenario-b" => scenario_b(),
        "barrel-course" => barrel_course(),
        "scp-root" => scp_root(),
        _ => return None,
    })
}
