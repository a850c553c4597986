//! Per-step half-plane corridor around a planned path.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::ObstacleSet;
use crate::geometry::{side_of_path, Point2, Pose2, Side};
use crate::planner::PlannedPath;
use crate::roadmap::{BoundaryTag, RoadMap};

/// Radius around a path pose from which boundary polyline points are taken.
pub const BOUNDARY_RADIUS: f64 = 15.0;
/// Obstacle vertices are kept when their projection onto the path falls in
/// `[s - BEHIND, s + AHEAD]`.
pub const OBSTACLE_BEHIND: f64 = 5.0;
pub const OBSTACLE_AHEAD: f64 = 15.0;
pub const DEFAULT_SIGMA_BUFFER: f64 = 0.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorridorError {
    #[error("path pose {0} has no boundary context")]
    MissingBoundaryContext(usize),
    #[error("corridor degenerate at step {step} (width {width:.3} m)")]
    DegenerateCorridor { step: usize, width: f64 },
    #[error("trajectory has {got} positions, corridor has {want} steps")]
    LengthMismatch { got: usize, want: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PointSource {
    LaneBoundary,
    RoadBoundary,
    ObstacleVertex { id: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorridorSide {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub position: Point2,
    pub source: PointSource,
    pub side: CorridorSide,
}

/// Candidate points for one path pose, split by side.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Classified {
    pub left: Vec<BoundaryPoint>,
    pub right: Vec<BoundaryPoint>,
}

/// `alpha * x + beta * y <= gamma`, with `(alpha, beta)` a unit outward normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl HalfPlane {
    pub fn through(point: Point2, outward: Point2) -> Self {
        Self {
            alpha: outward.x,
            beta: outward.y,
            gamma: outward.dot(point),
        }
    }

    /// Positive inside.
    pub fn clearance(&self, p: Point2) -> f64 {
        self.gamma - (self.alpha * p.x + self.beta * p.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub x: f64,
    pub y: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorridorStep {
    pub path_pose: Pose2,
    pub left: HalfPlane,
    pub right: HalfPlane,
    pub left_point: BoundaryPoint,
    pub right_point: BoundaryPoint,
    /// Position reference; absent off lane-follow segments.
    pub reference: Option<Reference>,
    /// Speed target, present whether or not a position reference is.
    pub v_ref: f64,
    /// Width below vehicle width plus twice the buffer.
    pub narrow: bool,
    pub width: f64,
}

impl CorridorStep {
    pub fn has_reference(&self) -> bool {
        self.reference.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corridor {
    pub steps: Vec<CorridorStep>,
    pub sigma_buffer: f64,
    pub vehicle_width: f64,
    candidates: Vec<Classified>,
}

fn boundary_source(tag: BoundaryTag) -> PointSource {
    match tag {
        BoundaryTag::Lane => PointSource::LaneBoundary,
        BoundaryTag::Road => PointSource::RoadBoundary,
    }
}

fn classify(position: Point2, pose: &Pose2, source: PointSource, out: &mut Classified) {
    match side_of_path(position, pose) {
        Side::Left => out.left.push(BoundaryPoint {
            position,
            source,
            side: CorridorSide::Left,
        }),
        Side::Right | Side::On => out.right.push(BoundaryPoint {
            position,
            source,
            side: CorridorSide::Right,
        }),
    }
}

/// Gathers boundary and obstacle points around each path pose and sorts them
/// into left and right lists.
pub fn classify_boundary_points(
    path: &PlannedPath,
    map: &RoadMap,
    obstacles: &ObstacleSet,
) -> Result<Vec<Classified>, CorridorError> {
    // arc length of each obstacle vertex's nearest path pose
    let vertex_s: Vec<Vec<(Point2, f64)>> = obstacles
        .obstacles()
        .iter()
        .map(|o| {
            o.vertices()
                .iter()
                .map(|&v| (v, path.poses[path.closest_index(v)].s))
                .collect()
        })
        .collect();

    let mut result = Vec::with_capacity(path.poses.len());
    for (i, pp) in path.poses.iter().enumerate() {
        if pp.context_node >= map.nodes().len() {
            return Err(CorridorError::MissingBoundaryContext(i));
        }
        let lane = map
            .lane(pp.lane)
            .map_err(|_| CorridorError::MissingBoundaryContext(i))?;
        let (left_b, right_b) = if pp.lane_follow {
            (lane.left_boundary, lane.right_boundary)
        } else {
            map.outer_boundaries(pp.lane)
                .map_err(|_| CorridorError::MissingBoundaryContext(i))?
        };
        let mut c = Classified::default();
        let here = pp.pose.position();
        for b in [left_b, right_b] {
            let boundary = &map.boundaries()[b];
            for &q in boundary.line.points() {
                if q.distance(here) <= BOUNDARY_RADIUS {
                    classify(q, &pp.pose, boundary_source(boundary.tag), &mut c);
                }
            }
        }
        for (o, verts) in obstacles.obstacles().iter().zip(&vertex_s) {
            for &(v, s) in verts {
                if s >= pp.s - OBSTACLE_BEHIND && s <= pp.s + OBSTACLE_AHEAD {
                    classify(v, &pp.pose, PointSource::ObstacleVertex { id: o.id }, &mut c);
                }
            }
        }
        result.push(c);
    }
    Ok(result)
}

/// Unit tangents from central differences (one-sided at the ends).
pub fn tangents(points: &[Point2], headings: &[f64]) -> Vec<Point2> {
    let n = points.len();
    (0..n)
        .map(|k| {
            let (a, b) = match (k, n) {
                (_, 1) => return Point2::from_angle(headings[0]),
                (0, _) => (points[0], points[1]),
                (k, n) if k == n - 1 => (points[k - 1], points[k]),
                (k, _) => (points[k - 1], points[k + 1]),
            };
            let d = b - a;
            let len = d.norm();
            if len > 1e-9 {
                d * (1.0 / len)
            } else {
                Point2::from_angle(headings[k])
            }
        })
        .collect()
}

fn nearest(points: &[BoundaryPoint], p: Point2) -> Option<BoundaryPoint> {
    points
        .iter()
        .min_by(|a, b| {
            a.position
                .distance_squared(p)
                .total_cmp(&b.position.distance_squared(p))
        })
        .copied()
}

/// Corridor construction settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorridorParams {
    pub sigma_buffer: f64,
    pub vehicle_width: f64,
}

impl Default for CorridorParams {
    fn default() -> Self {
        Self {
            sigma_buffer: DEFAULT_SIGMA_BUFFER,
            vehicle_width: 1.8,
        }
    }
}

fn lines_at(
    step: usize,
    position: Point2,
    tangent: Point2,
    cands: &Classified,
) -> Result<(HalfPlane, HalfPlane, BoundaryPoint, BoundaryPoint, f64), CorridorError> {
    let (Some(lp), Some(rp)) = (nearest(&cands.left, position), nearest(&cands.right, position)) else {
        return Err(CorridorError::DegenerateCorridor { step, width: 0.0 });
    };
    let normal = tangent.perp();
    let left = HalfPlane::through(lp.position, normal);
    let right = HalfPlane::through(rp.position, -normal);
    let width = normal.dot(lp.position - rp.position);
    if !(width > 0.0) {
        return Err(CorridorError::DegenerateCorridor { step, width });
    }
    Ok((left, right, lp, rp, width))
}

/// Builds one corridor step per path pose in `window` (clipped to the path).
/// `v_ref[i]` is the speed target at path pose `i`.
pub fn build_corridor(
    path: &PlannedPath,
    classified: &[Classified],
    window: std::ops::Range<usize>,
    v_ref: &[f64],
    params: &CorridorParams,
) -> Result<Corridor, CorridorError> {
    let end = window.end.min(path.poses.len());
    let start = window.start.min(end);
    let poses = &path.poses[start..end];
    let points: Vec<Point2> = poses.iter().map(|p| p.pose.position()).collect();
    let headings: Vec<f64> = poses.iter().map(|p| p.pose.heading()).collect();
    let tans = tangents(&points, &headings);
    let mut steps = Vec::with_capacity(poses.len());
    let mut candidates = Vec::with_capacity(poses.len());
    for (k, pp) in poses.iter().enumerate() {
        let cands = &classified[start + k];
        let (left, right, lp, rp, width) = lines_at(k, points[k], tans[k], cands)?;
        let v = v_ref[start + k];
        steps.push(CorridorStep {
            path_pose: pp.pose,
            left,
            right,
            left_point: lp,
            right_point: rp,
            reference: pp.lane_follow.then_some(Reference {
                x: pp.pose.x,
                y: pp.pose.y,
                v,
            }),
            v_ref: v,
            narrow: width < params.vehicle_width + 2.0 * params.sigma_buffer,
            width,
        });
        candidates.push(cands.clone());
    }
    Ok(Corridor {
        steps,
        sigma_buffer: params.sigma_buffer,
        vehicle_width: params.vehicle_width,
        candidates,
    })
}

impl Corridor {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn candidates(&self) -> &[Classified] {
        &self.candidates
    }

    /// Re-selects nearest points and line directions against `positions`,
    /// keeping the side classification of every candidate.
    pub fn relinearize(&self, positions: &[Point2], headings: &[f64]) -> Result<Corridor, CorridorError> {
        if positions.len() != self.steps.len() || headings.len() != self.steps.len() {
            return Err(CorridorError::LengthMismatch {
                got: positions.len(),
                want: self.steps.len(),
            });
        }
        let tans = tangents(positions, headings);
        let mut out = self.clone();
        for (k, step) in out.steps.iter_mut().enumerate() {
            let (left, right, lp, rp, width) = lines_at(k, positions[k], tans[k], &self.candidates[k])?;
            step.left = left;
            step.right = right;
            step.left_point = lp;
            step.right_point = rp;
            step.width = width;
            step.narrow = width < self.vehicle_width + 2.0 * self.sigma_buffer;
        }
        Ok(out)
    }

    /// Corridor truncated to its first `n` steps.
    pub fn truncated(&self, n: usize) -> Corridor {
        let n = n.min(self.steps.len());
        Corridor {
            steps: self.steps[..n].to_vec(),
            candidates: self.candidates[..n].to_vec(),
            ..*self
        }
    }

    pub fn from_steps(steps: Vec<CorridorStep>, candidates: Vec<Classified>, params: &CorridorParams) -> Self {
        Corridor {
            steps,
            sigma_buffer: params.sigma_buffer,
            vehicle_width: params.vehicle_width,
            candidates,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::ObstacleSet;
    use crate::geometry::PolygonObstacle;
    use crate::maps::{LaneLayout, MapSpec};
    use crate::planner::{plan, PlannerConfig};

    fn straight_path(obstacles: &ObstacleSet) -> (RoadMap, PlannedPath) {
        let mut map = MapSpec::straight(100.0, LaneLayout::TwoSameDirection).build().unwrap();
        let out = plan(
            &mut map,
            Pose2::new(0.0, 0.0, 0.0),
            Pose2::new(60.0, 0.0, 0.0),
            obstacles,
            &PlannerConfig::default(),
        )
        .unwrap();
        (map, out.path)
    }

    #[test]
    fn lane_follow_width_matches_lane() {
        let obs = ObstacleSet::default();
        let (map, path) = straight_path(&obs);
        let cls = classify_boundary_points(&path, &map, &obs).unwrap();
        let v = vec![5.0; path.len()];
        let c = build_corridor(&path, &cls, 0..30, &v, &CorridorParams::default()).unwrap();
        assert_eq!(c.len(), 30);
        for s in &c.steps {
            assert!((s.width - 3.7).abs() < 1e-9);
            assert!(s.has_reference());
            assert_eq!(s.left_point.source, PointSource::LaneBoundary);
            assert_eq!(s.right_point.source, PointSource::RoadBoundary);
        }
        for (k, s) in c.steps.iter().enumerate() {
            assert!((s.left.alpha.hypot(s.left.beta) - 1.0).abs() < 1e-12, "{k}");
            assert!(s.left.clearance(s.path_pose.position()) > 0.0);
            assert!(s.right.clearance(s.path_pose.position()) > 0.0);
        }
    }

    #[test]
    fn left_barrel_vertices_classified_left() {
        let barrel = PolygonObstacle::rectangle(7, Point2::new(20.0, 1.3), 0.0, 0.6, 0.6);
        let obs = ObstacleSet::new(vec![barrel]);
        let (map, path) = straight_path(&ObstacleSet::default());
        let cls = classify_boundary_points(&path, &map, &obs).unwrap();
        let k = path.closest_index(Point2::new(20.0, 0.0));
        let ids_left = cls[k]
            .left
            .iter()
            .filter(|p| matches!(p.source, PointSource::ObstacleVertex { id: 7 }))
            .count();
        assert_eq!(ids_left, 4);
        assert!(cls[k]
            .right
            .iter()
            .all(|p| !matches!(p.source, PointSource::ObstacleVertex { .. })));
    }

    #[test]
    fn relinearize_on_path_is_identity() {
        let obs = ObstacleSet::default();
        let (map, path) = straight_path(&obs);
        let cls = classify_boundary_points(&path, &map, &obs).unwrap();
        let v = vec![5.0; path.len()];
        let c = build_corridor(&path, &cls, 3..33, &v, &CorridorParams::default()).unwrap();
        let pos: Vec<_> = path.poses[3..33].iter().map(|p| p.pose.position()).collect();
        let hd: Vec<_> = path.poses[3..33].iter().map(|p| p.pose.heading()).collect();
        assert_eq!(c.relinearize(&pos, &hd).unwrap(), c);
    }
}
