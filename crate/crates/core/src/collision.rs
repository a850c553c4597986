//! Footprint collision checks against polygon obstacles.

use serde::{Deserialize, Serialize};

use crate::geometry::{
    min_distance_polygon, point_in_polygon, point_segment_distance, rectangle_corners, segments_intersect, Aabb,
    HermiteSpline, Point2, PolygonObstacle, Pose2,
};
use crate::spatial::BoxGrid;

/// Planning-time inflation of the footprint.
pub const DEFAULT_MARGIN: f64 = 0.2;

/// Rectangular vehicle outline. Poses refer to the rear axle; the rectangle
/// centre sits `rear_axle_to_center` ahead of it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleFootprint {
    pub length: f64,
    pub width: f64,
    pub rear_axle_to_center: f64,
}

impl Default for VehicleFootprint {
    fn default() -> Self {
        Self {
            length: 4.6,
            width: 1.8,
            rear_axle_to_center: 1.4,
        }
    }
}

impl VehicleFootprint {
    pub fn new(length: f64, width: f64, rear_axle_to_center: f64) -> Option<Self> {
        (length > 0.0 && width > 0.0 && rear_axle_to_center > 0.0).then_some(Self {
            length,
            width,
            rear_axle_to_center,
        })
    }

    pub fn center(&self, pose: &Pose2) -> Point2 {
        pose.position() + pose.direction() * self.rear_axle_to_center
    }

    /// Counter-clockwise corners of the footprint inflated by `margin` on every side.
    pub fn corners(&self, pose: &Pose2, margin: f64) -> [Point2; 4] {
        rectangle_corners(
            self.center(pose),
            pose.heading(),
            0.5 * self.length + margin,
            0.5 * self.width + margin,
        )
    }
}

#[derive(Debug, Clone)]
pub struct ObstacleSet {
    obstacles: Vec<PolygonObstacle>,
    index: BoxGrid,
}

impl Default for ObstacleSet {
    fn default() -> Self {
        Self::new(Vec::new())
    }
}

impl ObstacleSet {
    pub fn new(obstacles: Vec<PolygonObstacle>) -> Self {
        let mut index = BoxGrid::new(4.0);
        for (i, o) in obstacles.iter().enumerate() {
            index.insert(i, o.aabb());
        }
        Self { obstacles, index }
    }

    pub fn obstacles(&self) -> &[PolygonObstacle] {
        &self.obstacles
    }

    pub fn is_empty(&self) -> bool {
        self.obstacles.is_empty()
    }

    pub fn len(&self) -> usize {
        self.obstacles.len()
    }

    /// Obstacles whose bounding boxes overlap `query`, in insertion order.
    pub fn candidates(&self, query: &Aabb) -> impl Iterator<Item = &PolygonObstacle> {
        self.index.query(query).into_iter().map(|i| &self.obstacles[i])
    }

    /// Smallest distance from `p` to any obstacle (+∞ when there are none).
    pub fn min_distance(&self, p: Point2) -> f64 {
        self.obstacles
            .iter()
            .map(|o| min_distance_polygon(p, o))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn bounding_box(&self) -> Option<Aabb> {
        self.obstacles
            .iter()
            .map(|o| o.aabb())
            .reduce(|a, b| a.union(&b))
    }
}

/// Exact intersection test between a convex quad and an arbitrary simple polygon.
pub fn quad_intersects_polygon(quad: &[Point2; 4], obstacle: &PolygonObstacle) -> bool {
    let verts = obstacle.vertices();
    if verts.iter().any(|&v| point_in_polygon(v, quad)) {
        return true;
    }
    if quad.iter().any(|&c| obstacle.contains(c)) {
        return true;
    }
    for i in 0..4 {
        let (a1, a2) = (quad[i], quad[(i + 1) % 4]);
        for (b1, b2) in obstacle.edges() {
            if segments_intersect(a1, a2, b1, b2) {
                return true;
            }
        }
    }
    false
}

fn first_hit(quad: &[Point2; 4], obstacles: &ObstacleSet) -> Option<u32> {
    let bb = Aabb::from_points(quad.iter().copied()).expect("four corners");
    obstacles
        .candidates(&bb)
        .filter(|o| quad_intersects_polygon(quad, o))
        .map(|o| o.id)
        .min()
}

/// Whether the inflated footprint at `pose` touches any obstacle.
pub fn pose_in_collision(
    pose: &Pose2,
    footprint: &VehicleFootprint,
    obstacles: &ObstacleSet,
    margin: f64,
) -> bool {
    pose_collision(pose, footprint, obstacles, margin).is_some()
}

/// Lowest id of an obstacle touching the inflated footprint, if any.
pub fn pose_collision(
    pose: &Pose2,
    footprint: &VehicleFootprint,
    obstacles: &ObstacleSet,
    margin: f64,
) -> Option<u32> {
    if obstacles.is_empty() {
        return None;
    }
    first_hit(&footprint.corners(pose, margin), obstacles)
}

/// Separation between the bare footprint at `pose` and `obstacle`; zero when
/// they overlap.
pub fn footprint_distance(pose: &Pose2, footprint: &VehicleFootprint, obstacle: &PolygonObstacle) -> f64 {
    let quad = footprint.corners(pose, 0.0);
    if quad_intersects_polygon(&quad, obstacle) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for i in 0..4 {
        let (a, b) = (quad[i], quad[(i + 1) % 4]);
        for &v in obstacle.vertices() {
            best = best.min(point_segment_distance(v, a, b));
        }
    }
    for &c in &quad {
        for (a, b) in obstacle.edges() {
            best = best.min(point_segment_distance(c, a, b));
        }
    }
    best
}

/// Smallest [`footprint_distance`] over all obstacles (+∞ when there are none).
pub fn footprint_clearance(pose: &Pose2, footprint: &VehicleFootprint, obstacles: &ObstacleSet) -> (f64, Option<u32>) {
    obstacles
        .obstacles()
        .iter()
        .map(|o| (footprint_distance(pose, footprint, o), Some(o.id)))
        .fold((f64::INFINITY, None), |acc, x| if x.0 < acc.0 { x } else { acc })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CollisionReport {
    Clear,
    Hit { first_s: f64, obstacle_id: u32 },
}

impl CollisionReport {
    pub fn is_clear(&self) -> bool {
        matches!(self, CollisionReport::Clear)
    }
}

/// Sweeps the footprint along the spline's cached samples.
pub fn edge_in_collision(
    spline: &HermiteSpline,
    footprint: &VehicleFootprint,
    obstacles: &ObstacleSet,
    margin: f64,
) -> CollisionReport {
    if obstacles.is_empty() {
        return CollisionReport::Clear;
    }
    for sample in spline.samples() {
        if let Some(id) = pose_collision(&sample.pose, footprint, obstacles, margin) {
            return CollisionReport::Hit {
                first_s: sample.s,
                obstacle_id: id,
            };
        }
    }
    CollisionReport::Clear
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::hermite_connect;

    fn square(id: u32, cx: f64, cy: f64, size: f64) -> PolygonObstacle {
        PolygonObstacle::rectangle(id, Point2::new(cx, cy), 0.0, size, size)
    }

    #[test]
    fn far_obstacle_is_clear() {
        let fp = VehicleFootprint::default();
        let obs = ObstacleSet::new(vec![square(0, 20.0, 20.0, 1.0)]);
        assert!(!pose_in_collision(&Pose2::new(0.0, 0.0, 0.0), &fp, &obs, 0.2));
    }

    #[test]
    fn vertex_inside_footprint_collides() {
        let fp = VehicleFootprint::default();
        // corner (1.5, 0.5) lies inside the footprint, which spans x in [-0.9, 3.7]
        let obs = ObstacleSet::new(vec![square(0, 2.0, 1.0, 1.0)]);
        assert!(pose_in_collision(&Pose2::new(0.0, 0.0, 0.0), &fp, &obs, 0.0));
    }

    #[test]
    fn margin_touching_counts() {
        let fp = VehicleFootprint::default();
        // footprint side at y = 0.9; obstacle face exactly 0.3 m above it
        let obs = ObstacleSet::new(vec![PolygonObstacle::rectangle(
            0,
            Point2::new(1.4, 0.9 + 0.3 + 0.5),
            0.0,
            1.0,
            1.0,
        )]);
        let pose = Pose2::new(0.0, 0.0, 0.0);
        assert!(pose_in_collision(&pose, &fp, &obs, 0.3));
        assert!(!pose_in_collision(&pose, &fp, &obs, 0.29));
    }

    #[test]
    fn straight_edge_reports() {
        let fp = VehicleFootprint::default();
        let spline = hermite_connect(&Pose2::new(0.0, 0.0, 0.0), &Pose2::new(10.0, 0.0, 0.0), None).unwrap();
        assert!(edge_in_collision(&spline, &fp, &ObstacleSet::default(), 0.2).is_clear());
        let beyond = ObstacleSet::new(vec![square(3, 25.0, 0.0, 1.0)]);
        assert!(edge_in_collision(&spline, &fp, &beyond, 0.2).is_clear());
        let mid = ObstacleSet::new(vec![square(4, 9.0, 0.0, 1.0)]);
        match edge_in_collision(&spline, &fp, &mid, 0.0) {
            CollisionReport::Hit { first_s, obstacle_id } => {
                assert_eq!(obstacle_id, 4);
                // front bumper at s + 3.7 touches x = 8.5 when s = 4.8
                assert!(first_s >= 4.8 - 1e-9 && first_s < 4.8 + 0.25);
            }
            CollisionReport::Clear => panic!("expected a hit"),
        }
    }
}
