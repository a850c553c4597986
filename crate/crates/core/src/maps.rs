//! Procedural road maps: straight and curved multi-lane carriageways.

use serde::{Deserialize, Serialize};

use crate::geometry::{Pose2, Point2};
use crate::roadmap::{
    BoundaryRecord, BoundarySide, BoundaryTag, EdgeKind, EdgeRecord, LaneSide, MapError, MapFile,
    MapMeta, NodeRecord, RoadMap, MAP_VERSION,
};

pub const LANE_WIDTH: f64 = 3.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaneLayout {
    /// Lane 0 only.
    Single,
    /// Lane 0 on the right, lane 1 on its left, both forward.
    TwoSameDirection,
    /// As above plus lane 2 travelling the opposite way beyond lane 1.
    TwoPlusOpposing,
}

/// Piece of the reference centreline (lane 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    Straight { length: f64 },
    /// Constant-curvature arc; positive radius turns left.
    Arc { length: f64, radius: f64 },
}

impl Segment {
    fn length(&self) -> f64 {
        match *self {
            Segment::Straight { length } | Segment::Arc { length, .. } => length,
        }
    }

    fn advance(&self, from: &Pose2, s: f64) -> Pose2 {
        match *self {
            Segment::Straight { .. } => from.offset(s, 0.0),
            Segment::Arc { radius, .. } => {
                let turn = s / radius;
                let h = from.heading();
                let x = from.x + radius * ((h + turn).sin() - h.sin());
                let y = from.y - radius * ((h + turn).cos() - h.cos());
                Pose2::new(x, y, h + turn)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub origin: Pose2,
    pub segments: Vec<Segment>,
    pub layout: LaneLayout,
    pub node_spacing: f64,
    /// Longitudinal extent of a lane-change edge.
    pub lane_change_length: f64,
    /// Extra boundary length beyond both ends of the centreline.
    pub boundary_overhang: f64,
}

impl MapSpec {
    pub fn straight(length: f64, layout: LaneLayout) -> Self {
        Self {
            origin: Pose2::new(0.0, 0.0, 0.0),
            segments: vec![Segment::Straight { length }],
            layout,
            node_spacing: 2.0,
            lane_change_length: 20.0,
            boundary_overhang: 10.0,
        }
    }

    /// Straight lead-in, a left-hand bend of `bend` radians, then a straight run-out.
    pub fn curved(lead_in: f64, radius: f64, bend: f64, run_out: f64, layout: LaneLayout) -> Self {
        Self {
            segments: vec![
                Segment::Straight { length: lead_in },
                Segment::Arc {
                    length: radius * bend.abs(),
                    radius: radius * bend.signum(),
                },
                Segment::Straight { length: run_out },
            ],
            ..Self::straight(0.0, layout)
        }
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(Segment::length).sum()
    }

    /// Pose on the lane-0 centreline at arc length `s`; extends straight past both ends.
    pub fn reference_pose(&self, s: f64) -> Pose2 {
        if s <= 0.0 {
            return self.origin.offset(s, 0.0);
        }
        let mut pose = self.origin;
        let mut remaining = s;
        for seg in &self.segments {
            if remaining <= seg.length() {
                return seg.advance(&pose, remaining);
            }
            pose = seg.advance(&pose, seg.length());
            remaining -= seg.length();
        }
        pose.offset(remaining, 0.0)
    }

    fn lane_count(&self) -> u32 {
        match self.layout {
            LaneLayout::Single => 1,
            LaneLayout::TwoSameDirection => 2,
            LaneLayout::TwoPlusOpposing => 3,
        }
    }

    fn lane_pose(&self, lane: u32, s: f64) -> Pose2 {
        let base = self.reference_pose(s);
        let p = base.offset(0.0, lane as f64 * LANE_WIDTH);
        if lane == 2 {
            p.with_heading(base.heading() + std::f64::consts::PI)
        } else {
            p
        }
    }

    pub fn to_file(&self) -> MapFile {
        let total = self.total_length();
        let per_lane = (total / self.node_spacing).round() as usize + 1;
        let lanes = self.lane_count();
        let id = |lane: u32, i: usize| lane * per_lane as u32 + i as u32;

        let mut nodes = Vec::new();
        for lane in 0..lanes {
            for i in 0..per_lane {
                let p = self.lane_pose(lane, i as f64 * self.node_spacing);
                nodes.push(NodeRecord {
                    id: id(lane, i),
                    x: p.x,
                    y: p.y,
                    heading: p.heading(),
                    lane_id: lane,
                });
            }
        }

        let mut edges = Vec::new();
        for lane in 0..lanes {
            for i in 0..per_lane - 1 {
                let (from, to) = if lane == 2 { (i + 1, i) } else { (i, i + 1) };
                edges.push(EdgeRecord {
                    from: id(lane, from),
                    to: id(lane, to),
                    kind: EdgeKind::LaneFollow,
                });
            }
        }
        if lanes >= 2 {
            let ahead = (self.lane_change_length / self.node_spacing).round() as usize;
            for i in 0..per_lane.saturating_sub(ahead) {
                for (a, b) in [(0, 1), (1, 0)] {
                    edges.push(EdgeRecord {
                        from: id(a, i),
                        to: id(b, i + ahead),
                        kind: EdgeKind::LaneChange,
                    });
                }
            }
        }

        let offsets: Vec<f64> = (0..=lanes).map(|k| (k as f64 - 0.5) * LANE_WIDTH).collect();
        let mut boundaries = Vec::new();
        for (k, &off) in offsets.iter().enumerate() {
            let k = k as u32;
            let mut lane_sides = Vec::new();
            if k < lanes {
                let side = if k == 2 { BoundarySide::Left } else { BoundarySide::Right };
                lane_sides.push(LaneSide { lane: k, side });
            }
            if k >= 1 {
                let side = if k - 1 == 2 { BoundarySide::Right } else { BoundarySide::Left };
                lane_sides.push(LaneSide { lane: k - 1, side });
            }
            let tag = if k == 0 || k == lanes { BoundaryTag::Road } else { BoundaryTag::Lane };
            let start = -self.boundary_overhang;
            let count = ((total + 2.0 * self.boundary_overhang) / 1.0).round() as usize + 1;
            let points = (0..count)
                .map(|j| {
                    let p: Point2 = self.reference_pose(start + j as f64).offset(0.0, off).position();
                    [p.x, p.y]
                })
                .collect();
            boundaries.push(BoundaryRecord {
                tag,
                points,
                lanes: lane_sides,
            });
        }

        MapFile {
            meta: MapMeta {
                version: MAP_VERSION.to_string(),
            },
            nodes,
            edges,
            boundaries,
            legality: Vec::new(),
        }
    }

    pub fn build(&self) -> Result<RoadMap, MapError> {
        RoadMap::from_file(&self.to_file())
    }
}

/// Names accepted by [`builtin`].
pub const BUILTIN_MAPS: &[&str] = &["straight", "single", "opposing", "curved", "short"];

pub fn builtin_spec(name: &str) -> Option<MapSpec> {
    Some(match name {
        "straight" => MapSpec::straight(200.0, LaneLayout::TwoSameDirection),
        "single" => MapSpec::straight(200.0, LaneLayout::Single),
        "opposing" => MapSpec::straight(200.0, LaneLayout::TwoPlusOpposing),
        "curved" => MapSpec::curved(80.0, 40.0, std::f64::consts::FRAC_PI_2 * 0.5, 60.0, LaneLayout::TwoSameDirection),
        "short" => MapSpec::straight(100.0, LaneLayout::TwoSameDirection),
        _ => return None,
    })
}

pub fn builtin(name: &str) -> Option<RoadMap> {
    builtin_spec(name).map(|spec| spec.build().expect("builtin maps are valid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{hermite_connect, ArcLengthCurve};

    #[test]
    fn every_builtin_builds() {
        for name in BUILTIN_MAPS {
            let map = builtin(name).unwrap();
            assert!(!map.nodes().is_empty(), "{name}");
        }
        assert!(builtin("nope").is_none());
    }

    #[test]
    fn arc_segment_closes_quarter_circle() {
        let seg = Segment::Arc { length: 10.0 * std::f64::consts::FRAC_PI_2, radius: 10.0 };
        let end = seg.advance(&Pose2::new(0.0, 0.0, 0.0), seg.length());
        assert!((end.x - 10.0).abs() < 1e-9 && (end.y - 10.0).abs() < 1e-9);
        assert!((end.heading() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn lane_change_lateral_acceleration_is_moderate() {
        // peak curvature of the lane-change edge times v^2 at 5 m/s
        let spec = MapSpec::straight(40.0, LaneLayout::TwoSameDirection);
        let spline = hermite_connect(&spec.lane_pose(0, 0.0), &spec.lane_pose(1, 20.0), None).unwrap();
        assert!(spline.max_curvature() * 25.0 < 3.0);
        assert!(spline.length() > 20.0);
    }

    #[test]
    fn round_trip_reproduces_map() {
        for name in BUILTIN_MAPS {
            let map = builtin(name).unwrap();
            let again = crate::roadmap::load_map(map.to_json().as_bytes()).unwrap();
            assert_eq!(map, again, "{name}");
        }
    }
}
