use serde::{Deserialize, Serialize};

use crate::geometry::{ArcLengthCurve, Pose2};
use crate::roadmap::LaneId;

use super::graph::{NodeOrigin, SearchEdgeKind, SearchGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoseSource {
    Lattice,
    FreeSample,
    Vehicle,
    Goal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPose {
    pub pose: Pose2,
    /// Arc length from the path start.
    pub s: f64,
    pub source: PoseSource,
    pub lane: LaneId,
    /// Road-map node providing boundary context.
    pub context_node: usize,
    /// True while the path runs along a lane-follow lattice edge.
    pub lane_follow: bool,
}

/// Poses at fixed arc-length spacing along a planned route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedPath {
    pub poses: Vec<PathPose>,
    pub spacing: f64,
    pub length: f64,
}

impl PlannedPath {
    pub fn from_edges(graph: &SearchGraph, start: usize, edges: &[usize], spacing: f64) -> Self {
        let annotate = |node: usize| {
            let n = graph.node(node);
            let source = match n.origin {
                NodeOrigin::Lattice { .. } => PoseSource::Lattice,
                NodeOrigin::FreeSample { .. } => PoseSource::FreeSample,
                NodeOrigin::VehicleStart => PoseSource::Vehicle,
                NodeOrigin::Goal => PoseSource::Goal,
            };
            (source, n.lane, n.context)
        };
        if edges.is_empty() {
            let (source, lane, context_node) = annotate(start);
            return Self {
                poses: vec![PathPose {
                    pose: graph.node(start).pose,
                    s: 0.0,
                    source,
                    lane,
                    context_node,
                    lane_follow: false,
                }],
                spacing,
                length: 0.0,
            };
        }

        let lengths: Vec<f64> = edges.iter().map(|&e| graph.edge(e).spline.length()).collect();
        let total: f64 = lengths.iter().sum();
        let mut stations: Vec<f64> = (0..)
            .map(|k| k as f64 * spacing)
            .take_while(|&s| s < total - 1e-9)
            .collect();
        stations.push(total);

        let mut poses = Vec::with_capacity(stations.len());
        let mut edge_idx = 0;
        let mut edge_start = 0.0;
        for s in stations {
            while edge_idx + 1 < edges.len() && s > edge_start + lengths[edge_idx] {
                edge_start += lengths[edge_idx];
                edge_idx += 1;
            }
            let edge = graph.edge(edges[edge_idx]);
            let local = (s - edge_start).clamp(0.0, lengths[edge_idx]);
            let near = if local < 0.5 * lengths[edge_idx] { edge.from } else { edge.to };
            let (source, lane, context_node) = annotate(near);
            let pose = if s == total { *edge.spline.end() } else { edge.spline.pose_at(local) };
            poses.push(PathPose {
                pose,
                s,
                source,
                lane,
                context_node,
                lane_follow: edge.kind == SearchEdgeKind::LaneFollow,
            });
        }
        Self {
            poses,
            spacing,
            length: total,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    /// Index of the pose closest to `p`.
    pub fn closest_index(&self, p: crate::geometry::Point2) -> usize {
        self.poses
            .iter()
            .enumerate()
            .map(|(i, q)| (i, q.pose.position().distance_squared(p)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map_or(0, |(i, _)| i)
    }
}
