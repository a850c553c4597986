use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::{angle_diff, hermite_connect, ArcLengthCurve, HermiteSpline, Pose2};
use crate::roadmap::{EdgeKind, LaneId, RoadMap};
use crate::spatial::PointGrid;

use super::reverse::CostGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NodeOrigin {
    /// Copy of a road-map node (map node index).
    Lattice { map_node: usize },
    /// Free-space sample; `seed` is the search node it was drawn around, or
    /// the nearest lattice node for uniform draws.
    FreeSample { seed: usize },
    VehicleStart,
    Goal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchNode {
    pub pose: Pose2,
    pub origin: NodeOrigin,
    pub lane: LaneId,
    /// Road-map node whose boundary context this node borrows.
    pub context: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchEdgeKind {
    LaneFollow,
    LaneChange,
    Free,
}

impl From<EdgeKind> for SearchEdgeKind {
    fn from(k: EdgeKind) -> Self {
        match k {
            EdgeKind::LaneFollow => SearchEdgeKind::LaneFollow,
            EdgeKind::LaneChange => SearchEdgeKind::LaneChange,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeStatus {
    Unknown,
    Valid,
    Invalid { obstacle_id: u32 },
}

#[derive(Debug, Clone)]
pub struct SearchEdge {
    pub from: usize,
    pub to: usize,
    pub kind: SearchEdgeKind,
    pub spline: Arc<HermiteSpline>,
    pub cost: f64,
    pub status: EdgeStatus,
}

#[derive(Debug, Clone)]
pub struct SearchGraph {
    nodes: Vec<SearchNode>,
    edges: Vec<SearchEdge>,
    out: Vec<Vec<usize>>,
    inn: Vec<Vec<usize>>,
    index: PointGrid,
}

/// Geometric and legality limits for new connections.
#[derive(Debug, Clone, Copy)]
pub struct ConnectRules {
    pub radius: f64,
    pub min_distance: f64,
    pub max_heading_change: f64,
    pub max_curvature: f64,
}

impl Default for SearchGraph {
    fn default() -> Self {
        Self {
            nodes: Vec::new(),
            edges: Vec::new(),
            out: Vec::new(),
            inn: Vec::new(),
            index: PointGrid::new(4.0),
        }
    }
}

impl SearchGraph {
    /// Graph holding every map node (same indices) and map edge.
    pub fn from_map(map: &RoadMap) -> Self {
        let mut g = Self::default();
        for (i, n) in map.nodes().iter().enumerate() {
            g.add_node(SearchNode {
                pose: n.pose,
                origin: NodeOrigin::Lattice { map_node: i },
                lane: n.lane,
                context: i,
            });
        }
        for e in map.edges() {
            g.add_edge(SearchEdge {
                from: e.from,
                to: e.to,
                kind: e.kind.into(),
                spline: Arc::clone(&e.spline),
                cost: e.cost,
                status: EdgeStatus::Unknown,
            });
        }
        g
    }

    pub fn nodes(&self) -> &[SearchNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &SearchNode {
        &self.nodes[i]
    }

    pub fn edges(&self) -> &[SearchEdge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &SearchEdge {
        &self.edges[e]
    }

    pub(crate) fn edge_mut(&mut self, e: usize) -> &mut SearchEdge {
        &mut self.edges[e]
    }

    pub fn out_edges(&self, n: usize) -> &[usize] {
        &self.out[n]
    }

    pub fn in_edges(&self, n: usize) -> &[usize] {
        &self.inn[n]
    }

    pub fn add_node(&mut self, node: SearchNode) -> usize {
        let id = self.nodes.len();
        self.index.insert(id, node.pose.position());
        self.nodes.push(node);
        self.out.push(Vec::new());
        self.inn.push(Vec::new());
        id
    }

    pub fn add_edge(&mut self, edge: SearchEdge) -> usize {
        let id = self.edges.len();
        self.out[edge.from].push(id);
        self.inn[edge.to].push(id);
        self.edges.push(edge);
        id
    }

    /// Whether `a → b` is an admissible connection: heading change bounded and
    /// the chord pointing along both headings.
    pub fn forward_compatible(a: &Pose2, b: &Pose2, rules: &ConnectRules) -> bool {
        let d = a.distance(b);
        if d < rules.min_distance || d > rules.radius {
            return false;
        }
        if angle_diff(b.heading(), a.heading()).abs() > rules.max_heading_change {
            return false;
        }
        let chord = (b.position() - a.position()).angle();
        angle_diff(chord, a.heading()).abs() <= rules.max_heading_change
            && angle_diff(chord, b.heading()).abs() <= rules.max_heading_change
    }

    /// Connects `node` to its neighbours within the connect radius in whichever
    /// direction the geometry permits. Returns the tails of the new edges.
    pub fn connect(&mut self, node: usize, map: &RoadMap, rules: &ConnectRules) -> Vec<usize> {
        let mut tails = Vec::new();
        let here = self.nodes[node].pose;
        for (other, _) in self.index.within(here.position(), rules.radius) {
            if other == node {
                continue;
            }
            let there = self.nodes[other].pose;
            let (from, to) = if Self::forward_compatible(&here, &there, rules) {
                (node, other)
            } else if Self::forward_compatible(&there, &here, rules) {
                (other, node)
            } else {
                continue;
            };
            if self.nodes[to].origin == NodeOrigin::VehicleStart
                || self.nodes[from].origin == NodeOrigin::Goal
            {
                continue;
            }
            let (la, lb) = (self.nodes[from].lane, self.nodes[to].lane);
            if !map.manoeuvre_is_legal(la, lb).unwrap_or(false) {
                continue;
            }
            let Ok(spline) = hermite_connect(&self.nodes[from].pose, &self.nodes[to].pose, None) else {
                continue;
            };
            if spline.max_curvature() > rules.max_curvature {
                continue;
            }
            let cost = spline.length();
            self.add_edge(SearchEdge {
                from,
                to,
                kind: SearchEdgeKind::Free,
                spline: Arc::new(spline),
                cost,
                status: EdgeStatus::Unknown,
            });
            tails.push(from);
        }
        tails
    }
}

impl CostGraph for SearchGraph {
    fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn outgoing(&self, node: usize) -> Vec<(usize, usize, f64)> {
        self.out[node]
            .iter()
            .map(|&e| (e, self.edges[e].to, self.edges[e].cost))
            .collect()
    }

    fn incoming(&self, node: usize) -> Vec<(usize, usize, f64)> {
        self.inn[node]
            .iter()
            .map(|&e| (e, self.edges[e].from, self.edges[e].cost))
            .collect()
    }
}
