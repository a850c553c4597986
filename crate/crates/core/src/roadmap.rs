//! Lattice road map: centreline nodes, spline edges, lane and road
//! boundaries, and destination-rooted cost-to-go.
//!
//! Topology and boundaries are immutable after [`load_map`]; the cost-to-go
//! table is rewritten by [`RoadMap::initialize_destination`] once per planning
//! session.

use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{hermite_connect, side_of_path, Point2, Polyline, Pose2, Side};
use crate::heap::MinEntry;
use crate::spatial::PointGrid;

pub const MAP_VERSION: &str = "autopath-map/1";
/// Largest distance at which a destination snaps onto a lattice node.
pub const SNAP_RADIUS: f64 = 2.0;

pub type LaneId = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("map schema error: {0}")]
    Schema(String),
    #[error("map validation error in {entity}: {reason}")]
    Validation { entity: String, reason: String },
    #[error("destination ({x:.2}, {y:.2}) is not within {radius} m of any map node")]
    DestinationOffMap { x: f64, y: f64, radius: f64 },
    #[error("unknown lane {0}")]
    UnknownLane(LaneId),
}

fn invalid(entity: impl Into<String>, reason: impl Into<String>) -> MapError {
    MapError::Validation {
        entity: entity.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    LaneFollow,
    LaneChange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryTag {
    Lane,
    Road,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundarySide {
    Left,
    Right,
}

/// Declares that a boundary lies on `side` of `lane`, seen along the lane's direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaneSide {
    pub lane: LaneId,
    pub side: BoundarySide,
}

/// A vertex of a boundary polyline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryRef {
    pub boundary: usize,
    pub point: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapNode {
    pub id: u32,
    pub pose: Pose2,
    pub lane: LaneId,
    pub left_boundary: BoundaryRef,
    pub right_boundary: BoundaryRef,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapEdge {
    /// Node index (position in [`RoadMap::nodes`]).
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
    pub spline: Arc<crate::geometry::HermiteSpline>,
    /// Arc length of the spline, metres.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    pub tag: BoundaryTag,
    pub line: Polyline,
    pub lanes: Vec<LaneSide>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegalityRule {
    pub from_lane: LaneId,
    pub to_lane: LaneId,
    pub allowed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaneInfo {
    pub left_boundary: usize,
    pub right_boundary: usize,
    /// Adjacent lane to the left travelling the same way.
    pub left_neighbor: Option<LaneId>,
    pub right_neighbor: Option<LaneId>,
}

// ---- file schema -------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapMeta {
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub lane_id: LaneId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub from: u32,
    pub to: u32,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRecord {
    pub tag: BoundaryTag,
    pub points: Vec<[f64; 2]>,
    pub lanes: Vec<LaneSide>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFile {
    pub meta: MapMeta,
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
    pub boundaries: Vec<BoundaryRecord>,
    #[serde(default)]
    pub legality: Vec<LegalityRule>,
}

// ---- road map ----------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct RoadMap {
    nodes: Vec<MapNode>,
    edges: Vec<MapEdge>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    boundaries: Vec<Boundary>,
    lanes: BTreeMap<LaneId, LaneInfo>,
    legality: Vec<LegalityRule>,
    id_lookup: HashMap<u32, usize>,
    index: PointGrid,
    dist_to_goal: Vec<f64>,
    goal: Option<usize>,
}

impl PartialEq for RoadMap {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.edges == other.edges
            && self.boundaries == other.boundaries
            && self.legality == other.legality
            && self.lanes == other.lanes
    }
}

/// Parses and validates a map document.
pub fn load_map(source: &[u8]) -> Result<RoadMap, MapError> {
    let file: MapFile =
        serde_json::from_slice(source).map_err(|e| MapError::Schema(e.to_string()))?;
    RoadMap::from_file(&file)
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

impl RoadMap {
    pub fn from_file(file: &MapFile) -> Result<RoadMap, MapError> {
        if file.meta.version != MAP_VERSION {
            return Err(MapError::Schema(format!(
                "unsupported map version {:?} (expected {MAP_VERSION:?})",
                file.meta.version
            )));
        }
        if file.nodes.is_empty() {
            return Err(MapError::Schema("map has no nodes".into()));
        }

        let mut boundaries = Vec::with_capacity(file.boundaries.len());
        for (i, b) in file.boundaries.iter().enumerate() {
            let pts = b.points.iter().map(|p| Point2::new(p[0], p[1])).collect();
            let line = Polyline::new(pts)
                .map_err(|e| MapError::Schema(format!("boundary {i}: {e}")))?;
            boundaries.push(Boundary {
                tag: b.tag,
                line,
                lanes: b.lanes.clone(),
            });
        }

        let mut id_lookup = HashMap::with_capacity(file.nodes.len());
        for (i, n) in file.nodes.iter().enumerate() {
            if ![n.x, n.y, n.heading].iter().all(|v| v.is_finite()) {
                return Err(MapError::Schema(format!("node {} has non-finite fields", n.id)));
            }
            if id_lookup.insert(n.id, i).is_some() {
                return Err(invalid(format!("node {}", n.id), "duplicate node id"));
            }
        }

        let lanes = Self::resolve_lanes(file, &boundaries)?;

        for rule in &file.legality {
            for lane in [rule.from_lane, rule.to_lane] {
                if !lanes.contains_key(&lane) {
                    return Err(invalid(
                        format!("legality rule {}->{}", rule.from_lane, rule.to_lane),
                        format!("references unknown lane {lane}"),
                    ));
                }
            }
        }

        let mut nodes = Vec::with_capacity(file.nodes.len());
        for rec in &file.nodes {
            let pose = Pose2::new(rec.x, rec.y, rec.heading);
            let lane = &lanes[&rec.lane_id];
            let left = Self::flanking_ref(&boundaries, lane.left_boundary, &pose);
            let right = Self::flanking_ref(&boundaries, lane.right_boundary, &pose);
            let left_pt = boundaries[left.boundary].line.points()[left.point];
            let right_pt = boundaries[right.boundary].line.points()[right.point];
            if side_of_path(left_pt, &pose) != Side::Left || side_of_path(right_pt, &pose) != Side::Right {
                return Err(invalid(
                    format!("node {}", rec.id),
                    format!("lies outside the boundaries of lane {}", rec.lane_id),
                ));
            }
            nodes.push(MapNode {
                id: rec.id,
                pose,
                lane: rec.lane_id,
                left_boundary: left,
                right_boundary: right,
            });
        }

        let mut map = RoadMap {
            out_edges: vec![Vec::new(); nodes.len()],
            in_edges: vec![Vec::new(); nodes.len()],
            dist_to_goal: vec![f64::INFINITY; nodes.len()],
            index: PointGrid::new(4.0),
            nodes,
            edges: Vec::with_capacity(file.edges.len()),
            boundaries,
            lanes,
            legality: file.legality.clone(),
            id_lookup,
            goal: None,
        };

        for (k, rec) in file.edges.iter().enumerate() {
            let entity = || format!("edge {k} ({}->{})", rec.from, rec.to);
            let from = *map
                .id_lookup
                .get(&rec.from)
                .ok_or_else(|| invalid(entity(), format!("references missing node {}", rec.from)))?;
            let to = *map
                .id_lookup
                .get(&rec.to)
                .ok_or_else(|| invalid(entity(), format!("references missing node {}", rec.to)))?;
            let (la, lb) = (map.nodes[from].lane, map.nodes[to].lane);
            match rec.kind {
                EdgeKind::LaneFollow if la != lb => {
                    return Err(invalid(entity(), "lane-follow edge crosses lanes"));
                }
                EdgeKind::LaneChange if !map.manoeuvre_is_legal(la, lb)? => {
                    return Err(invalid(entity(), format!("lane change {la}->{lb} is not legal")));
                }
                _ => {}
            }
            let spline = hermite_connect(&map.nodes[from].pose, &map.nodes[to].pose, None)
                .map_err(|e| invalid(entity(), e.to_string()))?;
            let cost = crate::geometry::ArcLengthCurve::length(&spline);
            let idx = map.edges.len();
            map.out_edges[from].push(idx);
            map.in_edges[to].push(idx);
            map.edges.push(MapEdge {
                from,
                to,
                kind: rec.kind,
                spline: Arc::new(spline),
                cost,
            });
        }

        // weak connectivity is required within each carriageway; lanes that
        // cannot legally be entered from one another may form separate graphs
        let mut uf = UnionFind((0..map.nodes.len()).collect());
        for e in &map.edges {
            uf.union(e.from, e.to);
        }
        let mut first_in_road: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for i in 0..map.nodes.len() {
            let road = map.road_boundaries(map.nodes[i].lane)?;
            let first = *first_in_road.entry(road).or_insert(i);
            if uf.find(i) != uf.find(first) {
                return Err(invalid(
                    format!("node {}", map.nodes[i].id),
                    format!("not connected to node {}", map.nodes[first].id),
                ));
            }
        }

        for (i, n) in map.nodes.iter().enumerate() {
            map.index.insert(i, n.pose.position());
        }
        Ok(map)
    }

    fn resolve_lanes(
        file: &MapFile,
        boundaries: &[Boundary],
    ) -> Result<BTreeMap<LaneId, LaneInfo>, MapError> {
        let mut sides: BTreeMap<LaneId, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for n in &file.nodes {
            sides.entry(n.lane_id).or_default();
        }
        for (bi, b) in boundaries.iter().enumerate() {
            for ls in &b.lanes {
                let entry = sides.entry(ls.lane).or_default();
                match ls.side {
                    BoundarySide::Left => entry.0.push(bi),
                    BoundarySide::Right => entry.1.push(bi),
                }
            }
        }
        let mut lanes = BTreeMap::new();
        for (&lane, (left, right)) in &sides {
            if left.len() != 1 || right.len() != 1 {
                return Err(invalid(
                    format!("lane {lane}"),
                    format!(
                        "needs exactly one left and one right boundary, found {} and {}",
                        left.len(),
                        right.len()
                    ),
                ));
            }
            lanes.insert(
                lane,
                LaneInfo {
                    left_boundary: left[0],
                    right_boundary: right[0],
                    left_neighbor: None,
                    right_neighbor: None,
                },
            );
        }
        // a boundary that is one lane's left and another's right joins two
        // same-direction neighbours
        let ids: Vec<LaneId> = lanes.keys().copied().collect();
        for &a in &ids {
            for &b in &ids {
                if a != b && lanes[&a].left_boundary == lanes[&b].right_boundary {
                    lanes.get_mut(&a).unwrap().left_neighbor = Some(b);
                    lanes.get_mut(&b).unwrap().right_neighbor = Some(a);
                }
            }
        }
        Ok(lanes)
    }

    fn flanking_ref(boundaries: &[Boundary], boundary: usize, pose: &Pose2) -> BoundaryRef {
        BoundaryRef {
            boundary,
            point: boundaries[boundary].line.nearest_vertex(pose.position()),
        }
    }

    pub fn to_file(&self) -> MapFile {
        MapFile {
            meta: MapMeta {
                version: MAP_VERSION.to_string(),
            },
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeRecord {
                    id: n.id,
                    x: n.pose.x,
                    y: n.pose.y,
                    heading: n.pose.heading(),
                    lane_id: n.lane,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    from: self.nodes[e.from].id,
                    to: self.nodes[e.to].id,
                    kind: e.kind,
                })
                .collect(),
            boundaries: self
                .boundaries
                .iter()
                .map(|b| BoundaryRecord {
                    tag: b.tag,
                    points: b.line.points().iter().map(|p| [p.x, p.y]).collect(),
                    lanes: b.lanes.clone(),
                })
                .collect(),
            legality: self.legality.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("map serializes")
    }

    pub fn nodes(&self) -> &[MapNode] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &MapNode {
        &self.nodes[idx]
    }

    pub fn node_index(&self, id: u32) -> Option<usize> {
        self.id_lookup.get(&id).copied()
    }

    pub fn edges(&self) -> &[MapEdge] {
        &self.edges
    }

    pub fn out_edges(&self, node: usize) -> &[usize] {
        &self.out_edges[node]
    }

    pub fn in_edges(&self, node: usize) -> &[usize] {
        &self.in_edges[node]
    }

    pub fn boundaries(&self) -> &[Boundary] {
        &self.boundaries
    }

    pub fn lanes(&self) -> &BTreeMap<LaneId, LaneInfo> {
        &self.lanes
    }

    pub fn lane(&self, lane: LaneId) -> Result<&LaneInfo, MapError> {
        self.lanes.get(&lane).ok_or(MapError::UnknownLane(lane))
    }

    /// Whether moving from `from_lane` into `to_lane` is permitted.
    pub fn manoeuvre_is_legal(&self, from_lane: LaneId, to_lane: LaneId) -> Result<bool, MapError> {
        let from = self.lane(from_lane)?;
        self.lane(to_lane)?;
        if from_lane == to_lane {
            return Ok(true);
        }
        if let Some(rule) = self
            .legality
            .iter()
            .find(|r| r.from_lane == from_lane && r.to_lane == to_lane)
        {
            return Ok(rule.allowed);
        }
        Ok(from.left_neighbor == Some(to_lane) || from.right_neighbor == Some(to_lane))
    }

    /// Outer boundaries (left, right) of `lane` together with its same-direction
    /// neighbours.
    pub fn outer_boundaries(&self, lane: LaneId) -> Result<(usize, usize), MapError> {
        let info = self.lane(lane)?;
        let left = info
            .left_neighbor
            .map(|l| self.lanes[&l].left_boundary)
            .unwrap_or(info.left_boundary);
        let right = info
            .right_neighbor
            .map(|l| self.lanes[&l].right_boundary)
            .unwrap_or(info.right_boundary);
        Ok((left, right))
    }

    /// Outermost boundaries of the carriageway containing `lane`.
    pub fn road_boundaries(&self, lane: LaneId) -> Result<(usize, usize), MapError> {
        let mut left_lane = lane;
        let mut guard = 0;
        while let Some(next) = self.lane(left_lane)?.left_neighbor {
            left_lane = next;
            guard += 1;
            if guard > self.lanes.len() {
                break;
            }
        }
        let mut right_lane = lane;
        guard = 0;
        while let Some(next) = self.lane(right_lane)?.right_neighbor {
            right_lane = next;
            guard += 1;
            if guard > self.lanes.len() {
                break;
            }
        }
        Ok((
            self.lanes[&left_lane].left_boundary,
            self.lanes[&right_lane].right_boundary,
        ))
    }

    /// Up to `k` nodes within `radius` of `point`, nearest first, ties by node id.
    pub fn nearest_nodes(&self, point: Point2, k: usize, radius: f64) -> Vec<&MapNode> {
        let mut hits = self.index.within(point, radius);
        hits.sort_by(|a, b| {
            a.1.total_cmp(&b.1)
                .then(self.nodes[a.0].id.cmp(&self.nodes[b.0].id))
        });
        hits.into_iter().take(k).map(|(i, _)| &self.nodes[i]).collect()
    }

    /// Index of the nearest node (no radius limit).
    pub fn nearest_node_index(&self, point: Point2) -> Option<usize> {
        self.index.nearest(point).map(|(i, _)| i)
    }

    /// Signed lateral clearance of `p` from the carriageway edges: positive
    /// inside the road, negative outside.
    pub fn road_clearance(&self, p: Point2) -> f64 {
        let Some(n) = self.nearest_node_index(p) else {
            return f64::NEG_INFINITY;
        };
        let node = &self.nodes[n];
        let Ok((left, right)) = self.road_boundaries(node.lane) else {
            return f64::NEG_INFINITY;
        };
        let signed = |b: usize, want: Side| {
            let (c, _, d) = self.boundaries[b].line.closest_point(p);
            let probe = Pose2::from_point(c, node.pose.heading());
            match side_of_path(p, &probe) {
                s if s == want || s == Side::On => d,
                _ => -d,
            }
        };
        signed(left, Side::Right).min(signed(right, Side::Left))
    }

    /// Runs Dijkstra from the snapped destination over reversed edges and
    /// stores the cost-to-go of every node. Returns the goal node index.
    pub fn initialize_destination(&mut self, destination: &Pose2) -> Result<usize, MapError> {
        let goal = self
            .nearest_nodes(destination.position(), 1, SNAP_RADIUS)
            .first()
            .and_then(|n| self.node_index(n.id))
            .ok_or(MapError::DestinationOffMap {
                x: destination.x,
                y: destination.y,
                radius: SNAP_RADIUS,
            })?;
        self.dist_to_goal = dijkstra_to_goal(self.nodes.len(), goal, |v| {
            self.in_edges[v]
                .iter()
                .map(|&e| (self.edges[e].from, self.edges[e].cost))
        });
        self.goal = Some(goal);
        Ok(goal)
    }

    pub fn dist_to_goal(&self) -> &[f64] {
        &self.dist_to_goal
    }

    pub fn goal(&self) -> Option<usize> {
        self.goal
    }
}

/// Shortest cost-to-go from every node to `goal`; `predecessors(v)` yields
/// `(u, cost)` for each edge u→v.
pub fn dijkstra_to_goal<I>(n: usize, goal: usize, predecessors: impl Fn(usize) -> I) -> Vec<f64>
where
    I: Iterator<Item = (usize, f64)>,
{
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[goal] = 0.0;
    heap.push(MinEntry { key: 0.0, tie: goal });
    while let Some(MinEntry { key, tie: v }) = heap.pop() {
        if done[v] || key > dist[v] {
            continue;
        }
        done[v] = true;
        for (u, cost) in predecessors(v) {
            let cand = cost + dist[v];
            if cand < dist[u] {
                dist[u] = cand;
                heap.push(MinEntry { key: cand, tie: u });
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{LaneLayout, MapSpec};

    fn straight(length: f64) -> RoadMap {
        MapSpec::straight(length, LaneLayout::TwoSameDirection).build().unwrap()
    }

    #[test]
    fn two_lane_node_count() {
        let map = straight(200.0);
        assert_eq!(map.nodes().len(), 2 * 101);
    }

    #[test]
    fn missing_node_reference_is_validation_error() {
        let mut file = straight(20.0).to_file();
        file.edges.push(EdgeRecord {
            from: 0,
            to: 9999,
            kind: EdgeKind::LaneFollow,
        });
        let err = RoadMap::from_file(&file).unwrap_err();
        match err {
            MapError::Validation { entity, reason } => {
                assert!(entity.contains("9999"));
                assert!(reason.contains("missing node 9999"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_nodes_is_schema_error() {
        let mut file = straight(20.0).to_file();
        file.nodes.clear();
        assert!(matches!(RoadMap::from_file(&file), Err(MapError::Schema(_))));
    }

    #[test]
    fn wrong_version_rejected() {
        let mut file = straight(20.0).to_file();
        file.meta.version = "autopath-map/0".into();
        assert!(matches!(RoadMap::from_file(&file), Err(MapError::Schema(_))));
        assert!(matches!(load_map(b"{not json"), Err(MapError::Schema(_))));
    }

    #[test]
    fn disconnected_graph_rejected() {
        let mut file = straight(20.0).to_file();
        // remove every edge touching the last node of lane 1
        let last = file.nodes.iter().filter(|n| n.lane_id == 1).map(|n| n.id).max().unwrap();
        file.edges.retain(|e| e.from != last && e.to != last);
        let err = RoadMap::from_file(&file).unwrap_err();
        assert!(matches!(err, MapError::Validation { ref entity, .. } if entity == &format!("node {last}")));
    }

    #[test]
    fn node_outside_boundaries_rejected() {
        let mut file = straight(20.0).to_file();
        file.nodes[0].y += 10.0;
        assert!(matches!(RoadMap::from_file(&file), Err(MapError::Validation { .. })));
    }

    #[test]
    fn destination_distances_on_a_line() {
        let mut map = MapSpec::straight(200.0, LaneLayout::Single).build().unwrap();
        let goal_pose = map.nodes()[50].pose;
        let goal = map.initialize_destination(&goal_pose).unwrap();
        assert_eq!(goal, 50);
        assert_eq!(map.dist_to_goal()[50], 0.0);
        assert!((map.dist_to_goal()[48] - 4.0).abs() < 1e-9);
        assert!(map.dist_to_goal()[51].is_infinite());
    }

    #[test]
    fn destination_off_map() {
        let mut map = straight(20.0);
        let err = map.initialize_destination(&Pose2::new(500.0, 500.0, 0.0)).unwrap_err();
        assert!(matches!(err, MapError::DestinationOffMap { .. }));
    }

    #[test]
    fn nearest_nodes_tiebreak_by_id() {
        let map = MapSpec::straight(20.0, LaneLayout::Single).build().unwrap();
        let on = map.nearest_nodes(map.nodes()[3].pose.position(), 3, 5.0);
        assert_eq!(on[0].id, map.nodes()[3].id);
        // midway between nodes 3 and 4 (x = 6 and x = 8)
        let mid = map.nearest_nodes(Point2::new(7.0, 0.0), 2, 5.0);
        assert_eq!(mid[0].id, 3);
        assert_eq!(mid[1].id, 4);
    }

    #[test]
    fn legality_table() {
        let map = MapSpec::straight(40.0, LaneLayout::TwoPlusOpposing).build().unwrap();
        assert!(map.manoeuvre_is_legal(0, 0).unwrap());
        assert!(map.manoeuvre_is_legal(0, 1).unwrap());
        assert!(map.manoeuvre_is_legal(1, 0).unwrap());
        assert!(!map.manoeuvre_is_legal(1, 2).unwrap());
        assert!(!map.manoeuvre_is_legal(0, 2).unwrap());
        assert!(matches!(map.manoeuvre_is_legal(0, 42), Err(MapError::UnknownLane(42))));
    }

    #[test]
    fn explicit_rule_overrides_adjacency() {
        let mut file = MapSpec::straight(40.0, LaneLayout::TwoSameDirection).build().unwrap().to_file();
        file.edges.retain(|e| e.kind == EdgeKind::LaneFollow || {
            let lane_of = |id: u32| file.nodes.iter().find(|n| n.id == id).unwrap().lane_id;
            lane_of(e.from) != 0
        });
        file.legality.push(LegalityRule { from_lane: 0, to_lane: 1, allowed: false });
        let map = RoadMap::from_file(&file).unwrap();
        assert!(!map.manoeuvre_is_legal(0, 1).unwrap());
        assert!(map.manoeuvre_is_legal(1, 0).unwrap());
    }

    #[test]
    fn road_clearance_signs() {
        let map = straight(40.0);
        // right lane centre at y = 0; road spans y in [-1.85, 5.55]
        assert!((map.road_clearance(Point2::new(10.0, 0.0)) - 1.85).abs() < 1e-9);
        assert!(map.road_clearance(Point2::new(10.0, -3.0)) < 0.0);
        assert!(map.road_clearance(Point2::new(10.0, 6.0)) < 0.0);
    }
}
