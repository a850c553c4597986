//! Hybrid lattice / free-space planner.
//!
//! The forward search is an A*-ordered edge queue with lazy collision checks;
//! cost-to-go comes from a goal-rooted [`ReverseTree`] that is repaired every
//! time an edge turns out to collide. After the first pass, free-space samples
//! are drawn around the nodes of colliding edges and connected into the graph.

mod graph;
mod path;
mod reverse;

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::{edge_in_collision, CollisionReport, pose_in_collision, ObstacleSet, VehicleFootprint};
use crate::geometry::{angle_diff, Aabb, Point2, Pose2};
use crate::heap::MinEntry;
use crate::roadmap::{MapError, RoadMap};

pub use graph::{
    ConnectRules, EdgeStatus, NodeOrigin, SearchEdge, SearchEdgeKind, SearchGraph, SearchNode,
};
pub use path::{PathPose, PlannedPath, PoseSource};
pub use reverse::{CostGraph, ReverseTree};

/// Slack on the "may improve the incumbent" test.
pub const IMPROVEMENT_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PlannerMode {
    #[default]
    Hybrid,
    LatticeOnly,
    FreeSpaceOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub mode: PlannerMode,
    pub max_planning_time: f64,
    pub samples_per_round: usize,
    pub sigma_long: f64,
    pub sigma_lat: f64,
    pub sigma_yaw: f64,
    pub uniform_samples_per_round: usize,
    pub connect_radius: f64,
    pub max_heading_change: f64,
    pub rng_seed: u64,
    pub min_connect_distance: f64,
    pub max_curvature: f64,
    /// Inflation of the uniform-sampling bounding box.
    pub region_inflation: f64,
    pub margin: f64,
    pub footprint: VehicleFootprint,
    /// Hard cap on sampling rounds; keeps runs reproducible.
    pub max_rounds: usize,
    /// Rounds without improvement tolerated once a solution exists.
    pub max_stale_rounds: usize,
    pub stop_at_first_solution: bool,
    pub path_spacing: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            mode: PlannerMode::Hybrid,
            max_planning_time: 10.0,
            samples_per_round: 50,
            sigma_long: 2.0,
            sigma_lat: 1.5,
            sigma_yaw: 0.15,
            uniform_samples_per_round: 20,
            connect_radius: 8.0,
            max_heading_change: 0.6,
            rng_seed: 1,
            min_connect_distance: 0.5,
            max_curvature: 0.25,
            region_inflation: 10.0,
            margin: crate::collision::DEFAULT_MARGIN,
            footprint: VehicleFootprint::default(),
            max_rounds: 400,
            max_stale_rounds: 3,
            stop_at_first_solution: false,
            path_spacing: 1.0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        let positive = [
            ("max_planning_time", self.max_planning_time),
            ("sigma_long", self.sigma_long),
            ("sigma_lat", self.sigma_lat),
            ("sigma_yaw", self.sigma_yaw),
            ("connect_radius", self.connect_radius),
            ("max_heading_change", self.max_heading_change),
            ("max_curvature", self.max_curvature),
            ("path_spacing", self.path_spacing),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PlanError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.margin < 0.0 || self.min_connect_distance < 0.0 {
            return Err(PlanError::InvalidConfig("margins must be non-negative".into()));
        }
        Ok(())
    }

    fn rules(&self) -> ConnectRules {
        ConnectRules {
            radius: self.connect_radius,
            min_distance: self.min_connect_distance,
            max_heading_change: self.max_heading_change,
            max_curvature: self.max_curvature,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("no legal connection from the vehicle pose within {radius} m")]
    StartUnconnectable { radius: f64 },
    #[error("sampling requested but no colliding edges were recorded")]
    NoInvalidNodes,
    #[error("no path found after {passes} passes and {samples} samples (best partial f {best_partial_f})")]
    NoPathFound {
        passes: usize,
        samples: usize,
        best_partial_f: f64,
    },
    #[error("invalid planner config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassResult {
    /// Edges from start to goal, if this pass improved the incumbent.
    pub solution: Option<Vec<usize>>,
    pub cost: f64,
    pub obstacle_encountered: bool,
    /// Edges popped and evaluated (collision status resolved), in order.
    pub explored: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanStats {
    pub passes: usize,
    pub rounds: usize,
    pub samples_drawn: usize,
    pub samples_added: usize,
    pub collision_checks: usize,
    pub first_solution_time: Option<f64>,
    pub first_solution_cost: Option<f64>,
    pub final_cost: Option<f64>,
    pub elapsed: f64,
    pub first_pass_explored: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub path: PlannedPath,
    pub edges: Vec<usize>,
    pub stats: PlanStats,
}

pub struct SearchState<'a> {
    map: &'a RoadMap,
    obstacles: &'a ObstacleSet,
    config: PlannerConfig,
    graph: SearchGraph,
    tree: ReverseTree,
    start: usize,
    goal: usize,
    destination: Pose2,
    invalid: BTreeMap<usize, BTreeSet<u32>>,
    rng: ChaCha8Rng,
    incumbent: Option<(Vec<usize>, f64)>,
    stats: PlanStats,
    last_partial_f: f64,
}

fn start_on_node(map: &RoadMap, pose: &Pose2) -> Option<usize> {
    let n = map.nearest_nodes(pose.position(), 1, 0.05).first().copied()?;
    (angle_diff(n.pose.heading(), pose.heading()).abs() <= 0.05).then(|| map.node_index(n.id).unwrap())
}

/// Builds the search graph, reverse tree and start connections.
pub fn init_search<'a>(
    map: &'a mut RoadMap,
    vehicle: Pose2,
    destination: Pose2,
    obstacles: &'a ObstacleSet,
    config: &PlannerConfig,
) -> Result<SearchState<'a>, PlanError> {
    config.validate()?;
    let map_goal = map.initialize_destination(&destination)?;
    let map: &'a RoadMap = map;
    let rules = config.rules();

    let nearest_ctx = |p: Point2| map.nearest_node_index(p).expect("map has nodes");
    let (mut graph, goal) = match config.mode {
        PlannerMode::FreeSpaceOnly => {
            let mut g = SearchGraph::default();
            let goal = g.add_node(SearchNode {
                pose: destination,
                origin: NodeOrigin::Goal,
                lane: map.node(map_goal).lane,
                context: map_goal,
            });
            (g, goal)
        }
        _ => (SearchGraph::from_map(map), map_goal),
    };

    let snapped = match config.mode {
        PlannerMode::FreeSpaceOnly => None,
        _ => start_on_node(map, &vehicle),
    };
    let start = match snapped {
        Some(n) => n,
        None => {
            let ctx = nearest_ctx(vehicle.position());
            let s = graph.add_node(SearchNode {
                pose: vehicle,
                origin: NodeOrigin::VehicleStart,
                lane: map.node(ctx).lane,
                context: ctx,
            });
            let within = map.nearest_nodes(vehicle.position(), 1, config.connect_radius);
            let tails = if within.is_empty() {
                Vec::new()
            } else {
                graph.connect(s, map, &rules)
            };
            if tails.is_empty() && config.mode != PlannerMode::FreeSpaceOnly {
                return Err(PlanError::StartUnconnectable {
                    radius: config.connect_radius,
                });
            }
            s
        }
    };

    let tree = ReverseTree::new(&graph, goal);
    Ok(SearchState {
        map,
        obstacles,
        rng: ChaCha8Rng::seed_from_u64(config.rng_seed),
        config: config.clone(),
        graph,
        tree,
        start,
        goal,
        destination,
        invalid: BTreeMap::new(),
        incumbent: None,
        stats: PlanStats::default(),
        last_partial_f: f64::INFINITY,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct QueuedEdge {
    from: usize,
    to: usize,
    edge: usize,
}

impl<'a> SearchState<'a> {
    pub fn graph(&self) -> &SearchGraph {
        &self.graph
    }

    pub fn tree(&self) -> &ReverseTree {
        &self.tree
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn goal(&self) -> usize {
        self.goal
    }

    pub fn stats(&self) -> &PlanStats {
        &self.stats
    }

    pub fn incumbent(&self) -> Option<(&[usize], f64)> {
        self.incumbent.as_ref().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn invalid_nodes(&self) -> &BTreeMap<usize, BTreeSet<u32>> {
        &self.invalid
    }

    /// Outgoing edges of the start node in the order the first pass queues them.
    pub fn start_edges(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<_> = self
            .graph
            .out_edges(self.start)
            .iter()
            .map(|&e| (self.graph.edge(e).from, self.graph.edge(e).to))
            .collect();
        v.sort_unstable();
        v
    }

    fn push_out_edges(&self, queue: &mut BinaryHeap<MinEntry<QueuedEdge>>, g_from: &[f64], node: usize) {
        for &e in self.graph.out_edges(node) {
            let edge = self.graph.edge(e);
            let h = self.tree.cost_to_go(edge.to);
            if h.is_infinite() && !self.tree.is_removed(e) {
                continue;
            }
            let key = g_from[node] + edge.cost + if h.is_finite() { h } else { 0.0 };
            queue.push(MinEntry {
                key,
                tie: QueuedEdge {
                    from: node,
                    to: edge.to,
                    edge: e,
                },
            });
        }
    }

    /// One A*-ordered sweep from the start with lazy collision checking.
    pub fn forward_pass(&mut self) -> PassResult {
        self.stats.passes += 1;
        self.invalid.clear();
        let n = self.graph.nodes().len();
        let mut g = vec![f64::INFINITY; n];
        let mut parent: Vec<Option<usize>> = vec![None; n];
        let mut queue = BinaryHeap::new();
        let mut explored = Vec::new();
        let mut best = self.incumbent.as_ref().map_or(f64::INFINITY, |s| s.1);
        let mut found: Option<Vec<usize>> = None;
        let mut partial = f64::INFINITY;

        g[self.start] = 0.0;
        if self.start == self.goal {
            if self.incumbent.is_none() {
                self.incumbent = Some((Vec::new(), 0.0));
                found = Some(Vec::new());
            }
            return PassResult {
                solution: found,
                cost: 0.0,
                obstacle_encountered: false,
                explored,
            };
        }
        self.push_out_edges(&mut queue, &g, self.start);

        while let Some(MinEntry { key, tie }) = queue.pop() {
            if key >= best - IMPROVEMENT_EPS {
                break;
            }
            let QueuedEdge { from, to, edge: e } = tie;
            let cost = self.graph.edge(e).cost;
            let known_invalid = matches!(self.graph.edge(e).status, EdgeStatus::Invalid { .. });
            if !known_invalid {
                let h = self.tree.cost_to_go(to);
                if h.is_infinite() {
                    continue;
                }
                let current = g[from] + cost + h;
                if current > key {
                    queue.push(MinEntry { key: current, tie });
                    continue;
                }
                if current < key {
                    // pushed under an outdated g(from); a fresher entry exists
                    continue;
                }
                if g[from] + cost >= g[to] {
                    continue;
                }
            }
            partial = partial.min(key);

            if self.graph.edge(e).status == EdgeStatus::Unknown {
                self.stats.collision_checks += 1;
                let edge = self.graph.edge(e);
                let report = edge_in_collision(
                    &edge.spline,
                    &self.config.footprint,
                    self.obstacles,
                    self.config.margin,
                );
                self.graph.edge_mut(e).status = match report {
                    CollisionReport::Clear => EdgeStatus::Valid,
                    CollisionReport::Hit { obstacle_id, .. } => {
                        self.tree.remove_edge(&self.graph, e, from);
                        EdgeStatus::Invalid { obstacle_id }
                    }
                };
                explored.push((from, to));
            }
            if let EdgeStatus::Invalid { obstacle_id } = self.graph.edge(e).status {
                for node in [from, to] {
                    self.invalid.entry(node).or_default().insert(obstacle_id);
                }
                continue;
            }

            g[to] = g[from] + cost;
            parent[to] = Some(e);
            if to == self.goal {
                best = g[to];
                found = Some(self.trace(&parent));
                continue;
            }
            self.push_out_edges(&mut queue, &g, to);
        }

        self.last_partial_f = partial;
        let obstacle_encountered = !self.invalid.is_empty();
        let mut cost = f64::INFINITY;
        if let Some(edges) = &found {
            cost = edges.iter().map(|&e| self.graph.edge(e).cost).sum::<f64>().min(best);
            self.incumbent = Some((edges.clone(), best));
        }
        PassResult {
            solution: found,
            cost,
            obstacle_encountered,
            explored,
        }
    }

    fn trace(&self, parent: &[Option<usize>]) -> Vec<usize> {
        let mut edges = Vec::new();
        let mut at = self.goal;
        while at != self.start {
            let e = parent[at].expect("goal reached through parents");
            edges.push(e);
            at = self.graph.edge(e).from;
        }
        edges.reverse();
        edges
    }

    fn driveable(&self, pose: &Pose2) -> bool {
        let fp = &self.config.footprint;
        self.map.road_clearance(fp.center(pose)) >= 0.5 * fp.width
            && !pose_in_collision(pose, fp, self.obstacles, self.config.margin)
    }

    fn uniform_region(&self) -> Aabb {
        let mut bb = Aabb::from_points([
            self.graph.node(self.start).pose.position(),
            self.destination.position(),
        ])
        .expect("two points");
        if let Some(ob) = self.obstacles.bounding_box() {
            bb = bb.union(&ob);
        }
        bb.inflate(self.config.region_inflation)
    }

    /// Draws focused and uniform samples, connects the survivors and updates
    /// the reverse tree. Returns the number of nodes added.
    pub fn sample_round(&mut self) -> Result<usize, PlanError> {
        let free_only = self.config.mode == PlannerMode::FreeSpaceOnly;
        if self.invalid.is_empty() && !free_only {
            return Err(PlanError::NoInvalidNodes);
        }
        self.stats.rounds += 1;
        let mut added = Vec::new();

        let seeds: Vec<usize> = self.invalid.keys().copied().collect();
        if !seeds.is_empty() && !free_only {
            for _ in 0..self.config.samples_per_round {
                let seed = seeds[self.rng.random_range(0..seeds.len())];
                let z: [f64; 3] = [
                    StandardNormal.sample(&mut self.rng),
                    StandardNormal.sample(&mut self.rng),
                    StandardNormal.sample(&mut self.rng),
                ];
                self.stats.samples_drawn += 1;
                let base = self.graph.node(seed).pose;
                let pose = base
                    .offset(z[0] * self.config.sigma_long, z[1] * self.config.sigma_lat)
                    .with_heading(base.heading() + z[2] * self.config.sigma_yaw);
                if !self.driveable(&pose) {
                    continue;
                }
                let (lane, context) = {
                    let s = self.graph.node(seed);
                    (s.lane, s.context)
                };
                added.push(self.graph.add_node(SearchNode {
                    pose,
                    origin: NodeOrigin::FreeSample { seed },
                    lane,
                    context,
                }));
            }
        }

        let region = self.uniform_region();
        let uniform = self.config.uniform_samples_per_round
            + if free_only { self.config.samples_per_round } else { 0 };
        for _ in 0..uniform {
            let x = self.rng.random_range(region.min.x..=region.max.x);
            let y = self.rng.random_range(region.min.y..=region.max.y);
            let p = Point2::new(x, y);
            let ctx = self.map.nearest_node_index(p).expect("map has nodes");
            let heading = if free_only {
                self.rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)
            } else {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                self.map.node(ctx).pose.heading() + z * self.config.sigma_yaw
            };
            self.stats.samples_drawn += 1;
            let pose = Pose2::from_point(p, heading);
            if !self.driveable(&pose) {
                continue;
            }
            added.push(self.graph.add_node(SearchNode {
                pose,
                origin: NodeOrigin::FreeSample { seed: ctx },
                lane: self.map.node(ctx).lane,
                context: ctx,
            }));
        }

        let rules = self.config.rules();
        let mut tails = Vec::new();
        for &node in &added {
            tails.extend(self.graph.connect(node, self.map, &rules));
        }
        self.tree.extend(&self.graph, &tails);
        self.stats.samples_added += added.len();
        Ok(added.len())
    }

    /// Builds the resampled path for a sequence of search edges.
    pub fn path_from_edges(&self, edges: &[usize]) -> PlannedPath {
        PlannedPath::from_edges(&self.graph, self.start, edges, self.config.path_spacing)
    }
}

/// Runs the full planning loop.
pub fn plan(
    map: &mut RoadMap,
    vehicle: Pose2,
    destination: Pose2,
    obstacles: &ObstacleSet,
    config: &PlannerConfig,
) -> Result<PlanOutcome, PlanError> {
    let started = Instant::now();
    let mut state = init_search(map, vehicle, destination, obstacles, config)?;
    let mut stale = 0usize;
    loop {
        let before = state.incumbent.as_ref().map(|s| s.1);
        let pass = state.forward_pass();
        if state.stats.passes == 1 {
            state.stats.first_pass_explored = pass.explored.clone();
        }
        let elapsed = started.elapsed().as_secs_f64();
        if pass.solution.is_some() && before.is_none() {
            state.stats.first_solution_time = Some(elapsed);
            state.stats.first_solution_cost = Some(pass.cost);
        }
        let improved = match (before, state.incumbent.as_ref()) {
            (None, Some(_)) => true,
            (Some(b), Some((_, c))) => *c < b,
            _ => false,
        };
        stale = if improved { 0 } else { stale + 1 };

        let has_solution = state.incumbent.is_some();
        let done = config.mode == PlannerMode::LatticeOnly
            || (has_solution && config.stop_at_first_solution)
            || (has_solution && !pass.obstacle_encountered && config.mode != PlannerMode::FreeSpaceOnly)
            || (has_solution && stale > config.max_stale_rounds)
            || (!has_solution && !pass.obstacle_encountered && config.mode != PlannerMode::FreeSpaceOnly)
            || state.stats.rounds >= config.max_rounds
            || elapsed >= config.max_planning_time;
        if done {
            break;
        }
        if state.sample_round().is_err() {
            break;
        }
    }
    state.stats.elapsed = started.elapsed().as_secs_f64();
    match state.incumbent.clone() {
        Some((edges, cost)) => {
            state.stats.final_cost = Some(cost);
            Ok(PlanOutcome {
                path: state.path_from_edges(&edges),
                edges,
                stats: state.stats,
            })
        }
        None => Err(PlanError::NoPathFound {
            passes: state.stats.passes,
            samples: state.stats.samples_drawn,
            best_partial_f: state.last_partial_f,
        }),
    }
}
