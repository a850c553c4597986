//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use autopath::geometry::Point2;
use autopath::qp::ConvexQp;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Central-difference Jacobian of `f` at `x`.
pub fn central_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let m = f(x).len();
    let mut jac = vec![vec![0.0; x.len()]; m];
    for c in 0..x.len() {
        let mut hi = x.to_vec();
        let mut lo = x.to_vec();
        hi[c] += h;
        lo[c] -= h;
        let (fh, fl) = (f(&hi), f(&lo));
        for r in 0..m {
            jac[r][c] = (fh[r] - fl[r]) / (2.0 * h);
        }
    }
    jac
}

/// `min ½xᵀPx + qᵀx  s.t.  Ax = b,  Gx ≤ h` in dense form.
#[derive(Debug, Clone)]
pub struct DenseQp {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
}

impl DenseQp {
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.p * x)) + self.q.dot(x)
    }

    pub fn to_sparse(&self) -> ConvexQp {
        let n = self.q.len();
        let mut qp = ConvexQp::new(n);
        for i in 0..n {
            for j in i..n {
                if self.p[(i, j)] != 0.0 {
                    qp.p.push((i, j, self.p[(i, j)]));
                }
            }
        }
        qp.q = self.q.iter().copied().collect();
        let row = |m: &DMatrix<f64>, r: usize| (0..n).filter(|&c| m[(r, c)] != 0.0).map(|c| (c, m[(r, c)])).collect();
        for r in 0..self.a.nrows() {
            qp.add_eq(row(&self.a, r), self.b[r]);
        }
        for r in 0..self.g.nrows() {
            qp.add_ineq(row(&self.g, r), self.h[r]);
        }
        qp
    }
}

/// Random strictly convex instance whose feasible set has an interior point.
pub fn random_dense_qp(rng: &mut ChaCha8Rng, n: usize, ineq: usize, eq: usize) -> DenseQp {
    let m = DMatrix::from_fn(n, n, |_, _| normal(rng));
    let p = m.transpose() * &m / n as f64 + DMatrix::identity(n, n) * 0.1;
    let q = DVector::from_fn(n, |_, _| 10.0 * normal(rng));
    let x0 = DVector::from_fn(n, |_, _| normal(rng));
    let a = DMatrix::from_fn(eq, n, |_, _| normal(rng));
    let b = &a * &x0;
    let g = DMatrix::from_fn(ineq, n, |_, _| normal(rng));
    let h = &g * &x0 + DVector::from_fn(ineq, |_, _| rng.random_range(0.05..1.0));
    DenseQp { p, q, a, b, g, h }
}

fn kkt_solve(qp: &DenseQp, active: &[usize]) -> (DVector<f64>, DVector<f64>) {
    let n = qp.q.len();
    let me = qp.a.nrows();
    let size = n + me + active.len();
    let mut k = DMatrix::zeros(size, size);
    let mut rhs = DVector::zeros(size);
    k.view_mut((0, 0), (n, n)).copy_from(&qp.p);
    rhs.rows_mut(0, n).copy_from(&(-&qp.q));
    for r in 0..me {
        for c in 0..n {
            k[(n + r, c)] = qp.a[(r, c)];
            k[(c, n + r)] = qp.a[(r, c)];
        }
        rhs[n + r] = qp.b[r];
    }
    for (i, &r) in active.iter().enumerate() {
        for c in 0..n {
            k[(n + me + i, c)] = qp.g[(r, c)];
            k[(c, n + me + i)] = qp.g[(r, c)];
        }
        rhs[n + me + i] = qp.h[r];
    }
    let sol = k.lu().solve(&rhs).expect("KKT matrix is nonsingular");
    let x = sol.rows(0, n).into_owned();
    let z = sol.rows(n + me, active.len()).into_owned();
    (x, z)
}

/// Hildreth dual coordinate ascent for `min ½wᵀHw + fᵀw s.t. Mw ≤ γ`.
fn hildreth(h: &DMatrix<f64>, f: &DVector<f64>, m: &DMatrix<f64>, gamma: &DVector<f64>) -> DVector<f64> {
    let hinv = h.clone().try_inverse().expect("positive definite");
    let pd = m * &hinv * m.transpose();
    let d = gamma + m * &hinv * f;
    let k = m.nrows();
    let mut lambda: DVector<f64> = DVector::zeros(k);
    for _ in 0..200_000 {
        let mut change: f64 = 0.0;
        for i in 0..k {
            let mut s = d[i];
            for j in 0..k {
                if j != i {
                    s += pd[(i, j)] * lambda[j];
                }
            }
            let next = (-s / pd[(i, i)]).max(0.0);
            change = change.max((next - lambda[i]).abs());
            lambda[i] = next;
        }
        if change < 1e-13 {
            break;
        }
    }
    lambda
}

/// Exact solution by Hildreth's method for the active set, refined by a
/// primal-dual active-set loop of dense KKT solves.
pub fn dense_qp_oracle(qp: &DenseQp) -> (DVector<f64>, f64) {
    let n = qp.q.len();
    let me = qp.a.nrows();
    // Reduce the equalities: x = xp + Z w.
    let (xp, z) = if me == 0 {
        (DVector::zeros(n), DMatrix::identity(n, n))
    } else {
        let xp = qp.a.clone().svd(true, true).solve(&qp.b, 1e-12).expect("least squares");
        let mut padded = DMatrix::zeros(n, n);
        padded.view_mut((0, 0), (me, n)).copy_from(&qp.a);
        let svd = padded.svd(false, true);
        let v = svd.v_t.expect("v_t").transpose();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let basis: Vec<DVector<f64>> = order[me..].iter().map(|&c| v.column(c).into_owned()).collect();
        (xp, DMatrix::from_columns(&basis))
    };
    let hred = z.transpose() * &qp.p * &z;
    let fred = z.transpose() * (&qp.p * &xp + &qp.q);
    let mred = &qp.g * &z;
    let gred = &qp.h - &qp.g * &xp;
    let lambda = hildreth(&hred, &fred, &mred, &gred);

    let mut active: Vec<usize> = (0..qp.g.nrows()).filter(|&i| lambda[i] > 1e-9).collect();
    for _ in 0..200 {
        let (x, zm) = kkt_solve(qp, &active);
        if let Some((pos, _)) = zm
            .iter()
            .enumerate()
            .filter(|(_, &v)| v < -1e-10)
            .min_by(|a, b| a.1.total_cmp(b.1))
        {
            active.remove(pos);
            continue;
        }
        let viol = &qp.g * &x - &qp.h;
        if let Some((r, _)) = viol
            .iter()
            .enumerate()
            .filter(|(r, &v)| v > 1e-10 && !active.contains(r))
            .max_by(|a, b| a.1.total_cmp(b.1))
        {
            active.push(r);
            continue;
        }
        let obj = qp.objective(&x);
        return (x, obj);
    }
    panic!("active-set oracle did not settle");
}

/// Cost-to-go to `goal` by Bellman-Ford relaxation over `(from, to, cost)` edges.
pub fn bellman_ford_to_goal(n: usize, edges: &[(usize, usize, f64)], goal: usize) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; n];
    d[goal] = 0.0;
    for _ in 0..n {
        let mut changed = false;
        for &(from, to, c) in edges {
            if d[to] + c < d[from] {
                d[from] = d[to] + c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    d
}

/// Quadratic-time Dijkstra from `start`; returns the cost to every node.
pub fn dijkstra_from(n: usize, edges: &[(usize, usize, f64)], start: usize) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    d[start] = 0.0;
    loop {
        let next = (0..n).filter(|&i| !done[i] && d[i].is_finite()).min_by(|&a, &b| d[a].total_cmp(&d[b]));
        let Some(u) = next else { break };
        done[u] = true;
        for &(from, to, c) in edges {
            if from == u && d[u] + c < d[to] {
                d[to] = d[u] + c;
            }
        }
    }
    d
}

fn on_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    ((p.0 - a.0 - t * dx).powi(2) + (p.1 - a.1 - t * dy).powi(2)).sqrt()
}

/// Distance from `p` to a simple polygon, zero inside (winding number test).
pub fn polygon_distance(p: (f64, f64), poly: &[(f64, f64)]) -> f64 {
    let mut winding = 0i32;
    let mut best = f64::INFINITY;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        best = best.min(on_segment_distance(p, a, b));
        let cross = (b.0 - a.0) * (p.1 - a.1) - (p.0 - a.0) * (b.1 - a.1);
        if a.1 <= p.1 {
            if b.1 > p.1 && cross > 0.0 {
                winding += 1;
            }
        } else if b.1 <= p.1 && cross < 0.0 {
            winding -= 1;
        }
    }
    if winding != 0 {
        0.0
    } else {
        best
    }
}

/// Separating-axis overlap test for two convex polygons (touching counts).
pub fn convex_overlap(a: &[Point2], b: &[Point2]) -> bool {
    for poly in [a, b] {
        for i in 0..poly.len() {
            let e = poly[(i + 1) % poly.len()] - poly[i];
            let axis = Point2::new(-e.y, e.x);
            let project = |ps: &[Point2]| {
                ps.iter()
                    .map(|p| axis.dot(*p))
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
            };
            let (alo, ahi) = project(a);
            let (blo, bhi) = project(b);
            if ahi < blo - 1e-12 || bhi < alo - 1e-12 {
                return false;
            }
        }
    }
    true
}

/// Distance between two convex polygons, zero when they overlap.
pub fn convex_distance(a: &[Point2], b: &[Point2]) -> f64 {
    if convex_overlap(a, b) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for (from, to) in [(a, b), (b, a)] {
        for &p in from {
            for i in 0..to.len() {
                let (s, e) = (to[i], to[(i + 1) % to.len()]);
                best = best.min(on_segment_distance((p.x, p.y), (s.x, s.y), (e.x, e.y)));
            }
        }
    }
    best
}

/// Corners of a `length` x `width` rectangle whose centre lies `ahead` metres
/// in front of the pose.
pub fn body_corners(x: f64, y: f64, heading: f64, length: f64, width: f64, ahead: f64) -> Vec<Point2> {
    let (s, c) = heading.sin_cos();
    let (cx, cy) = (x + ahead * c, y + ahead * s);
    [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
        .iter()
        .map(|&(f, l)| {
            let (dx, dy) = (f * 0.5 * length, l * 0.5 * width);
            Point2::new(cx + dx * c - dy * s, cy + dx * s + dy * c)
        })
        .collect()
}

/// Path along the x axis from the origin with poses every metre.
pub fn straight_path(length: usize, lane_follow: bool) -> autopath::planner::PlannedPath {
    use autopath::geometry::Pose2;
    use autopath::planner::{PathPose, PlannedPath, PoseSource};
    PlannedPath {
        poses: (0..=length)
            .map(|i| PathPose {
                pose: Pose2::new(i as f64, 0.0, 0.0),
                s: i as f64,
                source: PoseSource::Lattice,
                lane: 0,
                context_node: 0,
                lane_follow,
            })
            .collect(),
        spacing: 1.0,
        length: length as f64,
    }
}

/// Corridor along the x axis with its left edge at `y = left` and right edge
/// at `y = -right`; step `k` sits at `x = k + 1`.
pub fn straight_corridor(n: usize, left: f64, right: f64, v_ref: f64, reference: bool) -> autopath::corridor::Corridor {
    use autopath::corridor::{
        BoundaryPoint, Classified, Corridor, CorridorParams, CorridorSide, CorridorStep, HalfPlane, PointSource,
        Reference,
    };
    use autopath::geometry::Pose2;
    let params = CorridorParams::default();
    let mut steps = Vec::with_capacity(n);
    let mut candidates = Vec::with_capacity(n);
    for k in 0..n {
        let x = (k + 1) as f64;
        let lp = BoundaryPoint {
            position: Point2::new(x, left),
            source: PointSource::RoadBoundary,
            side: CorridorSide::Left,
        };
        let rp = BoundaryPoint {
            position: Point2::new(x, -right),
            source: PointSource::RoadBoundary,
            side: CorridorSide::Right,
        };
        let width = left + right;
        steps.push(CorridorStep {
            path_pose: Pose2::new(x, 0.0, 0.0),
            left: HalfPlane::through(lp.position, Point2::new(0.0, 1.0)),
            right: HalfPlane::through(rp.position, Point2::new(0.0, -1.0)),
            left_point: lp,
            right_point: rp,
            reference: reference.then_some(Reference { x, y: 0.0, v: v_ref }),
            v_ref,
            narrow: width < params.vehicle_width + 2.0 * params.sigma_buffer,
            width,
        });
        candidates.push(Classified {
            left: vec![lp],
            right: vec![rp],
        });
    }
    Corridor::from_steps(steps, candidates, &params)
}
