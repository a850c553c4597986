//! Planar geometric primitives shared by every other module.
//!
//! Everything here is expressed in the map frame, in metres and radians.
//! Types are immutable after construction.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Separation below which two points are considered coincident.
pub const POINT_EPS: f64 = 1e-9;
/// Cross-product magnitude below which a point is classified [`Side::On`].
pub const SIDE_EPS: f64 = 1e-9;
/// Arc-length spacing of the cached spline samples used for collision and
/// curvature queries.
pub const SPLINE_SAMPLE_SPACING: f64 = 0.25;
/// Minimum endpoint separation accepted by [`hermite_connect`].
pub const MIN_SPLINE_SEPARATION: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("spline endpoints are degenerate (separation {0:.3e} m)")]
    DegenerateEndpoints(f64),
    #[error("polyline needs at least two points, got {0}")]
    PolylineTooShort(usize),
    #[error("polyline points {0} and {1} coincide")]
    RepeatedPoint(usize, usize),
    #[error("polygon needs at least three vertices, got {0}")]
    PolygonTooSmall(usize),
    #[error("polygon has zero area")]
    PolygonDegenerate,
    #[error("polygon edges {0} and {1} intersect")]
    PolygonSelfIntersecting(usize, usize),
    #[error("non-finite coordinate")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn distance_squared(self, other: Point2) -> f64 {
        let d = self - other;
        d.dot(d)
    }

    /// Unit vector at angle `heading`.
    pub fn from_angle(heading: f64) -> Self {
        Self::new(heading.cos(), heading.sin())
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into (−π, π].
pub fn normalize_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let wrapped = angle.rem_euclid(2.0 * PI);
    if wrapped > PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// Signed smallest rotation taking `from` onto `to`.
pub fn angle_diff(to: f64, from: f64) -> f64 {
    normalize_angle(to - from)
}

/// Position and heading in the map frame. The heading is kept in (−π, π].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawPose", into = "RawPose")]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    heading: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPose {
    x: f64,
    y: f64,
    heading: f64,
}

impl From<RawPose> for Pose2 {
    fn from(raw: RawPose) -> Self {
        Pose2::new(raw.x, raw.y, raw.heading)
    }
}

impl From<Pose2> for RawPose {
    fn from(pose: Pose2) -> Self {
        RawPose {
            x: pose.x,
            y: pose.y,
            heading: pose.heading,
        }
    }
}

impl Pose2 {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn from_point(p: Point2, heading: f64) -> Self {
        Self::new(p.x, p.y, heading)
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn direction(&self) -> Point2 {
        Point2::from_angle(self.heading)
    }

    pub fn with_heading(&self, heading: f64) -> Self {
        Self::new(self.x, self.y, heading)
    }

    /// Moves `forward` along the heading and `left` perpendicular to it.
    pub fn offset(&self, forward: f64, left: f64) -> Self {
        let dir = self.direction();
        let p = self.position() + dir * forward + dir.perp() * left;
        Self::new(p.x, p.y, self.heading)
    }

    pub fn distance(&self, other: &Pose2) -> f64 {
        self.position().distance(other.position())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    On,
}

/// Which side of the directed line through `path_point` a point lies on.
pub fn side_of_path(point: Point2, path_point: &Pose2) -> Side {
    let cross = path_point.direction().cross(point - path_point.position());
    if cross > SIDE_EPS {
        Side::Left
    } else if cross < -SIDE_EPS {
        Side::Right
    } else {
        Side::On
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point2,
    pub max: Point2,
}

impl Aabb {
    pub fn from_points(points: impl IntoIterator<Item = Point2>) -> Option<Self> {
        let mut iter = points.into_iter();
        let first = iter.next()?;
        let mut bb = Aabb {
            min: first,
            max: first,
        };
        for p in iter {
            bb.min.x = bb.min.x.min(p.x);
            bb.min.y = bb.min.y.min(p.y);
            bb.max.x = bb.max.x.max(p.x);
            bb.max.y = bb.max.y.max(p.y);
        }
        Some(bb)
    }

    pub fn inflate(&self, by: f64) -> Self {
        Aabb {
            min: Point2::new(self.min.x - by, self.min.y - by),
            max: Point2::new(self.max.x + by, self.max.y + by),
        }
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: Point2::new(self.min.x.min(other.min.x), self.min.y.min(other.min.y)),
            max: Point2::new(self.max.x.max(other.max.x), self.max.y.max(other.max.y)),
        }
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        self.min.x <= other.max.x
            && other.min.x <= self.max.x
            && self.min.y <= other.max.y
            && other.min.y <= self.max.y
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

/// Closest point on segment `a`–`b` to `p`, with the segment parameter in [0, 1].
pub fn closest_point_on_segment(p: Point2, a: Point2, b: Point2) -> (Point2, f64) {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 <= 0.0 {
        return (a, 0.0);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    (a + ab * t, t)
}

pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    closest_point_on_segment(p, a, b).0.distance(p)
}

fn orientation(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(p: Point2, a: Point2, b: Point2, eps: f64) -> bool {
    p.x >= a.x.min(b.x) - eps
        && p.x <= a.x.max(b.x) + eps
        && p.y >= a.y.min(b.y) - eps
        && p.y <= a.y.max(b.y) + eps
}

/// Closed-segment intersection test; touching segments intersect.
pub fn segments_intersect(a1: Point2, a2: Point2, b1: Point2, b2: Point2) -> bool {
    const EPS: f64 = 1e-12;
    let d1 = orientation(b1, b2, a1);
    let d2 = orientation(b1, b2, a2);
    let d3 = orientation(a1, a2, b1);
    let d4 = orientation(a1, a2, b2);
    if ((d1 > EPS && d2 < -EPS) || (d1 < -EPS && d2 > EPS))
        && ((d3 > EPS && d4 < -EPS) || (d3 < -EPS && d4 > EPS))
    {
        return true;
    }
    (d1.abs() <= EPS && on_segment(a1, b1, b2, EPS))
        || (d2.abs() <= EPS && on_segment(a2, b1, b2, EPS))
        || (d3.abs() <= EPS && on_segment(b1, a1, a2, EPS))
        || (d4.abs() <= EPS && on_segment(b2, a1, a2, EPS))
}

/// Ray-casting point-in-polygon test. Boundary points count as inside.
pub fn point_in_polygon(p: Point2, vertices: &[Point2]) -> bool {
    let n = vertices.len();
    for i in 0..n {
        if point_segment_distance(p, vertices[i], vertices[(i + 1) % n]) <= POINT_EPS {
            return true;
        }
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (vi, vj) = (vertices[i], vertices[j]);
        if (vi.y > p.y) != (vj.y > p.y) {
            let x_cross = vj.x + (p.y - vj.y) * (vi.x - vj.x) / (vi.y - vj.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn signed_area(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
        .sum::<f64>()
        * 0.5
}

/// Ordered sequence of distinct points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2>", into = "Vec<Point2>")]
pub struct Polyline {
    points: Vec<Point2>,
    cumulative: Vec<f64>,
}

impl TryFrom<Vec<Point2>> for Polyline {
    type Error = GeometryError;
    fn try_from(points: Vec<Point2>) -> Result<Self, Self::Error> {
        Polyline::new(points)
    }
}

impl From<Polyline> for Vec<Point2> {
    fn from(line: Polyline) -> Self {
        line.points
    }
}

impl Polyline {
    pub fn new(points: Vec<Point2>) -> Result<Self, GeometryError> {
        if points.len() < 2 {
            return Err(GeometryError::PolylineTooShort(points.len()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let mut cumulative = Vec::with_capacity(points.len());
        cumulative.push(0.0);
        for i in 1..points.len() {
            let gap = points[i].distance(points[i - 1]);
            if gap <= POINT_EPS {
                return Err(GeometryError::RepeatedPoint(i - 1, i));
            }
            cumulative.push(cumulative[i - 1] + gap);
        }
        Ok(Self { points, cumulative })
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nearest point on the polyline: (point, segment index, distance).
    pub fn closest_point(&self, p: Point2) -> (Point2, usize, f64) {
        let mut best = (self.points[0], 0, f64::INFINITY);
        for i in 0..self.points.len() - 1 {
            let (c, _) = closest_point_on_segment(p, self.points[i], self.points[i + 1]);
            let d = c.distance(p);
            if d < best.2 {
                best = (c, i, d);
            }
        }
        best
    }

    /// Index of the vertex nearest to `p`; lower index wins ties.
    pub fn nearest_vertex(&self, p: Point2) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, q) in self.points.iter().enumerate() {
            let d = q.distance_squared(p);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    /// Direction of the segment leaving vertex `i` (or entering the last one).
    pub fn tangent_at_vertex(&self, i: usize) -> Point2 {
        let n = self.points.len();
        let (a, b) = if i + 1 < n {
            (self.points[i], self.points[i + 1])
        } else {
            (self.points[n - 2], self.points[n - 1])
        };
        let d = b - a;
        d * (1.0 / d.norm())
    }
}

/// A curve that can be walked by arc length.
pub trait ArcLengthCurve {
    fn length(&self) -> f64;
    /// Pose at arc length `s` (clamped to the curve); heading is the local tangent.
    fn pose_at(&self, s: f64) -> Pose2;
}

impl ArcLengthCurve for Polyline {
    fn length(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    fn pose_at(&self, s: f64) -> Pose2 {
        let s = s.clamp(0.0, self.length());
        // first segment whose end lies strictly beyond s, so vertices take the
        // heading of the outgoing segment
        let seg = match self.cumulative.partition_point(|&c| c <= s) {
            0 => 0,
            i => (i - 1).min(self.points.len() - 2),
        };
        let a = self.points[seg];
        let b = self.points[seg + 1];
        let seg_len = self.cumulative[seg + 1] - self.cumulative[seg];
        let t = ((s - self.cumulative[seg]) / seg_len).clamp(0.0, 1.0);
        let p = a + (b - a) * t;
        Pose2::from_point(p, (b - a).angle())
    }
}

/// Poses every `spacing` metres of arc length, plus the curve end if the last
/// regular sample falls short of it.
pub fn resample_arclength<C: ArcLengthCurve + ?Sized>(curve: &C, spacing: f64) -> Vec<Pose2> {
    assert!(spacing > 0.0, "resample spacing must be positive");
    let length = curve.length();
    let mut out = Vec::with_capacity((length / spacing).ceil() as usize + 1);
    let mut k = 0usize;
    loop {
        let s = k as f64 * spacing;
        if s >= length - 1e-9 {
            break;
        }
        out.push(curve.pose_at(s));
        k += 1;
    }
    out.push(curve.pose_at(length));
    out
}

/// Simple counter-clockwise polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonObstacle {
    pub id: u32,
    vertices: Vec<Point2>,
}

impl PolygonObstacle {
    /// Validates the outline and reorders it counter-clockwise if needed.
    pub fn new(id: u32, mut vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        let n = vertices.len();
        if n < 3 {
            return Err(GeometryError::PolygonTooSmall(n));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                if segments_intersect(
                    vertices[i],
                    vertices[(i + 1) % n],
                    vertices[j],
                    vertices[(j + 1) % n],
                ) {
                    return Err(GeometryError::PolygonSelfIntersecting(i, j));
                }
            }
        }
        let area = signed_area(&vertices);
        if area.abs() <= 1e-12 {
            return Err(GeometryError::PolygonDegenerate);
        }
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(Self { id, vertices })
    }

    /// Oriented rectangle centred at `center`.
    pub fn rectangle(id: u32, center: Point2, heading: f64, length: f64, width: f64) -> Self {
        let corners = rectangle_corners(center, heading, length * 0.5, width * 0.5);
        Self::new(id, corners.to_vec()).expect("rectangle with positive extent is valid")
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter().copied()).expect("polygon has vertices")
    }

    pub fn centroid(&self) -> Point2 {
        let n = self.vertices.len() as f64;
        let sum = self
            .vertices
            .iter()
            .fold(Point2::default(), |acc, &p| acc + p);
        sum * (1.0 / n)
    }

    pub fn translated(&self, by: Point2) -> Self {
        Self {
            id: self.id,
            vertices: self.vertices.iter().map(|&p| p + by).collect(),
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        point_in_polygon(p, &self.vertices)
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

/// Corners of an oriented rectangle in counter-clockwise order.
pub fn rectangle_corners(center: Point2, heading: f64, half_length: f64, half_width: f64) -> [Point2; 4] {
    let fwd = Point2::from_angle(heading);
    let left = fwd.perp();
    [
        center - fwd * half_length - left * half_width,
        center + fwd * half_length - left * half_width,
        center + fwd * half_length + left * half_width,
        center - fwd * half_length + left * half_width,
    ]
}

/// Distance from `point` to the polygon; zero inside or on the boundary.
pub fn min_distance_polygon(point: Point2, obstacle: &PolygonObstacle) -> f64 {
    if obstacle.contains(point) {
        return 0.0;
    }
    obstacle
        .edges()
        .map(|(a, b)| point_segment_distance(point, a, b))
        .fold(f64::INFINITY, f64::min)
}

const GAUSS_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// Cubic Hermite connection between two poses with cached arc-length samples.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteSpline {
    start: Pose2,
    end: Pose2,
    tangent_scale: f64,
    /// (parameter, arc length) breakpoints, monotone in both.
    arc_table: Vec<(f64, f64)>,
    samples: Vec<SplineSample>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplineSample {
    pub s: f64,
    pub pose: Pose2,
}

/// Builds a cubic Hermite curve from `a` to `b` whose end tangents follow the
/// pose headings. `tangent_scale` defaults to the endpoint separation.
pub fn hermite_connect(
    a: &Pose2,
    b: &Pose2,
    tangent_scale: Option<f64>,
) -> Result<HermiteSpline, GeometryError> {
    let separation = a.distance(b);
    if !(separation > MIN_SPLINE_SEPARATION) {
        return Err(GeometryError::DegenerateEndpoints(separation));
    }
    let scale = tangent_scale.unwrap_or(separation);
    let mut spline = HermiteSpline {
        start: *a,
        end: *b,
        tangent_scale: scale,
        arc_table: Vec::new(),
        samples: Vec::new(),
    };
    spline.build_arc_table(separation);
    spline.samples = spline.sample_every(SPLINE_SAMPLE_SPACING);
    Ok(spline)
}

impl HermiteSpline {
    pub fn start(&self) -> &Pose2 {
        &self.start
    }

    pub fn end(&self) -> &Pose2 {
        &self.end
    }

    pub fn tangent_scale(&self) -> f64 {
        self.tangent_scale
    }

    /// Samples cached at [`SPLINE_SAMPLE_SPACING`], first and last at the endpoints.
    pub fn samples(&self) -> &[SplineSample] {
        &self.samples
    }

    pub fn point(&self, t: f64) -> Point2 {
        let (p0, p1) = (self.start.position(), self.end.position());
        let m0 = self.start.direction() * self.tangent_scale;
        let m1 = self.end.direction() * self.tangent_scale;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        p0 * h00 + m0 * h10 + p1 * h01 + m1 * h11
    }

    pub fn derivative(&self, t: f64) -> Point2 {
        let (p0, p1) = (self.start.position(), self.end.position());
        let m0 = self.start.direction() * self.tangent_scale;
        let m1 = self.end.direction() * self.tangent_scale;
        let t2 = t * t;
        let d00 = 6.0 * t2 - 6.0 * t;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = -6.0 * t2 + 6.0 * t;
        let d11 = 3.0 * t2 - 2.0 * t;
        p0 * d00 + m0 * d10 + p1 * d01 + m1 * d11
    }

    pub fn second_derivative(&self, t: f64) -> Point2 {
        let (p0, p1) = (self.start.position(), self.end.position());
        let m0 = self.start.direction() * self.tangent_scale;
        let m1 = self.end.direction() * self.tangent_scale;
        p0 * (12.0 * t - 6.0) + m0 * (6.0 * t - 4.0) + p1 * (6.0 - 12.0 * t) + m1 * (6.0 * t - 2.0)
    }

    /// Signed curvature at parameter `t`.
    pub fn curvature(&self, t: f64) -> f64 {
        let d1 = self.derivative(t);
        let d2 = self.second_derivative(t);
        let speed = d1.norm();
        if speed <= 1e-12 {
            return 0.0;
        }
        d1.cross(d2) / (speed * speed * speed)
    }

    fn build_arc_table(&mut self, separation: f64) {
        let segments = ((separation / 0.5).ceil() as usize).clamp(16, 512);
        let mut table = Vec::with_capacity(segments + 1);
        table.push((0.0, 0.0));
        let mut s = 0.0;
        for i in 0..segments {
            let t0 = i as f64 / segments as f64;
            let t1 = (i + 1) as f64 / segments as f64;
            let half = 0.5 * (t1 - t0);
            let mid = 0.5 * (t0 + t1);
            let piece: f64 = GAUSS_NODES
                .iter()
                .zip(GAUSS_WEIGHTS.iter())
                .map(|(&x, &w)| w * self.derivative(mid + half * x).norm())
                .sum::<f64>()
                * half;
            s += piece;
            table.push((t1, s));
        }
        self.arc_table = table;
    }

    /// Curve parameter at arc length `s`.
    pub fn parameter_at(&self, s: f64) -> f64 {
        let length = self.length();
        if s <= 0.0 {
            return 0.0;
        }
        if s >= length {
            return 1.0;
        }
        let i = self.arc_table.partition_point(|&(_, si)| si <= s);
        let (t0, s0) = self.arc_table[i - 1];
        let (t1, s1) = self.arc_table[i];
        // linear guess refined by one Newton step on the local arc length
        let mut t = t0 + (t1 - t0) * (s - s0) / (s1 - s0);
        let speed = self.derivative(t).norm();
        if speed > 1e-12 {
            let s_guess = s0 + self.segment_length(t0, t);
            t = (t - (s_guess - s) / speed).clamp(t0, t1);
        }
        t
    }

    fn segment_length(&self, t0: f64, t1: f64) -> f64 {
        let half = 0.5 * (t1 - t0);
        let mid = 0.5 * (t0 + t1);
        GAUSS_NODES
            .iter()
            .zip(GAUSS_WEIGHTS.iter())
            .map(|(&x, &w)| w * self.derivative(mid + half * x).norm())
            .sum::<f64>()
            * half
    }

    fn pose_at_parameter(&self, t: f64) -> Pose2 {
        if t <= 0.0 {
            return self.start;
        }
        if t >= 1.0 {
            return self.end;
        }
        let p = self.point(t);
        Pose2::from_point(p, self.derivative(t).angle())
    }

    fn sample_every(&self, spacing: f64) -> Vec<SplineSample> {
        let length = self.length();
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let s = k as f64 * spacing;
            if s >= length - 1e-9 {
                break;
            }
            out.push(SplineSample {
                s,
                pose: self.pose_at(s),
            });
            k += 1;
        }
        out.push(SplineSample {
            s: length,
            pose: self.end,
        });
        out
    }

    /// Largest |curvature| over the cached samples.
    pub fn max_curvature(&self) -> f64 {
        self.samples
            .iter()
            .map(|smp| self.curvature(self.parameter_at(smp.s)).abs())
            .fold(0.0, f64::max)
    }
}

impl ArcLengthCurve for HermiteSpline {
    fn length(&self) -> f64 {
        self.arc_table.last().map(|&(_, s)| s).unwrap_or(0.0)
    }

    fn pose_at(&self, s: f64) -> Pose2 {
        self.pose_at_parameter(self.parameter_at(s))
    }
}
