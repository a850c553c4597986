//! Plain SVG writers. Coordinates are printed with fixed precision so equal
//! inputs give equal bytes.

use std::fmt::Write as _;

use autopath::collision::ObstacleSet;
use autopath::corridor::{CorridorStep, HalfPlane};
use autopath::geometry::Point2;
use autopath::planner::PlannedPath;
use autopath::roadmap::{BoundaryTag, RoadMap};
use autopath::simulator::{PlantParams, TraceSample};

const PX_PER_M: f64 = 8.0;
const PAD: f64 = 5.0;

struct Frame {
    min_x: f64,
    max_y: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = Point2>) -> Frame {
        let (mut lo, mut hi) = (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in points {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        if !lo.is_finite() || !hi.is_finite() {
            lo = Point2::new(0.0, 0.0);
            hi = Point2::new(1.0, 1.0);
        }
        Frame {
            min_x: lo.x - PAD,
            max_y: hi.y + PAD,
            width: (hi.x - lo.x + 2.0 * PAD) * PX_PER_M,
            height: (hi.y - lo.y + 2.0 * PAD) * PX_PER_M,
        }
    }

    fn map(&self, p: Point2) -> (f64, f64) {
        ((p.x - self.min_x) * PX_PER_M, (self.max_y - p.y) * PX_PER_M)
    }

    fn points(&self, pts: impl IntoIterator<Item = Point2>) -> String {
        let mut out = String::new();
        for p in pts {
            let (x, y) = self.map(p);
            let _ = write!(out, "{x:.2},{y:.2} ");
        }
        out.trim_end().to_string()
    }
}

fn edge_point(plane: &HalfPlane, p: Point2) -> Point2 {
    let n = Point2::new(plane.alpha, plane.beta);
    p + n * (plane.gamma - n.dot(p))
}

/// Map, obstacles, and optionally a path with its corridor.
pub fn plan_svg(map: &RoadMap, obstacles: &ObstacleSet, path: Option<&PlannedPath>, corridor: &[CorridorStep]) -> String {
    let frame = Frame::fit(
        map.boundaries()
            .iter()
            .flat_map(|b| b.line.points().iter().copied())
            .chain(obstacles.obstacles().iter().flat_map(|o| o.vertices().iter().copied())),
    );
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.2} {:.2}">"#,
        frame.width, frame.height, frame.width, frame.height
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    for b in map.boundaries() {
        let style = match b.tag {
            BoundaryTag::Road => r##"stroke="#222222" stroke-width="2""##,
            BoundaryTag::Lane => r##"stroke="#888888" stroke-width="1" stroke-dasharray="6 6""##,
        };
        let _ = writeln!(
            out,
            r#"<polyline fill="none" {style} points="{}"/>"#,
            frame.points(b.line.points().iter().copied())
        );
    }
    for o in obstacles.obstacles() {
        let _ = writeln!(
            out,
            r##"<polygon fill="#d9534f" stroke="#7a1f1c" points="{}"/>"##,
            frame.points(o.vertices().iter().copied())
        );
    }
    if !corridor.is_empty() {
        for (side, colour) in [(0, "#2e7d32"), (1, "#1565c0")] {
            let pts = corridor.iter().map(|s| {
                let plane = if side == 0 { &s.left } else { &s.right };
                edge_point(plane, s.path_pose.position())
            });
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
                frame.points(pts)
            );
        }
    }
    if let Some(path) = path {
        let _ = writeln!(
            out,
            r##"<polyline fill="none" stroke="#000000" stroke-width="1.5" points="{}"/>"##,
            frame.points(path.poses.iter().map(|p| p.pose.position()))
        );
    }
    out.push_str("</svg>\n");
    out
}

struct Panel<'a> {
    title: &'a str,
    limit: f64,
    values: Vec<(f64, f64)>,
}

const PANEL_W: f64 = 800.0;
const PANEL_H: f64 = 200.0;
const MARGIN: f64 = 40.0;

fn panel(out: &mut String, top: f64, t_end: f64, p: &Panel) {
    let span = p.limit * 1.25;
    let x = |t: f64| MARGIN + t / t_end.max(1e-9) * (PANEL_W - 2.0 * MARGIN);
    let y = |v: f64| top + PANEL_H * 0.5 - v / span * (PANEL_H * 0.5 - 10.0);
    let _ = writeln!(out, r#"<text x="{MARGIN:.0}" y="{:.2}" font-size="12">{}</text>"#, top + 12.0, p.title);
    for lim in [p.limit, -p.limit] {
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#c62828" stroke-dasharray="4 4"/>"##,
            x(0.0),
            y(lim),
            x(t_end),
            y(lim)
        );
    }
    let mut pts = String::new();
    for &(t, v) in &p.values {
        let _ = write!(pts, "{:.2},{:.2} ", x(t), y(v.clamp(-span, span)));
    }
    let _ = writeln!(
        out,
        r##"<polyline fill="none" stroke="#1565c0" stroke-width="1" points="{}"/>"##,
        pts.trim_end()
    );
}

/// Applied acceleration and steering angle over time against their limits.
pub fn command_svg(trace: &[TraceSample], limits: &PlantParams) -> String {
    let t_end = trace.last().map_or(1.0, |s| s.t);
    let panels = [
        Panel {
            title: "longitudinal acceleration [m/s^2]",
            limit: limits.a_max,
            values: trace.iter().map(|s| (s.t, s.a_cmd)).collect(),
        },
        Panel {
            title: "steering angle [rad]",
            limit: limits.psi_max,
            values: trace.iter().map(|s| (s.t, s.psi)).collect(),
        },
    ];
    let height = PANEL_H * panels.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PANEL_W:.0}" height="{height:.0}" viewBox="0 0 {PANEL_W:.0} {height:.0}">"#
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    for (i, p) in panels.iter().enumerate() {
        panel(&mut out, i as f64 * PANEL_H, t_end, p);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use autopath::maps;

    #[test]
    fn plan_svg_is_stable() {
        let map = maps::builtin("short").unwrap();
        let a = plan_svg(&map, &ObstacleSet::default(), None, &[]);
        let b = plan_svg(&map, &ObstacleSet::default(), None, &[]);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn edge_point_lies_on_plane() {
        let plane = HalfPlane::through(Point2::new(0.0, 2.0), Point2::new(0.0, 1.0));
        let p = edge_point(&plane, Point2::new(3.0, -1.0));
        assert!((p.x - 3.0).abs() < 1e-12 && (p.y - 2.0).abs() < 1e-12);
    }
}
