mod support;

use autopath::geometry::{
    hermite_connect, min_distance_polygon, resample_arclength, side_of_path, ArcLengthCurve, Point2, PolygonObstacle,
    Polyline, Pose2, Side,
};
use proptest::prelude::*;

fn rect_strategy() -> impl Strategy<Value = PolygonObstacle> {
    (-20.0..20.0f64, -20.0..20.0f64, -3.2..3.2f64, 0.2..6.0f64, 0.2..6.0f64)
        .prop_map(|(x, y, h, l, w)| PolygonObstacle::rectangle(0, Point2::new(x, y), h, l, w))
}

proptest! {
    #[test]
    fn reversing_the_path_swaps_sides(px in -30.0..30.0f64, py in -30.0..30.0f64,
                                      x in -30.0..30.0f64, y in -30.0..30.0f64, h in -3.2..3.2f64) {
        let pose = Pose2::new(x, y, h);
        let flipped = pose.with_heading(h + std::f64::consts::PI);
        let p = Point2::new(px, py);
        let expect = match side_of_path(p, &pose) {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
            Side::On => Side::On,
        };
        prop_assert_eq!(side_of_path(p, &flipped), expect);
    }

    #[test]
    fn hermite_interpolates_endpoints(x in -50.0..50.0f64, y in -50.0..50.0f64, h0 in -1.0..1.0f64,
                                      dx in 2.0..30.0f64, dy in -5.0..5.0f64, h1 in -1.0..1.0f64) {
        let a = Pose2::new(x, y, h0);
        let b = Pose2::new(x + dx, y + dy, h1);
        let s = hermite_connect(&a, &b, None).unwrap();
        prop_assert!(s.point(0.0).distance(a.position()) < 1e-9);
        prop_assert!(s.point(1.0).distance(b.position()) < 1e-9);
        prop_assert!(s.derivative(0.0).cross(a.direction()).abs() < 1e-9 * s.derivative(0.0).norm());
        prop_assert!(s.derivative(1.0).cross(b.direction()).abs() < 1e-9 * s.derivative(1.0).norm());
        prop_assert!(s.derivative(0.0).dot(a.direction()) > 0.0);
        prop_assert!(s.derivative(1.0).dot(b.direction()) > 0.0);
    }

    #[test]
    fn polygon_distance_matches_oracle(rect in rect_strategy(), px in -30.0..30.0f64, py in -30.0..30.0f64) {
        let p = Point2::new(px, py);
        let d = min_distance_polygon(p, &rect);
        let verts: Vec<(f64, f64)> = rect.vertices().iter().map(|v| (v.x, v.y)).collect();
        let oracle = support::polygon_distance((px, py), &verts);
        prop_assert!(d >= 0.0);
        prop_assert!((d == 0.0) == rect.contains(p));
        prop_assert!((d - oracle).abs() < 1e-9, "{} vs {}", d, oracle);
    }

    #[test]
    fn resampling_covers_the_curve(pts in prop::collection::vec((-40.0..40.0f64, -40.0..40.0f64), 2..8),
                                   spacing in 0.1..5.0f64) {
        let points: Vec<Point2> = pts.iter().map(|&(x, y)| Point2::new(x, y)).collect();
        let Ok(line) = Polyline::new(points.clone()) else { return Ok(()); };
        let poses = resample_arclength(&line, spacing);
        let length = line.length();
        prop_assert!(poses.first().unwrap().position().distance(line.points()[0]) < 1e-9);
        prop_assert!(poses.last().unwrap().position().distance(*line.points().last().unwrap()) < 1e-9);
        let chords: f64 = poses.windows(2).map(|w| w[0].distance(&w[1])).sum();
        prop_assert!(chords <= length + 1e-9);
        for w in poses.windows(2) {
            prop_assert!(w[0].distance(&w[1]) <= spacing + 1e-9);
        }
        let regular = ((length - 1e-9) / spacing).ceil() as usize;
        prop_assert_eq!(poses.len(), regular.max(1) + 1);
    }
}

#[test]
fn straight_resample_gaps_sum_to_length() {
    let line = Polyline::new(vec![Point2::new(0.0, 0.0), Point2::new(10.3, 0.0)]).unwrap();
    let poses = resample_arclength(&line, 1.0);
    assert_eq!(poses.len(), 12);
    let total: f64 = poses.windows(2).map(|w| w[0].distance(&w[1])).sum();
    assert!((total - 10.3).abs() < 1e-12);
}
