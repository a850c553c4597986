mod support;

use autopath::geometry::Pose2;
use autopath::mpc::MpcParams;
use autopath::planner::PlannerConfig;
use autopath::scenario::{self, generate_perturbed_scenarios, Perturbation};
use autopath::simulator::{plant_step, run_closed_loop, ActuatorCommand, PlantParams, PlantState, SimConfig};

fn arc_run(seconds: f64) -> (PlantState, f64, f64) {
    let p = PlantParams::default();
    let (v, psi) = (5.0, 0.3);
    let mut s = PlantState {
        pose: Pose2::new(2.0, -1.0, 0.4),
        v,
        psi,
        t: 0.0,
    };
    let cmd = ActuatorCommand {
        accel: 0.0,
        steer_target: psi,
    };
    let steps = (seconds / 0.01).round() as usize;
    for _ in 0..steps {
        s = plant_step(&s, &cmd, 0.01, &p);
    }
    (s, p.wheelbase / psi.tan(), v)
}

fn closed_form(t: f64, radius: f64, v: f64) -> (f64, f64, f64) {
    let (x0, y0, h0) = (2.0, -1.0, 0.4f64);
    let (cx, cy) = (x0 - radius * h0.sin(), y0 + radius * h0.cos());
    let h = h0 + v * t / radius;
    (cx + radius * h.sin(), cy - radius * h.cos(), h)
}

#[test]
fn constant_steering_traces_the_closed_form_circle() {
    let (s, radius, v) = arc_run(10.0);
    let (x, y, _) = closed_form(10.0, radius, v);
    let err = ((s.pose.x - x).powi(2) + (s.pose.y - y).powi(2)).sqrt();
    assert!(err <= 1e-3, "position error {err}");

    let (s, radius, v) = arc_run(1.0);
    let (_, _, h) = closed_form(1.0, radius, v);
    let dh = autopath::geometry::angle_diff(s.pose.heading(), h).abs();
    assert!(dh <= 1e-4, "heading error {dh}");
}

#[test]
fn closed_loop_trace_is_reproducible_and_clearances_match_brute_force() {
    let spec = scenario::scp_root();
    let sim = SimConfig::default();
    let planner = PlannerConfig::default();
    let mpc = MpcParams::default();
    let a = run_closed_loop(&spec, None, &planner, &mpc, &sim).unwrap();
    let b = run_closed_loop(&spec, None, &planner, &mpc, &sim).unwrap();
    assert_eq!(a.trace_csv(), b.trace_csv());
    assert!(a.metrics.success, "{:?}", a.metrics.failure);

    let obstacles = spec.obstacle_set().unwrap();
    let fp = sim.footprint;
    let mut overall = f64::INFINITY;
    for s in &a.trace {
        let body = support::body_corners(s.x, s.y, s.theta, fp.length, fp.width, fp.rear_axle_to_center);
        let oracle = obstacles
            .obstacles()
            .iter()
            .map(|o| support::convex_distance(&body, o.vertices()))
            .fold(f64::INFINITY, f64::min);
        assert!((oracle - s.min_obst_dist).abs() < 1e-6, "t={} {} vs {}", s.t, s.min_obst_dist, oracle);
        overall = overall.min(oracle);
    }
    assert!((overall - a.metrics.min_obstacle_distance).abs() < 1e-6);
}

#[test]
fn perturbation_generator_properties() {
    let root = scenario::scp_root();
    let map = root.load_map(None).unwrap();
    let list = generate_perturbed_scenarios(&root, &map, 25, 9).unwrap();
    assert_eq!(list.len(), 25);
    for i in 0..list.len() {
        for j in i + 1..list.len() {
            assert_ne!(list[i].obstacles, list[j].obstacles, "{i} and {j}");
        }
        for ob in &list[i].obstacles {
            let poly = ob.polygon().unwrap();
            assert!(poly.vertices().iter().all(|&v| map.road_clearance(v) >= 0.0));
        }
    }
    assert_eq!(list, generate_perturbed_scenarios(&root, &map, 25, 9).unwrap());
    assert_ne!(list, generate_perturbed_scenarios(&root, &map, 25, 10).unwrap());

    let mut still = root.clone();
    still.perturbation = Some(Perturbation {
        sigma: 0.0,
        keep_on_road: true,
    });
    for s in generate_perturbed_scenarios(&still, &map, 5, 9).unwrap() {
        assert_eq!(s.obstacles, root.obstacles);
    }
}
