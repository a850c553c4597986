use std::path::Path;

use autopath::corridor::{build_corridor, classify_boundary_points, CorridorParams, CorridorStep};
use autopath::planner::{plan, PlanError, PlanStats, PlannedPath};
use autopath::roadmap::load_map;
use autopath::scenario::ScenarioSpec;
use autopath::simulator::RunFailure;
use serde::Serialize;

use crate::config::Config;
use crate::experiments::{compare_planners, repeated_trials, run_once, scp_study, CompareReport, ScpReport, TrialsReport};
use crate::svg::{command_svg, plan_svg};
use crate::{read_text, write_text, HarnessError, ScenarioInput};

pub const PLAN_VERSION: &str = "autopath-plan/1";

#[derive(Debug, Clone, Serialize)]
pub struct PlanArtifact {
    pub version: String,
    pub scenario: String,
    pub path: PlannedPath,
    pub stats: PlanStats,
    pub corridor: Vec<CorridorStep>,
    /// Why the corridor is empty, when it is.
    pub corridor_error: Option<String>,
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn input_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Input(e.to_string())
}

/// Plans once and writes `plan.json` and `plan.svg` into `out`.
pub fn cmd_plan(input: &ScenarioInput, cfg: &Config, out: &Path) -> Result<PlanArtifact, HarnessError> {
    let s = &input.spec;
    let mut map = s.load_map(input.base()).map_err(input_err)?;
    let obstacles = s.obstacle_set().map_err(input_err)?;
    let mut planner = cfg.planner.clone();
    planner.footprint = cfg.sim.footprint;
    let outcome = match plan(&mut map, s.start, s.destination, &obstacles, &planner) {
        Ok(o) => o,
        Err(e @ (PlanError::InvalidConfig(_) | PlanError::Map(_))) => return Err(input_err(e)),
        Err(e) => {
            write_text(&out.join("plan.svg"), &plan_svg(&map, &obstacles, None, &[]))?;
            return Err(HarnessError::NoPath(e.to_string()));
        }
    };
    let params = CorridorParams {
        sigma_buffer: cfg.mpc.sigma_buffer,
        vehicle_width: cfg.sim.footprint.width,
    };
    let speeds = vec![s.v_ref; outcome.path.poses.len()];
    let corridor = classify_boundary_points(&outcome.path, &map, &obstacles).and_then(|c| {
        build_corridor(&outcome.path, &c, 0..outcome.path.poses.len(), &speeds, &params)
    });
    let (corridor, corridor_error) = match corridor {
        Ok(c) => (c.steps, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let artifact = PlanArtifact {
        version: PLAN_VERSION.into(),
        scenario: s.name.clone(),
        path: outcome.path,
        stats: outcome.stats,
        corridor,
        corridor_error,
    };
    write_text(&out.join("plan.json"), &to_json(&artifact))?;
    write_text(
        &out.join("plan.svg"),
        &plan_svg(&map, &obstacles, Some(&artifact.path), &artifact.corridor),
    )?;
    Ok(artifact)
}

/// One closed-loop run; writes `trace.csv`, `metrics.json` and `commands.svg`.
pub fn cmd_run(input: &ScenarioInput, cfg: &Config, seed: u64, out: &Path) -> Result<autopath::simulator::RunMetrics, HarnessError> {
    let outcome = run_once(&input.spec, input.base(), cfg, seed)?;
    write_text(&out.join("trace.csv"), &outcome.trace_csv())?;
    write_text(&out.join("metrics.json"), &to_json(&outcome.metrics))?;
    write_text(&out.join("commands.svg"), &command_svg(&outcome.trace, &cfg.sim.plant))?;
    if let Some(RunFailure::NoPath { reason }) = &outcome.metrics.failure {
        return Err(HarnessError::NoPath(reason.clone()));
    }
    Ok(outcome.metrics)
}

pub fn write_scp_report(report: &ScpReport, out: &Path) -> Result<(), HarnessError> {
    write_text(&out.join("report.json"), &to_json(report))?;
    write_text(&out.join("ranks.csv"), &report.ranks_csv())?;
    write_text(&out.join("runs.csv"), &report.runs_csv())?;
    write_text(&out.join("timing.csv"), &report.summary_csv())
}

pub fn cmd_experiment_scp(
    input: &ScenarioInput,
    cfg: &Config,
    counts: &[usize],
    scenarios: usize,
    seed: u64,
    out: &Path,
) -> Result<ScpReport, HarnessError> {
    let report = scp_study(&input.spec, input.base(), counts, scenarios, seed, cfg, |r| {
        eprintln!(
            "scenario {:2} k={} success={} min_dist={:.3} scp={:.2} ms",
            r.scenario,
            r.iterations,
            r.success,
            r.min_distance,
            r.mean_scp_time * 1e3
        );
    })?;
    write_scp_report(&report, out)?;
    Ok(report)
}

pub fn cmd_experiment_compare(
    scenarios: &[ScenarioSpec],
    base: Option<&Path>,
    cfg: &Config,
    trials: usize,
    out: &Path,
) -> Result<CompareReport, HarnessError> {
    let report = compare_planners(scenarios, base, trials, cfg, |r| {
        eprintln!(
            "{} {:?} trial {} success={} time={:?}",
            r.scenario, r.mode, r.trial, r.success, r.solution_time
        );
    })?;
    write_text(&out.join("report.json"), &to_json(&report))?;
    write_text(&out.join("table.csv"), &report.table_csv())?;
    write_text(&out.join("runs.csv"), &report.runs_csv())?;
    Ok(report)
}

pub fn cmd_experiment_trials(
    input: &ScenarioInput,
    cfg: &Config,
    trials: usize,
    seed: u64,
    out: &Path,
) -> Result<TrialsReport, HarnessError> {
    let report = repeated_trials(&input.spec, input.base(), trials, seed, cfg, |t| {
        eprintln!("trial {} seed {} success={}", t.trial, t.seed, t.metrics.success);
    })?;
    write_text(&out.join("report.json"), &to_json(&report))?;
    write_text(&out.join("maxima.csv"), &report.maxima_csv())?;
    write_text(&out.join("trials.csv"), &report.trials_csv())?;
    Ok(report)
}

/// Loads and validates a map file, returning a one-line summary.
pub fn cmd_map_validate(path: &Path) -> Result<String, HarnessError> {
    let text = read_text(path)?;
    let map = load_map(text.as_bytes()).map_err(|e| HarnessError::Input(format!("{}: {e}", path.display())))?;
    Ok(format!(
        "{}: ok ({} nodes, {} edges, {} boundaries, {} lanes)",
        path.display(),
        map.nodes().len(),
        map.edges().len(),
        map.boundaries().len(),
        map.lanes().len()
    ))
}
