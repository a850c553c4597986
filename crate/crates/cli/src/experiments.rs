//! The three studies: SCP iteration count, planner modes, and repeated
//! constraint trials.

use std::fmt::Write as _;
use std::path::Path;

use autopath::planner::{plan, PlannerMode};
use autopath::scenario::{generate_perturbed_scenarios, ScenarioSpec};
use autopath::simulator::{run_closed_loop, RunFailure, RunMetrics, RunOutcome};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::HarnessError;

/// Closed-loop run of `scenario` with the planner seeded by `seed`.
pub fn run_once(scenario: &ScenarioSpec, base: Option<&Path>, cfg: &Config, seed: u64) -> Result<RunOutcome, HarnessError> {
    let mut planner = cfg.planner.clone();
    planner.rng_seed = seed;
    run_closed_loop(scenario, base, &planner, &cfg.mpc, &cfg.sim).map_err(|e| HarnessError::Input(e.to_string()))
}

fn failure_text(f: &Option<RunFailure>) -> String {
    match f {
        None => String::new(),
        Some(RunFailure::NoPath { .. }) => "no_path".into(),
        Some(RunFailure::Collision { obstacle_id, .. }) => format!("collision:{obstacle_id}"),
        Some(RunFailure::Timeout) => "timeout".into(),
        Some(RunFailure::LimitViolation { limits }) => format!("limits:{}", limits.join("|")),
    }
}

/// Competition ranks, 1 for the largest value; equal values share a rank.
pub fn rank_descending(values: &[f64]) -> Vec<usize> {
    values
        .iter()
        .map(|v| 1 + values.iter().filter(|w| w.total_cmp(v).is_gt()).count())
        .collect()
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScpRun {
    pub scenario: usize,
    pub iterations: usize,
    pub success: bool,
    pub min_distance: f64,
    /// Mean per-tick SCP time, seconds.
    pub mean_scp_time: f64,
    pub fallback_ticks: usize,
    pub relaxed_ticks: usize,
    pub failure: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub iterations: usize,
    pub mean_min_distance: f64,
    pub mean_scp_time: f64,
    pub std_scp_time: f64,
    pub successes: usize,
    /// Scenarios where this count ranks first or second.
    pub top_two: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScpReport {
    pub experiment: String,
    pub config: Config,
    pub seed: u64,
    pub root: ScenarioSpec,
    pub counts: Vec<usize>,
    pub runs: Vec<ScpRun>,
    /// `ranks[scenario][i]` ranks `counts[i]` by min distance, 1 = largest.
    pub ranks: Vec<Vec<usize>>,
    pub summary: Vec<IterationSummary>,
}

impl ScpReport {
    pub fn summary_for(&self, iterations: usize) -> Option<&IterationSummary> {
        self.summary.iter().find(|s| s.iterations == iterations)
    }

    pub fn ranks_csv(&self) -> String {
        let mut out = String::from("scenario");
        for k in &self.counts {
            let _ = write!(out, ",k{k}");
        }
        out.push('\n');
        for (i, row) in self.ranks.iter().enumerate() {
            let _ = write!(out, "{i}");
            for r in row {
                let _ = write!(out, ",{r}");
            }
            out.push('\n');
        }
        out
    }

    pub fn runs_csv(&self) -> String {
        let mut out =
            String::from("scenario,iterations,success,min_distance,mean_scp_time,fallback_ticks,relaxed_ticks,failure\n");
        for r in &self.runs {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.scenario,
                r.iterations,
                r.success,
                r.min_distance,
                r.mean_scp_time,
                r.fallback_ticks,
                r.relaxed_ticks,
                r.failure
            );
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out =
            String::from("iterations,mean_min_distance,mean_scp_time,std_scp_time,successes,top_two\n");
        for s in &self.summary {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                s.iterations, s.mean_min_distance, s.mean_scp_time, s.std_scp_time, s.successes, s.top_two
            );
        }
        out
    }
}

/// Perturbs `root` into `scenario_count` scenarios and runs each once per
/// SCP iteration count. `progress` sees every run as it finishes.
pub fn scp_study(
    root: &ScenarioSpec,
    base: Option<&Path>,
    counts: &[usize],
    scenario_count: usize,
    seed: u64,
    cfg: &Config,
    mut progress: impl FnMut(&ScpRun),
) -> Result<ScpReport, HarnessError> {
    if counts.is_empty() || counts.contains(&0) {
        return Err(HarnessError::Input("iteration counts must be positive".into()));
    }
    if scenario_count == 0 {
        return Err(HarnessError::Input("scenario count must be positive".into()));
    }
    let map = root.load_map(base).map_err(|e| HarnessError::Input(e.to_string()))?;
    let scenarios = generate_perturbed_scenarios(root, &map, scenario_count, seed)
        .map_err(|e| HarnessError::Input(e.to_string()))?;
    let mut runs = Vec::with_capacity(scenarios.len() * counts.len());
    let mut ranks = Vec::with_capacity(scenarios.len());
    for (i, scenario) in scenarios.iter().enumerate() {
        let mut dists = Vec::with_capacity(counts.len());
        for &k in counts {
            let mut run_cfg = cfg.clone();
            run_cfg.mpc.scp_iterations = k;
            let out = run_once(scenario, base, &run_cfg, cfg.planner.rng_seed)?;
            let m = &out.metrics;
            let run = ScpRun {
                scenario: i,
                iterations: k,
                success: m.success,
                min_distance: m.min_obstacle_distance,
                mean_scp_time: m.timing.mean_scp,
                fallback_ticks: m.fallback_ticks,
                relaxed_ticks: m.relaxed_ticks,
                failure: failure_text(&m.failure),
            };
            progress(&run);
            dists.push(run.min_distance);
            runs.push(run);
        }
        ranks.push(rank_descending(&dists));
    }
    let summary = counts
        .iter()
        .enumerate()
        .map(|(c, &k)| {
            let mine: Vec<&ScpRun> = runs.iter().filter(|r| r.iterations == k).collect();
            let dists: Vec<f64> = mine.iter().map(|r| r.min_distance).collect();
            let times: Vec<f64> = mine.iter().map(|r| r.mean_scp_time).collect();
            let (mean_scp_time, std_scp_time) = mean_std(&times);
            IterationSummary {
                iterations: k,
                mean_min_distance: mean_std(&dists).0,
                mean_scp_time,
                std_scp_time,
                successes: mine.iter().filter(|r| r.success).count(),
                top_two: ranks.iter().filter(|row| row[c] <= 2).count(),
            }
        })
        .collect();
    Ok(ScpReport {
        experiment: "scp".into(),
        config: cfg.clone(),
        seed,
        root: root.clone(),
        counts: counts.to_vec(),
        runs,
        ranks,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanTrial {
    pub scenario: String,
    pub mode: PlannerMode,
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    /// Seconds until the first solution.
    pub solution_time: Option<f64>,
    pub first_length: Option<f64>,
    pub final_length: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub scenario: String,
    pub mode: PlannerMode,
    pub runs: usize,
    pub successes: usize,
    /// Median solution time with failed runs counted at the full budget.
    pub median_time: f64,
    pub mean_first_length: Option<f64>,
    pub mean_final_length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub experiment: String,
    pub config: Config,
    pub trials: usize,
    pub scenarios: Vec<ScenarioSpec>,
    pub runs: Vec<PlanTrial>,
    pub summary: Vec<ModeSummary>,
}

pub const MODES: [PlannerMode; 3] = [PlannerMode::LatticeOnly, PlannerMode::Hybrid, PlannerMode::FreeSpaceOnly];

pub fn mode_name(mode: PlannerMode) -> &'static str {
    match mode {
        PlannerMode::Hybrid => "hybrid",
        PlannerMode::LatticeOnly => "lattice",
        PlannerMode::FreeSpaceOnly => "free_space",
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "N/A".into(), |x| format!("{x}"))
}

impl CompareReport {
    pub fn summary_of(&self, scenario: &str, mode: PlannerMode) -> Option<&ModeSummary> {
        self.summary.iter().find(|s| s.scenario == scenario && s.mode == mode)
    }

    /// One row per scenario and mode; lengths read N/A when nothing was found.
    pub fn table_csv(&self) -> String {
        let mut out = String::from("scenario,mode,runs,successes,median_time,mean_first_length,mean_final_length\n");
        for s in &self.summary {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.scenario,
                mode_name(s.mode),
                s.runs,
                s.successes,
                s.median_time,
                opt(s.mean_first_length),
                opt(s.mean_final_length)
            );
        }
        out
    }

    pub fn runs_csv(&self) -> String {
        let mut out = String::from("scenario,mode,trial,seed,success,solution_time,first_length,final_length\n");
        for r in &self.runs {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.scenario,
                mode_name(r.mode),
                r.trial,
                r.seed,
                r.success,
                opt(r.solution_time),
                opt(r.first_length),
                opt(r.final_length)
            );
        }
        out
    }
}

/// Runs every planner mode on every scenario: the deterministic lattice mode
/// once, the sampling modes `trials` times with seeds `1..=trials`.
pub fn compare_planners(
    scenarios: &[ScenarioSpec],
    base: Option<&Path>,
    trials: usize,
    cfg: &Config,
    mut progress: impl FnMut(&PlanTrial),
) -> Result<CompareReport, HarnessError> {
    if trials == 0 {
        return Err(HarnessError::Input("trials must be at least 1".into()));
    }
    let budget = cfg.planner.max_planning_time;
    let mut runs = Vec::new();
    let mut summary = Vec::new();
    for scenario in scenarios {
        let map = scenario.load_map(base).map_err(|e| HarnessError::Input(e.to_string()))?;
        let obstacles = scenario.obstacle_set().map_err(|e| HarnessError::Input(e.to_string()))?;
        for mode in MODES {
            let count = if mode == PlannerMode::LatticeOnly { 1 } else { trials };
            let mut mine = Vec::with_capacity(count);
            for trial in 0..count {
                let seed = trial as u64 + 1;
                let mut planner = cfg.planner.clone();
                planner.mode = mode;
                planner.rng_seed = seed;
                planner.max_rounds = usize::MAX;
                planner.footprint = cfg.sim.footprint;
                let mut map = map.clone();
                let row = match plan(&mut map, scenario.start, scenario.destination, &obstacles, &planner) {
                    Ok(o) => PlanTrial {
                        scenario: scenario.name.clone(),
                        mode,
                        trial,
                        seed,
                        success: true,
                        solution_time: o.stats.first_solution_time,
                        first_length: o.stats.first_solution_cost,
                        final_length: Some(o.path.length),
                        error: None,
                    },
                    Err(e) => PlanTrial {
                        scenario: scenario.name.clone(),
                        mode,
                        trial,
                        seed,
                        success: false,
                        solution_time: None,
                        first_length: None,
                        final_length: None,
                        error: Some(e.to_string()),
                    },
                };
                progress(&row);
                mine.push(row);
            }
            let times: Vec<f64> = mine.iter().map(|r| r.solution_time.unwrap_or(budget)).collect();
            let mean_of = |f: fn(&PlanTrial) -> Option<f64>| {
                let v: Vec<f64> = mine.iter().filter_map(f).collect();
                (!v.is_empty()).then(|| mean_std(&v).0)
            };
            summary.push(ModeSummary {
                scenario: scenario.name.clone(),
                mode,
                runs: mine.len(),
                successes: mine.iter().filter(|r| r.success).count(),
                median_time: median(&times),
                mean_first_length: mean_of(|r| r.first_length),
                mean_final_length: mean_of(|r| r.final_length),
            });
            runs.extend(mine);
        }
    }
    Ok(CompareReport {
        experiment: "compare".into(),
        config: cfg.clone(),
        trials,
        scenarios: scenarios.to_vec(),
        runs,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub trial: usize,
    pub seed: u64,
    pub metrics: RunMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCheck {
    pub metric: String,
    pub max_across_trials: f64,
    pub limit: Option<f64>,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialsReport {
    pub experiment: String,
    pub config: Config,
    pub scenario: ScenarioSpec,
    pub seed: u64,
    pub trials: Vec<Trial>,
    pub successes: usize,
    pub maxima: Vec<LimitCheck>,
}

impl TrialsReport {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials.len().max(1) as f64
    }

    pub fn maxima_csv(&self) -> String {
        let mut out = String::from("metric,max_across_trials,limit,within\n");
        for m in &self.maxima {
            let _ = writeln!(out, "{},{},{},{}", m.metric, m.max_across_trials, opt(m.limit), m.within);
        }
        out
    }

    pub fn trials_csv(&self) -> String {
        let mut out = String::from(
            "trial,seed,success,failure,min_obstacle_distance,max_long_accel,max_long_jerk,max_lat_accel,max_steering_angle,max_steering_rate,path_length,duration\n",
        );
        for t in &self.trials {
            let m = &t.metrics;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                t.trial,
                t.seed,
                m.success,
                failure_text(&m.failure),
                m.min_obstacle_distance,
                m.max_long_accel,
                m.max_long_jerk,
                m.max_lat_accel,
                m.max_steering_angle,
                m.max_steering_rate,
                m.path_length,
                m.duration
            );
        }
        out
    }
}

/// Repeats the closed loop with planner seeds `seed, seed + 1, ...`.
pub fn repeated_trials(
    scenario: &ScenarioSpec,
    base: Option<&Path>,
    count: usize,
    seed: u64,
    cfg: &Config,
    mut progress: impl FnMut(&Trial),
) -> Result<TrialsReport, HarnessError> {
    if count == 0 {
        return Err(HarnessError::Input("trials must be at least 1".into()));
    }
    let mut trials = Vec::with_capacity(count);
    for trial in 0..count {
        let s = seed.wrapping_add(trial as u64);
        let out = run_once(scenario, base, cfg, s)?;
        let t = Trial {
            trial,
            seed: s,
            metrics: out.metrics,
        };
        progress(&t);
        trials.push(t);
    }
    let p = &cfg.sim.plant;
    let max_of = |f: fn(&RunMetrics) -> f64| trials.iter().map(|t| f(&t.metrics)).fold(0.0, f64::max);
    let rows: [(&str, fn(&RunMetrics) -> f64, Option<f64>); 5] = [
        ("long_accel", |m| m.max_long_accel, Some(p.a_max)),
        ("long_jerk", |m| m.max_long_jerk, Some(p.jerk_max)),
        ("lat_accel", |m| m.max_lat_accel, Some(p.lat_accel_max)),
        ("steering_angle", |m| m.max_steering_angle, Some(p.psi_max)),
        ("steering_rate", |m| m.max_steering_rate, None),
    ];
    let maxima = rows
        .into_iter()
        .map(|(metric, f, limit)| {
            let v = max_of(f);
            LimitCheck {
                metric: metric.into(),
                max_across_trials: v,
                limit,
                within: limit.is_none_or(|l| v <= l + autopath::simulator::LIMIT_TOLERANCE),
            }
        })
        .collect();
    Ok(TrialsReport {
        experiment: "trials".into(),
        config: cfg.clone(),
        scenario: scenario.clone(),
        seed,
        successes: trials.iter().filter(|t| t.metrics.success).count(),
        trials,
        maxima,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_share_ties() {
        assert_eq!(rank_descending(&[0.3, 0.5, 0.3, 0.1]), vec![2, 1, 2, 4]);
        assert_eq!(rank_descending(&[0.2]), vec![1]);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn zero_trials_is_an_input_error() {
        let r = compare_planners(&[], None, 0, &Config::default(), |_| {});
        assert!(matches!(r, Err(HarnessError::Input(_))));
    }
}
