//! Batch experiments over many random scenarios.
//!
//! * `rate_ratio`: backhaul limit set to a ratio of each scenario's total
//!   requested rate.
//! * `bandwidth_ratio`: NFP bandwidth set to a ratio of the largest per-NFP
//!   bandwidth demand, where each cell is charged to its strongest eligible
//!   NFP.
//! * `timing`: wall-clock of each solver call at fixed limits.
//!
//! Scenario seeds are `base_config.seed + k`. Scenarios run in parallel on
//! the ambient rayon pool; results are gathered in seed order, so a sweep is
//! a pure function of its spec regardless of thread count. Timing runs are
//! sequential.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{compute_link_metrics, EnvironmentParams, LinkMetrics};
use crate::error::{invalid, io_err, Error, Result};
use crate::instance::{check_feasibility, objective, AssociationInstance, NetworkLimits, SymmetricLimits};
use crate::scenario::{build_scenario, ScenarioConfig};
use crate::solvers::{solve, DmcaOptions, ScoreWeights, SolverKind, SolverOptions, DEFAULT_NODE_BUDGET};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    RateRatio,
    BandwidthRatio,
    Timing,
}

impl SweepKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepKind::RateRatio => "rate_ratio",
            SweepKind::BandwidthRatio => "bandwidth_ratio",
            SweepKind::Timing => "timing",
        }
    }
}

fn default_scenarios() -> usize {
    200
}

fn default_solvers() -> Vec<SolverKind> {
    SolverKind::ALL.to_vec()
}

fn default_budget() -> u64 {
    DEFAULT_NODE_BUDGET
}

fn default_reps() -> usize {
    11
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub kind: SweepKind,
    #[serde(default)]
    pub ratio_grid: Vec<f64>,
    #[serde(default = "default_scenarios")]
    pub n_scenarios: usize,
    #[serde(default)]
    pub base_config: ScenarioConfig,
    #[serde(default)]
    pub env: EnvironmentParams,
    #[serde(default)]
    pub base_limits: SymmetricLimits,
    #[serde(default = "default_solvers")]
    pub solvers: Vec<SolverKind>,
    #[serde(default)]
    pub weights: ScoreWeights,
    #[serde(default)]
    pub dmca: DmcaOptions,
    #[serde(default = "default_budget")]
    pub node_budget: u64,
    /// Timed calls per (solver, scenario).
    #[serde(default = "default_reps")]
    pub timing_reps: usize,
}

impl SweepSpec {
    pub fn new(kind: SweepKind) -> Self {
        Self {
            kind,
            ratio_grid: Vec::new(),
            n_scenarios: default_scenarios(),
            base_config: ScenarioConfig::default(),
            env: EnvironmentParams::default(),
            base_limits: SymmetricLimits::default(),
            solvers: default_solvers(),
            weights: ScoreWeights::default(),
            dmca: DmcaOptions::default(),
            node_budget: DEFAULT_NODE_BUDGET,
            timing_reps: default_reps(),
        }
    }

    /// Default study for each kind.
    ///
    /// * `rate_ratio`: grid 0.2..=1.2, B = 2 GHz, N_l = 30.
    /// * `bandwidth_ratio`: grid {0.25, 0.5, 0.75, 1, 1.5}, R = 5 Gbps, N_l = 30.
    /// * `timing`: 30 scenarios at the default limits.
    pub fn preset(kind: SweepKind) -> Self {
        let mut spec = Self::new(kind);
        match kind {
            SweepKind::RateRatio => {
                spec.ratio_grid = vec![0.2, 0.4, 0.6, 0.8, 1.0, 1.2];
                spec.base_limits.nfp_bandwidth = 2e9;
                spec.base_limits.nfp_max_links = 30;
            }
            SweepKind::BandwidthRatio => {
                spec.ratio_grid = vec![0.25, 0.5, 0.75, 1.0, 1.5];
                spec.base_limits.backhaul_rate = 5e9;
                spec.base_limits.nfp_max_links = 30;
            }
            SweepKind::Timing => spec.n_scenarios = 30,
        }
        spec
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_scenarios == 0 {
            return Err(invalid("n_scenarios", "must be >= 1"));
        }
        if self.kind != SweepKind::Timing {
            if self.ratio_grid.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
                return Err(invalid("ratio_grid", "ratios must be > 0"));
            }
            if self.ratio_grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid("ratio_grid", "must be strictly increasing"));
            }
        }
        if self.solvers.is_empty() {
            return Err(invalid("solvers", "must not be empty"));
        }
        let mut sorted = self.solvers.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.solvers.len() {
            return Err(invalid("solvers", "duplicate solver"));
        }
        if self.timing_reps == 0 {
            return Err(invalid("timing_reps", "must be >= 1"));
        }
        self.weights.validate()?;
        self.base_config.validate()?;
        self.base_limits.validate()?;
        self.env.validate()
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.n_scenarios as u64)
            .map(|k| self.base_config.seed.wrapping_add(k))
            .collect()
    }

    fn solver_options(&self, audit: bool) -> SolverOptions {
        SolverOptions {
            weights: self.weights,
            dmca: self.dmca,
            node_budget: self.node_budget,
            audit,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let spec: SweepSpec = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_owned(),
            source,
        })?;
        Ok(spec)
    }
}

/// Aggregate for one (ratio, solver) grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub ratio: f64,
    pub solver: SolverKind,
    pub mean_pct_unassoc: f64,
    pub stderr: f64,
    pub n_scenarios: usize,
    /// Exact runs that hit the node budget.
    pub unproven: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSample {
    pub solver: SolverKind,
    pub scenario_seed: u64,
    pub median_ms: f64,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub points: Vec<PointSummary>,
    pub timings: Vec<TimingSample>,
    /// Seeds that produced a scenario.
    pub seeds: Vec<u64>,
    /// Seeds whose scenario could not be generated, with the reason.
    pub failed: Vec<(u64, String)>,
}

impl SweepResult {
    pub fn point(&self, ratio: f64, solver: SolverKind) -> Option<&PointSummary> {
        self.points.iter().find(|p| p.ratio == ratio && p.solver == solver)
    }
}

#[derive(Debug, Clone, Copy)]
struct RunOutcome {
    pct_unassoc: f64,
    proven: bool,
}

fn pct_unassoc(n_sc: usize, served: usize) -> f64 {
    if n_sc == 0 {
        0.0
    } else {
        100.0 * (n_sc - served) as f64 / n_sc as f64
    }
}

/// Solves and audits one instance with every requested solver.
fn run_solvers(spec: &SweepSpec, inst: &AssociationInstance, seed: u64) -> Result<Vec<RunOutcome>> {
    let opts = spec.solver_options(false);
    spec.solvers
        .iter()
        .map(|&kind| {
            let sol = solve(kind, inst, &opts);
            let report = check_feasibility(inst, &sol.matrix)?;
            if !report.feasible {
                return Err(Error::AuditFailed {
                    solver: kind.to_string(),
                    seed,
                    violations: format!("{:?}", report.violated),
                });
            }
            Ok(RunOutcome {
                pct_unassoc: pct_unassoc(inst.n_sc(), objective(&sol.matrix)),
                proven: sol.proven_optimal.unwrap_or(true),
            })
        })
        .collect()
}

/// Largest per-NFP bandwidth demand when each cell is charged to its
/// strongest eligible NFP.
pub fn reference_bandwidth(metrics: &LinkMetrics) -> f64 {
    let mut demand = vec![0.0; metrics.n_d];
    for i in 0..metrics.n_sc {
        let strongest = (0..metrics.n_d)
            .filter(|&j| metrics.eligible[(i, j)])
            .max_by(|&a, &b| metrics.sinr[(i, a)].total_cmp(&metrics.sinr[(i, b)]).then(b.cmp(&a)));
        if let Some(j) = strongest {
            demand[j] += metrics.bandwidth[(i, j)];
        }
    }
    demand.into_iter().fold(0.0, f64::max)
}

fn limits_at(spec: &SweepSpec, metrics: &LinkMetrics, ratio: f64) -> NetworkLimits {
    let mut limits = spec.base_limits.for_nfps(metrics.n_d);
    match spec.kind {
        SweepKind::RateRatio => {
            let total: f64 = (0..metrics.n_sc)
                .map(|i| if metrics.n_d > 0 { metrics.rate[(i, 0)] } else { 0.0 })
                .sum();
            limits.backhaul_rate = (ratio * total).max(f64::MIN_POSITIVE);
        }
        SweepKind::BandwidthRatio => {
            let b = (ratio * reference_bandwidth(metrics)).max(f64::MIN_POSITIVE);
            limits.nfp_bandwidth.iter_mut().for_each(|x| *x = b);
        }
        SweepKind::Timing => {}
    }
    limits
}

/// Outcomes for one scenario, indexed `[ratio][solver]`.
fn scenario_outcomes(spec: &SweepSpec, seed: u64) -> Result<Vec<Vec<RunOutcome>>> {
    let config = ScenarioConfig {
        seed,
        ..spec.base_config.clone()
    };
    let scenario = build_scenario(&config, &spec.env)?;
    let metrics = compute_link_metrics(&scenario, &spec.env, spec.base_limits.sinr_min())?;
    spec.ratio_grid
        .iter()
        .map(|&ratio| {
            let inst = AssociationInstance::new(metrics.clone(), limits_at(spec, &metrics, ratio))?;
            run_solvers(spec, &inst, seed)
        })
        .collect()
}

fn is_generation_failure(e: &Error) -> bool {
    matches!(e, Error::GenerationFailed { .. } | Error::Packing { .. })
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn run_ratio_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let per_seed: Vec<(u64, Result<Vec<Vec<RunOutcome>>>)> = spec
        .seeds()
        .into_par_iter()
        .map(|seed| (seed, scenario_outcomes(spec, seed)))
        .collect();

    let mut seeds = Vec::new();
    let mut failed = Vec::new();
    let mut rows = Vec::new();
    for (seed, outcome) in per_seed {
        match outcome {
            Ok(o) => {
                seeds.push(seed);
                rows.push(o);
            }
            Err(e) if is_generation_failure(&e) => {
                log::warn!("seed {seed}: scenario skipped: {e}");
                failed.push((seed, e.to_string()));
            }
            Err(e) => return Err(e),
        }
    }

    let mut points = Vec::new();
    for (r, &ratio) in spec.ratio_grid.iter().enumerate() {
        let mut order: Vec<(usize, SolverKind)> = spec.solvers.iter().copied().enumerate().collect();
        order.sort_by_key(|&(_, k)| k);
        for (s, solver) in order {
            let samples: Vec<f64> = rows.iter().map(|o| o[r][s].pct_unassoc).collect();
            let (mean, stderr) = mean_stderr(&samples);
            points.push(PointSummary {
                ratio,
                solver,
                mean_pct_unassoc: mean,
                stderr,
                n_scenarios: samples.len(),
                unproven: rows.iter().filter(|o| !o[r][s].proven).count(),
            });
        }
    }

    Ok(SweepResult {
        kind: spec.kind,
        points,
        timings: Vec::new(),
        seeds,
        failed,
    })
}

/// Percentage of unassociated cells against the backhaul ratio.
pub fn run_rate_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.kind != SweepKind::RateRatio {
        return Err(invalid("kind", "expected rate_ratio"));
    }
    run_ratio_sweep(spec)
}

/// Percentage of unassociated cells against the NFP bandwidth ratio.
pub fn run_bandwidth_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.kind != SweepKind::BandwidthRatio {
        return Err(invalid("kind", "expected bandwidth_ratio"));
    }
    run_ratio_sweep(spec)
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Median solve time per (solver, scenario). Only the solver call is timed.
pub fn run_timing(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.kind != SweepKind::Timing {
        return Err(invalid("kind", "expected timing"));
    }
    spec.validate()?;
    let opts = spec.solver_options(false);
    let mut seeds = Vec::new();
    let mut failed = Vec::new();
    let mut timings = Vec::new();

    for seed in spec.seeds() {
        let config = ScenarioConfig {
            seed,
            ..spec.base_config.clone()
        };
        let scenario = match build_scenario(&config, &spec.env) {
            Ok(s) => s,
            Err(e) if is_generation_failure(&e) => {
                log::warn!("seed {seed}: scenario skipped: {e}");
                failed.push((seed, e.to_string()));
                continue;
            }
            Err(e) => return Err(e),
        };
        let metrics = compute_link_metrics(&scenario, &spec.env, spec.base_limits.sinr_min())?;
        let inst = AssociationInstance::new(metrics.clone(), limits_at(spec, &metrics, 1.0))?;
        seeds.push(seed);

        for &kind in &spec.solvers {
            let mut samples = Vec::with_capacity(spec.timing_reps);
            let mut last = None;
            for _ in 0..spec.timing_reps {
                let t0 = Instant::now();
                let sol = solve(kind, &inst, &opts);
                samples.push(t0.elapsed().as_secs_f64() * 1e3);
                last = Some(sol);
            }
            let sol = last.expect("timing_reps >= 1");
            let report = check_feasibility(&inst, &sol.matrix)?;
            if !report.feasible {
                return Err(Error::AuditFailed {
                    solver: kind.to_string(),
                    seed,
                    violations: format!("{:?}", report.violated),
                });
            }
            timings.push(TimingSample {
                solver: kind,
                scenario_seed: seed,
                median_ms: median(&mut samples),
                reps: spec.timing_reps,
            });
        }
    }

    Ok(SweepResult {
        kind: SweepKind::Timing,
        points: Vec::new(),
        timings,
        seeds,
        failed,
    })
}

/// Dispatches on `spec.kind`.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    match spec.kind {
        SweepKind::RateRatio => run_rate_sweep(spec),
        SweepKind::BandwidthRatio => run_bandwidth_sweep(spec),
        SweepKind::Timing => run_timing(spec),
    }
}

pub fn write_sweep_csv_to<W: Write>(result: &SweepResult, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    if result.kind == SweepKind::Timing {
        wtr.write_record(["solver", "scenario_seed", "median_ms", "reps"])?;
        for t in &result.timings {
            wtr.write_record([
                t.solver.to_string(),
                t.scenario_seed.to_string(),
                format!("{:.6}", t.median_ms),
                t.reps.to_string(),
            ])?;
        }
    } else {
        wtr.write_record(["kind", "ratio", "solver", "mean_pct_unassoc", "stderr", "n_scenarios"])?;
        let mut points: Vec<&PointSummary> = result.points.iter().collect();
        points.sort_by(|a, b| a.ratio.total_cmp(&b.ratio).then(a.solver.cmp(&b.solver)));
        for p in points {
            wtr.write_record([
                result.kind.as_str().to_string(),
                p.ratio.to_string(),
                p.solver.to_string(),
                format!("{:.6}", p.mean_pct_unassoc),
                format!("{:.6}", p.stderr),
                p.n_scenarios.to_string(),
            ])?;
        }
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_sweep_csv(result: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    write_sweep_csv_to(result, std::io::BufWriter::new(file))
}
