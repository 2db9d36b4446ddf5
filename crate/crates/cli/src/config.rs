use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use nfp_assoc::experiments::SweepSpec;
use nfp_assoc::solvers::{DmcaOptions, ScoreWeights, SolverKind, Step2Rule, Step4Rule, DEFAULT_NODE_BUDGET};
use nfp_assoc::{EnvironmentParams, ScenarioConfig, SymmetricLimits};
use serde::{Deserialize, Serialize};

/// Solver selection; `all` runs every solver on the same instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Cmca,
    Dmca,
    Exact,
    #[default]
    All,
}

impl SolverChoice {
    pub fn kinds(self) -> Vec<SolverKind> {
        match self {
            SolverChoice::Cmca => vec![SolverKind::Cmca],
            SolverChoice::Dmca => vec![SolverKind::Dmca],
            SolverChoice::Exact => vec![SolverKind::Exact],
            SolverChoice::All => SolverKind::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Pseudocode,
    Prose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Step2 {
    Break,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub kind: SolverChoice,
    pub weights: ScoreWeights,
    pub dmca: DmcaOptions,
    pub node_budget: u64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            kind: SolverChoice::default(),
            weights: ScoreWeights::default(),
            dmca: DmcaOptions::default(),
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub out: Option<PathBuf>,
}

/// Everything a run needs. Loaded from JSON, then patched by flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub env: EnvironmentParams,
    pub scenario: ScenarioConfig,
    pub limits: SymmetricLimits,
    pub solver: SolverSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.scenario.validate()?;
        self.limits.validate()?;
        self.solver.weights.validate()?;
        if self.solver.node_budget == 0 {
            bail!("invalid parameter `node_budget`: must be >= 1");
        }
        Ok(())
    }
}

/// Flag overrides for every config field. Unset flags leave the loaded value
/// alone.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// LoS sigmoid parameter alpha
    #[arg(long, help_heading = "Environment")]
    pub alpha: Option<f64>,
    /// LoS sigmoid parameter beta
    #[arg(long, help_heading = "Environment")]
    pub beta: Option<f64>,
    /// Mean excess loss on LoS links, dB
    #[arg(long, help_heading = "Environment")]
    pub eta_los: Option<f64>,
    /// Mean excess loss on NLoS links, dB
    #[arg(long, help_heading = "Environment")]
    pub eta_nlos: Option<f64>,
    /// Carrier frequency, Hz
    #[arg(long, help_heading = "Environment")]
    pub carrier_freq: Option<f64>,
    /// Path-loss exponent
    #[arg(long, help_heading = "Environment")]
    pub pl_exponent: Option<f64>,
    /// NFP transmit power, W
    #[arg(long, help_heading = "Environment")]
    pub tx_power: Option<f64>,
    /// Noise power, W
    #[arg(long, help_heading = "Environment")]
    pub noise_floor: Option<f64>,

    /// Side of the square region, m
    #[arg(long, help_heading = "Scenario")]
    pub area_side: Option<f64>,
    /// Number of small cells
    #[arg(long, help_heading = "Scenario")]
    pub n_sc: Option<usize>,
    /// Number of NFPs
    #[arg(long, help_heading = "Scenario")]
    pub n_d: Option<usize>,
    /// Hard-core parent intensity, points/m²
    #[arg(long, help_heading = "Scenario")]
    pub density: Option<f64>,
    /// Parent intensity for NFPs, points/m²
    #[arg(long, help_heading = "Scenario")]
    pub nfp_density: Option<f64>,
    /// Minimum small-cell separation, m
    #[arg(long, help_heading = "Scenario")]
    pub sc_min_sep: Option<f64>,
    /// Minimum NFP separation, m (derived from --pl-max when unset)
    #[arg(long, help_heading = "Scenario")]
    pub nfp_min_sep: Option<f64>,
    /// NFP height, m
    #[arg(long, help_heading = "Scenario")]
    pub nfp_height: Option<f64>,
    /// Candidate requested rates, bit/s, comma separated
    #[arg(long, value_delimiter = ',', help_heading = "Scenario")]
    pub rate_choices: Option<Vec<f64>>,
    /// Maximum path loss, dB
    #[arg(long, help_heading = "Scenario")]
    pub pl_max: Option<f64>,
    /// Scenario seed (first seed of a sweep)
    #[arg(long, help_heading = "Scenario")]
    pub seed: Option<u64>,
    /// Placement attempts before giving up
    #[arg(long, help_heading = "Scenario")]
    pub max_attempts: Option<usize>,

    /// Backhaul rate limit R, bit/s
    #[arg(long, help_heading = "Limits")]
    pub backhaul_rate: Option<f64>,
    /// Per-NFP bandwidth limit B, Hz
    #[arg(long, help_heading = "Limits")]
    pub nfp_bandwidth: Option<f64>,
    /// Per-NFP link limit N_l
    #[arg(long, help_heading = "Limits")]
    pub max_links: Option<usize>,
    /// Minimum SINR, dB
    #[arg(long, help_heading = "Limits")]
    pub sinr_min_db: Option<f64>,

    /// Solver to run
    #[arg(long, value_enum, help_heading = "Solver")]
    pub solver: Option<SolverChoice>,
    /// Score weights as WB,WR
    #[arg(long, value_parser = parse_weights, help_heading = "Solver")]
    pub weights: Option<ScoreWeights>,
    /// DMCA step-4 rule
    #[arg(long, value_enum, help_heading = "Solver")]
    pub variant: Option<Variant>,
    /// DMCA step-2 rule on a bandwidth failure
    #[arg(long, value_enum, help_heading = "Solver")]
    pub step2: Option<Step2>,
    /// Exact-solver node budget
    #[arg(long, help_heading = "Solver")]
    pub node_budget: Option<u64>,

    /// Output path
    #[arg(long, help_heading = "Output")]
    pub out: Option<PathBuf>,
}

fn parse_weights(s: &str) -> std::result::Result<ScoreWeights, String> {
    s.parse().map_err(|e: nfp_assoc::Error| e.to_string())
}

macro_rules! patch {
    ($src:expr => $dst:expr) => {
        if let Some(v) = $src.clone() {
            $dst = v.into();
        }
    };
}

impl Overrides {
    fn apply_env(&self, env: &mut EnvironmentParams) {
        patch!(self.alpha => env.alpha);
        patch!(self.beta => env.beta);
        patch!(self.eta_los => env.eta_los);
        patch!(self.eta_nlos => env.eta_nlos);
        patch!(self.carrier_freq => env.carrier_freq);
        patch!(self.pl_exponent => env.pl_exponent);
        patch!(self.tx_power => env.tx_power);
        patch!(self.noise_floor => env.noise_floor);
    }

    fn apply_scenario(&self, sc: &mut ScenarioConfig) {
        patch!(self.area_side => sc.area_side);
        patch!(self.n_sc => sc.n_sc);
        patch!(self.n_d => sc.n_d);
        patch!(self.density => sc.density);
        patch!(self.nfp_density => sc.nfp_density);
        patch!(self.sc_min_sep => sc.sc_min_sep);
        patch!(self.nfp_min_sep => sc.nfp_min_sep);
        patch!(self.nfp_height => sc.nfp_height);
        patch!(self.rate_choices => sc.rate_choices);
        patch!(self.pl_max => sc.pl_max);
        patch!(self.seed => sc.seed);
        patch!(self.max_attempts => sc.max_attempts);
    }

    fn apply_limits(&self, lim: &mut SymmetricLimits) {
        patch!(self.backhaul_rate => lim.backhaul_rate);
        patch!(self.nfp_bandwidth => lim.nfp_bandwidth);
        patch!(self.max_links => lim.nfp_max_links);
        patch!(self.sinr_min_db => lim.sinr_min_db);
    }

    fn apply_dmca(&self, dmca: &mut DmcaOptions) {
        if let Some(v) = self.variant {
            dmca.step4 = match v {
                Variant::Pseudocode => Step4Rule::Pseudocode,
                Variant::Prose => Step4Rule::Prose,
            };
        }
        if let Some(s) = self.step2 {
            dmca.step2 = match s {
                Step2::Break => Step2Rule::Break,
                Step2::Skip => Step2Rule::Skip,
            };
        }
    }

    pub fn apply(&self, cfg: &mut RunConfig) {
        self.apply_env(&mut cfg.env);
        self.apply_scenario(&mut cfg.scenario);
        self.apply_limits(&mut cfg.limits);
        self.apply_dmca(&mut cfg.solver.dmca);
        patch!(self.solver => cfg.solver.kind);
        patch!(self.weights => cfg.solver.weights);
        patch!(self.node_budget => cfg.solver.node_budget);
        patch!(self.out => cfg.output.out);
    }

    /// Same overrides on a sweep spec. `--out` is handled by the caller.
    pub fn apply_sweep(&self, spec: &mut SweepSpec) {
        self.apply_env(&mut spec.env);
        self.apply_scenario(&mut spec.base_config);
        self.apply_limits(&mut spec.base_limits);
        self.apply_dmca(&mut spec.dmca);
        if let Some(s) = self.solver {
            spec.solvers = s.kinds();
        }
        patch!(self.weights => spec.weights);
        patch!(self.node_budget => spec.node_budget);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"scenario": {"n_sc": 5, "bogus": 1}}"#).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn partial_config_keeps_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"limits": {"backhaul_rate": 1e9}}"#).unwrap();
        assert_eq!(cfg.limits.backhaul_rate, 1e9);
        assert_eq!(cfg.limits.nfp_max_links, 16);
        assert_eq!(cfg.scenario, ScenarioConfig::default());
    }

    #[test]
    fn overrides_patch_only_what_is_set() {
        let mut cfg = RunConfig::default();
        let o = Overrides {
            n_sc: Some(12),
            nfp_min_sep: Some(900.0),
            variant: Some(Variant::Prose),
            solver: Some(SolverChoice::Exact),
            ..Default::default()
        };
        o.apply(&mut cfg);
        assert_eq!(cfg.scenario.n_sc, 12);
        assert_eq!(cfg.scenario.nfp_min_sep, Some(900.0));
        assert_eq!(cfg.solver.dmca.step4, Step4Rule::Prose);
        assert_eq!(cfg.solver.dmca.step2, Step2Rule::Break);
        assert_eq!(cfg.solver.kind, SolverChoice::Exact);
        assert_eq!(cfg.env, EnvironmentParams::default());
    }
}
