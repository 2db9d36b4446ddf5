mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use config::{Overrides, RunConfig};
use nfp_assoc::experiments::{run_sweep, write_sweep_csv, SweepKind, SweepResult, SweepSpec};
use nfp_assoc::instance::InstanceFile;
use nfp_assoc::solvers::SolverKind;
use nfp_assoc::{
    build_scenario, check_feasibility, compute_link_metrics, objective, solve, AssociationInstance, Scenario,
    SolverOptions,
};

#[derive(Parser)]
#[command(name = "nfp-assoc", version, about = "Small-cell to NFP association simulator")]
struct Cli {
    /// Worker threads for sweeps (0 = all cores)
    #[arg(long, global = true, env = "NFP_ASSOC_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a scenario and write it as JSON
    Generate(GenerateArgs),
    /// Solve one instance and write the association CSV
    Solve(SolveArgs),
    /// Run a batch experiment and write its CSV
    Sweep(SweepArgs),
    /// Print the version
    Version,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct GenerateArgs {
    /// JSON run config
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SolveArgs {
    /// JSON run config
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario JSON from `generate`; a fresh scenario is sampled when absent
    #[arg(long, conflicts_with = "instance")]
    scenario: Option<PathBuf>,
    /// Instance JSON with `sc_rates` and an `sinr` matrix
    #[arg(long)]
    instance: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Rate,
    Bandwidth,
    Timing,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SweepArgs {
    /// JSON sweep spec
    #[arg(long, required_unless_present = "kind")]
    spec: Option<PathBuf>,
    /// Built-in study, used when no spec is given
    #[arg(long, value_enum, conflicts_with = "spec")]
    kind: Option<KindArg>,
    /// Number of scenarios
    #[arg(long)]
    scenarios: Option<usize>,
    /// Ratio grid, comma separated
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// Timed calls per solver and scenario
    #[arg(long)]
    reps: Option<usize>,
    #[command(flatten)]
    overrides: Overrides,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Version => {
            println!("nfp-assoc {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref(), &args.overrides)?;
    let scenario = build_scenario(&cfg.scenario, &cfg.env)?;
    let out = cfg.output.out.unwrap_or_else(|| PathBuf::from("scenario.json"));
    scenario.save(&out)?;
    println!("N_SC = {}", scenario.n_sc());
    println!("N_D = {}", scenario.n_d());
    println!("sum requested rate = {:.3} Gbps", scenario.total_rate() / 1e9);
    println!("wrote {}", out.display());
    Ok(())
}

fn build_instance(args: &SolveArgs, cfg: &RunConfig) -> Result<AssociationInstance> {
    let sinr_min = cfg.limits.sinr_min();
    let metrics = if let Some(path) = &args.instance {
        InstanceFile::load(path)?.to_metrics(sinr_min)?
    } else {
        let scenario = match &args.scenario {
            Some(path) => Scenario::load(path)?,
            None => build_scenario(&cfg.scenario, &cfg.env)?,
        };
        compute_link_metrics(&scenario, &cfg.env, sinr_min)?
    };
    let limits = cfg.limits.for_nfps(metrics.n_d);
    Ok(AssociationInstance::new(metrics, limits)?)
}

fn csv_path(out: Option<&Path>, kind: SolverKind, several: bool) -> PathBuf {
    let base = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("association.csv"));
    if !several {
        return base;
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("association");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    base.with_file_name(format!("{stem}_{kind}.{ext}"))
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref(), &args.overrides)?;
    let inst = build_instance(&args, &cfg)?;
    let opts = SolverOptions {
        weights: cfg.solver.weights,
        dmca: cfg.solver.dmca,
        node_budget: cfg.solver.node_budget,
        ..Default::default()
    };
    let kinds = cfg.solver.kind.kinds();
    println!(
        "instance: {} small cells, {} NFPs, R = {:.3} Gbps",
        inst.n_sc(),
        inst.n_d(),
        inst.limits.backhaul_rate / 1e9
    );
    for &kind in &kinds {
        let t0 = Instant::now();
        let sol = solve(kind, &inst, &opts);
        let elapsed = t0.elapsed();
        let report = check_feasibility(&inst, &sol.matrix)?;
        if !report.feasible {
            bail!("{kind} produced an infeasible association: {:?}", report.violated);
        }
        let note = match sol.proven_optimal {
            Some(true) => " (optimal)",
            Some(false) => " (node budget exhausted)",
            None => "",
        };
        println!(
            "{kind}: {}/{} associated{note} in {:.3} ms",
            objective(&sol.matrix),
            inst.n_sc(),
            elapsed.as_secs_f64() * 1e3
        );
        println!("  rate slack: {:.3} Mbps", report.rate_slack / 1e6);
        let bw: Vec<String> = report
            .bandwidth_slack
            .iter()
            .map(|b| format!("{:.3}", b / 1e6))
            .collect();
        println!("  bandwidth slack (MHz): [{}]", bw.join(", "));
        println!("  link slack: {:?}", report.link_slack);
        let path = csv_path(cfg.output.out.as_deref(), kind, kinds.len() > 1);
        sol.matrix.save_csv(&path)?;
        println!("  wrote {}", path.display());
    }
    Ok(())
}

fn sweep_spec(args: &SweepArgs) -> Result<SweepSpec> {
    let mut spec = match (&args.spec, args.kind) {
        (Some(path), _) => SweepSpec::load(path)?,
        (None, Some(k)) => SweepSpec::preset(match k {
            KindArg::Rate => SweepKind::RateRatio,
            KindArg::Bandwidth => SweepKind::BandwidthRatio,
            KindArg::Timing => SweepKind::Timing,
        }),
        (None, None) => bail!("either --spec or --kind is required"),
    };
    args.overrides.apply_sweep(&mut spec);
    if let Some(n) = args.scenarios {
        spec.n_scenarios = n;
    }
    if let Some(g) = &args.grid {
        spec.ratio_grid = g.clone();
    }
    if let Some(r) = args.reps {
        spec.timing_reps = r;
    }
    spec.validate()?;
    Ok(spec)
}

fn print_summary(result: &SweepResult) {
    if result.kind == SweepKind::Timing {
        println!("{:<8} {:>12} {:>12}", "solver", "median ms", "mean ms");
        for kind in SolverKind::ALL {
            let mut ms: Vec<f64> = result
                .timings
                .iter()
                .filter(|t| t.solver == kind)
                .map(|t| t.median_ms)
                .collect();
            if ms.is_empty() {
                continue;
            }
            ms.sort_by(f64::total_cmp);
            let mean = ms.iter().sum::<f64>() / ms.len() as f64;
            println!("{:<8} {:>12.6} {:>12.6}", kind.as_str(), ms[ms.len() / 2], mean);
        }
    } else {
        println!(
            "{:>6} {:<8} {:>10} {:>8} {:>9}",
            "ratio", "solver", "% unassoc", "stderr", "unproven"
        );
        for p in &result.points {
            println!(
                "{:>6} {:<8} {:>10.3} {:>8.3} {:>9}",
                p.ratio,
                p.solver.as_str(),
                p.mean_pct_unassoc,
                p.stderr,
                p.unproven
            );
        }
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let spec = sweep_spec(&args)?;
    let result = run_sweep(&spec)?;
    let out = args
        .overrides
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", spec.kind.as_str())));
    write_sweep_csv(&result, &out).with_context(|| format!("writing {}", out.display()))?;
    print_summary(&result);
    println!("wrote {}", out.display());

    let failed = result.failed.len();
    if failed * 100 > spec.n_scenarios {
        bail!("{failed} of {} scenario seeds failed", spec.n_scenarios);
    }
    Ok(())
}
