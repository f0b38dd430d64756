use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tomoframe::config::{ExperimentConfig, FrameSpec, NoiseSpec, SolverKind, SolverSpec};
use tomoframe::exchange::{self, MeasurementFile, ReportFile, SolutionFile, StateFile};
use tomoframe::experiments::{draw_operator, run_experiment, solve, RunOptions};
use tomoframe::output::{emit, Format};
use tomoframe::{builtin_scenarios, scenario, Error, Result};
use tomoframe_core::certify::{certify_sweep, noisy_validity, ConditionVariant, CertifyTolerances, SweepOutcome};
use tomoframe_core::frames::finite_resolution_defect;
use tomoframe_core::sampling::simulate_measurement;
use tomoframe_core::{random_rank_r_state, truncate_to_rank};

#[derive(Parser)]
#[command(name = "tomoframe", version, about = "Certified low-rank state tomography from random tight-frame measurements")]
struct Cli {
    /// Worker threads for trial-level parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Built-in study designs.
    Scenario {
        #[command(subcommand)]
        action: ScenarioAction,
    },
    /// Run an experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Draw a random state and simulate measurements on it.
    Simulate(SimulateArgs),
    /// Reconstruct a state from a measurement file.
    Reconstruct(ReconstructArgs),
    /// Certify a reconstruction.
    Certify(CertifyArgs),
    /// Frame descriptions.
    Frame {
        #[command(subcommand)]
        action: FrameAction,
    },
}

#[derive(Subcommand)]
enum ScenarioAction {
    List,
    /// Print the configs of a scenario as JSON.
    Show { name: String },
    Run {
        name: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Comma-separated measurement counts.
        #[arg(long, value_delimiter = ',')]
        m_grid: Option<Vec<usize>>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Record wall-clock times (makes the output non-reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Args)]
struct FrameArgs {
    /// Frame name with default parameters; see `frame info`.
    #[arg(long, default_value = "pauli")]
    frame: String,
    /// Full frame spec as JSON, e.g. `{"kind":"pauli","qubits":3}`.
    #[arg(long)]
    frame_spec: Option<String>,
}

impl FrameArgs {
    fn spec(&self) -> Result<FrameSpec> {
        match &self.frame_spec {
            Some(json) => serde_json::from_str(json).map_err(|e| Error::Config(format!("frame spec: {e}"))),
            None => frame_by_name(&self.frame),
        }
    }
}

fn frame_by_name(name: &str) -> Result<FrameSpec> {
    FrameSpec::from_name(name).ok_or_else(|| Error::Config(format!("unknown frame `{name}`; known: {}", FrameSpec::NAMES.join(", "))))
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    frame: FrameArgs,
    /// Number of settings.
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    rank: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Standard deviation of additive Gaussian noise.
    #[arg(long, conflicts_with = "shots")]
    noise_std: Option<f64>,
    /// Estimate every expectation value from this many shots.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Also write the drawn state.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Equality,
    Tube,
    Dantzig,
    Lasso,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = SolverArg::Equality)]
    solver: SolverArg,
    /// Tube radius δ, Dantzig λ or Lasso μ.
    #[arg(long, default_value_t = 0.0)]
    param: f64,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "relaxed")]
    variant: String,
    /// Largest truncation rank tried (default: the dimension).
    #[arg(long)]
    q_max: Option<usize>,
    /// Noise level δ entering the robustness bound of the noisy variant.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum FrameAction {
    /// List the known frame names.
    List,
    Info {
        kind: String,
        /// Full frame spec as JSON overriding the defaults of `kind`.
        #[arg(long)]
        spec: Option<String>,
    },
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?);
    Ok(())
}

fn write_or_print<T: serde::Serialize>(value: &T, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => exchange::write_json(value, path),
        None => print_json(value),
    }
}

fn run_configs(curves: Vec<(String, ExperimentConfig)>, output: &OutputArgs) -> Result<()> {
    let opts = RunOptions { timing: output.timing, keep_outcomes: false };
    let records = curves.iter().map(|(label, c)| run_experiment(label, c, opts)).collect::<Result<Vec<_>>>()?;
    for path in emit(&records, output.format.into(), output.out.as_deref())? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn scenario_command(action: ScenarioAction) -> Result<()> {
    match action {
        ScenarioAction::List => {
            for s in builtin_scenarios() {
                let labels: Vec<&str> = s.curves.iter().map(|c| c.label).collect();
                println!("{}\tn={} r={}\t{}\t[{}]", s.name, s.dim(), s.rank(), s.description, labels.join(", "));
            }
            Ok(())
        }
        ScenarioAction::Show { name } => {
            let s = scenario(&name).ok_or_else(|| Error::Config(format!("unknown scenario `{name}`")))?;
            let configs: Vec<_> = s.curves.iter().map(|c| (c.label, &c.config)).collect();
            print_json(&configs)
        }
        ScenarioAction::Run { name, seed, trials, m_grid, output } => {
            let s = scenario(&name).ok_or_else(|| Error::Config(format!("unknown scenario `{name}`")))?;
            let curves = s
                .curves
                .into_iter()
                .map(|mut c| {
                    if let Some(seed) = seed {
                        c.config.seed = seed;
                    }
                    if let Some(t) = trials {
                        c.config.trials = t;
                    }
                    if let Some(g) = &m_grid {
                        c.config.m_grid = g.clone();
                    }
                    (c.label.to_string(), c.config)
                })
                .collect();
            run_configs(curves, &output)
        }
    }
}

fn simulate_command(args: SimulateArgs) -> Result<()> {
    let spec = args.frame.spec()?;
    let frame = spec.build()?;
    let noise = match (args.noise_std, args.shots) {
        (Some(std), _) => NoiseSpec::Gaussian { std },
        (None, Some(count)) => NoiseSpec::Shots { count },
        (None, None) => NoiseSpec::Exact,
    };
    let rho = random_rank_r_state(frame.dim(), args.rank, args.seed)?;
    let op = draw_operator(&spec, &frame, args.m, args.seed.wrapping_add(1))?;
    let b = simulate_measurement(&op, &rho, noise.model(), args.seed.wrapping_add(2))?;
    exchange::write_json(&MeasurementFile::from_record(&op, &b), &args.out)?;
    if let Some(path) = &args.truth {
        exchange::write_json(&StateFile::new(rho.matrix()), path)?;
    }
    Ok(())
}

fn reconstruct_command(args: ReconstructArgs) -> Result<()> {
    let file: MeasurementFile = exchange::read_json(&args.input)?;
    let (op, b) = file.to_problem()?;
    let mut spec = SolverSpec::default();
    spec.kind = match args.solver {
        SolverArg::Equality => SolverKind::Equality,
        SolverArg::Tube => SolverKind::Tube { delta: args.param },
        SolverArg::Dantzig => SolverKind::Dantzig { lambda: args.param },
        SolverArg::Lasso => SolverKind::Lasso { mu: args.param },
    };
    spec.max_iterations = args.max_iterations.unwrap_or(spec.max_iterations);
    spec.tolerance = args.tolerance.unwrap_or(spec.tolerance);
    spec.step = args.step;
    let result = solve(&op, &b, &spec)?;
    if !result.converged {
        eprintln!("warning: solver stopped after {} iterations without converging", result.iterations);
    }
    write_or_print(&SolutionFile::new(spec, &result, file), args.out.as_ref())
}

fn certify_command(args: CertifyArgs) -> Result<()> {
    let variant = ConditionVariant::from_name(&args.variant).ok_or_else(|| Error::Config(format!("unknown variant `{}`", args.variant)))?;
    let sol: SolutionFile = exchange::read_json(&args.input)?;
    let (op, _) = sol.measurements.to_problem()?;
    let result = sol.result()?;
    let tol = CertifyTolerances::default();
    let q_max = args.q_max.unwrap_or(op.dim());
    let outcome = certify_sweep(&op, &result, q_max, variant, &tol);
    let report = match (&outcome, variant) {
        (SweepOutcome::Certified(r), ConditionVariant::Noisy) => Some(noisy_validity(&op, &truncate_to_rank(&result.sigma_star, r.q)?, r, args.delta)?),
        (SweepOutcome::Certified(r), _) => Some(r.clone()),
        (SweepOutcome::Exhausted { .. }, _) => None,
    };
    let tried = match outcome {
        SweepOutcome::Certified(ref r) => r.q,
        SweepOutcome::Exhausted { tried } => tried,
    };
    let warn = 2 * op.settings() >= op.dim() * op.dim();
    write_or_print(&ReportFile::new(variant, tried, report.as_ref(), result.trace_norm, tol.trace_tol, warn), args.out.as_ref())
}

fn frame_command(action: FrameAction) -> Result<()> {
    match action {
        FrameAction::List => {
            for name in FrameSpec::NAMES {
                println!("{name}");
            }
            Ok(())
        }
        FrameAction::Info { kind, spec } => {
            let spec = match spec {
                Some(json) => serde_json::from_str(&json).map_err(|e| Error::Config(format!("frame spec: {e}")))?,
                None => frame_by_name(&kind)?,
            };
            let frame = spec.build()?;
            for (k, v) in frame.describe() {
                println!("{k}: {v}");
            }
            if let Some(defect) = finite_resolution_defect(&frame) {
                println!("resolution_defect: {defect:e}");
            }
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| Error::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Scenario { action } => scenario_command(action),
        Command::Run { config, output } => {
            let c: ExperimentConfig = exchange::read_json(&config)?;
            let label = config.file_stem().and_then(|s| s.to_str()).unwrap_or("experiment").to_string();
            run_configs(vec![(label, c)], &output)
        }
        Command::Simulate(args) => simulate_command(args),
        Command::Reconstruct(args) => reconstruct_command(args),
        Command::Certify(args) => certify_command(args),
        Command::Frame { action } => frame_command(action),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
