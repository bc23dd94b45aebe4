//! `bidd` command-line interface.
//!
//! Subcommands: `gen` (synthetic data), `decide` (one pair), `bench`
//! (experiment grid), `ablate` (estimator / conditioning ablations), and
//! `real` (directory of pairs plus truth manifest). Every flag can also be set
//! through an environment variable with the `BIDD_` prefix.
//!
//! Exit codes: 0 success, 2 ingestion error, 3 training failure, 1 otherwise.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bidd_core::decision::{bidd_decide, profiles_csv, BiddConfig, DecisionRule, SplitPolicy};
use bidd_core::dependence::{EstimatorKind, HsicConfig, KsgConfig};
use bidd_core::dgp::{generate, generate_raw, DgpSpec, MechanismKind, PairDataset};
use bidd_core::numerics::{NoiseFamily, Rng};

use bidd_harness::config::{
    build_bidd_config, decide_with_method, Method, Preset, PresetOverrides,
};
use bidd_harness::grid::{run_ablation, run_grid, AblationKind, GridSpec};
use bidd_harness::ingest::DEFAULT_SUBSAMPLE_CAP;
use bidd_harness::real::{run_real_benchmark, Manifest};
use bidd_harness::record::VerdictRecord;
use bidd_harness::{Error, Result};

#[derive(Parser)]
#[command(
    name = "bidd",
    version,
    about = "Bivariate causal-direction discovery via conditional denoising diffusion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic pair dataset (CSV) from a generator spec
    Gen(GenArgs),
    /// Decide the causal direction of a two-column CSV pair
    Decide(DecideArgs),
    /// Run an experiment grid described by a JSON spec
    Bench(BenchArgs),
    /// Run an ablation (estimator sweep or unconditional training) over a grid
    Ablate(AblateArgs),
    /// Score a directory of real pairs against a ground-truth manifest
    Real(RealArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodOpt {
    Bidd,
    Varsort,
    Mselite,
    Residlite,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PresetOpt {
    Paper,
    Desk,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyOpt {
    Test,
    Total,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimatorOpt {
    Hsic,
    Ksg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RuleOpt {
    Voting,
    Mean,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MechanismOpt {
    Linear,
    Quadratic,
    Tanh,
    Neuralnet,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NoiseOpt {
    Gaussian,
    Uniform,
}

impl From<MechanismOpt> for MechanismKind {
    fn from(m: MechanismOpt) -> Self {
        match m {
            MechanismOpt::Linear => MechanismKind::Linear,
            MechanismOpt::Quadratic => MechanismKind::Quadratic,
            MechanismOpt::Tanh => MechanismKind::Tanh,
            MechanismOpt::Neuralnet => MechanismKind::NeuralNet,
        }
    }
}

impl From<NoiseOpt> for NoiseFamily {
    fn from(n: NoiseOpt) -> Self {
        match n {
            NoiseOpt::Gaussian => NoiseFamily::Gaussian,
            NoiseOpt::Uniform => NoiseFamily::Uniform,
        }
    }
}

/// Decision knobs shared by `decide` and `real`.
#[derive(Args)]
struct Knobs {
    #[arg(long, value_enum, default_value_t = MethodOpt::Bidd, env = "BIDD_METHOD")]
    method: MethodOpt,
    #[arg(long, value_enum, default_value_t = PresetOpt::Desk, env = "BIDD_PRESET")]
    preset: PresetOpt,
    #[arg(long, value_enum, default_value_t = PolicyOpt::Total, env = "BIDD_POLICY")]
    policy: PolicyOpt,
    #[arg(long, value_enum, default_value_t = EstimatorOpt::Hsic, env = "BIDD_ESTIMATOR")]
    estimator: EstimatorOpt,
    /// HSIC bandwidth scale (median heuristic multiplier)
    #[arg(long, default_value_t = 1.0, env = "BIDD_BANDWIDTH_SCALE")]
    bandwidth_scale: f64,
    /// KSG neighbour count
    #[arg(long, default_value_t = 3, env = "BIDD_NEIGHBORS")]
    neighbors: usize,
    #[arg(long, value_enum, default_value_t = RuleOpt::Voting, env = "BIDD_RULE")]
    rule: RuleOpt,
    /// Train with the condition input masked to zero (ablation variant)
    #[arg(long, env = "BIDD_UNCONDITIONAL")]
    unconditional: bool,
    /// Override the preset's epoch count
    #[arg(long, env = "BIDD_EPOCHS")]
    epochs: Option<usize>,
    /// Override the preset's network width
    #[arg(long, env = "BIDD_WIDTH")]
    width: Option<usize>,
    /// Override the preset's diffusion timestep count
    #[arg(long, env = "BIDD_TIMESTEPS")]
    timesteps: Option<usize>,
    /// Override the preset's evaluation oversampling factor
    #[arg(long, env = "BIDD_OVERSAMPLE")]
    oversample: Option<usize>,
    /// Override the preset's residual block count
    #[arg(long, env = "BIDD_RES_BLOCKS")]
    res_blocks: Option<usize>,
}

impl Knobs {
    fn overrides(&self) -> PresetOverrides {
        PresetOverrides {
            epochs: self.epochs,
            width: self.width,
            timesteps: self.timesteps,
            oversample: self.oversample,
            res_blocks: self.res_blocks,
        }
    }

    fn preset(&self) -> Preset {
        match self.preset {
            PresetOpt::Paper => Preset::Paper,
            PresetOpt::Desk => Preset::Desk,
        }
    }

    fn bidd_config(&self) -> BiddConfig {
        let mut cfg = build_bidd_config(self.preset(), &self.overrides());
        cfg.policy = match self.policy {
            PolicyOpt::Test => SplitPolicy::Test,
            PolicyOpt::Total => SplitPolicy::Total,
        };
        cfg.estimator = match self.estimator {
            EstimatorOpt::Hsic => EstimatorKind::Hsic(HsicConfig {
                bandwidth_scale: self.bandwidth_scale,
            }),
            EstimatorOpt::Ksg => EstimatorKind::Ksg(KsgConfig { k: self.neighbors }),
        };
        cfg.rule = match self.rule {
            RuleOpt::Voting => DecisionRule::Voting,
            RuleOpt::Mean => DecisionRule::Mean,
        };
        cfg.denoiser.conditional = !self.unconditional;
        cfg
    }

    fn method(&self) -> Method {
        match self.method {
            MethodOpt::Bidd if self.unconditional => Method::BiddUnconditional,
            MethodOpt::Bidd => Method::Bidd,
            MethodOpt::Varsort => Method::VarSort,
            MethodOpt::Mselite => Method::MseLite,
            MethodOpt::Residlite => Method::ResidLite,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    /// Generator spec JSON (mutually exclusive with --mechanism)
    #[arg(long, env = "BIDD_SPEC", conflicts_with_all = ["mechanism", "noise", "mediators", "n"])]
    spec: Option<PathBuf>,
    #[arg(
        long,
        value_enum,
        env = "BIDD_MECHANISM",
        required_unless_present = "spec"
    )]
    mechanism: Option<MechanismOpt>,
    #[arg(long, value_enum, default_value_t = NoiseOpt::Gaussian, env = "BIDD_NOISE")]
    noise: NoiseOpt,
    /// Number of unobserved mediators
    #[arg(long, default_value_t = 0, env = "BIDD_MEDIATORS")]
    mediators: usize,
    #[arg(long, default_value_t = 1000, env = "BIDD_N")]
    n: usize,
    #[arg(long, default_value_t = 0, env = "BIDD_SEED")]
    seed: u64,
    /// Skip the final standardization (keeps raw marginal variances)
    #[arg(long, env = "BIDD_RAW")]
    raw: bool,
    /// Output CSV path
    #[arg(long, env = "BIDD_OUT")]
    out: PathBuf,
    /// Also write the concrete generator spec that was used
    #[arg(long, env = "BIDD_SPEC_OUT")]
    spec_out: Option<PathBuf>,
}

#[derive(Args)]
struct DecideArgs {
    /// Two-column CSV pair file
    #[arg(long, env = "BIDD_INPUT")]
    input: PathBuf,
    #[command(flatten)]
    knobs: Knobs,
    #[arg(long, default_value_t = 0, env = "BIDD_SEED")]
    seed: u64,
    /// Verdict JSON path (stdout when omitted)
    #[arg(long, env = "BIDD_OUT")]
    out: Option<PathBuf>,
    /// Write the per-timestep MI profiles as CSV
    #[arg(long, env = "BIDD_PROFILE_OUT")]
    profile_out: Option<PathBuf>,
    /// Write the training loss traces as CSV (prefix; `_a.csv`/`_b.csv` appended)
    #[arg(long, env = "BIDD_TRACE_OUT")]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Grid spec JSON
    #[arg(long, env = "BIDD_GRID")]
    grid: PathBuf,
    /// Output directory (results.csv, results.json, cells/)
    #[arg(long, env = "BIDD_OUT")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AblationOpt {
    MiEstimator,
    Unconditional,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long, value_enum, env = "BIDD_KIND")]
    kind: AblationOpt,
    #[arg(long, env = "BIDD_GRID")]
    grid: PathBuf,
    #[arg(long, env = "BIDD_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct RealArgs {
    /// Directory of pair files
    #[arg(long, env = "BIDD_DIR")]
    dir: PathBuf,
    /// Manifest CSV mapping file names to ground truth (atob / btoa)
    #[arg(long, env = "BIDD_MANIFEST")]
    manifest: PathBuf,
    /// Subsample cap per pair
    #[arg(long, default_value_t = DEFAULT_SUBSAMPLE_CAP, env = "BIDD_CAP")]
    cap: usize,
    #[command(flatten)]
    knobs: Knobs,
    #[arg(long, default_value_t = 0, env = "BIDD_SEED")]
    seed: u64,
    /// Report JSON path (stdout when omitted)
    #[arg(long, env = "BIDD_OUT")]
    out: Option<PathBuf>,
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let spec = match &args.spec {
        Some(path) => serde_json::from_str::<DgpSpec>(&std::fs::read_to_string(path)?)?,
        None => {
            let run_rng = Rng::new(args.seed);
            let mut mech_rng = run_rng.split(0);
            DgpSpec::random(
                &mut mech_rng,
                args.mechanism
                    .expect("clap enforces --mechanism without --spec")
                    .into(),
                args.noise.into(),
                args.mediators,
                args.n,
                run_rng.derive_seed(1),
            )
        }
    };
    let data = if args.raw {
        generate_raw(&spec)?
    } else {
        generate(&spec)?
    };
    data.write_csv(&args.out)?;
    if let Some(p) = &args.spec_out {
        std::fs::write(p, serde_json::to_string_pretty(&spec)?)?;
    }
    eprintln!("wrote {} rows to {}", data.len(), args.out.display());
    Ok(())
}

fn cmd_decide(args: DecideArgs) -> Result<()> {
    let data = PairDataset::read_csv(&args.input)?;
    let method = args.knobs.method();
    let cfg = args.knobs.bidd_config();
    let rng = Rng::new(args.seed);
    let start = Instant::now();

    let record = match method {
        Method::Bidd | Method::BiddUnconditional => {
            let outcome = bidd_decide(&data, &cfg, &rng)?;
            if let Some(p) = &args.profile_out {
                std::fs::write(p, profiles_csv(&outcome.profile_a, &outcome.profile_b)?)?;
            }
            if let Some(prefix) = &args.trace_out {
                write_trace(prefix, "_a.csv", &outcome.trace_a)?;
                write_trace(prefix, "_b.csv", &outcome.trace_b)?;
            }
            outcome.verdict
        }
        _ => decide_with_method(method, &data, &cfg, &rng)?,
    };

    let record = VerdictRecord::new(
        &record,
        args.seed,
        &cfg.policy.to_string(),
        &cfg.estimator.label(),
        method.label(),
        start.elapsed().as_secs_f64(),
    );
    emit(args.out.as_deref(), &record.to_json())
}

fn write_trace(
    prefix: &std::path::Path,
    suffix: &str,
    trace: &[bidd_core::diffusion::TracePoint],
) -> Result<()> {
    let mut path = prefix.as_os_str().to_owned();
    path.push(suffix);
    std::fs::write(PathBuf::from(path), bidd_core::diffusion::trace_csv(trace))?;
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let grid: GridSpec = serde_json::from_str(&std::fs::read_to_string(&args.grid)?)?;
    let rows = run_grid(&grid, &args.out)?;
    eprintln!("{} cells -> {}", rows.len(), args.out.display());
    for row in &rows {
        eprintln!(
            "  {}/{} T={} n={} {}: accuracy {:.3}",
            row.mechanism, row.noise, row.mediators, row.n, row.method, row.accuracy
        );
    }
    Ok(())
}

fn cmd_ablate(args: AblateArgs) -> Result<()> {
    let grid: GridSpec = serde_json::from_str(&std::fs::read_to_string(&args.grid)?)?;
    let kind = match args.kind {
        AblationOpt::MiEstimator => AblationKind::MiEstimator,
        AblationOpt::Unconditional => AblationKind::Unconditional,
    };
    let rows = run_ablation(kind, &grid, &args.out)?;
    eprintln!("{} ablation rows -> {}", rows.len(), args.out.display());
    Ok(())
}

fn cmd_real(args: RealArgs) -> Result<()> {
    let manifest = Manifest::load(&args.manifest)?;
    let cfg = args.knobs.bidd_config();
    let report = run_real_benchmark(
        &args.dir,
        &manifest,
        args.knobs.method(),
        &cfg,
        args.cap,
        &Rng::new(args.seed),
    )?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!(
        "accuracy {:.4} over {} pairs",
        report.accuracy, report.evaluated
    );
    emit(args.out.as_deref(), &serde_json::to_string_pretty(&report)?)
}

fn emit(out: Option<&std::path::Path>, payload: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, payload)?,
        None => println!("{payload}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Decide(a) => cmd_decide(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Ablate(a) => cmd_ablate(a),
        Command::Real(a) => cmd_real(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_of(&e))
        }
    }
}

fn exit_code_of(e: &Error) -> u8 {
    e.exit_code().clamp(0, u8::MAX as i32) as u8
}
