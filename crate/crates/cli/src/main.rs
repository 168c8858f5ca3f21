//! `behavtx`: synthesize, featurize, train, sweep, emit C and estimate
//! transmission energy from the command line.

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use behavtx::cart::{fit, TrainConfig, TreeModel};
use behavtx::codegen::{emit_eval_vectors, emit_header, CodegenOptions, ValueType};
use behavtx::datamodel::{ingest_csv, synthesize, write_csv, SynthProtocol};
use behavtx::energy::{
    report, residual_overhead, runtime_extension, DeviceProfile, Strategy, TransmissionPlan,
};
use behavtx::evaluation::{evaluate, rank_report, sweep, EvalMode};
use behavtx::features::{featurize, FeatureMask, FeatureMatrix};
use behavtx::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

use manifest::{read, write_atomic, RunManifest};

const EXIT_USAGE: u8 = 2;
const EXIT_FORMAT: u8 = 3;
const EXIT_DATA: u8 = 4;
const EXIT_IO: u8 = 5;

#[derive(Parser)]
#[command(
    name = "behavtx",
    version,
    about = "Behaviour classification and telemetry budgeting for IMU loggers"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a labelled burst dataset from a protocol file or preset.
    Synth(SynthArgs),
    /// Compute the 8 per-second features for every record.
    Featurize(FeaturizeArgs),
    /// Fit a decision tree and print its resubstitution metrics.
    Train(TrainArgs),
    /// Rank every non-empty feature subset by target-behaviour F1.
    Sweep(SweepArgs),
    /// Emit a trained model as a C header plus test vectors.
    Codegen(CodegenArgs),
    /// Transmission volume, energy and charge for a strategy.
    Energy(EnergyArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Protocol TOML file.
    #[arg(conflicts_with = "preset", required_unless_present = "preset")]
    protocol: Option<PathBuf>,
    /// Built-in protocol: paper-ea60, paper-ebf8 or paper-ed3c.
    #[arg(long)]
    preset: Option<String>,
    /// Overrides the protocol seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct FeaturizeArgs {
    input: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 14)]
    depth: usize,
    /// Features, e.g. `GX;GZ;AX` or `all`.
    #[arg(long, default_value = "all")]
    mask: String,
    #[arg(long, default_value = "standing")]
    target: String,
    #[arg(long)]
    oversample: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalArg {
    Resub,
    Holdout,
}

#[derive(Args)]
struct SweepArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 14)]
    depth: usize,
    #[arg(long, default_value = "standing")]
    target: String,
    #[arg(long, value_enum, default_value = "resub")]
    eval: EvalArg,
    /// Rows of the ranking printed to stdout.
    #[arg(long, default_value_t = 10)]
    top: usize,
    /// Holdout split seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct CodegenArgs {
    model: PathBuf,
    #[arg(long, default_value = "classify_behaviour")]
    symbol: String,
    #[arg(long, default_value = "float")]
    values: ValueType,
    /// Random test vectors, on top of the boundary probes.
    #[arg(long, default_value_t = 10_000)]
    n_vectors: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Header path.
    #[arg(short, long)]
    out: PathBuf,
    /// Test vector CSV; defaults to the header path with `.vectors.csv`.
    #[arg(long)]
    vectors: Option<PathBuf>,
}

#[derive(Args)]
struct EnergyArgs {
    /// `wildfi` or a `key = value` profile file.
    #[arg(long, default_value = "wildfi")]
    profile: String,
    #[arg(long)]
    strategy: Strategy,
    /// Fraction of data points in which the target is detected.
    #[arg(long)]
    p: f64,
    /// Data points in the period.
    #[arg(long)]
    n: u64,
    #[arg(long)]
    full_bytes: u64,
    /// Defaults to --full-bytes.
    #[arg(long)]
    selected_bytes: Option<u64>,
    #[arg(long, default_value_t = 2)]
    signal_bytes: u64,
    /// Baseline runtime in days, for the runtime estimate.
    #[arg(long, requires = "overhead")]
    base_days: Option<f64>,
    /// Transmission overhead at full volume, as a fraction.
    #[arg(long, requires = "base_days")]
    overhead: Option<f64>,
    /// Optional CSV copy of the report.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Format { .. } => EXIT_FORMAT,
        Error::Config(_) => EXIT_USAGE,
        Error::Io { .. } => EXIT_IO,
        Error::Value { .. }
        | Error::Label(_)
        | Error::Protocol(_)
        | Error::Shape { .. }
        | Error::Data(_) => EXIT_DATA,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Synth(a) => cmd_synth(a),
        Cmd::Featurize(a) => cmd_featurize(a),
        Cmd::Train(a) => cmd_train(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::Codegen(a) => cmd_codegen(a),
        Cmd::Energy(a) => cmd_energy(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("behavtx: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn finish(m: &RunManifest, out: &Path, bytes: &[u8]) -> Result<(), Error> {
    write_atomic(out, bytes)?;
    m.write_next_to(out)?;
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<(), Error> {
    let mut proto = match (&a.preset, &a.protocol) {
        (Some(name), _) => SynthProtocol::preset(name)?,
        (None, Some(path)) => {
            let text = String::from_utf8(read(path)?).map_err(|_| Error::Format {
                location: path.display().to_string(),
                message: "not UTF-8".into(),
            })?;
            toml::from_str(&text).map_err(|e| Error::Format {
                location: path.display().to_string(),
                message: e.message().to_string(),
            })?
        }
        (None, None) => unreachable!("clap requires one of them"),
    };
    if let Some(seed) = a.seed {
        proto.seed = seed;
    }
    let ds = synthesize(&proto)?;
    let mut buf = Vec::new();
    write_csv(&ds, &mut buf).map_err(|e| Error::Io {
        path: a.out.display().to_string(),
        source: e,
    })?;

    let mut m = RunManifest::new("synth", Some(proto.seed));
    match (&a.preset, &a.protocol) {
        (Some(name), _) => {
            m.param("preset", name);
        }
        (None, Some(path)) => m.input(path, &read(path)?),
        _ => {}
    }
    m.param("source_id", &proto.source_id)
        .param("records", ds.len());
    m.output(&a.out, &buf);
    finish(&m, &a.out, &buf)?;
    println!("{} records written to {}", ds.len(), a.out.display());
    Ok(())
}

fn cmd_featurize(a: FeaturizeArgs) -> Result<(), Error> {
    let raw = read(&a.input)?;
    let ds = ingest_csv(&a.input)?;
    let fm = featurize(&ds)?;
    let mut buf = Vec::new();
    fm.write_csv(&mut buf).map_err(|e| Error::Io {
        path: a.out.display().to_string(),
        source: e,
    })?;
    let mut m = RunManifest::new("featurize", None);
    m.param("rows", fm.len());
    m.input(&a.input, &raw);
    m.output(&a.out, &buf);
    finish(&m, &a.out, &buf)?;
    println!("{} feature rows written to {}", fm.len(), a.out.display());
    Ok(())
}

fn load_features(path: &Path) -> Result<(FeatureMatrix, Vec<u8>), Error> {
    let raw = read(path)?;
    Ok((FeatureMatrix::ingest_csv(path)?, raw))
}

fn cmd_train(a: TrainArgs) -> Result<(), Error> {
    let (fm, raw) = load_features(&a.input)?;
    let mask = FeatureMask::parse(&a.mask)?;
    let mut cfg = TrainConfig::new(a.depth, mask);
    cfg.oversample = a.oversample;
    cfg.seed = a.seed;
    let model = fit(&fm, &cfg)?;
    let (_, metrics) = evaluate(&model, &fm, &a.target)?;
    let text = model.serialize();

    let mut m = RunManifest::new("train", Some(a.seed));
    m.param("depth", a.depth)
        .param("mask", mask.render())
        .param("target", &a.target)
        .param("oversample", a.oversample)
        .param("eval", "resub");
    m.input(&a.input, &raw);
    m.output(&a.out, text.as_bytes());
    finish(&m, &a.out, text.as_bytes())?;
    println!(
        "model depth {} ({} nodes) over {} written to {}",
        model.depth(),
        model.root.node_count(),
        mask.render(),
        a.out.display()
    );
    print!("{}", metrics.render(&model.behaviours));
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<(), Error> {
    let (fm, raw) = load_features(&a.input)?;
    let mode = match a.eval {
        EvalArg::Resub => EvalMode::Resubstitution,
        EvalArg::Holdout => EvalMode::holdout(a.seed),
    };
    let cfg = TrainConfig::new(a.depth, FeatureMask::FULL);
    let sr = sweep(&fm, &cfg, &a.target, mode, None)?;
    let csv = sr.to_csv();

    let mut m = RunManifest::new("sweep", Some(a.seed));
    m.param("depth", a.depth)
        .param("target", &a.target)
        .param(
            "eval",
            match a.eval {
                EvalArg::Resub => "resub",
                EvalArg::Holdout => "holdout 0.7",
            },
        )
        .param("top", a.top);
    m.input(&a.input, &raw);
    m.output(&a.out, csv.as_bytes());
    finish(&m, &a.out, csv.as_bytes())?;
    print!("{}", rank_report(&sr, a.top));
    Ok(())
}

fn default_vectors_path(header: &Path) -> PathBuf {
    header.with_extension("vectors.csv")
}

fn cmd_codegen(a: CodegenArgs) -> Result<(), Error> {
    let raw = read(&a.model)?;
    let text = String::from_utf8(raw.clone()).map_err(|_| Error::Format {
        location: a.model.display().to_string(),
        message: "not UTF-8".into(),
    })?;
    let model = TreeModel::deserialize(&text)?;
    let opts = CodegenOptions {
        symbol: a.symbol.clone(),
        value_type: a.values,
    };
    let header = emit_header(&model, &opts)?;
    let vectors = emit_eval_vectors(&model, a.n_vectors, a.seed, a.values)?.to_csv();
    let vectors_path = a
        .vectors
        .clone()
        .unwrap_or_else(|| default_vectors_path(&a.out));
    if vectors_path == a.out {
        return Err(Error::Config("header and vectors paths coincide".into()));
    }

    let mut m = RunManifest::new("codegen", Some(a.seed));
    m.param("symbol", &a.symbol)
        .param("values", a.values)
        .param("n_vectors", a.n_vectors)
        .param("fingerprint", format!("sha256:{}", header.fingerprint));
    if let ValueType::Int16 { scale } = a.values {
        m.param("int16_scale", scale);
    }
    m.input(&a.model, &raw);
    m.output(&a.out, header.source.as_bytes());
    m.output(&vectors_path, vectors.as_bytes());
    write_atomic(&vectors_path, vectors.as_bytes())?;
    finish(&m, &a.out, header.source.as_bytes())?;
    println!(
        "{} written to {} ({} comparisons worst case); vectors in {}",
        header.symbol,
        a.out.display(),
        header.worst_case_comparisons,
        vectors_path.display()
    );
    Ok(())
}

fn cmd_energy(a: EnergyArgs) -> Result<(), Error> {
    let (dp, profile_input) = if a.profile.eq_ignore_ascii_case("wildfi") {
        (DeviceProfile::wildfi(), None)
    } else {
        let path = PathBuf::from(&a.profile);
        let raw = read(&path)?;
        let text = String::from_utf8(raw.clone()).map_err(|_| Error::Format {
            location: a.profile.clone(),
            message: "not UTF-8".into(),
        })?;
        (DeviceProfile::from_kv(&text)?, Some((path, raw)))
    };
    let mut plan = TransmissionPlan::new(a.strategy, a.p, a.n, a.full_bytes);
    plan.selected_bytes_per_point = a.selected_bytes.unwrap_or(a.full_bytes);
    plan.signal_bytes = a.signal_bytes;
    let r = report(&plan, &dp)?;
    print!("{}", r.render());
    if let (Some(base), Some(o)) = (a.base_days, a.overhead) {
        let days = runtime_extension(base, o, r.fraction_of_regular)?;
        println!(
            "runtime      {base} -> {days:.1} days (transmission overhead {:.2} % -> {:.2} %)",
            100.0 * o,
            100.0 * residual_overhead(o, r.fraction_of_regular)
        );
    }
    if let Some(out) = &a.out {
        let csv = r.to_csv();
        let mut m = RunManifest::new("energy", None);
        m.param("profile", &a.profile)
            .param("strategy", a.strategy)
            .param("p", a.p)
            .param("n", a.n)
            .param("full_bytes", a.full_bytes)
            .param("selected_bytes", plan.selected_bytes_per_point)
            .param("signal_bytes", a.signal_bytes);
        if let (Some(base), Some(o)) = (a.base_days, a.overhead) {
            m.param("base_days", base).param("overhead", o);
        }
        if let Some((path, raw)) = &profile_input {
            m.input(path, raw);
        }
        m.output(out, csv.as_bytes());
        finish(&m, out, csv.as_bytes())?;
    }
    Ok(())
}
