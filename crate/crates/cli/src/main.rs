use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qmag_core::model::ParamsPatch;
use qmag_core::sweeps::{self, GridRange, SweepKind, SweepSpec};
use qmag_core::Error;
use serde::Deserialize;

const EXIT_VALIDATION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

/// Sensitivity sweeps for the driven two-qubit magnetometer.
#[derive(Parser)]
#[command(name = "qmag", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// QFI and sqrt(N) delta B versus time
    QfiCurve(SweepArgs),
    /// sqrt(N) delta B versus time
    SensitivityCurve(SweepArgs),
    /// sqrt(N) delta B over (t, C)
    HeatmapTc(SweepArgs),
    /// sqrt(N) delta B over (t, J)
    HeatmapTj(SweepArgs),
    /// ideal versus noisy sensitivity curves
    DecoherenceCompare(SweepArgs),
    /// signal, minimum detectable field and QFI bound versus time
    SnrCurve(SweepArgs),
    /// run the invariant suite over seeded random draws
    Validate(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct SweepArgs {
    /// named regime (defaults to the subcommand's own preset)
    #[arg(long)]
    preset: Option<String>,
    /// JSON file with a "params" object and SweepSpec fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// output file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// shot count N for absolute (not sqrt(N)-scaled) outputs
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    t_lo: Option<f64>,
    #[arg(long)]
    t_hi: Option<f64>,
    #[arg(long)]
    t_points: Option<usize>,
    #[arg(long)]
    axis2_lo: Option<f64>,
    #[arg(long)]
    axis2_hi: Option<f64>,
    #[arg(long)]
    axis2_points: Option<usize>,
    /// drive phase; repeat for several curves
    #[arg(long, allow_negative_numbers = true)]
    alpha: Vec<f64>,
    /// random draws per validation check
    #[arg(long)]
    draws: Option<usize>,
    /// validate the alternative closed forms instead of the self-consistent ones
    #[arg(long)]
    verbatim_forms: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    preset: Option<String>,
    params: Option<ParamsPatch>,
    t_range: Option<GridRange>,
    secondary_range: Option<GridRange>,
    n_shots: Option<u64>,
    seed: Option<u64>,
    output_path: Option<PathBuf>,
    alphas: Option<Vec<f64>>,
    compare_c: Option<[f64; 2]>,
    draws: Option<usize>,
    verbatim_forms: Option<bool>,
}

enum Failure {
    Usage(String),
    Io(String),
    Validation(Vec<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } => Failure::Io(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn load_config(path: &Path) -> Result<ConfigFile, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn override_range(range: &mut GridRange, lo: Option<f64>, hi: Option<f64>, points: Option<usize>) {
    if let Some(lo) = lo {
        range.lo = lo;
    }
    if let Some(hi) = hi {
        range.hi = hi;
    }
    if let Some(points) = points {
        range.points = points;
    }
}

fn build_spec(kind: SweepKind, args: &SweepArgs) -> Result<SweepSpec, Failure> {
    let config = match &args.config {
        Some(path) => load_config(path)?,
        None => ConfigFile::default(),
    };
    let preset = args
        .preset
        .clone()
        .or(config.preset.clone())
        .unwrap_or_else(|| kind.default_preset().to_owned());
    let mut spec = SweepSpec::preset(&preset)?;
    if spec.kind != kind {
        return Err(Failure::Usage(format!(
            "preset \"{preset}\" belongs to {:?}, not this subcommand",
            spec.kind
        )));
    }

    if let Some(patch) = &config.params {
        spec.params = spec.params.patched(patch)?;
        if patch.alpha.is_some() && config.alphas.is_none() {
            spec.alphas = vec![spec.params.alpha];
        }
    }
    if let Some(r) = config.t_range {
        spec.t_range = r;
    }
    if let Some(r) = config.secondary_range {
        spec.secondary_range = Some(r);
    }
    if let Some(n) = config.n_shots {
        spec.n_shots = n;
    }
    if let Some(s) = config.seed {
        spec.seed = s;
    }
    if let Some(p) = config.output_path {
        spec.output_path = Some(p);
    }
    if let Some(a) = config.alphas {
        spec.alphas = a;
    }
    if let Some(c) = config.compare_c {
        spec.compare_c = c;
    }
    if let Some(d) = config.draws {
        spec.draws = d;
    }
    if let Some(v) = config.verbatim_forms {
        spec.verbatim_forms = v;
    }

    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(n) = args.shots {
        spec.n_shots = n;
    }
    override_range(&mut spec.t_range, args.t_lo, args.t_hi, args.t_points);
    if args.axis2_lo.is_some() || args.axis2_hi.is_some() || args.axis2_points.is_some() {
        let range = spec.secondary_range.get_or_insert(GridRange::new(0.0, 1.0, 201));
        override_range(range, args.axis2_lo, args.axis2_hi, args.axis2_points);
    }
    if !args.alpha.is_empty() {
        spec.alphas = args.alpha.clone();
        spec.params.alpha = args.alpha[0];
    }
    if let Some(d) = args.draws {
        spec.draws = d;
    }
    if args.verbatim_forms {
        spec.verbatim_forms = true;
    }
    if let Some(out) = &args.out {
        spec.output_path = Some(out.clone());
    }
    spec.validate()?;
    Ok(spec)
}

fn execute(kind: SweepKind, args: &SweepArgs) -> Result<(), Failure> {
    let spec = build_spec(kind, args)?;
    let result = sweeps::run(&spec)?;
    let text = match args.format {
        Format::Csv => result.to_csv(),
        Format::Json => result.to_json()?,
    };
    match &spec.output_path {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    if result.failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Validation(result.failures))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::QfiCurve(a) => (SweepKind::QfiCurve, a),
        Command::SensitivityCurve(a) => (SweepKind::SensitivityCurve, a),
        Command::HeatmapTc(a) => (SweepKind::HeatmapTc, a),
        Command::HeatmapTj(a) => (SweepKind::HeatmapTj, a),
        Command::DecoherenceCompare(a) => (SweepKind::DecoherenceCompare, a),
        Command::SnrCurve(a) => (SweepKind::SnrCurve, a),
        Command::Validate(a) => (SweepKind::Validate, a),
    };
    match execute(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(names)) => {
            eprintln!("qmag: validation failed: {}", names.join(", "));
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("qmag: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("qmag: {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}
