use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use timers::data::load_csv;
use timers::datagen::{Manifest, RobotWorldConfig};
use timers::report::{render_json, render_text};
use timers::{
    run_timers_with, temporalise, AccuracyMode, Error, HeaderMode, InduceConfig, IntervalMethod,
    Preference, RunSpec, TemporalisationSpec, TreeLearner, VerdictReport,
};

/// Environment variable capping the number of worker threads.
const THREADS_ENV: &str = "TIMERS_THREADS";

#[derive(Parser)]
#[command(
    name = "timers",
    version,
    about = "Temporal rule discovery: instantaneous, acausal or p-causal?"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep window geometries over a CSV sequence and report a verdict.
    Analyze(AnalyzeArgs),
    /// Write a synthetic sequence as CSV.
    Generate {
        #[command(subcommand)]
        source: GenerateSource,
    },
    /// Print the flat records produced for one window geometry.
    TemporaliseDump(DumpArgs),
}

#[derive(Args)]
struct Input {
    /// CSV file, one record per row, oldest first.
    #[arg(long)]
    data: PathBuf,
    /// The file has no header row; attributes are named a1, a2, ...
    #[arg(long)]
    no_header: bool,
}

impl Input {
    fn header_mode(&self) -> HeaderMode {
        if self.no_header {
            HeaderMode::Positional
        } else {
            HeaderMode::FirstRowNames
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PreferenceArg {
    HigherAccuracy,
    SimplerMethod,
}

#[derive(Clone, Copy, ValueEnum)]
enum AccuracyArg {
    Predictive,
    Training,
}

#[derive(Clone, Copy, ValueEnum)]
enum IntervalArg {
    Normal,
    Wilson,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("target").required(true).args(["decision", "all_attributes"])))]
struct AnalyzeArgs {
    #[command(flatten)]
    input: Input,
    /// Decision attribute.
    #[arg(long)]
    decision: Option<String>,
    /// Analyse every attribute in turn.
    #[arg(long)]
    all_attributes: bool,
    #[arg(long, default_value_t = 2)]
    min_window: usize,
    #[arg(long, default_value_t = 5)]
    max_window: usize,
    /// Minimum best accuracy required for a verdict.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Confidence level of the accuracy intervals.
    #[arg(long, default_value_t = 0.90)]
    confidence: f64,
    #[arg(long, value_enum, default_value = "higher-accuracy")]
    preference: PreferenceArg,
    /// Number of trailing records held out for testing.
    #[arg(long, default_value_t = 0)]
    test_count: usize,
    #[arg(long, value_enum, default_value = "predictive")]
    accuracy_mode: AccuracyArg,
    #[arg(long, value_enum, default_value = "normal")]
    interval: IntervalArg,
    /// Fit the training data exactly: no pruning and no rule simplification.
    #[arg(long)]
    exact: bool,
    /// Minimum number of records in each branch of a split.
    #[arg(long)]
    min_leaf: Option<usize>,
    /// Print every rule set.
    #[arg(long)]
    rules: bool,
    /// Write the text report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write a JSON report.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenerateSource {
    /// Random walk of a robot on a board; records are (x, y, action).
    Robot {
        #[arg(long, default_value_t = 3000)]
        steps: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        width: u32,
        #[arg(long, default_value_t = 8)]
        height: u32,
        #[command(flatten)]
        out: GenerateOutput,
    },
    /// A counter cycling modulo a period.
    Periodic {
        #[arg(long, default_value_t = 8)]
        period: usize,
        #[arg(long, default_value_t = 400)]
        steps: usize,
        #[command(flatten)]
        out: GenerateOutput,
    },
    /// Independent uniform attributes and class.
    Noise {
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 2)]
        noise_attributes: usize,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        out: GenerateOutput,
    },
    /// Regenerate a file from a saved manifest.
    Manifest {
        /// Manifest written by an earlier `generate --manifest`.
        file: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GenerateOutput {
    /// CSV destination (stdout if omitted).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Save the generator settings as JSON for exact regeneration.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct DumpArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    decision: String,
    #[arg(long)]
    window: usize,
    #[arg(long)]
    position: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Why the program failed, and the exit status that goes with it.
enum Failure {
    Usage(String),
    Data(Error),
    Output(PathBuf, io::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 3,
            Failure::Output(..) => 1,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

fn write_output(path: Option<&Path>, contents: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, contents).map_err(|e| Failure::Output(p.to_owned(), e)),
        None => io::stdout()
            .write_all(contents.as_bytes())
            .map_err(|e| Failure::Output("<stdout>".into(), e)),
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::Usage(format!(
            "{THREADS_ENV} must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot configure {n} worker threads: {e}")))
}

fn analyze(args: AnalyzeArgs) -> Result<(), Failure> {
    let mut template = RunSpec::new(args.decision.clone().unwrap_or_default());
    template.min_window = args.min_window;
    template.max_window = args.max_window;
    template.accuracy_threshold = args.threshold;
    template.confidence = args.confidence;
    template.test_count = args.test_count;
    template.preference = match args.preference {
        PreferenceArg::HigherAccuracy => Preference::HigherAccuracy,
        PreferenceArg::SimplerMethod => Preference::SimplerMethod,
    };
    template.accuracy_mode = match args.accuracy_mode {
        AccuracyArg::Predictive => AccuracyMode::Predictive,
        AccuracyArg::Training => AccuracyMode::Training,
    };
    template.interval_method = match args.interval {
        IntervalArg::Normal => IntervalMethod::Normal,
        IntervalArg::Wilson => IntervalMethod::Wilson,
    };
    template
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;

    let mut config = if args.exact {
        InduceConfig::default()
    } else {
        InduceConfig::pruned()
    };
    if let Some(min_leaf) = args.min_leaf {
        if min_leaf == 0 {
            return Err(Failure::Usage("--min-leaf must be at least 1".into()));
        }
        config.min_leaf = min_leaf;
    }
    let learner = TreeLearner::new(config);

    let seq = load_csv(&args.input.data, args.input.header_mode())?;
    let decisions: Vec<String> = if args.all_attributes {
        seq.schema().names().map(str::to_owned).collect()
    } else {
        vec![template.decision.clone()]
    };

    let mut reports: Vec<VerdictReport> = Vec::new();
    let mut text = String::new();
    for decision in decisions {
        let spec = RunSpec {
            decision: decision.clone(),
            ..template.clone()
        };
        match run_timers_with(&spec, &seq, &learner) {
            Ok(report) => {
                if !text.is_empty() {
                    text.push('\n');
                }
                text.push_str(&render_text(&report, args.rules));
                reports.push(report);
            }
            // a continuous attribute cannot be a decision; skip it in a full scan
            Err(e @ Error::NonDiscreteDecision(_)) if args.all_attributes => {
                eprintln!("timers: skipping `{decision}`: {e}");
            }
            Err(e) => return Err(e.into()),
        }
    }
    write_output(args.output.as_deref(), &text)?;
    if let Some(path) = &args.json {
        write_output(Some(path), &render_json(&reports)?)?;
    }
    Ok(())
}

fn generate(source: GenerateSource) -> Result<(), Failure> {
    let (manifest, out) = match source {
        GenerateSource::Robot {
            steps,
            seed,
            width,
            height,
            out,
        } => (
            Manifest::Robot(RobotWorldConfig {
                width,
                height,
                steps,
                seed,
            }),
            out,
        ),
        GenerateSource::Periodic { period, steps, out } => {
            (Manifest::Periodic { period, steps }, out)
        }
        GenerateSource::Noise {
            classes,
            noise_attributes,
            steps,
            seed,
            out,
        } => (
            Manifest::Noise {
                classes,
                noise_attributes,
                steps,
                seed,
            },
            out,
        ),
        GenerateSource::Manifest { file, output } => {
            let raw = fs::read_to_string(&file).map_err(|source| Error::Io {
                path: file.clone(),
                source,
            })?;
            let manifest: Manifest = serde_json::from_str(&raw).map_err(Error::from)?;
            (
                manifest,
                GenerateOutput {
                    output,
                    manifest: None,
                },
            )
        }
    };
    let seq = manifest
        .generate()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    write_output(out.output.as_deref(), &seq.to_csv_string(true)?)?;
    if let Some(path) = &out.manifest {
        let mut json = serde_json::to_string_pretty(&manifest).map_err(Error::from)?;
        json.push('\n');
        write_output(Some(path), &json)?;
    }
    Ok(())
}

fn dump(args: DumpArgs) -> Result<(), Failure> {
    let spec = TemporalisationSpec::new(args.window, args.position, args.decision)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let seq = load_csv(&args.input.data, args.input.header_mode())?;
    let flat = temporalise(&spec, &seq)?;
    write_output(args.output.as_deref(), &flat.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Analyze(args) => analyze(args),
        Command::Generate { source } => generate(source),
        Command::TemporaliseDump(args) => dump(args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Usage(msg) => eprintln!("timers: {msg}"),
                Failure::Data(e) => eprintln!("timers: {e}"),
                Failure::Output(path, e) => {
                    eprintln!("timers: cannot write `{}`: {e}", path.display())
                }
            }
            ExitCode::from(failure.code())
        }
    }
}
