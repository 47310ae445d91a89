//! `tentropy`: generate turnstile streams, compute exact and sketched
//! entropies, run seeded trials, and build or merge serialized sketches.
//!
//! Exit status: 0 on success, 2 on a parameter or input error, 3 when a
//! residual query finds no heavy element, 1 on I/O failure.

use std::fs;
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use turnstile_entropy::config::EstimatorConfig;
use turnstile_entropy::error::Error;
use turnstile_entropy::estimators::{estimate, EntropyRequest};
use turnstile_entropy::harness::{exact_value, generate, run_trials, Family, StreamSpec};
use turnstile_entropy::oracle::FrequencyVector;
use turnstile_entropy::stable::StableSketch;
use turnstile_entropy::stream::{
    EstimateReport, Guarantee, LogBase, Quantity, StreamFile, StreamModel, UpdateEvent,
};

#[derive(Parser)]
#[command(name = "tentropy", version, about = "Entropy and moment sketches for turnstile streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic stream file.
    Generate {
        #[command(flatten)]
        family: FamilyArgs,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact value of a quantity over a stream file.
    Exact {
        input: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
    },
    /// One sketched estimate over a stream file.
    Estimate {
        input: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        sketch: SketchArgs,
        /// Overrides the model in the file header.
        #[arg(long)]
        model: Option<ModelArg>,
    },
    /// Seeded Monte-Carlo trials of an estimator against the exact value.
    Trials {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        sketch: SketchArgs,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Sketch a stream file with an alpha-stable moment sketch.
    Sketch {
        input: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sum serialized sketches and print the moment estimate of the result.
    Merge {
        #[arg(required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Strict,
    General,
}

impl From<ModelArg> for StreamModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Strict => StreamModel::StrictTurnstile,
            ModelArg::General => StreamModel::GeneralUpdate,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Uniform,
    Point,
    Zipf,
    Heavy,
    Churn,
}

#[derive(Args)]
struct FamilyArgs {
    #[arg(long, value_enum, default_value = "uniform")]
    family: FamilyArg,
    /// Universe size.
    #[arg(long, default_value_t = 256)]
    n: u64,
    /// Total count of the net vector.
    #[arg(long, default_value_t = 10_000)]
    m: u64,
    #[arg(long, value_enum, default_value = "strict")]
    model: ModelArg,
    /// Zipf exponent.
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    /// Share of the heavy item.
    #[arg(long, default_value_t = 0.9)]
    w_max: f64,
    /// Net counts for `churn`, comma separated.
    #[arg(long, value_delimiter = ',')]
    counts: Vec<i64>,
    /// Extra insert/delete pairs for `churn`, as a fraction of the total.
    #[arg(long, default_value_t = 0.5)]
    churn: f64,
    /// Stream generation seed.
    #[arg(long, default_value_t = 1)]
    stream_seed: u64,
}

impl FamilyArgs {
    fn spec(&self) -> StreamSpec {
        let family = match self.family {
            FamilyArg::Uniform => Family::Uniform(self.n),
            FamilyArg::Point => Family::PointMass,
            FamilyArg::Zipf => Family::Zipf { s: self.s, n: self.n },
            FamilyArg::Heavy => Family::HeavyPlusUniform {
                w_max: self.w_max,
                n: self.n,
            },
            FamilyArg::Churn => Family::DeletionChurn {
                base: self.counts.clone(),
                churn_fraction: self.churn,
            },
        };
        StreamSpec::new(family, self.m, self.model.into(), self.stream_seed)
    }
}

#[derive(Args)]
struct QueryArgs {
    /// shannon, renyi, tsallis, moment or residual_moment.
    #[arg(long, default_value = "shannon")]
    quantity: String,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    /// Entropy output base: e or 2.
    #[arg(long, default_value = "e")]
    base: String,
}

impl QueryArgs {
    fn quantity(&self) -> Result<Quantity, Error> {
        Quantity::from_name(&self.quantity, self.alpha)
    }

    fn base(&self) -> Result<LogBase, Error> {
        self.base.parse()
    }
}

#[derive(Args)]
struct SketchArgs {
    /// additive or multiplicative.
    #[arg(long, default_value = "additive")]
    guarantee: String,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Failure probability; below 0.25 runs a median of independent instances.
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Cap on the groups of any single stable sketch.
    #[arg(long)]
    max_groups: Option<usize>,
}

impl SketchArgs {
    fn config(&self) -> Result<EstimatorConfig, Error> {
        let mut config = EstimatorConfig {
            delta: self.delta,
            ..EstimatorConfig::default()
        };
        if let Some(g) = self.max_groups {
            config.max_groups = g;
        }
        config.validate()?;
        Ok(config)
    }

    fn request(&self, quantity: Quantity, model: StreamModel) -> Result<EntropyRequest, Error> {
        let guarantee = Guarantee::from_name(&self.guarantee, self.epsilon)?;
        EntropyRequest::new(quantity, guarantee, model, self.seed)
    }
}

fn read_stream(path: &Path) -> anyhow::Result<StreamFile> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(StreamFile::read(BufReader::new(file))?)
}

/// One update per index with its net count.
fn net_events(fv: &FrequencyVector) -> Vec<UpdateEvent> {
    turnstile_entropy::harness::compact(fv)
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(bytes).context("writing stdout"),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate { family, out } => {
            let spec = family.spec();
            let file = StreamFile {
                universe_size: spec.universe(),
                model: spec.model,
                events: generate(&spec)?,
            };
            let mut buf = Vec::new();
            file.write(&mut buf)?;
            write_output(out.as_deref(), &buf)?;
        }
        Command::Exact { input, query } => {
            let file = read_stream(&input)?;
            let fv = FrequencyVector::from_events(file.universe_size, &file.events)?;
            let quantity = query.quantity()?;
            let report = EstimateReport::exact(exact_value(&fv, quantity)?, quantity);
            println!("{}", report.to_record(query.base()?));
        }
        Command::Estimate {
            input,
            query,
            sketch,
            model,
        } => {
            let file = read_stream(&input)?;
            let model = model.map_or(file.model, StreamModel::from);
            let request = sketch.request(query.quantity()?, model)?;
            let base = query.base()?;
            let report = estimate(&file.events, file.universe_size, &request, &sketch.config()?)?;
            println!("{}", report.to_record(base));
        }
        Command::Trials {
            family,
            query,
            sketch,
            trials,
        } => {
            let spec = family.spec();
            let request = sketch.request(query.quantity()?, spec.model)?;
            let s = run_trials(&spec, &request, trials, &sketch.config()?)?;
            println!(
                "trials={} within_tolerance={} empirical_rate={} mean_abs_error={} mean_rel_error={}",
                s.trials, s.within_tolerance, s.empirical_rate, s.mean_abs_error, s.mean_rel_error
            );
        }
        Command::Sketch {
            input,
            alpha,
            epsilon,
            delta,
            seed,
            out,
        } => {
            let file = read_stream(&input)?;
            let mut sketch = StableSketch::for_precision(alpha, epsilon, delta, seed)?;
            // Validates the stream before it reaches the sketch.
            let fv = FrequencyVector::from_events(file.universe_size, &file.events)?;
            for e in net_events(&fv) {
                sketch.update(e);
            }
            write_output(Some(&out), &sketch.to_bytes())?;
        }
        Command::Merge { inputs, out } => {
            let mut merged: Option<StableSketch> = None;
            for path in &inputs {
                let mut bytes = Vec::new();
                fs::File::open(path)
                    .and_then(|mut f| f.read_to_end(&mut bytes))
                    .with_context(|| format!("reading {}", path.display()))?;
                let s = StableSketch::from_bytes(&bytes)?;
                match merged.as_mut() {
                    None => merged = Some(s),
                    Some(m) => m.merge(&s)?,
                }
            }
            let merged = merged.expect("clap requires one input");
            if let Some(out) = out {
                write_output(Some(&out), &merged.to_bytes())?;
            }
            let report = EstimateReport {
                value: merged.estimate(),
                quantity: Quantity::Moment(merged.alpha()),
                guarantee: Guarantee::Multiplicative(merged.layout().sized_epsilon(EstimatorConfig::default().c_var)),
                success_prob: 1.0 - (-(merged.layout().blocks as f64) / 8.0).exp(),
                seed: merged.seed(),
                space_words_used: merged.space_words(),
                degenerate: false,
                budget_capped: false,
                weak_certification: false,
            };
            println!("{}", report.to_record(LogBase::Nats));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("tentropy: {err:#}");
            match err.downcast_ref::<Error>() {
                Some(Error::NoHeavyHitter) => ExitCode::from(3),
                Some(_) => ExitCode::from(2),
                None => ExitCode::from(1),
            }
        }
    }
}
