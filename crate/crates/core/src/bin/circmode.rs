use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use circmode::calibration::{build_calibration, CalibrationOptions};
use circmode::pipeline::{self, fixture, PipelineConfig};
use circmode::spatial::build_patches;
use circmode::study::{run_study, StudyConfig};
use circmode::testing::{run_test, Method, TestOptions};
use circmode::{CircularSample, Error, Result};

#[derive(Parser)]
#[command(name = "circmode", version, about = "Multimodality tests for circular data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test H0: k modes against more than k for one sample.
    Test(TestArgs),
    /// Rejection-rate study over the built-in models.
    Study(StudyArgs),
    /// Full gridded run with the spatial FDR.
    Pipeline(PipelineArgs),
    /// Fire patches of a label CSV (row, col, label).
    Patches(PatchArgs),
    /// Write the synthetic pipeline fixture.
    Fixture(FixtureArgs),
    /// Dump the calibration density of a sample as CSV.
    Calibration(CalibrationArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Units {
    Radians,
    Degrees,
    /// Day of year, 1..=366, without jitter.
    Days,
}

#[derive(Args)]
struct SampleArgs {
    /// One angle per line; blank lines and lines starting with '#' are skipped.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "radians")]
    units: Units,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    sample: SampleArgs,
    #[arg(short, long, default_value_t = 1)]
    k: usize,
    #[arg(short = 'B', long = "resamples", default_value_t = 500)]
    b: usize,
    #[arg(long, default_value = "excess-mass")]
    method: Method,
    #[arg(long, env = "CIRCMODE_SEED", default_value_t = 0)]
    seed: u64,
    /// Report (hits + 1)/(B + 1).
    #[arg(long)]
    plus_one: bool,
}

#[derive(Args)]
struct StudyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(short = 'B', long = "resamples")]
    b: Option<usize>,
    #[arg(long, env = "CIRCMODE_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Also write the table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, env = "CIRCMODE_SEED")]
    seed: Option<u64>,
    #[arg(short = 'B', long = "resamples")]
    b: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    alpha_c: Option<f64>,
    #[arg(long)]
    alpha_r: Option<f64>,
}

#[derive(Args)]
struct PatchArgs {
    labels: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FixtureArgs {
    dir: PathBuf,
    #[arg(short = 'B', long = "resamples", default_value_t = 200)]
    b: usize,
    #[arg(long, env = "CIRCMODE_SEED")]
    seed: Option<u64>,
}

#[derive(Args)]
struct CalibrationArgs {
    #[command(flatten)]
    sample: SampleArgs,
    #[arg(short, long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 2048)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_sample(args: &SampleArgs) -> Result<CircularSample> {
    let text = fs::read_to_string(&args.input)?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .split(',')
            .next()
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("line {}: {line:?} is not a number", i + 1)))?;
        values.push(match args.units {
            Units::Radians => v,
            Units::Degrees => v.to_radians(),
            Units::Days => std::f64::consts::TAU * (v - 0.5) / pipeline::DAYS_IN_YEAR,
        });
    }
    CircularSample::new(values)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Test(a) => {
            let x = read_sample(&a.sample)?;
            let opts = TestOptions { plus_one: a.plus_one, ..Default::default() };
            let r = run_test(a.method, &x, a.k, a.b, a.seed, &opts)?;
            println!("{}", serde_json::to_string_pretty(&r)?);
        }
        Command::Study(a) => {
            let mut cfg = match &a.config {
                Some(p) => StudyConfig::from_file(p)?,
                None => StudyConfig::default(),
            };
            cfg.reps = a.reps.unwrap_or(cfg.reps);
            cfg.b = a.b.unwrap_or(cfg.b);
            cfg.seed = a.seed.unwrap_or(cfg.seed);
            cfg.workers = a.workers.or(cfg.workers);
            let table = run_study(&cfg)?;
            print!("{}", table.to_text());
            if let Some(p) = &a.csv {
                table.write_csv(fs::File::create(p)?)?;
            }
        }
        Command::Pipeline(a) => {
            let mut cfg = PipelineConfig::from_file(&a.config)?;
            cfg.seed = a.seed.unwrap_or(cfg.seed);
            cfg.b = a.b.unwrap_or(cfg.b);
            cfg.workers = a.workers.or(cfg.workers);
            cfg.output = a.output.unwrap_or(cfg.output);
            cfg.alpha_c = a.alpha_c.unwrap_or(cfg.alpha_c);
            cfg.alpha_r = a.alpha_r.unwrap_or(cfg.alpha_r);
            let run = pipeline::run_pipeline(&cfg)?;
            let rejected = run.outcome.as_ref().map_or(0, |o| o.rejected_cells.len());
            println!(
                "{} cells kept, {} dropped, {} rejected; outputs in {}",
                run.cells.len(),
                run.report.dropped.len(),
                rejected,
                cfg.output.display()
            );
        }
        Command::Patches(a) => {
            let grid = pipeline::read_labels(&a.labels)?;
            let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
            w.write_record(["patch", "label", "row", "col"])?;
            for p in build_patches(&grid) {
                for (r, c) in &p.cells {
                    w.write_record([p.id.to_string(), p.label.clone(), r.to_string(), c.to_string()])?;
                }
            }
            w.flush()?;
        }
        Command::Fixture(a) => {
            let mut spec = fixture::FixtureSpec::default();
            spec.seed = a.seed.unwrap_or(spec.seed);
            fixture::write_fixture(&a.dir, &spec, a.b)?;
            println!("fixture written to {}", a.dir.display());
        }
        Command::Calibration(a) => {
            let x = read_sample(&a.sample)?;
            let g = build_calibration(&x, a.k, &CalibrationOptions::default())?;
            g.write_csv(output(a.out.as_deref())?, a.points)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
