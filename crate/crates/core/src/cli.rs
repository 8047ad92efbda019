//! Command-line front end. [`dispatch`] parses arguments, runs one
//! subcommand and maps the outcome to an exit code.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{
    evaluate, fit_model, load_model, prepare, render_bar_svg, render_table, run_benchmark, AnyModel, BenchConfig,
    BenchmarkReport, ForecastTask, Forecaster, ModelKind, ModelSpec, ReportRow, TableFormat,
};
use crate::dataio::{
    export_csv, import_csv, load, peek, save, save_checkpoint, CsvImportOptions, DatasetContainer, Split,
    StandardScaler,
};
use crate::dynsys::{generate, GeneratorSpec, System};
use crate::error::{Error, Result};
use crate::linode::GradMemory;
use crate::matexp::GeneratorClass;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ltsf", version, about = "Long-term time-series forecasting toolkit")]
struct Cli {
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, env = "LTSF_WORKERS", default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Generate(GenerateArgs),
    /// Window a CSV series into a dataset.
    Import(ImportArgs),
    /// Print shapes, metadata and per-dimension statistics of a dataset.
    Inspect(InspectArgs),
    /// Fit a model and report test metrics.
    Train(TrainArgs),
    /// Score a saved model on a dataset's test part.
    Evaluate(EvaluateArgs),
    /// Run a benchmark config and render the table.
    Benchmark(BenchmarkArgs),
    /// Convert a dataset to long-format CSV.
    ExportCsv(ExportArgs),
    /// Draw a bar chart from a benchmark CSV.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    system: System,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    traj_len: Option<usize>,
    /// Disable the Lotka-Volterra growth-rate jitter.
    #[arg(long)]
    no_noise: bool,
    /// Constant override `key=value`; repeatable.
    #[arg(long = "set", value_parser = parse_override)]
    overrides: Vec<(String, f64)>,
    #[arg(long)]
    name: Option<String>,
}

fn parse_override(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let v = v.parse().map_err(|_| format!("bad number in {s:?}"))?;
    Ok((k.to_string(), v))
}

#[derive(Debug, Args)]
struct ImportArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    traj_len: usize,
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Training fraction of rows.
    #[arg(long, default_value_t = 0.8, conflicts_with = "split_time")]
    split: f64,
    /// Split at the first row whose time column is at least this value.
    #[arg(long, requires = "time_column")]
    split_time: Option<String>,
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
    #[arg(long)]
    time_column: Option<String>,
    #[arg(long)]
    subsample: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct InspectArgs {
    path: PathBuf,
    /// Only read the header; skip statistics.
    #[arg(long)]
    header_only: bool,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, value_enum)]
    model: ModelKind,
    #[arg(long)]
    label: Option<String>,
    #[arg(long, default_value_t = 1e-6)]
    lambda: f64,
    #[arg(long)]
    fit_stride: Option<usize>,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value_t = 1)]
    eval_every: usize,
    #[arg(long)]
    curriculum: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long, value_enum, default_value_t = GeneratorClass::SkewPlusDiag)]
    generator: GeneratorClass,
    #[arg(long, value_delimiter = ',')]
    encoder_hidden: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    decoder_hidden: Option<Vec<usize>>,
    #[arg(long)]
    delay: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    step_unit: f64,
    #[arg(long, value_enum, default_value_t = GradMemory::StoreStates)]
    memory: GradMemory,
}

impl ModelArgs {
    fn spec(&self) -> ModelSpec {
        ModelSpec {
            kind: self.model,
            label: self.label.clone(),
            lambda: self.lambda,
            fit_stride: self.fit_stride,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            eval_every: self.eval_every,
            curriculum: self.curriculum.clone(),
            seed: self.seed,
            latent_dim: self.latent_dim,
            generator: self.generator,
            encoder_hidden: self.encoder_hidden.clone(),
            decoder_hidden: self.decoder_hidden.clone(),
            delay: self.delay,
            step_unit: self.step_unit,
            memory: self.memory,
        }
    }
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    lookback: usize,
    #[arg(long)]
    truncate_train: Option<usize>,
    #[arg(long)]
    truncate_test: Option<usize>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Write the fitted model here.
    #[arg(long)]
    save: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    checkpoint: PathBuf,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value_t = TableFormat::Markdown)]
    format: TableFormat,
    /// Write the table here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a CSV table.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Also write a bar chart over all datasets.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Benchmark CSV as written by `benchmark --format csv`.
    #[arg(long)]
    report: PathBuf,
    /// Dataset group `label=ds1,ds2`; repeatable. Default: one group of all.
    #[arg(long = "group", value_parser = parse_group)]
    groups: Vec<(String, Vec<String>)>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_group(s: &str) -> std::result::Result<(String, Vec<String>), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected label=ds1,ds2, got {s:?}"))?;
    Ok((k.to_string(), v.split(',').map(str::to_string).collect()))
}

/// Exit code for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Numerical(_) => EXIT_NUMERICAL,
        Error::Io { .. } | Error::Format(_) | Error::Csv { .. } => EXIT_DATA,
        Error::Domain(_) | Error::Shape(_) | Error::Config(_) => EXIT_USAGE,
    }
}

/// Runs the command line `argv` (including the program name); messages go
/// to standard error and results to standard output.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let mut out = std::io::stdout().lock();
    match run(cli, &mut out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn run(cli: Cli, out: &mut dyn std::io::Write) -> Result<()> {
    if cli.workers > 0 {
        // Fails only if the pool already exists, which keeps the earlier setting.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global();
    }
    let io = |e: std::io::Error| Error::io("<stdout>", e);
    match cli.command {
        Command::Generate(a) => {
            let mut spec = GeneratorSpec::new(a.system).with_seed(a.seed);
            spec.n_train = a.n_train.unwrap_or(spec.n_train);
            spec.n_test = a.n_test.unwrap_or(spec.n_test);
            spec.traj_len = a.traj_len.unwrap_or(spec.traj_len);
            spec.noise_enabled = !a.no_noise;
            spec.overrides = a.overrides.into_iter().collect();
            let (set, report) = generate(&spec, cli.workers)?;
            let (train, test) = set.split_at(spec.n_train);
            let mut meta = std::collections::BTreeMap::new();
            meta.insert("system".to_string(), a.system.name().to_string());
            meta.insert("seed".to_string(), a.seed.to_string());
            meta.insert("noise".to_string(), spec.noise_enabled.to_string());
            for (k, v) in &spec.overrides {
                meta.insert(format!("override.{k}"), format!("{v:?}"));
            }
            if report.regenerated > 0 {
                meta.insert("regenerated".to_string(), report.regenerated.to_string());
            }
            let name = a.name.unwrap_or_else(|| a.system.name().to_string());
            let c = DatasetContainer::new(name, train, test, meta)?;
            save(&c, &a.out)?;
            writeln!(out, "wrote {} train {:?} test {:?}", a.out.display(), c.train.shape(), c.test.shape()).map_err(io)?;
        }
        Command::Import(a) => {
            let mut opts = CsvImportOptions::new(
                a.name.unwrap_or_else(|| a.csv.file_stem().map_or("csv".into(), |s| s.to_string_lossy().into_owned())),
                a.traj_len,
            );
            opts.stride = a.stride;
            opts.split = match a.split_time {
                Some(t) => Split::Timestamp(t),
                None => Split::Fraction(a.split),
            };
            opts.columns = a.columns;
            opts.time_column = a.time_column;
            opts.subsample = a.subsample;
            opts.seed = a.seed;
            let c = import_csv(&a.csv, &opts)?;
            save(&c, &a.out)?;
            writeln!(out, "wrote {} train {:?} test {:?}", a.out.display(), c.train.shape(), c.test.shape()).map_err(io)?;
        }
        Command::Inspect(a) => {
            let h = peek(&a.path)?;
            let fmt = |d: [u64; 3]| format!("({}, {}, {})", d[0], d[1], d[2]);
            writeln!(out, "name: {}", h.name).map_err(io)?;
            writeln!(out, "train: {}", fmt(h.train_dims)).map_err(io)?;
            writeln!(out, "test: {}", fmt(h.test_dims)).map_err(io)?;
            writeln!(out, "timestamps: {}", if h.has_timestamps { "yes" } else { "no" }).map_err(io)?;
            for (k, v) in &h.metadata {
                writeln!(out, "{k}: {v}").map_err(io)?;
            }
            if !a.header_only {
                let c = load(&a.path)?;
                let s = StandardScaler::fit(&c.train)?;
                for k in 0..c.dim() {
                    let vals = c.train.data().iter().skip(k).step_by(c.dim());
                    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
                    writeln!(out, "dim {k}: mean {:.6} std {:.6} min {lo:.6} max {hi:.6}", s.mean[k], s.std[k]).map_err(io)?;
                }
            }
        }
        Command::Train(a) => {
            let c = load(&a.data.data)?;
            let data = prepare(&c, a.data.truncate_train, a.data.truncate_test)?;
            let task = ForecastTask::new(c.name.clone(), a.data.lookback, data.train.traj_len())?;
            let spec = a.model.spec();
            let fit = fit_model(&spec, &data, &task)?;
            if fit.diverged {
                eprintln!("warning: training diverged; reporting the best finite checkpoint");
            }
            if let Some(path) = &a.save {
                let mut ckpt = fit.model.to_checkpoint();
                ckpt.metadata.insert("dataset".into(), c.name.clone());
                save_checkpoint(path, &ckpt)?;
            }
            writeln!(out, "model: {}", spec.label()).map_err(io)?;
            writeln!(out, "params: {}", fit.model.param_count()).map_err(io)?;
            writeln!(out, "lookback: {} horizon: {}", task.lookback, task.horizon).map_err(io)?;
            writeln!(out, "test MSE: {:.6e}", fit.metrics.mse).map_err(io)?;
            writeln!(out, "test MAE: {:.6e}", fit.metrics.mae).map_err(io)?;
            writeln!(out, "test MSE x100: {:.4}", fit.metrics.mse * 100.0).map_err(io)?;
            writeln!(out, "seconds: {:.2}", fit.seconds).map_err(io)?;
        }
        Command::Evaluate(a) => {
            let c = load(&a.data.data)?;
            let data = prepare(&c, a.data.truncate_train, a.data.truncate_test)?;
            let model: AnyModel = load_model(&a.checkpoint)?;
            let task = ForecastTask::new(c.name.clone(), a.data.lookback, data.test.traj_len())?;
            let m = evaluate(&model, &data.test, &task)?;
            writeln!(out, "test MSE: {:.6e}", m.mse).map_err(io)?;
            writeln!(out, "test MAE: {:.6e}", m.mae).map_err(io)?;
            writeln!(out, "test MSE x100: {:.4}", m.mse * 100.0).map_err(io)?;
        }
        Command::Benchmark(a) => {
            let cfg = BenchConfig::from_file(&a.config)?;
            let base = a.config.parent().unwrap_or(Path::new("."));
            let report = run_benchmark(&cfg, base)?;
            let table = render_table(&report, a.format);
            match &a.out {
                Some(p) => write_text(p, &table)?,
                None => write!(out, "{table}").map_err(io)?,
            }
            if let Some(p) = &a.csv {
                write_text(p, &render_table(&report, TableFormat::Csv))?;
            }
            if let Some(p) = &a.svg {
                write_text(p, &render_bar_svg(&report, &[]))?;
            }
            for r in &report.rows {
                eprintln!("{} L={} {}: {:.1}s", r.dataset, r.lookback, r.model, r.wall_time);
            }
        }
        Command::ExportCsv(a) => {
            let c = load(&a.data)?;
            export_csv(&c, &a.out)?;
            writeln!(out, "wrote {}", a.out.display()).map_err(io)?;
        }
        Command::Plot(a) => {
            let report = read_report_csv(&a.report)?;
            write_text(&a.out, &render_bar_svg(&report, &a.groups))?;
            writeln!(out, "wrote {}", a.out.display()).map_err(io)?;
        }
    }
    Ok(())
}

/// Reads a CSV table back; metrics come in display units.
fn read_report_csv(path: &Path) -> Result<BenchmarkReport> {
    let csv_err = |message: String| Error::Csv {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(e.to_string()))?;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_err(e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let metric = |i: usize| field(i).parse::<f64>().ok();
        rows.push(ReportRow {
            dataset: field(0).to_string(),
            lookback: field(1).parse().map_err(|_| csv_err(format!("bad lookback {:?}", field(1))))?,
            model: field(2).to_string(),
            mse: metric(3),
            mae: metric(4),
            params: field(5).parse().ok(),
            wall_time: 0.0,
            scale100: false,
        });
    }
    Ok(BenchmarkReport { rows })
}
