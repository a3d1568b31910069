use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lrcdf::cli::{self, Fitter, Mode, TrainConfig};
use lrcdf::io::{read_csv, Schema};
use lrcdf::{CpdModel, Dataset, Result};

#[derive(Parser)]
#[command(name = "lrcdf", version, about = "Low-rank CDF models for tabular data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// Headed CSV file.
    #[arg(long)]
    data: PathBuf,
    /// JSON schema assigning column kinds.
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Cdf,
    Copula,
}

#[derive(Clone, Copy, ValueEnum)]
enum FitterArg {
    Admm,
    Sgd,
    Auto,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model, selecting rank and levels on a validation split.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, default_value = "cdf")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "auto")]
        fitter: FitterArg,
        #[arg(long, value_delimiter = ',', default_value = "10,20,30,50,80,100")]
        rank_set: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "10,20,30,50")]
        level_set: Vec<usize>,
        #[arg(long, default_value_t = 0.2)]
        val_frac: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Model JSON output; the training report goes next to it.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 128)]
        batch: usize,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long, default_value_t = 20)]
        patience: usize,
    },
    /// Report mean log-likelihood and marginal fit statistics on a test CSV.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw samples as CSV.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fill blank cells with conditional expectations.
    Impute {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict a discrete column from the others.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        label: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export gridded density and CDF of a pair of variables.
    Plotdata {
        #[arg(long)]
        model: PathBuf,
        /// Two column indices, e.g. `0,1`.
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        resolution: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_data(args: &DataArgs) -> Result<Dataset> {
    let schema = match &args.schema {
        Some(p) => Schema::load(p)?,
        None => Schema::default(),
    };
    read_csv(&args.data, &schema)
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            data,
            mode,
            fitter,
            rank_set,
            level_set,
            val_frac,
            seed,
            out,
            batch,
            lr,
            max_iter,
            patience,
        } => {
            let dataset = load_data(&data)?;
            let cfg = TrainConfig {
                mode: match mode {
                    ModeArg::Cdf => Mode::Cdf,
                    ModeArg::Copula => Mode::Copula,
                },
                fitter: match fitter {
                    FitterArg::Admm => Fitter::Admm,
                    FitterArg::Sgd => Fitter::Sgd,
                    FitterArg::Auto => Fitter::Auto,
                },
                ranks: rank_set,
                levels: level_set,
                val_fraction: val_frac,
                seed,
                batch_size: batch,
                learning_rate: lr,
                max_iter,
                patience,
                ..TrainConfig::default()
            };
            let (model, report) = cli::train(&dataset, &cfg)?;
            model.save(&out)?;
            cli::write_json(out.with_extension("report.json"), &report)?;
            eprintln!(
                "selected rank {} with {} levels ({} candidates)",
                report.best_rank,
                report.best_levels,
                report.candidates.len()
            );
        }
        Command::Eval { model, data, out } => {
            let model = CpdModel::load(model)?;
            let report = cli::evaluate(&model, &load_data(&data)?)?;
            match out {
                Some(p) => cli::write_json(p, &report)?,
                None => println!("{}", serde_json::to_string_pretty(&report)?),
            }
        }
        Command::Sample { model, count, seed, out } => {
            let model = CpdModel::load(model)?;
            let rows = cli::sample_rows(&model, count, seed)?;
            cli::write_samples(create(&out)?, &model, rows)?;
        }
        Command::Impute { model, data, out } => {
            let model = CpdModel::load(model)?;
            let rows = cli::impute_rows(&model, &load_data(&data)?)?;
            cli::write_imputed(create(&out)?, &model, rows)?;
        }
        Command::Classify { model, data, label, out } => {
            let model = CpdModel::load(model)?;
            let rows = cli::classify_rows(&model, &load_data(&data)?, &label)?;
            cli::write_classified(create(&out)?, &label, &rows)?;
        }
        Command::Plotdata { model, dims, resolution, out } => {
            let model = CpdModel::load(model)?;
            let [a, b] = dims[..] else {
                return Err(lrcdf::Error::InvalidArgument("--dims takes exactly two indices".into()));
            };
            let dims = (a, b);
            let cells = cli::plot_data(&model, dims, resolution)?;
            cli::write_plot_data(create(&out)?, &model, dims, &cells)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
