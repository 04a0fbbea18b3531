use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use regaug_core::pipeline::{
    cmd_augment, cmd_prep, cmd_report, cmd_run, dataset_csv, dataset_schema_toml, AugmentRequest, ExperimentConfig,
    RunOptions,
};
use regaug_core::synth::{generate, Generator};
use regaug_core::{AugmentConfig, Discretization, Error, LabelEncoding};

/// Exit status for bad configuration, schemas or arguments.
const EXIT_CONFIG: u8 = 2;
/// Exit status for failures while computing.
const EXIT_RUNTIME: u8 = 1;

#[derive(Parser)]
#[command(name = "regaug", version, about = "Regression with threshold-classifier features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split every dataset into folds and write preprocessed train/test files.
    Prep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compute every (dataset, regressor, arm, S, fold) cell and write cells.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Reuse cells already in the store.
        #[arg(long)]
        resume: bool,
    },
    /// Write the summary, win/tie/loss table, CD diagrams and S curves.
    Report {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fit (or load) an augmenter and write the augmented table.
    Augment {
        /// Training CSV; required unless --model is given.
        #[arg(long, required_unless_present = "model")]
        train: Option<PathBuf>,
        #[arg(long)]
        schema: PathBuf,
        /// Number of thresholds.
        #[arg(long = "s")]
        s: usize,
        #[arg(long)]
        out: PathBuf,
        /// Rows to transform; defaults to the training CSV.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Saved model to load instead of fitting.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        save_model: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trees: usize,
        #[arg(long, value_enum, default_value_t = DiscretizationArg::EqualFrequency)]
        discretization: DiscretizationArg,
        #[arg(long, value_enum, default_value_t = EncodingArg::Binary)]
        encoding: EncodingArg,
    },
    /// Write a synthetic dataset and its schema.
    Synth {
        #[arg(long, value_enum)]
        generator: GeneratorArg,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        schema_out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DiscretizationArg {
    EqualFrequency,
    EqualWidth,
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodingArg {
    Binary,
    Multiclass,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorArg {
    Sine,
    Linear,
    Friedman1,
    Lognormal,
    Categorical,
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Prep { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            for m in cmd_prep(&cfg)? {
                println!(
                    "{}: {} rows ({} dropped for missing values), {} folds",
                    m.dataset,
                    m.rows_loaded - m.rows_dropped_missing,
                    m.rows_dropped_missing,
                    m.folds
                );
            }
            println!("prepared folds under {}", cfg.prep_dir().display());
        }
        Command::Run { config, resume } => {
            let cfg = ExperimentConfig::load(&config)?;
            let s = cmd_run(&cfg, RunOptions { resume })?;
            println!(
                "{} cells ({} computed, {} reused) -> {}",
                s.cells,
                s.computed,
                s.reused,
                cfg.cells_csv().display()
            );
        }
        Command::Report { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let a = cmd_report(&cfg)?;
            if let Some(n) = &a.notice {
                println!("{n}");
            }
            println!("summary: {}", a.summary.display());
            println!("win/tie/loss: {}", a.win_tie_loss.display());
            for p in a.cd_diagrams.iter().chain(&a.s_curves) {
                println!("plot: {}", p.display());
            }
        }
        Command::Augment { train, schema, s, out, input, model, save_model, seed, trees, discretization, encoding } => {
            let mut config = AugmentConfig::with_s(s);
            config.forest.n_trees = trees;
            config.discretization = match discretization {
                DiscretizationArg::EqualFrequency => Discretization::EqualFrequency,
                DiscretizationArg::EqualWidth => Discretization::EqualWidth,
            };
            config.encoding = match encoding {
                EncodingArg::Binary => LabelEncoding::BinaryPerThreshold,
                EncodingArg::Multiclass => LabelEncoding::MulticlassInterval,
            };
            let req = AugmentRequest { schema, train, model, input, out: out.clone(), save_model, config, seed };
            let summary = cmd_augment(&req)?;
            if summary.rows_dropped_missing > 0 {
                eprintln!("skipped {} rows with missing values", summary.rows_dropped_missing);
            }
            println!("{} rows x {} columns -> {}", summary.rows_written, summary.columns, out.display());
        }
        Command::Synth { generator, n, d, seed, out, schema_out } => {
            let g = match generator {
                GeneratorArg::Sine => Generator::Sine,
                GeneratorArg::Linear => Generator::Linear,
                GeneratorArg::Friedman1 => Generator::Friedman1,
                GeneratorArg::Lognormal => Generator::LogNormal,
                GeneratorArg::Categorical => Generator::Categorical,
            };
            let ds = generate(g, n, d, seed)?;
            let write = |p: &PathBuf, bytes: &[u8]| std::fs::write(p, bytes).map_err(|e| Error::Io { path: p.clone(), source: e });
            write(&out, &dataset_csv(&ds, "y")?)?;
            write(&schema_out, dataset_schema_toml(&ds, "y").as_bytes())?;
            println!("{n} rows -> {}", out.display());
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
            if e.is_config_error() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::from(EXIT_RUNTIME)
            }
        }
    }
}
