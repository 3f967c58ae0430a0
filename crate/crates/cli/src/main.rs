use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use loglaplace::ingest::{ingest_csv, write_fixture, IngestError};
use loglaplace::series::SeriesBundle;
use loglaplace::study::{
    run_backtest, run_lorenz_study, run_sim_study, StudyConfig, StudyError, StudyKind,
};

#[derive(Parser)]
#[command(name = "loglaplace", version, about = "Log-Laplace stochastic volatility studies and backtests")]
struct Cli {
    /// Worker threads for replicate pools (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log verbosity: error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn,loglaplace::estimate=error")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Δ-estimation simulation table over AR log-volatility processes.
    SimStudy(StudyArgs),
    /// Lorenz-driven volatility forecasting study.
    LorenzStudy(StudyArgs),
    /// Train/test backtest on price and covariate files or a series CSV.
    Backtest {
        #[command(flatten)]
        study: StudyArgs,
        #[command(flatten)]
        data: DataArgs,
        /// Use a series CSV (t, epsilon[, h_true, covariates…]) instead of
        /// price files.
        #[arg(long, conflicts_with = "price_file")]
        series: Option<PathBuf>,
    },
    /// Reads and aligns the input files, reports row counts and writes the
    /// aligned series.
    IngestCheck {
        #[command(flatten)]
        study: StudyArgs,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Writes the synthetic price and implied-volatility fixture.
    MakeFixture {
        #[arg(long, default_value = "fixtures")]
        out_dir: PathBuf,
        /// Number of returns.
        #[arg(long, default_value_t = 1250)]
        length: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct StudyArgs {
    /// Config file with top-level keys and [sim-study], [lorenz-study] or
    /// [backtest] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    /// Override any config key, e.g. --set split_fractions=[0.3]. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    price_file: Option<PathBuf>,
    /// Named covariate file, NAME=PATH. Repeatable.
    #[arg(long = "covariate", value_name = "NAME=PATH")]
    covariates: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Study(#[from] StudyError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Series(#[from] loglaplace::series::SeriesError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Ingest(_) | CliError::Series(_) | CliError::Study(StudyError::Ingest(_)) => 2,
            CliError::Study(e) if e.is_numerical() => 3,
            _ => 1,
        }
    }
}

impl StudyArgs {
    fn config(&self, kind: StudyKind) -> Result<StudyConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => StudyConfig::load(kind, p)?,
            None => StudyConfig::defaults(kind),
        };
        for o in &self.overrides {
            c.apply_override(o)?;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(r) = self.replicates {
            c.replicates = r;
        }
        c.validate()?;
        Ok(c)
    }
}

impl DataArgs {
    fn apply(&self, c: &mut StudyConfig) -> Result<(), CliError> {
        if let Some(p) = &self.price_file {
            c.data.price_file = Some(p.clone());
        }
        for kv in &self.covariates {
            let (name, path) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("expected NAME=PATH, got '{kv}'")))?;
            c.data.covariates.insert(name.trim().to_string(), PathBuf::from(path.trim()));
        }
        Ok(())
    }
}

fn prepare_out(dir: &Path, config: &StudyConfig) -> Result<(), CliError> {
    let io = |source| StudyError::Io {
        path: dir.to_path_buf(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join("effective_config.toml"), config.to_toml()).map_err(io)?;
    Ok(())
}

fn print_file(path: &Path) {
    if let Ok(text) = std::fs::read_to_string(path) {
        print!("{text}");
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::SimStudy(args) => {
            let c = args.config(StudyKind::SimStudy)?;
            prepare_out(&args.out_dir, &c)?;
            run_sim_study(&c)?.write(&args.out_dir)?;
            print_file(&args.out_dir.join("sim_table.txt"));
        }
        Command::LorenzStudy(args) => {
            let c = args.config(StudyKind::LorenzStudy)?;
            prepare_out(&args.out_dir, &c)?;
            run_lorenz_study(&c)?.write(&args.out_dir)?;
            print_file(&args.out_dir.join("lorenz_summary.txt"));
        }
        Command::Backtest { study, data, series } => {
            let mut c = study.config(StudyKind::Backtest)?;
            data.apply(&mut c)?;
            let bundle = match series {
                Some(p) => SeriesBundle::load_csv(&p)?,
                None => {
                    let report = ingest_csv(&c.data.ingest_spec()?)?;
                    for (name, n) in &report.dropped {
                        if *n > 0 {
                            log::info!("{name}: {n} rows dropped by the join");
                        }
                    }
                    report.bundle
                }
            };
            prepare_out(&study.out_dir, &c)?;
            run_backtest(&c, &bundle)?.write(&study.out_dir)?;
            print_file(&study.out_dir.join("backtest_summary.txt"));
        }
        Command::IngestCheck { study, data } => {
            let mut c = study.config(StudyKind::Backtest)?;
            data.apply(&mut c)?;
            let report = ingest_csv(&c.data.ingest_spec()?)?;
            let b = &report.bundle;
            println!("aligned returns: {}", b.len());
            println!("first: {}  last: {}", b.index[0], b.index[b.len() - 1]);
            for (name, n) in &report.rows_read {
                println!("{name}: {n} rows read, {} dropped by the join", report.dropped[name]);
            }
            std::fs::create_dir_all(&study.out_dir).map_err(|source| StudyError::Io {
                path: study.out_dir.clone(),
                source,
            })?;
            let out = study.out_dir.join("aligned.csv");
            b.save_csv(&out)?;
            println!("wrote {}", out.display());
        }
        Command::MakeFixture {
            out_dir,
            length,
            seed,
        } => {
            let f = write_fixture(&out_dir, length, seed)?;
            println!("wrote {} and {}", f.prices.display(), f.covariate.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new().parse_filters(&cli.log).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
