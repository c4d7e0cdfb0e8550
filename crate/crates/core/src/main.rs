use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use locdim::constructive::{verify_lemma, LemmaName};
use locdim::harness::{
    calibrate_lambda, fit_estimator, ingest_csv, render_table, run_experiment, run_real_data, EstimatorName,
    ExperimentConfig, Normalization, RealDataConfig, ResultTable, BIKE_SHARING_FEATURES,
};
use locdim::oracle::Target;
use locdim::Result;

#[derive(Parser)]
#[command(name = "locdim", version, about = "Sparse sigmoid network regression experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a simulation experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Repetitions, evaluation size, calibration budget and grids at full size.
        #[arg(long)]
        full_scale: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render one or more results files as a text table.
    Table { results: Vec<PathBuf> },
    /// Measure a constructed network against its exact target on a grid.
    VerifyLemma {
        lemma: LemmaName,
        #[arg(long = "R", default_value_t = 1e3)]
        r: f64,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 2001)]
        points: usize,
    },
    /// Evaluate or calibrate a built-in regression function.
    Oracle {
        #[command(subcommand)]
        cmd: OracleCmd,
    },
    /// Fit one estimator to a CSV file and print it as JSON.
    Fit {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        target_column: String,
        /// Feature columns; all other columns when omitted.
        #[arg(long, value_delimiter = ',')]
        features: Vec<String>,
        #[arg(long, default_value = "neural-sc")]
        estimator: EstimatorName,
        #[arg(long)]
        minmax: bool,
        /// Experiment config supplying grids and fit settings.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Fit on a random subset of a CSV file and report normalized held-out errors.
    Real {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value = "cnt")]
        target_column: String,
        /// Feature columns; the hourly bike sharing attributes when omitted.
        #[arg(long, value_delimiter = ',')]
        features: Vec<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n_fit: Option<usize>,
    },
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Print m(x) for each comma separated point.
    Eval {
        #[arg(long)]
        target: String,
        #[arg(long = "x", required = true)]
        points: Vec<String>,
    },
    /// Estimate the noise scale λ.
    Calibrate {
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn read_json<T: serde::de::DeserializeOwned + Default>(path: Option<&PathBuf>) -> Result<T> {
    match path {
        Some(p) => Ok(serde_json::from_str(&fs::read_to_string(p)?)?),
        None => Ok(T::default()),
    }
}

fn parse_point(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| locdim::Error::InvalidArgument(format!("`{v}`: {e}"))))
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Run { config, full_scale, out } => {
            let mut cfg: ExperimentConfig = read_json(Some(&config))?;
            if full_scale {
                cfg = cfg.full_scale();
            }
            let json = run_experiment(&cfg)?.to_json()?;
            match out {
                Some(p) => fs::write(p, json)?,
                None => println!("{json}"),
            }
        }
        Cmd::Table { results } => {
            let tables = results
                .iter()
                .map(|p| ResultTable::from_json(&fs::read_to_string(p)?))
                .collect::<Result<Vec<_>>>()?;
            print!("{}", render_table(&tables));
        }
        Cmd::VerifyLemma { lemma, r, a, points } => {
            let rep = verify_lemma(lemma, r, a, points)?;
            println!("{}", serde_json::to_string_pretty(&rep)?);
        }
        Cmd::Oracle { cmd: OracleCmd::Eval { target, points } } => {
            let t = Target::by_name(&target)?;
            for p in &points {
                println!("{}", t.eval(&parse_point(p)?)?);
            }
        }
        Cmd::Oracle { cmd: OracleCmd::Calibrate { target, samples, repeats, seed } } => {
            let est = calibrate_lambda(&Target::by_name(&target)?, samples, repeats, seed)?;
            println!("{}", serde_json::to_string_pretty(&est)?);
        }
        Cmd::Fit { csv, target_column, features, estimator, minmax, config } => {
            let cfg: ExperimentConfig = read_json(config.as_ref())?;
            let norm = if minmax { Normalization::MinMax } else { Normalization::None };
            let got = ingest_csv(csv, &target_column, &features, norm)?;
            log::info!("read {} rows, dropped {}", got.rows_read, got.rows_dropped);
            let model = fit_estimator(estimator, &got.data, &cfg, cfg.seed)?;
            println!("{}", model.to_json()?);
        }
        Cmd::Real { csv, target_column, features, config, n_fit } => {
            let mut cfg: RealDataConfig = read_json(config.as_ref())?;
            if let Some(n) = n_fit {
                cfg.n_fit = n;
            }
            let features = if features.is_empty() {
                BIKE_SHARING_FEATURES.iter().map(|s| s.to_string()).collect()
            } else {
                features
            };
            let got = ingest_csv(csv, &target_column, &features, Normalization::MinMax)?;
            for row in run_real_data(&got.data, &cfg)? {
                match row.ratio {
                    Some(r) => println!("{:<12}{r:.4}", row.estimator.to_string()),
                    None => println!("{:<12}failed", row.estimator.to_string()),
                }
            }
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
