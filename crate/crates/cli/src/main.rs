use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use specgp_cli::run::{compare_table, sweep_table};
use specgp_cli::{compare, execute_on, load_dataset, resolve_data_dir, sweep, write_run, CliError, ExperimentConfig, Overrides};
use specgp_core::ModelKind;

#[derive(Parser)]
#[command(name = "specgp", version, about = "Fit and benchmark low-rank Gaussian-process models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model and write predictions, metrics and a manifest.
    Run(RunArgs),
    /// Run every (model, m) pair of the config's [sweep] section.
    Sweep(RunArgs),
    /// Run several configs on the same data and split and tabulate them.
    Compare {
        #[arg(long = "config", required = true, num_args = 1..)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    model: Option<ModelKind>,
    /// Basis size per dimension (or number of inducing inputs).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<String>,
    /// Directory for relative dataset paths; falls back to $SPECGP_DATA, then ./data.
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        cfg.apply(&Overrides {
            model: self.model,
            m: self.m,
            alpha: self.alpha,
            beta: self.beta,
            seed: self.seed,
            out: self.out.clone(),
        })?;
        Ok(cfg)
    }
}

fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output.dir.as_ref().map(PathBuf::from).unwrap_or_else(|| Path::new("runs").join(cfg.label()))
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.config()?;
            let ds = load_dataset(&cfg, &resolve_data_dir(args.data_dir.as_deref()))?;
            let res = execute_on(&cfg, &ds)?;
            let dir = out_dir(&cfg);
            write_run(&res, &dir)?;
            let m = &res.metrics.report;
            println!(
                "{}: nmse {:.4} mnlp {:.4} objective {:.4} ({} iterations, {:.1}s) -> {}",
                m.model,
                m.nmse,
                m.mnlp,
                m.nll_or_neg_elbo,
                res.fit.iterations,
                res.wall_time_s,
                dir.display()
            );
        }
        Command::Sweep(args) => {
            let cfg = args.config()?;
            let ds = load_dataset(&cfg, &resolve_data_dir(args.data_dir.as_deref()))?;
            let dir = out_dir(&cfg);
            let rows = sweep(&cfg, &ds, Some(&dir))?;
            print!("{}", sweep_table(&rows));
        }
        Command::Compare { configs, seed, out, data_dir } => {
            let overrides = Overrides { seed, ..Default::default() };
            let cfgs = configs
                .iter()
                .map(|p| {
                    let mut c = ExperimentConfig::load(p)?;
                    c.apply(&overrides)?;
                    Ok(c)
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let rows = compare(&cfgs, &resolve_data_dir(data_dir.as_deref()))?;
            let table = compare_table(&rows);
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(Path::new(&dir).join("compare.csv"), &table)?;
            }
            print!("{table}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
