use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fairfront::Error;
use fairfront_cli::{cmd_audit, cmd_frontier, cmd_path, cmd_plot, cmd_synth, load_config};

/// Fairness-accuracy frontiers and fairness-penalized model stacking.
#[derive(Parser)]
#[command(name = "fairfront", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Config override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Input file (repeatable for `plot`).
    #[arg(long, global = true)]
    input: Vec<PathBuf>,

    /// Output directory, created if absent.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Recheck frontier results against the reference oracles.
    #[arg(long, global = true)]
    oracle: bool,

    /// Add a timestamp to report.json.
    #[arg(long, global = true)]
    timestamp: bool,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Frontier report for a model-metrics CSV.
    Frontier,
    /// Same as `path`.
    Stack,
    /// Stacking path over a prediction matrix and the expanded frontier.
    Path,
    /// Decision-bias monotonicity audit along the stacking path.
    Audit,
    /// SVG of one or more taf_points.csv files.
    Plot,
    /// Synthetic prediction matrix.
    Synth,
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " "))
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("FAIRFRONT_LOG")
        .format(|buf, record| {
            writeln!(
                buf,
                "level={} target={} msg={}",
                record.level().as_str().to_lowercase(),
                record.target(),
                quote(&record.args().to_string())
            )
        })
        .init();
}

fn single_input(cli: &Cli) -> Result<&PathBuf, Error> {
    match cli.input.as_slice() {
        [one] => Ok(one),
        [] => Err(Error::InvalidInput("missing --input".into())),
        _ => Err(Error::InvalidInput("this command takes exactly one --input".into())),
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = load_config(cli.config.as_deref(), &cli.overrides)?;
    if let Some(workers) = cfg.workers {
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    }
    match cli.command {
        Command::Frontier => {
            let o = cmd_frontier(single_input(cli)?, &cli.out, &cfg, cli.oracle, cli.timestamp)?;
            for s in &o.scores {
                println!("{}\tfauc={}\tfauci={}", s.label, s.fauc, s.fauci);
            }
        }
        Command::Stack | Command::Path => {
            let o = cmd_path(single_input(cli)?, &cli.out, &cfg, cli.oracle, cli.timestamp)?;
            println!("alpha={}\tpath_points={}", o.alpha, o.path.len());
            for s in &o.frontier.scores {
                println!("{}\tfauc={}\tfauci={}", s.label, s.fauc, s.fauci);
            }
        }
        Command::Audit => {
            for r in cmd_audit(single_input(cli)?, &cli.out, &cfg)? {
                println!(
                    "{}\tinversions={}\tmax_inversion={}\ttotal_inversion={}",
                    r.contrast, r.inversions, r.max_inversion, r.total_inversion
                );
            }
        }
        Command::Plot => {
            let p = cmd_plot(&cli.input, &cli.out)?;
            println!("{}", p.display());
        }
        Command::Synth => {
            let p = cmd_synth(&cli.out, &cfg)?;
            println!("{}", p.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("level=error code={} msg={}", e.code(), quote(&e.to_string()));
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
