use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nlsinflate::experiments::{self, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "nlsinflate",
    version,
    about = "Norm-inflation and randomized-data experiments for NLS"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration; defaults apply to omitted keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV tables and the JSON summary.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Spatial dimension of the experiment.
    #[arg(long, global = true)]
    dim: Option<Dim>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dim {
    #[value(name = "1")]
    One,
    #[value(name = "3")]
    Three,
}

impl Dim {
    fn value(self) -> usize {
        match self {
            Dim::One => 1,
            Dim::Three => 3,
        }
    }
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Transform and solver oracles.
    Validate,
    /// Scaling, mollification and lower-bound exponents of a single bubble.
    ProfileGrowth,
    /// Coarse and fine partial sums across a ladder of scales.
    ScaleSeparation,
    /// Evolution of mollified multi-scale data to the inflation times.
    Inflation,
    /// Convergence of solutions from mollified randomized data.
    RandomizedConvergence,
    /// Sub-Gaussian tail of the randomized Strichartz norm.
    StrichartzTail,
    /// Bilinear high/low interaction ratios.
    Bilinear,
    /// Prints the effective configuration as TOML.
    PrintConfig,
}

impl Command {
    fn id(self) -> Option<&'static str> {
        Some(match self {
            Command::Validate => "validate",
            Command::ProfileGrowth => "profile-growth",
            Command::ScaleSeparation => "scale-separation",
            Command::Inflation => "inflation",
            Command::RandomizedConvergence => "randomized-convergence",
            Command::StrichartzTail => "strichartz-tail",
            Command::Bilinear => "bilinear",
            Command::PrintConfig => return None,
        })
    }
}

fn run(cli: &Cli) -> nlsinflate::Result<bool> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    let Some(id) = cli.command.id() else {
        if let Some(dim) = cli.dim {
            for id in experiments::EXPERIMENTS {
                cfg.set_dim(id, dim.value())?;
            }
        }
        print!("{}", cfg.to_toml_string()?);
        return Ok(true);
    };
    if let Some(dim) = cli.dim {
        cfg.set_dim(id, dim.value())?;
    }
    let report = experiments::run(id, &cfg, cli.seed)?;
    let files = report.write(&cli.out)?;
    for c in &report.criteria {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {} {}: {}", c.id, c.name, c.detail);
    }
    for note in &report.notes {
        println!("note: {note}");
    }
    println!(
        "{} finished in {:.2} s; wrote {} files to {}",
        report.experiment,
        report.wall_clock_s,
        files.len(),
        cli.out.display()
    );
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
