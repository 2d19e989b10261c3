use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use thinhomog::harness::{parse_config, run_study_with_jobs, StudyKind};

#[derive(Parser)]
#[command(name = "thinhomog", version, about = "Convergence studies for thin domains with oscillating boundaries")]
struct Args {
    /// ladder, homogenize, spectrum, resolvent, parabolic or equilibria
    kind: String,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(args: &Args) -> thinhomog::Result<bool> {
    let kind: StudyKind = args.kind.parse()?;
    let text = std::fs::read_to_string(&args.config)?;
    let mut config = parse_config(&text)?;
    if config.apply_seed_env()? {
        eprintln!("seed overridden from the environment: {}", config.seed);
    }
    let out = run_study_with_jobs(&config, kind, args.jobs)?;
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from(&config.out_dir));
    for path in out.write(&dir, &config)? {
        println!("wrote {}", path.display());
    }
    for c in &out.checks {
        println!("[{}] {}{}", if c.passed { "pass" } else { "FAIL" }, c.name, if c.detail.is_empty() { String::new() } else { format!(": {}", c.detail) });
    }
    Ok(out.passed())
}
