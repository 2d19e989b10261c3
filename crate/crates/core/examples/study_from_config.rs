//! Parses a study configuration, runs it, and writes the CSV tables and
//! SVG plot to a directory.
//!
//! ```bash
//! cargo run --example study_from_config -- crates/core/configs/minimal.cfg /tmp/study
//! ```

use std::path::PathBuf;

use thinhomog::harness::{parse_config, run_study_with_jobs, StudyKind};

const MINIMAL: &str = "\
[domain]
bottom = trig(2; 1 sin 1)
top = trig(2; 1 cos 1)
alpha = 0.5
beta = 0.5
epsilons = 0.1, 0.05
";

pub fn run_example_with(text: &str, dir: PathBuf) -> thinhomog::Result<bool> {
    let mut config = parse_config(text)?;
    config.apply_seed_env()?;
    let out = run_study_with_jobs(&config, StudyKind::Ladder, Some(2))?;
    for path in out.write(&dir, &config)? {
        println!("wrote {}", path.display());
    }
    for c in &out.checks {
        println!("[{}] {} {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(out.passed())
}

pub fn run_example() -> thinhomog::Result<bool> {
    run_example_with(MINIMAL, std::env::temp_dir().join(format!("thinhomog-example-{}", std::process::id())))
}

#[allow(dead_code)]
fn main() -> thinhomog::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let ok = match args.as_slice() {
        [cfg, dir] => run_example_with(&std::fs::read_to_string(cfg)?, PathBuf::from(dir))?,
        _ => run_example()?,
    };
    println!("{}", if ok { "all checks passed" } else { "some checks failed" });
    Ok(())
}
