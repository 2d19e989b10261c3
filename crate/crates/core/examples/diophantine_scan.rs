//! Scans `|n1 L1 + n2 L2| (|n1| + |n2|)^s0` for near-resonances between
//! two periods.
//!
//! ```bash
//! cargo run --example diophantine_scan
//! ```

use thinhomog::homogenization::{diophantine_check, DiophantineParams};

pub fn run_example() -> thinhomog::Result<()> {
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    for (name, l2) in [("sqrt 2", 2f64.sqrt()), ("golden ratio", golden), ("3/2", 1.5), ("pi", std::f64::consts::PI)] {
        let p = DiophantineParams::new(1.0, l2, 1.0, 0.1, 1000)?;
        let r = diophantine_check(&p);
        println!(
            "L2 = {name:<13} min margin {:.3e} at {:?}  {}  ({} pairs)",
            r.min_margin,
            r.argmin,
            if r.passed { "passes" } else { "fails" },
            r.pairs_scanned
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> thinhomog::Result<()> {
    run_example()
}
