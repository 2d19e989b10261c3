//! Distances along the reduction ladder for a smooth source, and the
//! ratio `distance^2 / eta` that stays bounded as `eps` shrinks.
//!
//! ```bash
//! cargo run --example reduction_ladder
//! ```

use std::f64::consts::PI;

use thinhomog::operators::{verify_ladder, LadderGrids};
use thinhomog::{BaseDomain, BoundaryProfile, ThinDomainSpec};

pub fn run_example() -> thinhomog::Result<()> {
    let h = BoundaryProfile::sine(2.0, 1.0, 1.0)?;
    let g = BoundaryProfile::cosine(2.0, 1.0, 1.0)?;
    println!("{:>8} {:>8} {:>12} {:>12} {:>12} {:>10}", "eps", "eta", "d(T,S)", "d(S,R)", "d_total", "d^2/eta");
    for eps in [0.1, 0.05, 0.025] {
        let spec = ThinDomainSpec::new(BaseDomain::unit_interval(), h.clone(), g.clone(), 0.5, 0.5, eps)?;
        let grids = LadderGrids::resolving(&spec, 8, 64, 16);
        let r = verify_ladder(&spec, &grids, |x, _| (PI * x[0]).cos())?;
        println!(
            "{:>8} {:>8.4} {:>12.4e} {:>12.4e} {:>12.4e} {:>10.5}",
            eps, r.eta, r.dist_transformed_simplified, r.dist_simplified_reduced, r.dist_total, r.ratio_total_over_eta
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> thinhomog::Result<()> {
    run_example()
}
