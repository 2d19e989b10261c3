//! Randomised lower bound for the distance between the thin-domain and
//! limit resolvents.
//!
//! ```bash
//! cargo run --example resolvent_defect
//! ```

use thinhomog::homogenization::{Commensurability, HomogenizationOptions};
use thinhomog::operators::LadderGrids;
use thinhomog::spectral::resolvent_defect;
use thinhomog::{BaseDomain, BoundaryProfile, HomogenizedModel, ThinDomainSpec};

pub fn run_example() -> thinhomog::Result<()> {
    let base = ThinDomainSpec::new(
        BaseDomain::unit_interval(),
        BoundaryProfile::sine(2.0, 1.0, 1.0)?,
        BoundaryProfile::cosine(2.0, 1.0, 1.0)?,
        0.5,
        0.5,
        0.1,
    )?;
    let model = HomogenizedModel::for_spec(&base, Commensurability::Commensurate, &HomogenizationOptions::default())?;
    for eps in [0.1, 0.05, 0.025] {
        let spec = base.with_epsilon(eps)?;
        let row = resolvent_defect(&spec, &LadderGrids::resolving(&spec, 8, 64, 16), &model, 8, 42)?;
        println!("eps = {:<6} max defect = {:.4e}  mean defect = {:.4e}  ({} probes)", eps, row.defect_max, row.defect_mean, row.probes);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> thinhomog::Result<()> {
    run_example()
}
