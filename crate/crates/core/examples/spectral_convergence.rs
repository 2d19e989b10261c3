//! Low Neumann eigenvalues of the thin domain against the homogenized
//! limit `1 + (p0 / W) ((n - 1) pi)^2`.
//!
//! ```bash
//! cargo run --example spectral_convergence
//! ```

use thinhomog::homogenization::{Commensurability, HomogenizationOptions};
use thinhomog::spectral::{neumann_eigenvalue_1d, spectral_convergence_study, SpectralOptions};
use thinhomog::{BaseDomain, BoundaryProfile, HomogenizedModel, ThinDomainSpec};

pub fn run_example() -> thinhomog::Result<()> {
    let spec = ThinDomainSpec::new(
        BaseDomain::unit_interval(),
        BoundaryProfile::sine(2.0, 1.0, 1.0)?,
        BoundaryProfile::cosine(2.0, 1.0, 1.0)?,
        0.5,
        0.5,
        0.1,
    )?;
    let model = HomogenizedModel::for_spec(&spec, Commensurability::Commensurate, &HomogenizationOptions::default())?;
    let q = model.diffusion().expect("one base dimension");
    let report = spectral_convergence_study(&spec, &model, &[0.1, 0.05], 3, &SpectralOptions::default())?;
    for r in &report.rows {
        println!(
            "eps = {:<5} n = {}  lambda_eps = {:>10.5}  lambda_0 = {:>10.5}  closed form = {:>10.5}  gap = {:.4e}  |phi| dist = {:.4}",
            r.epsilon,
            r.n,
            r.lambda_eps,
            r.lambda_0,
            neumann_eigenvalue_1d(q, 1.0, r.n),
            r.gap,
            r.eigfun_dist
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> thinhomog::Result<()> {
    run_example()
}
