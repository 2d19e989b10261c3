//! Semilinear flow `u_t - div(A grad u) + u = f(u)` with `f(s) = 2s - s^3`:
//! equilibria of the limit problem, a trajectory, and the semigroup defect
//! against the thin-domain flow.
//!
//! ```bash
//! cargo run --example reaction_diffusion
//! ```

use std::f64::consts::PI;

use thinhomog::dynamics::{default_seeds, equilibria, evolve, semigroup_defect, Nonlinearity};
use thinhomog::homogenization::{Commensurability, HomogenizationOptions};
use thinhomog::operators::{assemble_limit, omega_grid, LadderGrids};
use thinhomog::{BaseDomain, BoundaryProfile, Field, FieldTag, HomogenizedModel, ThinDomainSpec};

pub fn run_example() -> thinhomog::Result<()> {
    let spec = ThinDomainSpec::new(
        BaseDomain::unit_interval(),
        BoundaryProfile::sine(2.0, 1.0, 1.0)?,
        BoundaryProfile::cosine(2.0, 1.0, 1.0)?,
        0.5,
        0.5,
        0.05,
    )?;
    let model = HomogenizedModel::for_spec(&spec, Commensurability::Commensurate, &HomogenizationOptions::default())?;
    let nl = Nonlinearity::allen_cahn();
    let (s_star, delta) = nl.certificate().expect("dissipative");
    println!("f = {nl}; f(s) s <= -{delta} s^2 for |s| >= {s_star:.4}");

    let limit = assemble_limit(&model, &omega_grid(&spec, &[64])?)?;
    let set = equilibria(&limit, &nl, &default_seeds(&limit)?)?;
    for m in &set.members {
        let mean = m.field.values.iter().sum::<f64>() / m.field.len() as f64;
        println!("equilibrium with mean {mean:+.6}, Newton residual {:.2e}", m.residual);
    }

    let u0: Vec<f64> = limit.grid.nodes().iter().map(|x| 0.5 + (PI * x[0]).cos()).collect();
    let tr = evolve(&limit, &Field::new(FieldTag::State, u0)?, 3.0, 1e-3, &nl, &[1.0, 3.0])?;
    for (t, s) in tr.times.iter().zip(&tr.snapshots) {
        println!("t = {t}: sup |u| = {:.5}", s.max_abs());
    }

    let d = semigroup_defect(&spec, &LadderGrids::resolving(&spec, 8, 64, 16), &model, &nl, &[0.5, 1.0], |x| 0.5 + (PI * x[0]).cos(), 1e-3)?;
    for r in &d.rows {
        println!("eps = {} t = {}: defect H1 = {:.4e}, L2 = {:.4e}", r.epsilon, r.t, r.defect_h1, r.defect_l2);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> thinhomog::Result<()> {
    run_example()
}
