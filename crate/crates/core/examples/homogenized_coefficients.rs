//! Effective coefficients in each oscillation regime, cross-checked
//! against one another.
//!
//! ```bash
//! cargo run --example homogenized_coefficients
//! ```

use thinhomog::homogenization::{
    cell_problem, p0_commensurate, p0_incommensurate, p0_two_scale, quasiperiodic_a0, reiterated_a0, CellMesh,
    ReiteratedMesh,
};
use thinhomog::BoundaryProfile;

pub fn run_example() -> thinhomog::Result<()> {
    let h = BoundaryProfile::sine(2.0, 1.0, 1.0)?;
    let g = BoundaryProfile::cosine(2.0, 1.0, 1.0)?;

    let p = p0_commensurate(&g, &h)?;
    println!("same period:      p0 = {:.12} (sqrt 14 = {:.12})", p.p0, 14f64.sqrt());
    let p = p0_commensurate(&BoundaryProfile::constant(0.0), &h)?;
    println!("one flat side:    p0 = {:.12} (sqrt 3 = {:.12})", p.p0, 3f64.sqrt());

    let cell = cell_problem(|z| g.value_nd(z) + h.value_nd(z), &CellMesh::default_for(1, 1.0))?;
    println!("1D cell problem:  p0 = {:.12}", cell.a0[(0, 0)]);

    // Periods 1 and sqrt 2.
    let g2 = BoundaryProfile::trig(2.0, vec![thinhomog::geometry::TrigTerm {
        coef: 1.0,
        basis: thinhomog::geometry::Basis::Cos,
        wavenumber: 1.0 / 2f64.sqrt(),
    }])?;
    let ergodic = p0_incommensurate(&g2, &h, 2e4)?;
    let two_scale = p0_two_scale(&g2, &h)?;
    println!("periods 1, sqrt2: ergodic p0 = {:.6}, two-scale p0 = {:.6}", ergodic.p0, two_scale.p0);

    let reiterated = reiterated_a0(&g, &h, 1, &ReiteratedMesh::default_for(1))?;
    let direct = p0_two_scale(&g, &h)?;
    println!("different orders: reiterated p0 = {:.9}, closed two-scale p0 = {:.9}", reiterated.model.a0()[(0, 0)], direct.p0);

    let q = quasiperiodic_a0(&g2, &h, 2, &[2.0, 4.0], 12)?;
    println!("2D quasi-periodic boxes: A0 =\n{:.5}deviations = {:?}", q.model.a0(), q.deviations);
    Ok(())
}

#[allow(dead_code)]
fn main() -> thinhomog::Result<()> {
    run_example()
}
