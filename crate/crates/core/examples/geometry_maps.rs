//! Thin-domain geometry: profiles, the oscillation magnitude and the maps
//! that flatten `R^eps` onto `Q = (0,1) x (0,1)`.
//!
//! ```bash
//! cargo run --example geometry_maps
//! ```

use thinhomog::{BaseDomain, BoundaryProfile, ThinDomainSpec};

pub fn run_example() -> thinhomog::Result<()> {
    let bottom = BoundaryProfile::parse("trig(2; 1 sin 1)")?;
    let top = BoundaryProfile::parse("trig(2; 1 cos 1)")?;
    println!("bottom h = {bottom}, top g = {top}");

    for eps in [0.1, 0.05, 0.025, 0.0125] {
        let spec = ThinDomainSpec::new(BaseDomain::unit_interval(), bottom.clone(), top.clone(), 0.5, 0.5, eps)?;
        let eta = spec.eta();
        let (kmin, kmax) = spec.thickness_bounds();
        println!(
            "eps = {eps:<7} eta1 = {:.4}  eta2 = {:.4}  eta = {:.4}  K in [{kmin:.3}, {kmax:.3}]",
            eta.eta1, eta.eta2, eta.eta
        );
    }

    let spec = ThinDomainSpec::new(BaseDomain::unit_interval(), bottom, top, 0.5, 0.5, 0.04)?;
    for q in [[0.25, 0.0], [0.25, 0.5], [0.6, 1.0]] {
        let p = spec.q_to_physical(&q)?;
        let back = spec.map_s_inverse(&spec.map_l_inverse(&p)?)?;
        println!("Q {q:?} -> R^eps [{:.5}, {:.5}] -> Q [{:.5}, {:.5}]", p[0], p[1], back[0], back[1]);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> thinhomog::Result<()> {
    run_example()
}
