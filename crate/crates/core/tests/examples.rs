//! Runs every example so that they keep compiling and working.

#[path = "../examples/geometry_maps.rs"]
mod geometry_maps;

#[path = "../examples/homogenized_coefficients.rs"]
mod homogenized_coefficients;

#[path = "../examples/diophantine_scan.rs"]
mod diophantine_scan;

#[path = "../examples/reduction_ladder.rs"]
mod reduction_ladder;

#[path = "../examples/spectral_convergence.rs"]
mod spectral_convergence;

#[path = "../examples/resolvent_defect.rs"]
mod resolvent_defect;

#[path = "../examples/reaction_diffusion.rs"]
mod reaction_diffusion;

#[path = "../examples/study_from_config.rs"]
mod study_from_config;

#[test]
fn geometry_maps_runs() {
    geometry_maps::run_example().unwrap();
}

#[test]
fn homogenized_coefficients_runs() {
    homogenized_coefficients::run_example().unwrap();
}

#[test]
fn diophantine_scan_runs() {
    diophantine_scan::run_example().unwrap();
}

#[test]
fn reduction_ladder_runs() {
    reduction_ladder::run_example().unwrap();
}

#[test]
fn spectral_convergence_runs() {
    spectral_convergence::run_example().unwrap();
}

#[test]
fn resolvent_defect_runs() {
    resolvent_defect::run_example().unwrap();
}

#[test]
fn reaction_diffusion_runs() {
    reaction_diffusion::run_example().unwrap();
}

#[test]
fn study_from_config_runs() {
    let r = study_from_config::run_example().unwrap();
    assert!(r);
}
