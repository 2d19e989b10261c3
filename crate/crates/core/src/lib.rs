//! Dimension reduction and homogenization for thin domains whose top and
//! bottom boundaries oscillate weakly.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: boundary profiles, the thin-domain family, the
//!   oscillation magnitude `eta(eps)` and the coordinate maps that flatten
//!   the domain onto the fixed cylinder `Q = omega x (0,1)`.
//! * [`operators`]: finite element discretisations of the problem ladder
//!   (exact transformed problem on `Q`, simplified problem, reduced problem
//!   on `omega`, homogenized limit) and the rescaled norms used to compare
//!   them.
//! * [`homogenization`]: effective coefficients in every oscillation regime.
//! * [`spectral`]: low eigenpairs and the resolvent defect.
//! * [`dynamics`]: semilinear parabolic flows, equilibria and semidistances.
//! * [`harness`]: study configuration, CSV tables and SVG plots.

pub mod dynamics;
mod error;
pub mod fem;
pub mod geometry;
pub mod harness;
pub mod homogenization;
pub mod operators;
pub mod quadrature;
pub mod sparse;
pub mod spectral;

pub use error::{ConfigError, Error, Result};
pub use geometry::{BaseDomain, BoundaryProfile, EtaReport, OscillatingThickness, ThinDomainSpec};
pub use homogenization::{HomogenizedModel, Regime};
pub use operators::{Field, FieldTag, RescaledNorms, SparseOperator};
