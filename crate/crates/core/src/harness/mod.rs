//! Study configuration, orchestration and artifacts.
//!
//! A study reads a [`StudyConfig`], sweeps its epsilon list on a bounded
//! worker pool and produces CSV tables (with `#` provenance lines), a
//! `checks.csv` of pass/fail results and an optional SVG plot.

pub mod config;
pub mod csv;
pub mod study;
pub mod svg;

pub use config::{parse_config, InitialState, StudyConfig, StudyKind, SEED_ENV};
pub use csv::{Cell, CsvTable};
pub use study::{run_study, run_study_with_jobs, Check, StudyOutput};
pub use svg::{render_svg, PlotKind};
