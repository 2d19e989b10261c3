//! Line-oriented study configuration.
//!
//! ```text
//! [domain]
//! base = interval(1)
//! bottom = trig(2; 1 sin 1)
//! top = trig(2; 1 cos 1)
//! alpha = 0.5
//! beta = 0.5
//! epsilons = 0.1, 0.05, 0.025, 0.0125
//!
//! [study]
//! kind = ladder
//! ```
//!
//! Blank lines and `#` comments are ignored. Every key outside the
//! required five has a default; [`StudyConfig::to_text`] writes all of them
//! in a fixed order, so a parsed and re-serialized file is canonical.

use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::dynamics::Nonlinearity;
use crate::error::{ConfigError, Error, Result};
use crate::geometry::{BaseDomain, BoundaryProfile, Hypothesis, ThinDomainSpec};
use crate::homogenization::Commensurability;

/// Environment variable that replaces `[study] seed`.
pub const SEED_ENV: &str = "THINHOMOG_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Ladder,
    Homogenize,
    Spectrum,
    Resolvent,
    Parabolic,
    Equilibria,
}

impl StudyKind {
    pub const ALL: [StudyKind; 6] = [
        StudyKind::Ladder,
        StudyKind::Homogenize,
        StudyKind::Spectrum,
        StudyKind::Resolvent,
        StudyKind::Parabolic,
        StudyKind::Equilibria,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StudyKind::Ladder => "ladder",
            StudyKind::Homogenize => "homogenize",
            StudyKind::Spectrum => "spectrum",
            StudyKind::Resolvent => "resolvent",
            StudyKind::Parabolic => "parabolic",
            StudyKind::Equilibria => "equilibria",
        }
    }
}

impl fmt::Display for StudyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StudyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StudyKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::Argument(format!("unknown study kind `{}`", s.trim())))
    }
}

/// Initial state `offset + amplitude * prod_i cos(mode pi x_i / L_i)` of the
/// parabolic study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialState {
    pub offset: f64,
    pub amplitude: f64,
    pub mode: usize,
}

impl InitialState {
    pub fn value(&self, x: &[f64], extents: &[f64]) -> f64 {
        let m = self.mode as f64 * std::f64::consts::PI;
        self.offset + self.amplitude * x.iter().zip(extents).map(|(xi, l)| (m * xi / l).cos()).product::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    // [domain]
    pub base: BaseDomain,
    pub bottom: BoundaryProfile,
    pub top: BoundaryProfile,
    pub alpha: f64,
    pub beta: f64,
    pub epsilons: Vec<f64>,
    pub periods: Commensurability,
    pub allow_out_of_hypothesis: bool,
    // [study]
    /// `None` when the kind is left to the command line.
    pub kind: Option<StudyKind>,
    pub seed: u64,
    /// The ladder source is `prod_i cos(source_mode pi x_i / L_i)`.
    pub source_mode: usize,
    pub n_max: usize,
    pub probes: usize,
    pub nonlinearity: Nonlinearity,
    pub t_list: Vec<f64>,
    pub dt: f64,
    pub initial: InitialState,
    pub attractor_seeds: usize,
    pub t_transient: f64,
    // [numerics]
    pub per_wavelength: usize,
    pub min_x_cells: usize,
    pub y_cells: usize,
    /// Ergodic window; `None` selects `2e4` times the longest period.
    pub t_max: Option<f64>,
    pub cells_2d: usize,
    /// Slack allowed in the non-increasing checks.
    pub monotone_tol: f64,
    /// Relative change allowed between the `dt` and `dt / 2` defects.
    pub dt_bias_tol: f64,
    // [output]
    pub out_dir: String,
    pub svg: bool,
}

impl StudyConfig {
    /// Defaults for everything except the geometry.
    pub fn with_geometry(
        base: BaseDomain,
        bottom: BoundaryProfile,
        top: BoundaryProfile,
        alpha: f64,
        beta: f64,
        epsilons: Vec<f64>,
    ) -> Self {
        Self {
            base,
            bottom,
            top,
            alpha,
            beta,
            epsilons,
            periods: Commensurability::Commensurate,
            allow_out_of_hypothesis: false,
            kind: None,
            seed: crate::spectral::DEFAULT_SEED,
            source_mode: 1,
            n_max: 4,
            probes: crate::spectral::DEFAULT_PROBES,
            nonlinearity: Nonlinearity::allen_cahn(),
            t_list: vec![0.5, 1.0, 2.0],
            dt: crate::dynamics::DEFAULT_DT,
            initial: InitialState { offset: 0.5, amplitude: 1.0, mode: 1 },
            attractor_seeds: 8,
            t_transient: 5.0,
            per_wavelength: 8,
            min_x_cells: 64,
            y_cells: 16,
            t_max: None,
            cells_2d: 64,
            monotone_tol: 1e-8,
            dt_bias_tol: 0.1,
            out_dir: "out".into(),
            svg: true,
        }
    }

    /// The configuration shipped as `configs/standard.cfg`.
    pub fn standard() -> Self {
        Self::with_geometry(
            BaseDomain::unit_interval(),
            BoundaryProfile::sine(2.0, 1.0, 1.0).expect("valid profile"),
            BoundaryProfile::cosine(2.0, 1.0, 1.0).expect("valid profile"),
            0.5,
            0.5,
            vec![0.1, 0.05, 0.025, 0.0125],
        )
    }

    /// Thin-domain spec at `epsilon`, tagged out-of-hypothesis when the
    /// exponents leave `(0, 1)`.
    pub fn spec_at(&self, epsilon: f64) -> Result<ThinDomainSpec> {
        if self.allow_out_of_hypothesis {
            ThinDomainSpec::out_of_hypothesis(self.base, self.bottom.clone(), self.top.clone(), self.alpha, self.beta, epsilon)
        } else {
            ThinDomainSpec::new(self.base, self.bottom.clone(), self.top.clone(), self.alpha, self.beta, epsilon)
        }
    }

    pub fn hypothesis(&self) -> Hypothesis {
        if self.alpha > 0.0 && self.alpha < 1.0 && self.beta > 0.0 && self.beta < 1.0 {
            Hypothesis::Within
        } else {
            Hypothesis::Outside
        }
    }

    /// Applies [`SEED_ENV`] if it is set. Returns whether the seed changed.
    pub fn apply_seed_env(&mut self) -> Result<bool> {
        match std::env::var(SEED_ENV) {
            Ok(v) => {
                let seed = v
                    .trim()
                    .parse::<u64>()
                    .map_err(|_| Error::Config(vec![ConfigError { line: 0, message: format!("{SEED_ENV} = `{v}` is not an unsigned integer") }]))?;
                let changed = seed != self.seed;
                self.seed = seed;
                Ok(changed)
            }
            Err(_) => Ok(false),
        }
    }

    /// Canonical text form.
    pub fn to_text(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let periods = match self.periods {
            Commensurability::Commensurate => "commensurate",
            Commensurability::Incommensurate => "incommensurate",
        };
        let sections: [(&str, Vec<(&str, String)>); 4] = [
            (
                "domain",
                vec![
                    ("base", self.base.to_string()),
                    ("bottom", self.bottom.to_string()),
                    ("top", self.top.to_string()),
                    ("alpha", self.alpha.to_string()),
                    ("beta", self.beta.to_string()),
                    ("epsilons", list(&self.epsilons)),
                    ("periods", periods.to_string()),
                    ("allow_out_of_hypothesis", self.allow_out_of_hypothesis.to_string()),
                ],
            ),
            (
                "study",
                vec![
                    ("kind", self.kind.map_or("auto".into(), |k| k.to_string())),
                    ("seed", self.seed.to_string()),
                    ("source_mode", self.source_mode.to_string()),
                    ("n_max", self.n_max.to_string()),
                    ("probes", self.probes.to_string()),
                    ("nonlinearity", self.nonlinearity.to_string()),
                    ("t_list", list(&self.t_list)),
                    ("dt", self.dt.to_string()),
                    ("initial_offset", self.initial.offset.to_string()),
                    ("initial_amplitude", self.initial.amplitude.to_string()),
                    ("initial_mode", self.initial.mode.to_string()),
                    ("attractor_seeds", self.attractor_seeds.to_string()),
                    ("t_transient", self.t_transient.to_string()),
                ],
            ),
            (
                "numerics",
                vec![
                    ("per_wavelength", self.per_wavelength.to_string()),
                    ("min_x_cells", self.min_x_cells.to_string()),
                    ("y_cells", self.y_cells.to_string()),
                    ("t_max", self.t_max.map_or("auto".into(), |t| t.to_string())),
                    ("cells_2d", self.cells_2d.to_string()),
                    ("monotone_tol", self.monotone_tol.to_string()),
                    ("dt_bias_tol", self.dt_bias_tol.to_string()),
                ],
            ),
            ("output", vec![("dir", self.out_dir.clone()), ("svg", self.svg.to_string())]),
        ];
        let blocks: Vec<String> = sections
            .iter()
            .map(|(name, kv)| {
                let mut b = format!("[{name}]\n");
                for (k, v) in kv {
                    b.push_str(&format!("{k} = {v}\n"));
                }
                b
            })
            .collect();
        blocks.join("\n")
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

const SECTIONS: [(&str, &[&str]); 4] = [
    ("domain", &["base", "bottom", "top", "alpha", "beta", "epsilons", "periods", "allow_out_of_hypothesis"]),
    (
        "study",
        &[
            "kind",
            "seed",
            "source_mode",
            "n_max",
            "probes",
            "nonlinearity",
            "t_list",
            "dt",
            "initial_offset",
            "initial_amplitude",
            "initial_mode",
            "attractor_seeds",
            "t_transient",
        ],
    ),
    ("numerics", &["per_wavelength", "min_x_cells", "y_cells", "t_max", "cells_2d", "monotone_tol", "dt_bias_tol"]),
    ("output", &["dir", "svg"]),
];

const REQUIRED: [&str; 5] = ["bottom", "top", "alpha", "beta", "epsilons"];

fn parse_base(text: &str) -> std::result::Result<BaseDomain, String> {
    let t = text.trim();
    let args = |name: &str| -> Option<Vec<String>> {
        t.strip_prefix(name)
            .map(str::trim_start)
            .and_then(|r| r.strip_prefix('('))
            .and_then(|r| r.strip_suffix(')'))
            .map(|r| r.split(',').map(|a| a.trim().to_string()).collect())
    };
    let nums = |a: Vec<String>| -> std::result::Result<Vec<f64>, String> {
        a.iter().map(|v| v.parse::<f64>().map_err(|_| format!("`{v}` is not a number"))).collect()
    };
    if let Some(a) = args("interval") {
        match nums(a)?.as_slice() {
            [l] => Ok(BaseDomain::Interval { length: *l }),
            _ => Err("interval takes one length".into()),
        }
    } else if let Some(a) = args("rectangle") {
        match nums(a)?.as_slice() {
            [lx, ly] => Ok(BaseDomain::Rectangle { lx: *lx, ly: *ly }),
            _ => Err("rectangle takes two lengths".into()),
        }
    } else {
        Err(format!("unknown base domain `{t}`; use interval(L) or rectangle(Lx, Ly)"))
    }
}

fn parse_list(text: &str) -> std::result::Result<Vec<f64>, String> {
    text.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| format!("`{}` is not a number", v.trim())))
        .collect()
}

/// Parses and validates a configuration, reporting every problem found.
pub fn parse_config(text: &str) -> Result<StudyConfig> {
    let mut errors: Vec<ConfigError> = Vec::new();
    let mut cfg = StudyConfig::standard();
    let mut section: Option<&str> = None;
    let mut seen: Vec<(String, usize)> = Vec::new();
    let mut err = |line: usize, message: String| errors.push(ConfigError { line, message });

    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            match SECTIONS.iter().find(|(s, _)| *s == name.trim()) {
                Some((s, _)) => section = Some(s),
                None => {
                    err(n, format!("unknown section [{}]", name.trim()));
                    section = None;
                }
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            err(n, format!("expected `key = value`, found `{line}`"));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(sec) = section else {
            err(n, format!("key `{key}` outside a known section"));
            continue;
        };
        let keys = SECTIONS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !keys.contains(&key) {
            err(n, format!("unknown key `{key}` in [{sec}]"));
            continue;
        }
        if let Some((_, first)) = seen.iter().find(|(k, _)| k == key) {
            err(n, format!("duplicate key `{key}` (first set on line {first})"));
            continue;
        }
        seen.push((key.to_string(), n));

        let float = |v: &str| v.parse::<f64>().map_err(|_| format!("`{v}` is not a number"));
        let count = |v: &str| v.parse::<usize>().map_err(|_| format!("`{v}` is not a non-negative integer"));
        let flag = |v: &str| match v {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(format!("`{v}` is not true or false")),
        };
        let outcome: std::result::Result<(), String> = (|| {
            match key {
                "base" => cfg.base = parse_base(value)?,
                "bottom" => cfg.bottom = BoundaryProfile::parse(value).map_err(|e| e.to_string())?,
                "top" => cfg.top = BoundaryProfile::parse(value).map_err(|e| e.to_string())?,
                "alpha" => cfg.alpha = float(value)?,
                "beta" => cfg.beta = float(value)?,
                "epsilons" => cfg.epsilons = parse_list(value)?,
                "periods" => {
                    cfg.periods = match value {
                        "commensurate" => Commensurability::Commensurate,
                        "incommensurate" => Commensurability::Incommensurate,
                        _ => return Err(format!("`{value}` is not commensurate or incommensurate")),
                    }
                }
                "allow_out_of_hypothesis" => cfg.allow_out_of_hypothesis = flag(value)?,
                "kind" => {
                    cfg.kind = if value == "auto" { None } else { Some(value.parse().map_err(|e: Error| e.to_string())?) }
                }
                "seed" => cfg.seed = value.parse().map_err(|_| format!("`{value}` is not an unsigned integer"))?,
                "source_mode" => cfg.source_mode = count(value)?,
                "n_max" => cfg.n_max = count(value)?,
                "probes" => cfg.probes = count(value)?,
                "nonlinearity" => cfg.nonlinearity = Nonlinearity::parse(value).map_err(|e| e.to_string())?,
                "t_list" => cfg.t_list = parse_list(value)?,
                "dt" => cfg.dt = float(value)?,
                "initial_offset" => cfg.initial.offset = float(value)?,
                "initial_amplitude" => cfg.initial.amplitude = float(value)?,
                "initial_mode" => cfg.initial.mode = count(value)?,
                "attractor_seeds" => cfg.attractor_seeds = count(value)?,
                "t_transient" => cfg.t_transient = float(value)?,
                "per_wavelength" => cfg.per_wavelength = count(value)?,
                "min_x_cells" => cfg.min_x_cells = count(value)?,
                "y_cells" => cfg.y_cells = count(value)?,
                "t_max" => cfg.t_max = if value == "auto" { None } else { Some(float(value)?) },
                "cells_2d" => cfg.cells_2d = count(value)?,
                "monotone_tol" => cfg.monotone_tol = float(value)?,
                "dt_bias_tol" => cfg.dt_bias_tol = float(value)?,
                "dir" => {
                    if value.is_empty() {
                        return Err("output directory is empty".into());
                    }
                    cfg.out_dir = value.to_string()
                }
                "svg" => cfg.svg = flag(value)?,
                _ => unreachable!("key list and match arms agree"),
            }
            Ok(())
        })();
        if let Err(m) = outcome {
            err(n, format!("{key}: {m}"));
        }
    }

    let line_of = |key: &str| seen.iter().find(|(k, _)| k == key).map_or(0, |(_, l)| *l);
    for key in REQUIRED {
        if line_of(key) == 0 {
            err(0, format!("missing required key `{key}` in [domain]"));
        }
    }
    validate(&cfg, &line_of, &mut err);
    if errors.is_empty() {
        Ok(cfg)
    } else {
        errors.sort_by_key(|e| e.line);
        Err(Error::Config(errors))
    }
}

fn validate(cfg: &StudyConfig, line_of: &dyn Fn(&str) -> usize, err: &mut dyn FnMut(usize, String)) {
    for (key, v) in [("alpha", cfg.alpha), ("beta", cfg.beta)] {
        if line_of(key) == 0 {
            continue;
        }
        if !(v > 0.0 && v.is_finite()) {
            err(line_of(key), format!("{key} = {v} must be positive"));
        } else if v >= 1.0 && !cfg.allow_out_of_hypothesis {
            err(
                line_of(key),
                format!("{key} = {v} must lie in (0, 1) for weakly oscillating boundaries; set allow_out_of_hypothesis = true for a negative control"),
            );
        }
    }
    if line_of("epsilons") != 0 {
        let e = &cfg.epsilons;
        if e.is_empty() || e.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            err(line_of("epsilons"), "epsilon values must be positive".into());
        } else if e.windows(2).any(|w| w[1] >= w[0]) {
            err(line_of("epsilons"), "epsilon list must be strictly decreasing".into());
        }
    }
    for (key, v) in [("dt", cfg.dt), ("monotone_tol", cfg.monotone_tol), ("dt_bias_tol", cfg.dt_bias_tol), ("t_transient", cfg.t_transient)] {
        if !(v > 0.0 && v.is_finite()) {
            err(line_of(key), format!("{key} = {v} must be positive"));
        }
    }
    if let Some(t) = cfg.t_max {
        if !(t > 0.0 && t.is_finite()) {
            err(line_of("t_max"), format!("t_max = {t} must be positive"));
        }
    }
    if cfg.t_list.is_empty() || cfg.t_list.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        err(line_of("t_list"), "t_list entries must be positive".into());
    }
    for (key, v) in [
        ("n_max", cfg.n_max),
        ("probes", cfg.probes),
        ("per_wavelength", cfg.per_wavelength),
        ("min_x_cells", cfg.min_x_cells),
        ("y_cells", cfg.y_cells),
        ("cells_2d", cfg.cells_2d),
        ("attractor_seeds", cfg.attractor_seeds),
    ] {
        if v == 0 {
            err(line_of(key), format!("{key} must be at least 1"));
        }
    }
    if cfg.n_max > crate::spectral::MAX_MODES {
        err(line_of("n_max"), format!("n_max = {} exceeds {}", cfg.n_max, crate::spectral::MAX_MODES));
    }
    if line_of("bottom") != 0 && line_of("top") != 0 && line_of("epsilons") != 0 {
        if let Some(&eps) = cfg.epsilons.first() {
            if eps > 0.0 && (cfg.alpha > 0.0 && cfg.beta > 0.0) {
                if let Err(e) = cfg.spec_at(eps) {
                    if !matches!(&e, Error::Spec(m) if m.contains("alpha") || m.contains("beta")) {
                        err(line_of("top").min(line_of("bottom")), e.to_string());
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[domain]\nbottom = const(1)\ntop = const(2)\nalpha = 0.5\nbeta = 0.5\nepsilons = 0.1\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.epsilons, vec![0.1]);
        assert_eq!(c.base, BaseDomain::unit_interval());
        assert_eq!(c.probes, 20);
        assert_eq!(c.seed, 42);
        assert_eq!(c.kind, None);
        assert!(c.top.is_constant());
    }

    #[test]
    fn alpha_one_is_gated() {
        let text = MINIMAL.replace("alpha = 0.5", "alpha = 1.0");
        let err = parse_config(&text).unwrap_err();
        match err {
            Error::Config(v) => {
                assert_eq!(v.len(), 1);
                assert_eq!(v[0].line, 4);
                assert!(v[0].message.contains("(0, 1)"));
            }
            e => panic!("{e}"),
        }
        let ok = parse_config(&(text + "allow_out_of_hypothesis = true\n")).unwrap();
        assert_eq!(ok.hypothesis(), Hypothesis::Outside);
    }

    #[test]
    fn all_errors_reported_with_lines() {
        let text = "[domain]\nbottom = wave(1)\ntop = const(2)\nalpha = 0.5\nbeta = 0.5\nepsilons = 0.1, 0.2\ncolour = red\n[study]\nkind = sweep\n[extras]\n";
        let Error::Config(v) = parse_config(text).unwrap_err() else { panic!() };
        let lines: Vec<usize> = v.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![2, 6, 7, 9, 10], "{v:?}");
    }

    #[test]
    fn missing_keys_are_listed() {
        let Error::Config(v) = parse_config("[domain]\nalpha = 0.5\n").unwrap_err() else { panic!() };
        let missing = v.iter().filter(|e| e.message.starts_with("missing")).count();
        assert_eq!(missing, 4);
    }

    #[test]
    fn round_trip_is_canonical() {
        let c = parse_config(MINIMAL).unwrap();
        let text = c.to_text();
        let again = parse_config(&text).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_text(), text);
        assert_eq!(again.hash(), c.hash());
        assert_eq!(StudyConfig::standard().to_text(), parse_config(&StudyConfig::standard().to_text()).unwrap().to_text());
    }

    #[test]
    fn base_and_kind_parsing() {
        assert_eq!(parse_base("rectangle(1, 2)").unwrap(), BaseDomain::Rectangle { lx: 1.0, ly: 2.0 });
        assert!(parse_base("disc(1)").is_err());
        assert_eq!("spectrum".parse::<StudyKind>().unwrap(), StudyKind::Spectrum);
        assert!("bogus".parse::<StudyKind>().is_err());
    }
}
