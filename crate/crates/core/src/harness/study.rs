//! Study orchestration: epsilon sweeps, tables, checks and plots.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{StudyConfig, StudyKind};
use super::csv::{
    Cell, CsvTable, CHECKS_SCHEMA, DYNAMICS_SCHEMA, HOMOGENIZE_SCHEMA, LADDER_SCHEMA, RESOLVENT_SCHEMA, SPECTRUM_SCHEMA,
};
use super::svg::{render_svg, PlotKind};
use crate::dynamics::{self, attractor_surrogate, default_seeds, equilibria, random_smooth_states, semidistance, semigroup_defect};
use crate::error::{Error, Result};
use crate::geometry::{Hypothesis, ThinDomainSpec};
use crate::homogenization::{
    cell_problem, common_period, p0_two_scale, reiterated_a0, CellMesh, HomogenizationOptions,
    HomogenizedModel, ReiteratedMesh, Regime,
};
use crate::operators::{assemble_limit, assemble_original, extend_e, q_grid, verify_ladder, LadderGrids, LadderReport};
use crate::spectral::{neumann_eigenvalue_1d, resolvent_defect, spectral_convergence_study, SpectralOptions, SpectralRow};

/// One acceptance-tagged check inside a study.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub kind: StudyKind,
    pub hypothesis: Hypothesis,
    pub config_hash: String,
    /// `(file name, table)`; the checks table is last.
    pub tables: Vec<(String, CsvTable)>,
    /// `(file name, document)`.
    pub plots: Vec<(String, String)>,
    pub checks: Vec<Check>,
}

impl StudyOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn table(&self, name: &str) -> Option<&CsvTable> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// Writes every table and plot under `dir`, plus the canonical
    /// configuration as `config.cfg`.
    pub fn write(&self, dir: &Path, config: &StudyConfig) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut put = |name: &str, text: &str| -> Result<()> {
            let path = dir.join(name);
            std::fs::write(&path, text)?;
            written.push(path);
            Ok(())
        };
        put("config.cfg", &config.to_text())?;
        for (name, t) in &self.tables {
            put(name, &t.to_text())?;
        }
        for (name, svg) in &self.plots {
            put(name, svg)?;
        }
        Ok(written)
    }
}

/// Runs `kind` for `config` on a pool of `jobs` worker threads (all cores
/// when `None`).
pub fn run_study_with_jobs(config: &StudyConfig, kind: StudyKind, jobs: Option<usize>) -> Result<StudyOutput> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::Argument("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| Error::Study(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_study(config, kind))
}

/// Runs one study on the current rayon pool. Per-epsilon failures become
/// failed checks and the remaining rows are still reported.
pub fn run_study(config: &StudyConfig, kind: StudyKind) -> Result<StudyOutput> {
    if let Some(k) = config.kind {
        if k != kind {
            return Err(Error::Argument(format!("configuration declares kind `{k}` but `{kind}` was requested")));
        }
    }
    let mut out = StudyOutput {
        kind,
        hypothesis: config.hypothesis(),
        config_hash: config.hash(),
        tables: Vec::new(),
        plots: Vec::new(),
        checks: Vec::new(),
    };
    if out.hypothesis == Hypothesis::Outside {
        out.checks.push(Check::new(
            "hypothesis flag",
            true,
            format!("out-of-hypothesis spec (alpha = {}, beta = {}); results are a negative control", config.alpha, config.beta),
        ));
    }
    match kind {
        StudyKind::Ladder => ladder(config, &mut out)?,
        StudyKind::Homogenize => homogenize(config, &mut out)?,
        StudyKind::Spectrum => spectrum(config, &mut out)?,
        StudyKind::Resolvent => resolvent(config, &mut out)?,
        StudyKind::Parabolic => parabolic(config, &mut out)?,
        StudyKind::Equilibria => equilibria_study(config, &mut out)?,
    }
    let mut checks = CsvTable::new(CHECKS_SCHEMA);
    for c in &out.checks {
        checks.push(vec![c.name.clone().into(), c.passed.into(), c.detail.clone().into()])?;
    }
    out.tables.push(("checks.csv".into(), checks));
    let prov = provenance(config, kind);
    for (_, t) in out.tables.iter_mut() {
        t.provenance = prov.clone();
    }
    if config.svg {
        out.plots = plots(&out)?;
    }
    Ok(out)
}

fn provenance(config: &StudyConfig, kind: StudyKind) -> Vec<(String, String)> {
    vec![
        ("config_sha256".into(), config.hash()),
        ("tool".into(), format!("thinhomog {}", env!("CARGO_PKG_VERSION"))),
        ("generated".into(), chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
        ("study".into(), kind.to_string()),
        (
            "hypothesis".into(),
            match config.hypothesis() {
                Hypothesis::Within => "within".into(),
                Hypothesis::Outside => "outside".into(),
            },
        ),
    ]
}

fn plots(out: &StudyOutput) -> Result<Vec<(String, String)>> {
    let first = |name: &str| out.table(name).cloned().unwrap_or_else(|| CsvTable::new(&[]));
    let with_prov = |mut t: CsvTable| {
        t.provenance = out.tables.last().map(|(_, c)| c.provenance.clone()).unwrap_or_default();
        t
    };
    let series = |x: &str, y: &str, s: Option<&str>, slope: Option<f64>| PlotKind::LogLog {
        x: x.into(),
        y: y.into(),
        series: s.map(Into::into),
        reference_slope: slope,
    };
    let doc = match out.kind {
        StudyKind::Ladder => {
            render_svg(&with_prov(first("ladder.csv")), &series("eta", "dist_total", None, Some(1.0)), "ladder distance against eta")?
        }
        StudyKind::Homogenize => return Ok(Vec::new()),
        StudyKind::Spectrum => {
            render_svg(&with_prov(first("spectrum.csv")), &series("epsilon", "gap", Some("n"), None), "eigenvalue gaps")?
        }
        StudyKind::Resolvent => {
            render_svg(&with_prov(first("resolvent.csv")), &series("epsilon", "defect_max", None, None), "resolvent defect")?
        }
        StudyKind::Parabolic => {
            render_svg(&with_prov(first("dynamics.csv")), &series("epsilon", "defect_H1", Some("t"), None), "semigroup defect")?
        }
        StudyKind::Equilibria => render_svg(
            &with_prov(first("dynamics.csv")),
            &PlotKind::Bars { label: "epsilon".into(), value: "semidist_attractor_surrogate".into() },
            "attractor surrogate semidistance",
        )?,
    };
    Ok(vec![(format!("{}.svg", out.kind), doc)])
}

/// Strictly decreasing sequence.
pub fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Non-increasing up to `tol`.
pub fn non_increasing(v: &[f64], tol: f64) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] + tol)
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", ")
}

/// Runs `work` for every epsilon of the sweep in parallel, recording
/// failures as checks; the successful results keep sweep order.
fn sweep<T: Send>(
    config: &StudyConfig,
    out: &mut StudyOutput,
    work: impl Fn(&ThinDomainSpec) -> Result<T> + Sync,
) -> Vec<(f64, T)> {
    let results: Vec<(f64, Result<T>)> =
        config.epsilons.par_iter().map(|&eps| (eps, config.spec_at(eps).and_then(|s| work(&s)))).collect();
    let mut ok = Vec::new();
    for (eps, r) in results {
        match r {
            Ok(v) => ok.push((eps, v)),
            Err(e) => out.checks.push(Check::new(format!("eps = {eps}"), false, format!("eps = {eps}: {e}"))),
        }
    }
    ok
}

fn grids(config: &StudyConfig, spec: &ThinDomainSpec) -> LadderGrids {
    LadderGrids::resolving(spec, config.per_wavelength, config.min_x_cells, config.y_cells)
}

fn model_for(config: &StudyConfig) -> Result<HomogenizedModel> {
    let eps = *config.epsilons.first().ok_or_else(|| Error::Argument("empty epsilon list".into()))?;
    let spec = config.spec_at(eps)?;
    let opts = HomogenizationOptions { t_max: config.t_max, cells_2d: config.cells_2d, ..HomogenizationOptions::default() };
    HomogenizedModel::for_spec(&spec, config.periods, &opts)
}

/// Spread `max / min` of the ladder ratios and whether the raw distance
/// strictly decreases: the ladder trend holds when the spread is
/// below 2 and the distance decreases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderTrend {
    pub spread: f64,
    pub decreasing: bool,
}

impl LadderTrend {
    pub fn of(rows: &[LadderReport]) -> Self {
        let ratios: Vec<f64> = rows.iter().map(|r| r.ratio_total_over_eta).collect();
        let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let dist: Vec<f64> = rows.iter().map(|r| r.dist_total).collect();
        Self { spread: if lo > 0.0 { hi / lo } else { f64::INFINITY }, decreasing: strictly_decreasing(&dist) }
    }

    pub fn holds(&self) -> bool {
        self.spread < 2.0 && self.decreasing
    }
}

fn ladder(config: &StudyConfig, out: &mut StudyOutput) -> Result<()> {
    let mode = config.source_mode as f64 * std::f64::consts::PI;
    let extents = config.base.extents();
    let rows = sweep(config, out, |spec| {
        verify_ladder(spec, &grids(config, spec), |x, _| x.iter().zip(&extents).map(|(xi, l)| (mode * xi / l).cos()).product())
    });
    let mut t = CsvTable::new(LADDER_SCHEMA);
    for (_, r) in &rows {
        t.push(vec![
            r.epsilon.into(),
            r.eta.into(),
            r.dist_transformed_simplified.into(),
            r.dist_simplified_reduced.into(),
            r.dist_total.into(),
            r.ratio_total_over_eta.into(),
            r.solver_iters.into(),
        ])?;
    }
    out.tables.push(("ladder.csv".into(), t));
    let reports: Vec<LadderReport> = rows.into_iter().map(|(_, r)| r).collect();
    let finite = reports.iter().all(|r| r.ratio_total_over_eta.is_finite());
    out.checks.push(Check::new("ratios finite", finite, ""));
    if reports.len() < 2 {
        return Ok(());
    }
    let trend = LadderTrend::of(&reports);
    let dist: Vec<f64> = reports.iter().map(|r| r.dist_total).collect();
    let detail = format!("ratio spread {:.4}, dist_total [{}]", trend.spread, fmt_list(&dist));
    match out.hypothesis {
        Hypothesis::Within if reports.iter().all(|r| r.eta == 0.0) => {
            let worst = dist.iter().cloned().fold(0.0, f64::max);
            out.checks.push(Check::new("constant profiles: distance at discretisation level", worst < 1e-6, format!("max dist_total {worst:.3e}")));
        }
        Hypothesis::Within => {
            out.checks.push(Check::new("ratio spread below 2", trend.spread < 2.0, detail.clone()));
            out.checks.push(Check::new("dist_total strictly decreasing", trend.decreasing, detail));
        }
        Hypothesis::Outside => {
            out.checks.push(Check::new("negative control fails the ladder trend", !trend.holds(), detail));
        }
    }
    Ok(())
}

fn homogenize(config: &StudyConfig, out: &mut StudyOutput) -> Result<()> {
    let model = match model_for(config) {
        Ok(m) => m,
        Err(e) => {
            out.checks.push(Check::new("homogenized model", false, e.to_string()));
            out.tables.push(("homogenize.csv".into(), CsvTable::new(HOMOGENIZE_SCHEMA)));
            return Ok(());
        }
    };
    let a = model.a0();
    let mut t = CsvTable::new(HOMOGENIZE_SCHEMA);
    let two_d = model.dim() == 2;
    t.push(vec![
        model.regime.name().into(),
        model.method.into(),
        model.p0().into(),
        a[(0, 0)].into(),
        two_d.then(|| a[(0, 1)]).into(),
        two_d.then(|| a[(1, 1)]).into(),
        model.weight.into(),
        model.error_proxy.into(),
        model.quad_points.into(),
    ])?;
    out.tables.push(("homogenize.csv".into(), t));

    let (g, h) = (&config.top, &config.bottom);
    let cross = |name: &str, other: Result<f64>, tol: f64, out: &mut StudyOutput| match other {
        Ok(v) => {
            let d = (v - a[(0, 0)]).abs();
            out.checks.push(Check::new(format!("{} agrees with {name}", model.method), d <= tol, format!("|difference| = {d:.3e}, tolerance {tol:e}")));
        }
        Err(e) => out.checks.push(Check::new(format!("{} agrees with {name}", model.method), false, e.to_string())),
    };
    match model.regime {
        Regime::SameOrderCommensurate => {
            let v = common_period(g, h).and_then(|p| cell_problem(|z| g.value_nd(z) + h.value_nd(z), &CellMesh::default_for(1, p))).map(|s| s.a0[(0, 0)]);
            cross("cell problem", v, 1e-6, out);
        }
        Regime::SameOrderIncommensurate => cross("two-scale mean", p0_two_scale(g, h).map(|e| e.p0), 1e-3, out),
        Regime::DifferentOrder => {
            let (inner, outer) = if config.beta > config.alpha { (g, h) } else { (h, g) };
            let v = reiterated_a0(inner, outer, 1, &ReiteratedMesh::default_for(1)).map(|r| r.model.a0()[(0, 0)]);
            cross("reiterated cell problems", v, 1e-6, out);
        }
        _ => {
            let asym = (a - a.transpose()).amax();
            let min_eig = a.clone().symmetric_eigenvalues().min();
            out.checks.push(Check::new("A0 symmetric positive definite", asym <= 1e-8 && min_eig > 0.0, format!("asymmetry {asym:.3e}, smallest eigenvalue {min_eig:.6}")));
        }
    }
    Ok(())
}

fn spectrum(config: &StudyConfig, out: &mut StudyOutput) -> Result<()> {
    let model = model_for(config)?;
    let opts = SpectralOptions { per_wavelength: config.per_wavelength, min_x_cells: config.min_x_cells, y_cells: config.y_cells };
    let rows: Vec<(f64, (Vec<SpectralRow>, f64))> = sweep(config, out, |spec| {
        let r = spectral_convergence_study(spec, &model, &[spec.epsilon], config.n_max, &opts)?;
        let h = config.base.extent(0) / grids(config, spec).x_cells[0] as f64;
        Ok((r.rows, h))
    });
    let mut t = CsvTable::new(SPECTRUM_SCHEMA);
    for (_, (rs, _)) in &rows {
        for r in rs {
            t.push(vec![r.epsilon.into(), r.n.into(), r.lambda_eps.into(), r.lambda_0.into(), r.gap.into(), r.eigfun_dist.into()])?;
        }
    }
    out.tables.push(("spectrum.csv".into(), t));
    let all: Vec<&SpectralRow> = rows.iter().flat_map(|(_, (rs, _))| rs.iter()).collect();
    let first: Vec<f64> = all.iter().filter(|r| r.n == 1).map(|r| (r.lambda_eps - 1.0).abs()).collect();
    let worst = first.iter().cloned().fold(0.0, f64::max);
    out.checks.push(Check::new("lambda_1 = 1", worst <= 1e-8, format!("max |lambda_1 - 1| = {worst:.3e}")));
    if rows.len() >= 2 {
        for n in 2..=config.n_max {
            let gaps: Vec<f64> = all.iter().filter(|r| r.n == n).map(|r| r.gap).collect();
            let dists: Vec<f64> = all.iter().filter(|r| r.n == n).map(|r| r.eigfun_dist).collect();
            out.checks.push(Check::new(format!("gap n = {n} decreasing"), strictly_decreasing(&gaps), fmt_list(&gaps)));
            out.checks.push(Check::new(format!("eigenfunction distance n = {n} decreasing"), strictly_decreasing(&dists), fmt_list(&dists)));
        }
    }
    if let (Some(q), 1) = (model.diffusion(), config.base.dim()) {
        // Linear elements overestimate q k^2 by q k^4 h^2 / 12 to leading order.
        let l = config.base.extent(0);
        let mut ok = true;
        let mut worst = 0.0f64;
        for (_, (rs, h)) in &rows {
            for r in rs {
                let exact = neumann_eigenvalue_1d(q, l, r.n);
                let k = (r.n - 1) as f64 * std::f64::consts::PI / l;
                let allowance = 2.0 * q * k.powi(4) * h * h / 12.0 + 1e-9 * exact;
                let d = (r.lambda_0 - exact).abs();
                worst = worst.max(d);
                ok &= d <= allowance;
            }
        }
        out.checks.push(Check::new("limit eigenvalues match the closed form", ok, format!("max |lambda_0 - closed form| = {worst:.3e}")));
    }
    Ok(())
}

fn resolvent(config: &StudyConfig, out: &mut StudyOutput) -> Result<()> {
    let model = model_for(config)?;
    let rows = sweep(config, out, |spec| resolvent_defect(spec, &grids(config, spec), &model, config.probes, config.seed));
    let mut t = CsvTable::new(RESOLVENT_SCHEMA);
    for (_, r) in &rows {
        t.push(vec![r.epsilon.into(), r.defect_max.into(), r.defect_mean.into(), r.probes.into(), r.seed.into()])?;
    }
    out.tables.push(("resolvent.csv".into(), t));
    if rows.len() >= 2 {
        let d: Vec<f64> = rows.iter().map(|(_, r)| r.defect_max).collect();
        out.checks.push(Check::new("defect_max decreasing", strictly_decreasing(&d), fmt_list(&d)));
    }
    Ok(())
}

fn parabolic(config: &StudyConfig, out: &mut StudyOutput) -> Result<()> {
    let model = model_for(config)?;
    let extents = config.base.extents();
    let u0 = |x: &[f64]| config.initial.value(x, &extents);
    let rows = sweep(config, out, |spec| {
        let g = grids(config, spec);
        let (a, b) = rayon::join(
            || semigroup_defect(spec, &g, &model, &config.nonlinearity, &config.t_list, u0, config.dt),
            || semigroup_defect(spec, &g, &model, &config.nonlinearity, &config.t_list, u0, config.dt / 2.0),
        );
        Ok((a?, b?))
    });
    let mut t = CsvTable::new(DYNAMICS_SCHEMA);
    for (_, (d, _)) in &rows {
        for r in &d.rows {
            t.push(vec![
                r.epsilon.into(),
                r.t.into(),
                r.defect_h1.into(),
                r.defect_l2.into(),
                d.gamma_fit.into(),
                Cell::Missing,
                Cell::Missing,
                Cell::Missing,
                Cell::Missing,
                config.dt.into(),
                Cell::Missing,
            ])?;
        }
    }
    out.tables.push(("dynamics.csv".into(), t));
    let bounded = rows.iter().all(|(_, (d, h))| d.max_sup <= d.absorbing_bound && h.max_sup <= h.absorbing_bound);
    out.checks.push(Check::new("absorbing bound respected", bounded, ""));
    let mut bias = 0.0f64;
    for (_, (d, h)) in &rows {
        for (a, b) in d.rows.iter().zip(&h.rows) {
            bias = bias.max((a.defect_h1 - b.defect_h1).abs() / a.defect_h1.max(f64::MIN_POSITIVE));
        }
    }
    out.checks.push(Check::new(
        "half-dt rerun within tolerance",
        bias <= config.dt_bias_tol,
        format!("max relative change {bias:.3e}, tolerance {}", config.dt_bias_tol),
    ));
    if rows.len() >= 2 {
        for (k, tk) in config.t_list.iter().enumerate() {
            let d: Vec<f64> = rows.iter().map(|(_, (d, _))| d.rows[k].defect_h1).collect();
            out.checks.push(Check::new(format!("defect at t = {tk} decreasing"), strictly_decreasing(&d), fmt_list(&d)));
        }
    }
    Ok(())
}

/// Constant equilibria of `-div(A grad u) + u = f(u)`: the roots of
/// `f(s) - s`, located by sign changes on a fine grid and bisection.
pub fn constant_equilibria(nl: &dynamics::Nonlinearity, lo: f64, hi: f64) -> Vec<f64> {
    let r = |s: f64| nl.value(s) - s;
    let n = 6000;
    let mut roots = Vec::new();
    let mut prev = (lo, r(lo));
    if prev.1 == 0.0 {
        roots.push(lo);
    }
    for i in 1..=n {
        let s = lo + (hi - lo) * i as f64 / n as f64;
        let v = r(s);
        if v == 0.0 {
            roots.push(s);
        } else if prev.1 * v < 0.0 {
            let (mut a, mut b) = (prev.0, s);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if r(a) * r(m) <= 0.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev = (s, v);
    }
    roots
}

/// Per-epsilon equilibria and attractor-surrogate comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriaRow {
    pub epsilon: f64,
    pub count_eps: usize,
    pub count_0: usize,
    pub semidist_equilibria: f64,
    pub semidist_attractor: f64,
    pub worst_residual: f64,
    pub limit_constants_found: bool,
}

/// Equilibria of the thin-domain and limit problems at `spec.epsilon` and
/// the rescaled-H1 semidistances from the thin-domain sets to the extended
/// limit sets.
pub fn equilibria_row(spec: &ThinDomainSpec, grids: &LadderGrids, model: &HomogenizedModel, config: &StudyConfig) -> Result<EquilibriaRow> {
    let nl = &config.nonlinearity;
    let q = q_grid(spec, &grids.x_cells, grids.y_cells)?;
    let omega = q.base()?;
    let op_eps = assemble_original(spec, &q)?;
    let op_0 = assemble_limit(model, &omega)?;
    let (set_eps, set_0) = rayon::join(
        || default_seeds(&op_eps).and_then(|s| equilibria(&op_eps, nl, &s)),
        || default_seeds(&op_0).and_then(|s| equilibria(&op_0, nl, &s)),
    );
    let (set_eps, set_0) = (set_eps?, set_0?);
    let extend = |v: &Vec<f64>| -> Result<Vec<f64>> {
        extend_e(&crate::operators::Field::new(crate::operators::FieldTag::State, v.clone())?, &q).map(|f| f.values)
    };
    let e0: Vec<Vec<f64>> = set_0.fields().iter().map(extend).collect::<Result<_>>()?;
    let norm = |d: &[f64]| op_eps.energy_norm(d);
    let semidist_equilibria = if set_eps.is_empty() { 0.0 } else { semidistance(&set_eps.fields(), &e0, norm)? };

    let seeds0 = random_smooth_states(config.attractor_seeds, config.seed, &omega.nodes(), &spec.base.extents());
    let seeds_eps: Vec<Vec<f64>> = seeds0.iter().map(extend).collect::<Result<_>>()?;
    let (sur_eps, sur_0) = rayon::join(
        || attractor_surrogate(&op_eps, nl, &seeds_eps, config.t_transient, config.dt),
        || attractor_surrogate(&op_0, nl, &seeds0, config.t_transient, config.dt),
    );
    let (sur_eps, sur_0) = (sur_eps?, sur_0?);
    let mut target: Vec<Vec<f64>> = sur_0.iter().map(extend).collect::<Result<_>>()?;
    target.extend(e0);
    let semidist_attractor = semidistance(&sur_eps, &target, norm)?;

    let worst_residual = set_eps.members.iter().chain(&set_0.members).map(|m| m.residual).fold(0.0, f64::max);
    let window = dynamics::WINDOW;
    let limit_constants_found =
        constant_equilibria(nl, -window, window).iter().all(|&c| set_0.contains_constant(c, 1e-6));
    Ok(EquilibriaRow {
        epsilon: spec.epsilon,
        count_eps: set_eps.len(),
        count_0: set_0.len(),
        semidist_equilibria,
        semidist_attractor,
        worst_residual,
        limit_constants_found,
    })
}

fn equilibria_study(config: &StudyConfig, out: &mut StudyOutput) -> Result<()> {
    let model = model_for(config)?;
    let rows = sweep(config, out, |spec| equilibria_row(spec, &grids(config, spec), &model, config));
    let mut t = CsvTable::new(DYNAMICS_SCHEMA);
    for (_, r) in &rows {
        t.push(vec![
            r.epsilon.into(),
            Cell::Missing,
            Cell::Missing,
            Cell::Missing,
            Cell::Missing,
            r.count_eps.into(),
            r.count_0.into(),
            r.semidist_equilibria.into(),
            r.semidist_attractor.into(),
            config.dt.into(),
            config.attractor_seeds.into(),
        ])?;
    }
    out.tables.push(("dynamics.csv".into(), t));
    let worst = rows.iter().map(|(_, r)| r.worst_residual).fold(0.0, f64::max);
    out.checks.push(Check::new("Newton residuals", worst <= dynamics::NEWTON_TOL, format!("max residual {worst:.3e}")));
    let roots = constant_equilibria(&config.nonlinearity, -dynamics::WINDOW, dynamics::WINDOW);
    out.checks.push(Check::new(
        "limit equilibria include the constant roots",
        rows.iter().all(|(_, r)| r.limit_constants_found),
        format!("roots of f(s) - s: [{}]", fmt_list(&roots)),
    ));
    if rows.len() >= 2 {
        let e: Vec<f64> = rows.iter().map(|(_, r)| r.semidist_equilibria).collect();
        let a: Vec<f64> = rows.iter().map(|(_, r)| r.semidist_attractor).collect();
        out.checks.push(Check::new("equilibria semidistance non-increasing", non_increasing(&e, config.monotone_tol), fmt_list(&e)));
        out.checks.push(Check::new("attractor surrogate semidistance non-increasing", non_increasing(&a, config.monotone_tol), fmt_list(&a)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BaseDomain, BoundaryProfile};

    fn constant_config() -> StudyConfig {
        StudyConfig::with_geometry(
            BaseDomain::unit_interval(),
            BoundaryProfile::constant(1.0),
            BoundaryProfile::constant(2.0),
            0.5,
            0.5,
            vec![0.1, 0.05],
        )
    }

    #[test]
    fn constant_roots_of_allen_cahn() {
        let r = constant_equilibria(&dynamics::Nonlinearity::allen_cahn(), -3.0, 3.0);
        assert_eq!(r.len(), 3);
        for (a, b) in r.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn ladder_on_constant_profiles_passes() {
        let mut c = constant_config();
        c.min_x_cells = 32;
        let out = run_study_with_jobs(&c, StudyKind::Ladder, Some(2)).unwrap();
        assert!(out.passed(), "{:?}", out.checks);
        let t = out.table("ladder.csv").unwrap();
        assert_eq!(t.rows.len(), 2);
        assert!(t.matches_schema(LADDER_SCHEMA));
        assert_eq!(out.plots.len(), 1);
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let mut c = constant_config();
        c.kind = Some(StudyKind::Spectrum);
        assert!(run_study(&c, StudyKind::Ladder).is_err());
    }

    #[test]
    fn too_many_modes_names_the_epsilon() {
        let mut c = StudyConfig::standard();
        c.epsilons = vec![0.5, 0.1];
        c.n_max = 12;
        c.min_x_cells = 16;
        c.svg = false;
        let out = run_study(&c, StudyKind::Spectrum).unwrap();
        assert!(!out.passed());
        assert!(out.checks.iter().any(|k| !k.passed && k.detail.contains("eps = 0.5")), "{:?}", out.checks);
    }

    #[test]
    fn trend_helpers() {
        assert!(strictly_decreasing(&[3.0, 2.0, 1.0]) && !strictly_decreasing(&[3.0, 3.0]));
        assert!(non_increasing(&[1e-12, 2e-12], 1e-8) && !non_increasing(&[1.0, 2.0], 1e-8));
    }
}
