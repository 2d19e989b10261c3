//! Effective coefficients of the reduced problem as `eps -> 0`.
//!
//! With `G(x) = g(x / eps^beta) + h(x / eps^alpha)` the reduced problem is
//! `-(1/G) div(G grad w) + w = f_hat`. Its limit is
//! `-(1/W) div(A0 grad u) + u = f_hat` with `W = M(g) + M(h)`. In one base
//! dimension `A0 = p0` is a harmonic-type mean of `G`:
//!
//! * same exponent, commensurate periods: mean of `1/(g + h)` over the
//!   common period;
//! * same exponent, incommensurate periods: ergodic average of `1/(g + h)`;
//! * different exponents: the double average of `1/(g(y) + h(z))`.
//!
//! In two base dimensions `A0` comes from periodic cell problems (or their
//! truncated and reiterated variants).

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::fem::{assemble, assemble_load, integrate, Coefficient, Cover, Grid};
use crate::geometry::{BoundaryProfile, ProfileKind, ThinDomainSpec};
use crate::operators::{average_m_fn, Field, FieldTag};
use crate::quadrature::{refine_simpson, refine_simpson_2d};
use crate::sparse::{default_max_iter, pcg, Jacobi, LineJacobi, Preconditioner};
use crate::{Error, Result};

/// Continued-fraction denominators are capped here.
pub const MAX_DENOMINATOR: u64 = 1_000_000;
/// Closure mismatch allowed for a common period, relative to its length.
pub const RATIONAL_TOL: f64 = 1e-9;
pub const INCOMMENSURATE_TOL: f64 = 1e-4;
pub const QUAD_TOL: f64 = 1e-10;
pub const TWO_SCALE_TOL: f64 = 1e-10;
/// Stage-1 samples per outer period in the reiterated procedure.
pub const REITERATED_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    SameOrderCommensurate,
    SameOrderIncommensurate,
    DifferentOrder,
    NdPeriodicCell,
    NdQuasiPeriodicTruncated,
    NdReiterated,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::SameOrderCommensurate => "same-order-commensurate",
            Regime::SameOrderIncommensurate => "same-order-incommensurate",
            Regime::DifferentOrder => "different-order",
            Regime::NdPeriodicCell => "nd-periodic-cell",
            Regime::NdQuasiPeriodicTruncated => "nd-quasiperiodic-truncated",
            Regime::NdReiterated => "nd-reiterated",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Caller declaration of whether the two periods are rationally related.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Commensurability {
    Commensurate,
    Incommensurate,
}

/// Regime tag, effective tensor and weight of the homogenized problem.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizedModel {
    pub regime: Regime,
    /// Method that produced the tensor (`quadrature`, `ergodic`, `cell`, ...).
    pub method: &'static str,
    a0: DMatrix<f64>,
    /// `M(g) + M(h)`.
    pub weight: f64,
    /// Method-specific error estimate (refinement gap or inter-box deviation).
    pub error_proxy: f64,
    /// Quadrature nodes per axis, or cells per axis for cell problems.
    pub quad_points: usize,
}

impl HomogenizedModel {
    pub fn scalar(regime: Regime, method: &'static str, p0: f64, weight: f64, error_proxy: f64, quad_points: usize) -> Self {
        Self { regime, method, a0: DMatrix::from_element(1, 1, p0), weight, error_proxy, quad_points }
    }

    pub fn tensor(
        regime: Regime,
        method: &'static str,
        a0: DMatrix<f64>,
        weight: f64,
        error_proxy: f64,
        quad_points: usize,
    ) -> Self {
        Self { regime, method, a0, weight, error_proxy, quad_points }
    }

    pub fn dim(&self) -> usize {
        self.a0.nrows()
    }

    /// `p0` in one base dimension.
    pub fn p0(&self) -> Option<f64> {
        (self.dim() == 1).then(|| self.a0[(0, 0)])
    }

    pub fn a0(&self) -> &DMatrix<f64> {
        &self.a0
    }

    /// `p0 / W`, the diffusion coefficient of the limit operator in 1D.
    pub fn diffusion(&self) -> Option<f64> {
        self.p0().map(|p| p / self.weight)
    }

    /// `f_hat = f0 / W`.
    pub fn f_hat_from_f0(&self, f0: f64) -> f64 {
        f0 / self.weight
    }

    /// Homogenized model for a thin-domain spec. The commensurability of the
    /// two periods is a declaration: floating-point periods cannot certify
    /// irrationality.
    pub fn for_spec(spec: &ThinDomainSpec, periods: Commensurability, opts: &HomogenizationOptions) -> Result<Self> {
        let (g, h) = (&spec.top, &spec.bottom);
        let weight = mean_value(g) + mean_value(h);
        let same_order = spec.alpha == spec.beta || g.is_constant() || h.is_constant();
        match (spec.dim(), same_order, periods) {
            (1, true, Commensurability::Commensurate) => {
                let r = p0_commensurate(g, h)?;
                Ok(Self::scalar(Regime::SameOrderCommensurate, "quadrature", r.p0, weight, r.estimate, r.points))
            }
            (1, true, Commensurability::Incommensurate) => {
                let t_max = opts.t_max.unwrap_or(2e4 * g.period().max(h.period()));
                let r = p0_incommensurate(g, h, t_max)?;
                Ok(Self::scalar(Regime::SameOrderIncommensurate, "ergodic", r.p0, weight, r.estimate, r.points))
            }
            (1, false, _) => {
                let r = p0_two_scale(g, h)?;
                Ok(Self::scalar(Regime::DifferentOrder, "two-scale", r.p0, weight, r.estimate, r.points))
            }
            (n, true, Commensurability::Commensurate) => {
                let period = common_period(g, h)?;
                let mesh = CellMesh::uniform(n, period, opts.cells_2d);
                let sol = cell_problem(|z| g.value_nd(z) + h.value_nd(z), &mesh)?;
                Ok(Self::tensor(Regime::NdPeriodicCell, "cell", sol.a0, weight, sol.mean_residual, opts.cells_2d))
            }
            (n, true, Commensurability::Incommensurate) => {
                let r = quasiperiodic_a0(g, h, n, &opts.box_sizes, opts.box_cells_per_unit)?;
                Ok(r.model)
            }
            (n, false, _) => {
                let (inner, outer) = if spec.beta > spec.alpha { (g, h) } else { (h, g) };
                let r = reiterated_a0(inner, outer, n, &ReiteratedMesh::default_for(n))?;
                Ok(r.model)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizationOptions {
    pub t_max: Option<f64>,
    pub box_sizes: Vec<f64>,
    pub box_cells_per_unit: usize,
    pub cells_2d: usize,
}

impl Default for HomogenizationOptions {
    fn default() -> Self {
        Self { t_max: None, box_sizes: vec![4.0, 8.0, 16.0], box_cells_per_unit: 16, cells_2d: 64 }
    }
}

/// `(1 / L) integral_0^L P`. Exact (the offset) for constants and
/// trigonometric sums; composite Simpson from `10^4` points with doubling
/// to `1e-10` for the sawtooth.
pub fn mean_value(p: &BoundaryProfile) -> f64 {
    match p.kind() {
        ProfileKind::Constant | ProfileKind::Trig(_) => p.offset(),
        ProfileKind::SmoothedSawtooth { .. } => {
            let q = refine_simpson(|y| p.value(y), 0.0, p.period(), 1e-10, 10_000);
            q.value / p.period()
        }
    }
}

/// Harmonic-type mean with its quadrature diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P0Estimate {
    pub p0: f64,
    /// Refinement gap of the reciprocal average, or the `T / 2 -> T` gap of
    /// `p0` for ergodic averages.
    pub estimate: f64,
    pub points: usize,
    /// Averaging length (common period or `T`).
    pub length: f64,
}

/// First continued-fraction convergent `p / q` of `r > 0` with
/// `q <= max_den` whose closure mismatch `|q r - p|` is at most
/// `tol * max(1, r)`.
pub fn rational_reconstruction(r: f64, max_den: u64, tol: f64) -> Option<(u64, u64)> {
    if !(r > 0.0 && r.is_finite()) {
        return None;
    }
    let (mut h0, mut h1) = (0u64, 1u64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut x = r;
    for _ in 0..64 {
        let a = x.floor();
        if a > 1e12 {
            break;
        }
        let a = a as u64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let mismatch = (k1 as f64 * r - h1 as f64).abs();
        if mismatch <= tol * r.max(1.0) {
            return Some((h1, k1));
        }
        let frac = x - a as f64;
        if frac <= 0.0 {
            break;
        }
        x = 1.0 / frac;
    }
    None
}

/// Common period `q L1 = p L2` of the two profiles, or a regime error.
pub fn common_period(g: &BoundaryProfile, h: &BoundaryProfile) -> Result<f64> {
    match (g.is_constant(), h.is_constant()) {
        (true, true) => return Ok(1.0),
        (true, false) => return Ok(h.period()),
        (false, true) => return Ok(g.period()),
        _ => {}
    }
    let (l1, l2) = (g.period(), h.period());
    let (_, q) = rational_reconstruction(l1 / l2, MAX_DENOMINATOR, RATIONAL_TOL).ok_or_else(|| {
        Error::Regime(format!(
            "period ratio {} is not recognizably rational; use p0_incommensurate",
            l1 / l2
        ))
    })?;
    Ok(q as f64 * l1)
}

fn shortest_period(g: &BoundaryProfile, h: &BoundaryProfile) -> f64 {
    let mut p = f64::INFINITY;
    if !g.is_constant() {
        p = p.min(g.period());
    }
    if !h.is_constant() {
        p = p.min(h.period());
    }
    if p.is_finite() {
        p
    } else {
        1.0
    }
}

/// `1 / p0 = (1 / T) integral_0^T dy / (g + h)` over the common period.
pub fn p0_commensurate(g: &BoundaryProfile, h: &BoundaryProfile) -> Result<P0Estimate> {
    let t = common_period(g, h)?;
    let start = (32.0 * t / shortest_period(g, h)).ceil() as usize;
    let q = refine_simpson(|y| 1.0 / (g.value(y) + h.value(y)), 0.0, t, QUAD_TOL, start.max(16));
    if !q.converged {
        return Err(Error::Accuracy {
            message: "common-period quadrature did not converge".into(),
            values: vec![q.value / t],
            estimate: q.estimate,
        });
    }
    let inv = q.value / t;
    Ok(P0Estimate { p0: 1.0 / inv, estimate: q.estimate / t, points: q.points, length: t })
}

/// Ergodic average of `1 / (g + h)` at `T_max / 2` and `T_max`; the gap
/// between the two values of `p0` is the error estimate.
pub fn p0_incommensurate(g: &BoundaryProfile, h: &BoundaryProfile, t_max: f64) -> Result<P0Estimate> {
    let longest = g.period().max(h.period());
    if !(t_max >= 1e3 * longest) {
        return Err(Error::Argument(format!("T_max = {t_max} must be at least 1e3 times the longest period")));
    }
    let per = 16.0 / shortest_period(g, h);
    let avg = |t: f64| {
        let q = refine_simpson(|y| 1.0 / (g.value(y) + h.value(y)), 0.0, t, QUAD_TOL, (per * t).ceil() as usize);
        (q.value / t, q.points)
    };
    let (a_half, _) = avg(0.5 * t_max);
    let (a_full, points) = avg(t_max);
    let (p_half, p_full) = (1.0 / a_half, 1.0 / a_full);
    let estimate = (p_full - p_half).abs();
    if estimate > INCOMMENSURATE_TOL {
        return Err(Error::Accuracy {
            message: format!("ergodic average not converged at T = {t_max}"),
            values: vec![p_half, p_full],
            estimate,
        });
    }
    Ok(P0Estimate { p0: p_full, estimate, points, length: t_max })
}

/// `1 / p0 = (1 / (L1 L2)) integral integral dz dy / (g(y) + h(z))`.
pub fn p0_two_scale(g: &BoundaryProfile, h: &BoundaryProfile) -> Result<P0Estimate> {
    let (l1, l2) = (g.period(), h.period());
    let q = refine_simpson_2d(|y, z| 1.0 / (g.value(y) + h.value(z)), (0.0, l1), (0.0, l2), TWO_SCALE_TOL, 16);
    if !q.converged {
        return Err(Error::Accuracy {
            message: "two-scale quadrature did not converge".into(),
            values: vec![q.value / (l1 * l2)],
            estimate: q.estimate,
        });
    }
    let inv = q.value / (l1 * l2);
    Ok(P0Estimate { p0: 1.0 / inv, estimate: q.estimate / (l1 * l2), points: q.points, length: l1 * l2 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiophantineParams {
    pub l1: f64,
    pub l2: f64,
    pub s0: f64,
    pub c: f64,
    pub n: u64,
}

impl DiophantineParams {
    pub fn new(l1: f64, l2: f64, s0: f64, c: f64, n: u64) -> Result<Self> {
        if !(l1 > 0.0 && l2 > 0.0 && s0 > 0.0 && c > 0.0) || n < 1000 {
            return Err(Error::Argument("Diophantine parameters must be positive with N >= 1000".into()));
        }
        Ok(Self { l1, l2, s0, c, n })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiophantineReport {
    pub min_margin: f64,
    pub argmin: (i64, i64),
    pub passed: bool,
    pub pairs_scanned: u64,
}

/// Scans `0 < |n1| + |n2| <= N` with `n1 n2 < 0` for the smallest margin
/// `|n1 L1 + n2 L2| (|n1| + |n2|)^s0` and compares it with `C`.
///
/// The weight uses `|n1| + |n2|`: on the branch `n1 n2 < 0` the sum
/// `|n1 + n2|` vanishes at `n1 = -n2` for every pair of periods.
pub fn diophantine_check(p: &DiophantineParams) -> DiophantineReport {
    let mut best = f64::INFINITY;
    let mut arg = (0, 0);
    let mut scanned = 0u64;
    let n = p.n as i64;
    // (n1, n2) and (-n1, -n2) give the same margin: take n2 > 0 > n1.
    for n2 in 1..n {
        for m1 in 1..=(n - n2) {
            let n1 = -m1;
            scanned += 1;
            let lin = (n1 as f64 * p.l1 + n2 as f64 * p.l2).abs();
            if lin >= best {
                continue;
            }
            let margin = lin * ((m1 + n2) as f64).powf(p.s0);
            if margin < best {
                best = margin;
                arg = (n1, n2);
            }
        }
    }
    DiophantineReport { min_margin: best, argmin: arg, passed: best >= p.c, pairs_scanned: scanned }
}

/// Periodicity cell `[0, periods_0] x ...` and its cell counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMesh {
    pub periods: Vec<f64>,
    pub cells: Vec<usize>,
}

impl CellMesh {
    pub fn uniform(dim: usize, period: f64, cells: usize) -> Self {
        Self { periods: vec![period; dim], cells: vec![cells; dim] }
    }

    /// 2048 cells in 1D, 64 x 64 in 2D.
    pub fn default_for(dim: usize, period: f64) -> Self {
        Self::uniform(dim, period, if dim == 1 { 2048 } else { 64 })
    }
}

#[derive(Debug, Clone)]
pub struct CellProblemSolution {
    pub grid: Grid,
    /// Correctors `X^i`, mean-zero nodal vectors.
    pub correctors: Vec<Vec<f64>>,
    pub a0: DMatrix<f64>,
    /// Largest `|mean(X^i)|` after the mean subtraction.
    pub mean_residual: f64,
    /// Entry-wise `|a_ij - a_ji|` before symmetrisation.
    pub symmetry_residual: f64,
    pub iterations: usize,
}

/// Scalar-coefficient cell problem `-div(G (grad X^i - e_i)) = 0`.
pub fn cell_problem<F: Fn(&[f64]) -> f64>(g: F, mesh: &CellMesh) -> Result<CellProblemSolution> {
    cell_problem_tensor(
        |z| {
            let v = g(z);
            let mut a = [[0.0; 3]; 3];
            for (i, row) in a.iter_mut().enumerate() {
                row[i] = v;
            }
            a
        },
        mesh,
    )
}

/// Tensor-coefficient cell problem `-div(C (grad X^i - e_i)) = 0`, periodic
/// with zero mean; `a_ij = mean(C_ij) - mean(e_i . C grad X^j)`.
pub fn cell_problem_tensor<F: Fn(&[f64]) -> [[f64; 3]; 3]>(c: F, mesh: &CellMesh) -> Result<CellProblemSolution> {
    let grid = Grid::new(mesh.periods.clone(), mesh.cells.clone(), Cover::Cell)?;
    let d = grid.dim();
    let volume: f64 = mesh.periods.iter().product();
    let stiffness = assemble(&grid, 3, |z| Coefficient { a: c(z), c: 0.0 });
    let mass = assemble(&grid, 3, |_| Coefficient::mass(1.0));
    let pinned = stiffness.pinned(0);
    let precond: Box<dyn Preconditioner> = match LineJacobi::new(&pinned, grid.nodes_per_axis(d - 1)) {
        Ok(p) => Box::new(p),
        Err(_) => Box::new(Jacobi::new(&pinned)),
    };
    let ones = vec![1.0; grid.node_count()];
    let mut correctors = Vec::with_capacity(d);
    let mut loads = Vec::with_capacity(d);
    let mut iterations = 0;
    let mut mean_residual: f64 = 0.0;
    for i in 0..d {
        let b = assemble_load(&grid, 3, |z| {
            let a = c(z);
            ([a[0][i], a[1][i], a[2][i]], 0.0)
        });
        let mut rhs = b.clone();
        rhs[0] = 0.0;
        let mut x = vec![0.0; grid.node_count()];
        let stats = pcg(&pinned, &rhs, &mut x, precond.as_ref(), 1e-10, default_max_iter(grid.node_count()).max(20 * grid.nodes_per_axis(0)))
            .map_err(|e| Error::Assembly(format!("cell problem {i}: {e}")))?;
        iterations += stats.iterations;
        let mean = mass.bilinear(&ones, &x) / volume;
        x.iter_mut().for_each(|v| *v -= mean);
        mean_residual = mean_residual.max((mass.bilinear(&ones, &x) / volume).abs());
        correctors.push(x);
        loads.push(b);
    }
    let mut a0 = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let mean_c = integrate(&grid, 3, |z| c(z)[i][j]) / volume;
            let corr: f64 = loads[i].iter().zip(&correctors[j]).map(|(b, x)| b * x).sum();
            a0[(i, j)] = mean_c - corr / volume;
        }
    }
    let symmetry_residual = (&a0 - a0.transpose()).amax();
    let a0 = (&a0 + a0.transpose()) * 0.5;
    if a0.clone().symmetric_eigenvalues().min() <= 0.0 {
        return Err(Error::Assembly("homogenized tensor is not positive definite".into()));
    }
    Ok(CellProblemSolution { grid, correctors, a0, mean_residual, symmetry_residual, iterations })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxEstimate {
    pub half_width: f64,
    pub a0: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiPeriodicReport {
    pub model: HomogenizedModel,
    pub boxes: Vec<BoxEstimate>,
    /// `max |A0(L_k) - A0(L_{k-1})|` for consecutive boxes.
    pub deviations: Vec<f64>,
}

/// Truncated-box approximation of the quasi-periodic corrector: periodic
/// cell problems on `[-L, L]^n` for each half-width `L`, with the
/// largest-box tensor returned and the last inter-box deviation as the
/// error proxy.
pub fn quasiperiodic_a0(
    g: &BoundaryProfile,
    h: &BoundaryProfile,
    dim: usize,
    box_sizes: &[f64],
    cells_per_unit: usize,
) -> Result<QuasiPeriodicReport> {
    if box_sizes.len() < 2 || box_sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument("box sizes must be an increasing list of at least two values".into()));
    }
    let weight = mean_value(g) + mean_value(h);
    let mut boxes = Vec::with_capacity(box_sizes.len());
    for &l in box_sizes {
        let cells = ((2.0 * l * cells_per_unit as f64).round() as usize).max(4);
        let mesh = CellMesh::uniform(dim, 2.0 * l, cells);
        let sol = cell_problem(
            |z| {
                let shifted: Vec<f64> = z.iter().map(|v| v - l).collect();
                g.value_nd(&shifted) + h.value_nd(&shifted)
            },
            &mesh,
        )?;
        boxes.push(BoxEstimate { half_width: l, a0: sol.a0 });
    }
    let deviations: Vec<f64> = boxes.windows(2).map(|w| (&w[1].a0 - &w[0].a0).amax()).collect();
    let last = *deviations.last().unwrap();
    if deviations.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Accuracy {
            message: "inter-box deviation does not decrease".into(),
            values: deviations,
            estimate: last,
        });
    }
    let cells = ((2.0 * box_sizes.last().unwrap() * cells_per_unit as f64).round()) as usize;
    let a0 = boxes.last().unwrap().a0.clone();
    let regime = if dim == 1 { Regime::SameOrderIncommensurate } else { Regime::NdQuasiPeriodicTruncated };
    Ok(QuasiPeriodicReport {
        model: HomogenizedModel::tensor(regime, "truncated-box", a0, weight, last, cells),
        boxes,
        deviations,
    })
}

/// Uniform cubic spline, periodic or natural.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x0: f64,
    step: f64,
    values: Vec<f64>,
    second: Vec<f64>,
    periodic: bool,
}

impl CubicSpline {
    /// `values[k]` at `x0 + k step`, `k < n`, for a function of period
    /// `n step`.
    pub fn periodic(x0: f64, step: f64, values: Vec<f64>) -> Self {
        let n = values.len();
        let mut m = DMatrix::zeros(n, n);
        let mut rhs = DVector::zeros(n);
        for k in 0..n {
            m[(k, k)] = 4.0;
            m[(k, (k + 1) % n)] += 1.0;
            m[(k, (k + n - 1) % n)] += 1.0;
            rhs[k] = 6.0 * (values[(k + 1) % n] - 2.0 * values[k] + values[(k + n - 1) % n]) / (step * step);
        }
        let second = m.lu().solve(&rhs).expect("periodic spline system is diagonally dominant");
        Self { x0, step, values, second: second.iter().cloned().collect(), periodic: true }
    }

    /// Natural spline through `values[k]` at `x0 + k step`, `k <= n - 1`.
    pub fn natural(x0: f64, step: f64, values: Vec<f64>) -> Self {
        let n = values.len();
        let mut m = DMatrix::zeros(n, n);
        let mut rhs = DVector::zeros(n);
        m[(0, 0)] = 1.0;
        m[(n - 1, n - 1)] = 1.0;
        for k in 1..n - 1 {
            m[(k, k)] = 4.0;
            m[(k, k + 1)] = 1.0;
            m[(k, k - 1)] = 1.0;
            rhs[k] = 6.0 * (values[k + 1] - 2.0 * values[k] + values[k - 1]) / (step * step);
        }
        let second = m.lu().solve(&rhs).expect("natural spline system is diagonally dominant");
        Self { x0, step, values, second: second.iter().cloned().collect(), periodic: false }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let mut t = (x - self.x0) / self.step;
        let k;
        if self.periodic {
            t = t.rem_euclid(n as f64);
            k = (t.floor() as usize).min(n - 1);
        } else {
            t = t.clamp(0.0, (n - 1) as f64);
            k = (t.floor() as usize).min(n - 2);
        }
        let s = t - k as f64;
        let k1 = if self.periodic { (k + 1) % n } else { k + 1 };
        let (y0, y1) = (self.values[k], self.values[k1]);
        let (m0, m1) = (self.second[k], self.second[k1]);
        let h2 = self.step * self.step;
        (1.0 - s) * y0 + s * y1 + h2 / 6.0 * (((1.0 - s).powi(3) - (1.0 - s)) * m0 + (s.powi(3) - s) * m1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReiteratedMesh {
    pub inner_cells: usize,
    pub outer_cells: usize,
    pub samples: usize,
}

impl ReiteratedMesh {
    pub fn default_for(dim: usize) -> Self {
        let cells = if dim == 1 { 2048 } else { 64 };
        Self { inner_cells: cells, outer_cells: cells, samples: REITERATED_SAMPLES }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReiteratedReport {
    pub model: HomogenizedModel,
    /// Stage-1 samples `(abscissa, A1)`: the outer position in 1D, the
    /// outer profile value in 2D.
    pub a1_samples: Vec<(f64, DMatrix<f64>)>,
}

/// Two-stage homogenization of `G = inner(z) + outer(x)`: stage 1 solves
/// the `z`-cell problem with the outer value frozen, stage 2 homogenizes the
/// interpolated `A1(x)` over the outer period.
///
/// In two base dimensions the outer profile is the coordinate mean of a 1D
/// profile, so `A1` depends on `x` only through the outer value `s`; stage 1
/// samples `s` uniformly on `[lower, upper]` and interpolates with a natural
/// spline.
pub fn reiterated_a0(
    inner: &BoundaryProfile,
    outer: &BoundaryProfile,
    dim: usize,
    mesh: &ReiteratedMesh,
) -> Result<ReiteratedReport> {
    let weight = mean_value(inner) + mean_value(outer);
    let inner_mesh = CellMesh::uniform(dim, inner.period(), mesh.inner_cells);
    let outer_mesh = CellMesh::uniform(dim, outer.period(), mesh.outer_cells);
    let stage1 = |s: f64| -> Result<DMatrix<f64>> {
        if inner.is_constant() {
            return Ok(DMatrix::identity(dim, dim) * (s + inner.offset()));
        }
        Ok(cell_problem(|z| s + inner.value_nd(z), &inner_mesh)?.a0)
    };
    let n = mesh.samples.max(4);
    let mut a1_samples = Vec::with_capacity(n);
    let a0;
    if outer.is_constant() {
        let a1 = stage1(outer.offset())?;
        a1_samples.push((0.0, a1.clone()));
        a0 = a1;
    } else if dim == 1 {
        let step = outer.period() / n as f64;
        let xs: Vec<f64> = (0..n).map(|k| k as f64 * step).collect();
        let vals: Result<Vec<DMatrix<f64>>> = {
            use rayon::prelude::*;
            xs.par_iter().map(|&x| stage1(outer.value(x))).collect()
        };
        let vals = vals?;
        let spline = CubicSpline::periodic(0.0, step, vals.iter().map(|m| m[(0, 0)]).collect());
        a1_samples.extend(xs.iter().cloned().zip(vals));
        a0 = cell_problem(|x| spline.eval(x[0]), &outer_mesh)?.a0;
    } else {
        let (lo, hi) = (outer.lower_bound(), outer.upper_bound());
        let step = (hi - lo) / (n - 1) as f64;
        let ss: Vec<f64> = (0..n).map(|k| lo + k as f64 * step).collect();
        let vals: Result<Vec<DMatrix<f64>>> = {
            use rayon::prelude::*;
            ss.par_iter().map(|&s| stage1(s)).collect()
        };
        let vals = vals?;
        let splines: Vec<Vec<CubicSpline>> = (0..dim)
            .map(|i| (0..dim).map(|j| CubicSpline::natural(lo, step, vals.iter().map(|m| m[(i, j)]).collect())).collect())
            .collect();
        a1_samples.extend(ss.iter().cloned().zip(vals));
        a0 = cell_problem_tensor(
            |x| {
                let s = outer.value_nd(x);
                let mut a = [[0.0; 3]; 3];
                for i in 0..dim {
                    for j in 0..dim {
                        a[i][j] = splines[i][j].eval(s);
                    }
                }
                a
            },
            &outer_mesh,
        )?
        .a0;
    }
    let regime = if dim == 1 { Regime::DifferentOrder } else { Regime::NdReiterated };
    Ok(ReiteratedReport {
        model: HomogenizedModel::tensor(regime, "reiterated", a0, weight, 0.0, mesh.outer_cells),
        a1_samples,
    })
}

/// Limit right-hand side: `f_hat` and `f0 = W f_hat` at the nodes of a grid
/// over `omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitRhs {
    pub f_hat: Field,
    pub f0: Field,
}

/// For an `eps`-independent source `f(x)`: `f_hat = f`, `f0 = W f`.
pub fn limit_rhs<F: Fn(&[f64]) -> f64>(model: &HomogenizedModel, grid: &Grid, f: F) -> LimitRhs {
    let vals: Vec<f64> = grid.nodes().iter().map(|x| f(x)).collect();
    LimitRhs {
        f0: Field { tag: FieldTag::Source, values: vals.iter().map(|v| model.weight * v).collect() },
        f_hat: Field { tag: FieldTag::Source, values: vals },
    }
}

/// For a source on the thin domain: `f0` approximated by `M_eps f` at the
/// given (smallest available) `eps`, and `f_hat = f0 / W`.
pub fn limit_rhs_from_source<F: Fn(&[f64], f64) -> f64>(
    model: &HomogenizedModel,
    spec: &ThinDomainSpec,
    grid: &Grid,
    f: F,
) -> LimitRhs {
    let f0 = average_m_fn(spec, grid, f);
    let f_hat = Field { tag: FieldTag::Source, values: f0.values.iter().map(|v| model.f_hat_from_f0(*v)).collect() };
    LimitRhs { f_hat, f0: Field { tag: FieldTag::Source, values: f0.values } }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sin2() -> BoundaryProfile {
        BoundaryProfile::sine(2.0, 1.0, 1.0).unwrap()
    }

    fn cos2() -> BoundaryProfile {
        BoundaryProfile::cosine(2.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn means() {
        assert_eq!(mean_value(&sin2()), 2.0);
        assert_eq!(mean_value(&BoundaryProfile::constant(1.5)), 1.5);
        let saw = BoundaryProfile::sawtooth(1.0, 0.5, 0.3, 1.0).unwrap();
        let m = mean_value(&saw);
        let doubled = refine_simpson(|y| saw.value(y), 0.0, 1.0, 1e-12, 20_000).value;
        assert!((m - doubled).abs() < 1e-10 && (m - 1.0).abs() < 1e-10);
    }

    // Oracle: integral over a period of 1/(a + b sin) is 1/sqrt(a^2 - b^2).
    #[test]
    fn closed_form_p0() {
        let r = p0_commensurate(&sin2(), &cos2()).unwrap();
        assert!((r.p0 - 14f64.sqrt()).abs() < 1e-8, "{}", r.p0);
        let r = p0_commensurate(&sin2(), &BoundaryProfile::constant(0.0)).unwrap();
        assert!((r.p0 - 3f64.sqrt()).abs() < 1e-8);
        let c = p0_commensurate(&BoundaryProfile::constant(1.0), &BoundaryProfile::constant(0.5)).unwrap();
        assert!((c.p0 - 1.5).abs() < 1e-14);
    }

    #[test]
    fn irrational_ratio_is_rejected() {
        let h = BoundaryProfile::cosine(2.0, 1.0, 1.0 / 2f64.sqrt()).unwrap();
        assert!(matches!(p0_commensurate(&sin2(), &h), Err(Error::Regime(_))));
        assert_eq!(rational_reconstruction(1.5, MAX_DENOMINATOR, RATIONAL_TOL), Some((3, 2)));
        assert_eq!(rational_reconstruction(0.7, MAX_DENOMINATOR, RATIONAL_TOL), Some((7, 10)));
    }

    #[test]
    fn commensurate_with_different_periods() {
        // Periods 1 and 2/3: common period 2.
        let h = BoundaryProfile::cosine(2.0, 1.0, 1.5).unwrap();
        let r = p0_commensurate(&sin2(), &h).unwrap();
        assert!((r.length - 2.0).abs() < 1e-12);
        let brute = refine_simpson(|y| 1.0 / (sin2().value(y) + h.value(y)), 0.0, 6.0, 1e-13, 512).value / 6.0;
        assert!((r.p0 - 1.0 / brute).abs() < 1e-9);
    }

    #[test]
    fn single_scale_incommensurate() {
        let r = p0_incommensurate(&sin2(), &BoundaryProfile::constant(0.0), 2e4).unwrap();
        assert!((r.p0 - 3f64.sqrt()).abs() < 1e-6);
        assert!(p0_incommensurate(&sin2(), &cos2(), 10.0).is_err());
    }

    #[test]
    fn two_scale_symmetry_and_constants() {
        let a = p0_two_scale(&sin2(), &cos2()).unwrap().p0;
        let b = p0_two_scale(&cos2(), &sin2()).unwrap().p0;
        assert!((a - b).abs() < 1e-10);
        let c = p0_two_scale(&BoundaryProfile::constant(1.0), &BoundaryProfile::constant(2.0)).unwrap().p0;
        assert!((c - 3.0).abs() < 1e-12);
    }

    #[test]
    fn diophantine_examples() {
        let r = diophantine_check(&DiophantineParams::new(1.0, 2.0, 2.0, 0.1, 1000).unwrap());
        assert!(!r.passed && r.min_margin == 0.0);
        let r = diophantine_check(&DiophantineParams::new(1.0, 2f64.sqrt(), 2.0, 0.1, 2000).unwrap());
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn cell_problem_constant() {
        let sol = cell_problem(|_| 2.5, &CellMesh::uniform(2, 1.0, 8)).unwrap();
        assert!((&sol.a0 - DMatrix::identity(2, 2) * 2.5).amax() < 1e-12);
        assert!(sol.correctors.iter().all(|x| x.iter().all(|v| v.abs() < 1e-12)));
    }

    #[test]
    fn cell_problem_1d_is_harmonic_mean() {
        let sol = cell_problem(|z| sin2().value(z[0]) + cos2().value(z[0]), &CellMesh::default_for(1, 1.0)).unwrap();
        assert!((sol.a0[(0, 0)] - 14f64.sqrt()).abs() < 1e-6, "{}", sol.a0[(0, 0)]);
        assert!(sol.mean_residual < 1e-8);
    }

    // Laminate oracle: G(z1, z2) = G1(z1) gives a11 = harmonic mean,
    // a22 = arithmetic mean, a12 = 0.
    #[test]
    fn laminate_cell_problem() {
        let g1 = |t: f64| 3.0 + (2.0 * std::f64::consts::PI * t).sin();
        let sol = cell_problem(|z| g1(z[0]), &CellMesh::default_for(2, 1.0)).unwrap();
        let harmonic = 1.0 / refine_simpson(|t| 1.0 / g1(t), 0.0, 1.0, 1e-13, 64).value;
        assert!((sol.a0[(0, 0)] - harmonic).abs() < 1e-4 * harmonic, "{}", sol.a0);
        assert!((sol.a0[(1, 1)] - 3.0).abs() < 1e-10);
        assert!(sol.a0[(0, 1)].abs() < 1e-10);
    }

    #[test]
    fn spline_reproduces_smooth_periodic_function() {
        let n = 64;
        let step = 1.0 / n as f64;
        let f = |x: f64| (2.0 * std::f64::consts::PI * x).sin();
        let s = CubicSpline::periodic(0.0, step, (0..n).map(|k| f(k as f64 * step)).collect());
        for i in 0..200 {
            let x = i as f64 / 200.0 * 1.7 - 0.3;
            assert!((s.eval(x) - f(x)).abs() < 1e-6);
        }
        let nat = CubicSpline::natural(1.0, 0.5, vec![1.0, 1.5, 2.0, 2.5]);
        assert!((nat.eval(1.75) - 1.75).abs() < 1e-14);
    }

    #[test]
    fn reiterated_matches_two_scale_in_1d() {
        let two = p0_two_scale(&sin2(), &cos2()).unwrap().p0;
        let r = reiterated_a0(&sin2(), &cos2(), 1, &ReiteratedMesh::default_for(1)).unwrap();
        assert!((r.model.a0()[(0, 0)] - two).abs() < 1e-6, "{} vs {two}", r.model.a0()[(0, 0)]);
    }

    #[test]
    fn limit_rhs_of_vertical_constant_source() {
        let m = HomogenizedModel::scalar(Regime::SameOrderCommensurate, "quadrature", 3.7, 4.0, 0.0, 0);
        let g = Grid::new(vec![1.0], vec![4], Cover::Omega).unwrap();
        let r = limit_rhs(&m, &g, |x| (std::f64::consts::PI * x[0]).cos());
        assert!((r.f_hat.values[0] - 1.0).abs() < 1e-15 && (r.f0.values[0] - 4.0).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn sandwich_and_scaling(a in 0.0f64..0.9, b in 0.0f64..0.9, c in 0.5f64..3.0) {
            let g = BoundaryProfile::sine(1.0, a, 1.0).unwrap();
            let h = BoundaryProfile::cosine(1.0, b, 2.0).unwrap();
            let (lo, hi) = (g.lower_bound() + h.lower_bound(), g.upper_bound() + h.upper_bound());
            let w = mean_value(&g) + mean_value(&h);
            for p in [p0_commensurate(&g, &h).unwrap().p0, p0_two_scale(&g, &h).unwrap().p0] {
                prop_assert!(p >= lo - 1e-12 && p <= w + 1e-12 && w <= hi + 1e-12);
            }
            let scaled = p0_commensurate(&g.scaled(c), &h.scaled(c)).unwrap().p0;
            prop_assert!((scaled - c * p0_commensurate(&g, &h).unwrap().p0).abs() < 1e-10 * c);
            let swapped = p0_two_scale(&h, &g).unwrap().p0;
            prop_assert!((swapped - p0_two_scale(&g, &h).unwrap().p0).abs() < 1e-10);
        }
    }
}
