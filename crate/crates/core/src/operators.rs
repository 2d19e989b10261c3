//! Finite element discretisations of the problem ladder and the rescaled
//! norms used to compare its members.
//!
//! Every thin-domain problem is posed on the fixed cylinder `Q` through the
//! maps of [`crate::geometry`]. Pulling the Neumann problem
//! `-Delta w + w = f` back through `Phi(x, y) = (x, eps (y K(x) - k1(x)))`
//! gives the weak form
//!
//! ```text
//! integral_Q K grad_x u . grad_x phi - a_i (u_y phi_{x_i} + u_{x_i} phi_y)
//!          + (|a|^2 / K + 1 / (eps^2 K)) u_y phi_y + K u phi  =  integral_Q K f phi
//! ```
//!
//! with `a = y grad K - grad k1` for the original domain and `a = y grad K`
//! for the flat-bottom domain (the transformed problem). The simplified
//! problem sets `a = 0`. All forms carry the factor `K`, so the rescaled
//! `Z_eps` inner product `(1/eps) integral_{R^eps}` is `integral_Q K u v`.

use crate::fem::{assemble, interpolate, Coefficient, Cover, Grid};
use crate::geometry::ThinDomainSpec;
use crate::homogenization::HomogenizedModel;
use crate::quadrature::simpson;
use crate::sparse::{default_max_iter, pcg, CsrMatrix, Jacobi, LineJacobi, Preconditioner, SolveStats};
use crate::{Error, Result};

/// Gauss points per axis used by every assembly.
pub const GAUSS_ORDER: usize = 3;
pub const DEFAULT_TOL: f64 = 1e-10;
/// Minimum cells per oscillation wavelength along each base axis.
pub const CELLS_PER_WAVELENGTH: usize = 8;
pub const MIN_VERTICAL_CELLS: usize = 16;
/// Vertical Simpson subintervals for thickness averages of closures.
pub const VERTICAL_SUBINTERVALS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    /// The Neumann problem on `R^eps`, pulled back to `Q` through `L o S`.
    Original,
    /// The Laplacian on the flat-bottom domain `R_a^eps`, pulled back by `S`.
    Transformed,
    /// The transformed problem without cross terms.
    Simplified,
    /// The thickness-weighted problem on `omega`.
    Reduced,
    /// The homogenized problem on `omega`.
    Limit,
}

/// A discretised bilinear form together with the weighted mass matrix of
/// its zero-order term. For every kind, `matrix` is the form of `L + I` (in
/// weighted form) and `mass` the weighted `Z` inner product, so the
/// generalized eigenproblem `matrix u = lambda mass u` is the spectral
/// problem of the operator.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    pub kind: ProblemKind,
    pub grid: Grid,
    pub matrix: CsrMatrix,
    pub mass: CsrMatrix,
    pub lumped_mass: Vec<f64>,
}

impl SparseOperator {
    fn new(kind: ProblemKind, grid: Grid, matrix: CsrMatrix, mass: CsrMatrix) -> Self {
        let lumped_mass = mass.row_sums();
        Self { kind, grid, matrix, mass, lumped_mass }
    }

    pub fn len(&self) -> usize {
        self.matrix.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Line block Jacobi along the last axis (vertical lines on `Q`), point
    /// Jacobi when the line blocks are unusable.
    pub fn preconditioner_for(&self, matrix: &CsrMatrix) -> Box<dyn Preconditioner> {
        if let Ok(p) = LineJacobi::new(matrix, self.grid.line_len()) {
            return Box::new(p);
        }
        Box::new(Jacobi::new(matrix))
    }

    pub fn preconditioner(&self) -> Box<dyn Preconditioner> {
        self.preconditioner_for(&self.matrix)
    }

    /// `sqrt(u^T A u)`, the energy norm of the form.
    pub fn energy_norm(&self, u: &[f64]) -> f64 {
        self.matrix.quad_form(u).max(0.0).sqrt()
    }

    /// `sqrt(u^T M u)`, the weighted L2 norm of the form.
    pub fn mass_norm(&self, u: &[f64]) -> f64 {
        self.mass.quad_form(u).max(0.0).sqrt()
    }

    pub fn symmetry_defect(&self) -> f64 {
        self.matrix.symmetry_defect()
    }

    /// Smallest Ritz value after `steps` Lanczos steps.
    pub fn smallest_ritz_value(&self, steps: usize) -> f64 {
        crate::sparse::smallest_ritz_value(&self.matrix, steps)
    }
}

/// Which unknown of the ladder a nodal vector approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldTag {
    /// `w^eps o L o S`.
    Original,
    /// `u^eps = v^eps o S`.
    Transformed,
    /// `w_1^eps`.
    Simplified,
    /// `u_1^eps = w_hat^eps` on `omega`.
    Reduced,
    /// `u_0` on `omega`.
    Limit,
    /// A right-hand side.
    Source,
    /// `E_eps u` for some `u` on `omega`.
    Extended,
    /// `M_eps f` or a thickness average.
    Averaged,
    /// A state of a parabolic flow or an eigenfunction.
    State,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub tag: FieldTag,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(tag: FieldTag, values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("non-finite field value at node {i}")));
        }
        Ok(Self { tag, values })
    }

    pub fn constant(tag: FieldTag, len: usize, c: f64) -> Self {
        Self { tag, values: vec![c; len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sub(&self, other: &Field) -> Vec<f64> {
        self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Grid over `Q` with `x_cells` cells along each base axis and `y_cells`
/// vertical cells.
pub fn q_grid(spec: &ThinDomainSpec, x_cells: &[usize], y_cells: usize) -> Result<Grid> {
    if x_cells.len() != spec.dim() {
        return Err(Error::Argument(format!("expected {} base cell counts", spec.dim())));
    }
    let mut extents = spec.base.extents();
    extents.push(1.0);
    let mut cells = x_cells.to_vec();
    cells.push(y_cells);
    Grid::new(extents, cells, Cover::Q)
}

pub fn omega_grid(spec: &ThinDomainSpec, x_cells: &[usize]) -> Result<Grid> {
    if x_cells.len() != spec.dim() {
        return Err(Error::Argument(format!("expected {} base cell counts", spec.dim())));
    }
    Grid::new(spec.base.extents(), x_cells.to_vec(), Cover::Omega)
}

/// Smallest number of cells along base axis `axis` that resolves the
/// fastest oscillation with [`CELLS_PER_WAVELENGTH`] cells.
pub fn required_cells(spec: &ThinDomainSpec, axis: usize) -> usize {
    match spec.shortest_wavelength() {
        None => 1,
        Some(w) => {
            let h = w / CELLS_PER_WAVELENGTH as f64;
            // Tolerate round-off when the extent is an exact multiple.
            ((spec.base.extent(axis) / h) * (1.0 - 1e-12)).ceil() as usize
        }
    }
}

fn check_resolution(spec: &ThinDomainSpec, grid: &Grid) -> Result<()> {
    let n = spec.dim();
    for axis in 0..n {
        let need = required_cells(spec, axis);
        if grid.cells()[axis] < need {
            return Err(Error::Resolution { axis, required: need + 1, actual: grid.nodes_per_axis(axis) });
        }
    }
    if grid.cover() == Cover::Q && grid.cells()[n] < MIN_VERTICAL_CELLS {
        return Err(Error::Resolution {
            axis: n,
            required: MIN_VERTICAL_CELLS + 1,
            actual: grid.nodes_per_axis(n),
        });
    }
    Ok(())
}

fn check_q(spec: &ThinDomainSpec, grid: &Grid) -> Result<()> {
    if grid.cover() != Cover::Q || grid.dim() != spec.dim() + 1 {
        return Err(Error::Argument("operator needs a grid over Q".into()));
    }
    if grid.extents()[..spec.dim()] != spec.base.extents()[..] {
        return Err(Error::Argument("grid extents do not match the base domain".into()));
    }
    check_resolution(spec, grid)
}

fn check_omega(spec: &ThinDomainSpec, grid: &Grid) -> Result<()> {
    if grid.cover() != Cover::Omega || grid.dim() != spec.dim() {
        return Err(Error::Argument("operator needs a grid over omega".into()));
    }
    check_resolution(spec, grid)
}

#[derive(Clone, Copy)]
enum CrossTerms {
    None,
    FlatBottom,
    Full,
}

fn q_coefficient(spec: &ThinDomainSpec, p: &[f64], cross: CrossTerms) -> Coefficient {
    let n = spec.dim();
    let x = &p[..n];
    let y = p[n];
    let th = spec.thickness();
    let k = th.value(x);
    let eps = spec.epsilon;
    let mut coef = Coefficient::mass(k);
    let mut a_sq = 0.0;
    for i in 0..n {
        coef.a[i][i] = k;
        let ai = match cross {
            CrossTerms::None => 0.0,
            CrossTerms::FlatBottom => y * th.partial(x, i),
            CrossTerms::Full => y * th.partial(x, i) - spec.k1_partial(x, i),
        };
        coef.a[i][n] = -ai;
        coef.a[n][i] = -ai;
        a_sq += ai * ai;
    }
    coef.a[n][n] = a_sq / k + 1.0 / (eps * eps * k);
    coef
}

fn q_mass(spec: &ThinDomainSpec, grid: &Grid) -> CsrMatrix {
    let n = spec.dim();
    assemble(grid, GAUSS_ORDER, |p| Coefficient::mass(spec.thickness().value(&p[..n])))
}

fn assemble_q(spec: &ThinDomainSpec, grid: &Grid, kind: ProblemKind, cross: CrossTerms) -> Result<SparseOperator> {
    check_q(spec, grid)?;
    let matrix = assemble(grid, GAUSS_ORDER, |p| q_coefficient(spec, p, cross));
    Ok(SparseOperator::new(kind, grid.clone(), matrix, q_mass(spec, grid)))
}

/// The Neumann problem on `R^eps` itself, pulled back to `Q`.
pub fn assemble_original(spec: &ThinDomainSpec, grid: &Grid) -> Result<SparseOperator> {
    assemble_q(spec, grid, ProblemKind::Original, CrossTerms::Full)
}

/// The transformed problem on `Q` (flat-bottom domain pulled back by `S`).
pub fn assemble_transformed(spec: &ThinDomainSpec, grid: &Grid) -> Result<SparseOperator> {
    assemble_q(spec, grid, ProblemKind::Transformed, CrossTerms::FlatBottom)
}

/// The transformed problem with all cross terms dropped.
pub fn assemble_simplified(spec: &ThinDomainSpec, grid: &Grid) -> Result<SparseOperator> {
    assemble_q(spec, grid, ProblemKind::Simplified, CrossTerms::None)
}

/// `integral_omega K grad w . grad phi + K w phi`.
pub fn assemble_reduced(spec: &ThinDomainSpec, grid: &Grid) -> Result<SparseOperator> {
    check_omega(spec, grid)?;
    let th = spec.thickness();
    let matrix = assemble(grid, GAUSS_ORDER, |x| {
        let k = th.value(x);
        Coefficient::isotropic(k, k)
    });
    let mass = assemble(grid, GAUSS_ORDER, |x| Coefficient::mass(th.value(x)));
    Ok(SparseOperator::new(ProblemKind::Reduced, grid.clone(), matrix, mass))
}

/// `integral_omega A0 grad u . grad phi + W u phi` with `W = M(g) + M(h)`.
pub fn assemble_limit(model: &HomogenizedModel, grid: &Grid) -> Result<SparseOperator> {
    if grid.cover() != Cover::Omega {
        return Err(Error::Argument("limit operator needs a grid over omega".into()));
    }
    let n = grid.dim();
    let a0 = model.a0();
    if a0.nrows() != n {
        return Err(Error::Argument(format!(
            "homogenized tensor is {}x{} but the grid has {n} axes",
            a0.nrows(),
            a0.ncols()
        )));
    }
    let w = model.weight;
    let matrix = assemble(grid, GAUSS_ORDER, |_| {
        let mut c = Coefficient::mass(w);
        for i in 0..n {
            for j in 0..n {
                c.a[i][j] = a0[(i, j)];
            }
        }
        c
    });
    let mass = assemble(grid, GAUSS_ORDER, |_| Coefficient::mass(w));
    Ok(SparseOperator::new(ProblemKind::Limit, grid.clone(), matrix, mass))
}

/// Solves `matrix u = mass f`, so that nodal sources are weighted exactly as
/// in the weak form.
pub fn solve(op: &SparseOperator, rhs: &Field, tol: f64) -> Result<Field> {
    solve_with_stats(op, rhs, tol).map(|(f, _)| f)
}

pub fn solve_with_stats(op: &SparseOperator, rhs: &Field, tol: f64) -> Result<(Field, SolveStats)> {
    if rhs.len() != op.len() {
        return Err(Error::Argument(format!("rhs has {} values, operator {}", rhs.len(), op.len())));
    }
    let b = op.mass.mul(&rhs.values);
    let (u, stats) = solve_load(op, &b, tol)?;
    Ok((Field::new(tag_for(op.kind), u)?, stats))
}

/// Solves `matrix u = b` for an already weighted load `b`.
pub fn solve_load(op: &SparseOperator, b: &[f64], tol: f64) -> Result<(Vec<f64>, SolveStats)> {
    let precond = op.preconditioner();
    let mut u = vec![0.0; op.len()];
    let stats = pcg(&op.matrix, b, &mut u, precond.as_ref(), tol, default_max_iter(op.len()))?;
    Ok((u, stats))
}

fn tag_for(kind: ProblemKind) -> FieldTag {
    match kind {
        ProblemKind::Original => FieldTag::Original,
        ProblemKind::Transformed => FieldTag::Transformed,
        ProblemKind::Simplified => FieldTag::Simplified,
        ProblemKind::Reduced => FieldTag::Reduced,
        ProblemKind::Limit => FieldTag::Limit,
    }
}

/// Nodal values on `Q` of a source given in physical coordinates
/// `f(x, y)` with `-eps k1 < y < eps k2`.
pub fn pull_back_source<F: Fn(&[f64], f64) -> f64>(spec: &ThinDomainSpec, grid: &Grid, f: F) -> Result<Field> {
    let n = spec.dim();
    let mut vals = Vec::with_capacity(grid.node_count());
    for i in 0..grid.node_count() {
        let p = grid.node(i);
        let phys = spec.q_to_physical(&p)?;
        vals.push(f(&p[..n], phys[n]));
    }
    Field::new(FieldTag::Source, vals)
}

/// Thickness average `f_hat(x) = (1 / (eps K)) integral f(x, y) dy` at the
/// nodes of a grid over `omega`, by composite Simpson in `y`.
pub fn project_f_hat<F: Fn(&[f64], f64) -> f64>(spec: &ThinDomainSpec, grid: &Grid, f: F) -> Field {
    let values = interpolate(grid, |x| {
        let lo = -spec.epsilon * spec.k1(x);
        let hi = spec.epsilon * spec.k2(x);
        simpson(|y| f(x, y), lo, hi, VERTICAL_SUBINTERVALS) / (hi - lo)
    });
    Field { tag: FieldTag::Averaged, values }
}

/// `M_eps f(x) = (1 / eps) integral f(x, y) dy` for a source in physical
/// coordinates.
pub fn average_m_fn<F: Fn(&[f64], f64) -> f64>(spec: &ThinDomainSpec, grid: &Grid, f: F) -> Field {
    let mut out = project_f_hat(spec, grid, f);
    for (v, x) in out.values.iter_mut().zip(grid.nodes()) {
        *v *= spec.thickness().value(&x);
    }
    out
}

/// `M_eps` of a nodal field on `Q`: `K(x) integral_0^1 u(x, y) dy`, with the
/// vertical integral exact for the piecewise-linear interpolant.
pub fn average_m(spec: &ThinDomainSpec, q: &Grid, field: &Field) -> Result<Field> {
    let base = q.base()?;
    let line = q.line_len();
    if field.len() != q.node_count() {
        return Err(Error::Argument("field does not live on the Q grid".into()));
    }
    let cells = (line - 1) as f64;
    let values = (0..base.node_count())
        .map(|i| {
            let col = &field.values[i * line..(i + 1) * line];
            let inner: f64 = col[1..line - 1].iter().sum::<f64>() + 0.5 * (col[0] + col[line - 1]);
            spec.thickness().value(&base.node(i)) * inner / cells
        })
        .collect();
    Ok(Field { tag: FieldTag::Averaged, values })
}

/// Thickness average `integral_0^1 u dy` of a nodal field on `Q`.
pub fn vertical_mean(q: &Grid, field: &[f64]) -> Vec<f64> {
    let line = q.line_len();
    let cells = (line - 1) as f64;
    field
        .chunks(line)
        .map(|col| (col[1..line - 1].iter().sum::<f64>() + 0.5 * (col[0] + col[line - 1])) / cells)
        .collect()
}

/// `E_eps u(x, y) = u(x)`.
pub fn extend_e(field: &Field, q: &Grid) -> Result<Field> {
    let line = q.line_len();
    if field.len() * line != q.node_count() {
        return Err(Error::Argument("field does not live on the base of the Q grid".into()));
    }
    let values = field.values.iter().flat_map(|&v| std::iter::repeat_n(v, line)).collect();
    Ok(Field { tag: FieldTag::Extended, values })
}

/// Rescaled norms bound to one spec and one grid over `Q` (and its base).
#[derive(Debug, Clone)]
pub struct RescaledNorms {
    pub q_grid: Grid,
    pub omega_grid: Grid,
    /// `M(g) + M(h)`.
    pub weight: f64,
    mass_k: CsrMatrix,
    energy: CsrMatrix,
    omega_mass: CsrMatrix,
    limit_energy: Option<CsrMatrix>,
}

impl RescaledNorms {
    /// Uses the transformed operator's form as the `Z_eps^{1/2}` inner
    /// product: it is the exact pull-back of `(1/eps) integral_{R_a^eps}
    /// (grad . grad + id)`.
    pub fn new(spec: &ThinDomainSpec, q: &Grid, weight: f64) -> Result<Self> {
        let op = assemble_transformed(spec, q)?;
        Ok(Self::from_operator(&op, weight))
    }

    pub fn from_operator(op: &SparseOperator, weight: f64) -> Self {
        let omega_grid = op.grid.base().expect("operator on Q");
        let omega_mass = assemble(&omega_grid, GAUSS_ORDER, |_| Coefficient::mass(1.0));
        Self {
            q_grid: op.grid.clone(),
            omega_grid,
            weight,
            mass_k: op.mass.clone(),
            energy: op.matrix.clone(),
            omega_mass,
            limit_energy: None,
        }
    }

    pub fn with_limit(mut self, limit: &SparseOperator) -> Self {
        self.limit_energy = Some(limit.matrix.clone());
        self
    }

    /// `|||u|||_{Z_eps}`, i.e. `(integral_Q K u^2)^{1/2}`.
    pub fn z_eps(&self, u: &[f64]) -> f64 {
        self.mass_k.quad_form(u).max(0.0).sqrt()
    }

    pub fn z_eps_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.mass_k.bilinear(u, v)
    }

    /// `|||u|||_{Z_eps^{1/2}}`.
    pub fn z_eps_half(&self, u: &[f64]) -> f64 {
        self.energy.quad_form(u).max(0.0).sqrt()
    }

    /// `||u||_{Z_0} = (W integral_omega u^2)^{1/2}`.
    pub fn z0(&self, u: &[f64]) -> f64 {
        (self.weight * self.omega_mass.quad_form(u)).max(0.0).sqrt()
    }

    /// `||u||_{Z_0^{1/2}} = (integral A0 grad u . grad u + W u^2)^{1/2}`;
    /// needs [`RescaledNorms::with_limit`].
    pub fn z0_half(&self, u: &[f64]) -> Result<f64> {
        self.limit_energy
            .as_ref()
            .map(|m| m.quad_form(u).max(0.0).sqrt())
            .ok_or_else(|| Error::Argument("no limit operator bound to these norms".into()))
    }
}

/// Grid densities for one ladder evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderGrids {
    pub x_cells: Vec<usize>,
    pub y_cells: usize,
}

impl LadderGrids {
    /// At least `per_wavelength` cells per oscillation and `min_x` cells per
    /// base axis.
    pub fn resolving(spec: &ThinDomainSpec, per_wavelength: usize, min_x: usize, y_cells: usize) -> Self {
        let x_cells = (0..spec.dim())
            .map(|a| {
                let need = match spec.shortest_wavelength() {
                    None => 1,
                    Some(w) => ((spec.base.extent(a) * per_wavelength as f64 / w) * (1.0 - 1e-12)).ceil() as usize,
                };
                need.max(min_x).max(required_cells(spec, a))
            })
            .collect();
        Self { x_cells, y_cells: y_cells.max(MIN_VERTICAL_CELLS) }
    }
}

/// Rescaled-H1 distances along the ladder at one `epsilon`, for a source
/// normalised to `|||f|||_{Z_eps} = 1` (distances are divided by the
/// source norm; the problems are linear).
#[derive(Debug, Clone, PartialEq)]
pub struct LadderReport {
    pub epsilon: f64,
    pub eta: f64,
    pub eta1: f64,
    /// `|||w o L o S - u|||`, measured in the original pulled-back form.
    pub dist_original_transformed: f64,
    /// `|||u - w_1|||` in the transformed form.
    pub dist_transformed_simplified: f64,
    /// `|||w_1 - E w_hat|||` in the transformed form.
    pub dist_simplified_reduced: f64,
    /// `|||w o L o S - E w_hat|||` in the original form.
    pub dist_total: f64,
    pub ratio_original_over_eta1: f64,
    pub ratio_transformed_over_eta: f64,
    pub ratio_total_over_eta: f64,
    pub source_norm: f64,
    pub solver_iters: usize,
    pub nodes: usize,
}

fn ratio(d: f64, bound: f64) -> f64 {
    if bound > 0.0 {
        d * d / bound
    } else {
        0.0
    }
}

/// Solves the four ladder problems for the source `f(x, y)` (physical
/// coordinates) and measures their pairwise distances. Ratios divide the
/// squared distance by the oscillation magnitude predicted by the matching
/// estimate; when that magnitude vanishes the ratio is reported as 0 and the
/// distance itself carries the discretisation error.
pub fn verify_ladder<F>(spec: &ThinDomainSpec, grids: &LadderGrids, f: F) -> Result<LadderReport>
where
    F: Fn(&[f64], f64) -> f64 + Sync,
{
    let q = q_grid(spec, &grids.x_cells, grids.y_cells)?;
    let omega = q.base()?;
    let original = assemble_original(spec, &q)?;
    let transformed = assemble_transformed(spec, &q)?;
    let simplified = assemble_simplified(spec, &q)?;
    let reduced = assemble_reduced(spec, &omega)?;

    let f2 = pull_back_source(spec, &q, &f)?;
    let f_hat = project_f_hat(spec, &omega, &f);
    let source_norm = transformed.mass_norm(&f2.values);
    if source_norm == 0.0 {
        return Err(Error::Argument("source vanishes; nothing to compare".into()));
    }

    let results: Vec<Result<(Field, SolveStats)>> = {
        let jobs: [(&SparseOperator, &Field); 4] =
            [(&original, &f2), (&transformed, &f2), (&simplified, &f2), (&reduced, &f_hat)];
        use rayon::prelude::*;
        jobs.par_iter().map(|(op, rhs)| solve_with_stats(op, rhs, DEFAULT_TOL)).collect()
    };
    let mut fields = Vec::with_capacity(4);
    let mut iters = 0;
    for r in results {
        let (field, stats) = r?;
        iters += stats.iterations;
        fields.push(field);
    }
    let (w, u, w1, w_hat) = (&fields[0], &fields[1], &fields[2], &fields[3]);
    let e_hat = extend_e(w_hat, &q)?;

    let d_ot = original.energy_norm(&w.sub(u)) / source_norm;
    let d_ts = transformed.energy_norm(&u.sub(w1)) / source_norm;
    let d_sr = transformed.energy_norm(&w1.sub(&e_hat)) / source_norm;
    let d_total = original.energy_norm(&w.sub(&e_hat)) / source_norm;
    let eta = spec.eta();
    Ok(LadderReport {
        epsilon: spec.epsilon,
        eta: eta.eta,
        eta1: eta.eta1,
        dist_original_transformed: d_ot,
        dist_transformed_simplified: d_ts,
        dist_simplified_reduced: d_sr,
        dist_total: d_total,
        ratio_original_over_eta1: ratio(d_ot, eta.eta1),
        ratio_transformed_over_eta: ratio(d_ts, eta.eta),
        ratio_total_over_eta: ratio(d_total, eta.eta),
        source_norm,
        solver_iters: iters,
        nodes: q.node_count(),
    })
}
