//! Low eigenpairs of the discrete operators and the spectral and resolvent
//! comparisons between the thin-domain problem and its limit.
//!
//! Every [`SparseOperator`] carries the form `A` of `L` and the weighted
//! mass `M` of its `Z` space, so eigenpairs solve `A phi = lambda M phi`.
//! Spectra lie in `[1, inf)`, which makes shift-invert at 0 safe.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::geometry::ThinDomainSpec;
use crate::homogenization::HomogenizedModel;
use crate::operators::{
    assemble_limit, assemble_original, average_m, extend_e, q_grid, solve, vertical_mean, Field, FieldTag,
    LadderGrids, SparseOperator, DEFAULT_TOL,
};
use crate::sparse::{default_max_iter, dot, pcg, CsrMatrix, Preconditioner};
use crate::{Error, Result};

pub const MAX_MODES: usize = 12;
pub const RESIDUAL_TOL: f64 = 1e-8;
pub const CLUSTER_TOL: f64 = 1e-6;
pub const DEFAULT_PROBES: usize = 20;
pub const DEFAULT_SEED: u64 = 42;
/// Modes whose energy sits mostly in the vertical fluctuation are vertical.
pub const VERTICAL_FRACTION: f64 = 0.5;
const INNER_TOL: f64 = 1e-13;
const MAX_RESTARTS: usize = 3;
const LANCZOS_CHUNK: usize = 10;
const LANCZOS_MAX_STEPS: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    /// 1-based position in the ascending spectrum.
    pub index: usize,
    pub eigenvalue: f64,
    /// Normalized to `phi^T M phi = 1`.
    pub eigenfunction: Field,
    /// `||L phi - lambda phi||` measured as `(r^T M_L^{-1} r)^{1/2}` with
    /// `r = A phi - lambda M phi`.
    pub residual: f64,
}

struct ShiftInvert<'a> {
    op: &'a SparseOperator,
    precond: Box<dyn Preconditioner>,
    max_iter: usize,
}

impl<'a> ShiftInvert<'a> {
    fn new(op: &'a SparseOperator) -> Self {
        Self { op, precond: op.preconditioner(), max_iter: 4 * default_max_iter(op.len()) }
    }

    /// `A^{-1} M v`. Iterations that stall just above the inner tolerance
    /// are accepted when the residual is still far below the outer one.
    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let b = self.op.mass.mul(v);
        let mut x = vec![0.0; v.len()];
        match pcg(&self.op.matrix, &b, &mut x, self.precond.as_ref(), INNER_TOL, self.max_iter) {
            Ok(_) => Ok(x),
            Err(Error::Solver { residual, .. }) if residual < 1e-10 => Ok(x),
            Err(e) => Err(e),
        }
    }
}

fn m_inner(mass: &CsrMatrix, u: &[f64], v: &[f64]) -> f64 {
    mass.bilinear(u, v)
}

/// `r^T M_L^{-1} r` residual of an approximate eigenpair.
fn pair_residual(op: &SparseOperator, phi: &[f64], lambda: f64) -> f64 {
    let a = op.matrix.mul(phi);
    let m = op.mass.mul(phi);
    let s: f64 = a
        .iter()
        .zip(&m)
        .zip(&op.lumped_mass)
        .map(|((ai, mi), l)| {
            let r = ai - lambda * mi;
            r * r / l
        })
        .sum();
    let norm = m_inner(&op.mass, phi, phi).sqrt();
    s.sqrt() / norm
}

/// Rayleigh-Ritz for `A x = lambda M x` on the span of `basis`; returns
/// ascending values and M-orthonormal vectors.
fn rayleigh_ritz(op: &SparseOperator, basis: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let k = basis.len();
    let ab: Vec<Vec<f64>> = basis.iter().map(|b| op.matrix.mul(b)).collect();
    let mb: Vec<Vec<f64>> = basis.iter().map(|b| op.mass.mul(b)).collect();
    let g = DMatrix::from_fn(k, k, |i, j| 0.5 * (dot(&basis[i], &ab[j]) + dot(&basis[j], &ab[i])));
    let h = DMatrix::from_fn(k, k, |i, j| 0.5 * (dot(&basis[i], &mb[j]) + dot(&basis[j], &mb[i])));
    let chol = h.cholesky().ok_or_else(|| Error::Eigen("Ritz basis is numerically dependent".into()))?;
    let l_inv = chol.l().try_inverse().ok_or_else(|| Error::Eigen("singular Ritz Gram matrix".into()))?;
    let reduced = &l_inv * g * l_inv.transpose();
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = SymmetricEigen::new(reduced);
    let coeffs = l_inv.transpose() * &eig.eigenvectors;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let n = op.len();
    let mut vals = Vec::with_capacity(k);
    let mut vecs = Vec::with_capacity(k);
    for &c in &order {
        let mut v = vec![0.0; n];
        for (i, b) in basis.iter().enumerate() {
            let s = coeffs[(i, c)];
            v.iter_mut().zip(b).for_each(|(vi, bi)| *vi += s * bi);
        }
        let norm = m_inner(&op.mass, &v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        vals.push(eig.eigenvalues[c]);
        vecs.push(v);
    }
    Ok((vals, vecs))
}

fn orthogonalize(w: &mut [f64], against: &[Vec<f64>], against_m: &[Vec<f64>]) {
    for _ in 0..2 {
        for (b, mb) in against.iter().zip(against_m) {
            let c = dot(w, mb);
            w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
        }
    }
}

/// The `k` smallest eigenpairs of `op`, by shift-invert Lanczos at 0 with
/// full reorthogonalization in the `M` inner product. Converged Ritz pairs
/// are locked; breakdown before `k` pairs restarts from a fresh random
/// vector orthogonal to the locked ones.
pub fn eigenpairs(op: &SparseOperator, k: usize) -> Result<Vec<EigenPair>> {
    let n = op.len();
    if k == 0 || k > MAX_MODES || k > n {
        return Err(Error::Argument(format!("k = {k} must lie in 1..={}", MAX_MODES.min(n))));
    }
    let si = ShiftInvert::new(op);
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut locked_m: Vec<Vec<f64>> = Vec::new();
    let mut restarts = 0;
    while locked.len() < k {
        let want = k - locked.len();
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        orthogonalize(&mut v, &locked, &locked_m);
        let nv = m_inner(&op.mass, &v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= nv);
        let mut basis = vec![v];
        let mut basis_m = vec![op.mass.mul(&basis[0])];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let cap = LANCZOS_MAX_STEPS.min(n - locked.len());
        let (found, broke) = loop {
            let j = alpha.len();
            let mut w = si.apply(&basis[j])?;
            let a = dot(&w, &basis_m[j]);
            alpha.push(a);
            orthogonalize(&mut w, &locked, &locked_m);
            orthogonalize(&mut w, &basis, &basis_m);
            let b = m_inner(&op.mass, &w, &w).max(0.0).sqrt();
            let steps = alpha.len();
            let scale = alpha.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let broke = b <= 1e-12 * scale || steps >= cap;
            if steps % LANCZOS_CHUNK == 0 || broke {
                let t = DMatrix::from_fn(steps, steps, |r, c| {
                    if r == c {
                        alpha[r]
                    } else if r + 1 == c {
                        beta[r]
                    } else if c + 1 == r {
                        beta[c]
                    } else {
                        0.0
                    }
                });
                let eig = SymmetricEigen::new(t);
                let mut order: Vec<usize> = (0..steps).collect();
                order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
                let theta_max = eig.eigenvalues[order[0]].abs();
                let mut good = Vec::new();
                for &c in order.iter().take(want) {
                    let est = b * eig.eigenvectors[(steps - 1, c)].abs();
                    if est <= 1e-11 * theta_max || broke {
                        good.push(c);
                    } else {
                        break;
                    }
                }
                let converged = good.len() == want.min(steps);
                if converged || broke {
                    let vecs: Vec<Vec<f64>> = good
                        .iter()
                        .filter(|&&c| b * eig.eigenvectors[(steps - 1, c)].abs() <= 1e-9 * theta_max)
                        .map(|&c| {
                            let mut v = vec![0.0; n];
                            for (i, q) in basis.iter().enumerate() {
                                let s = eig.eigenvectors[(i, c)];
                                v.iter_mut().zip(q).for_each(|(vi, qi)| *vi += s * qi);
                            }
                            v
                        })
                        .collect();
                    break (vecs, broke && !converged);
                }
            }
            beta.push(b);
            w.iter_mut().for_each(|x| *x /= b);
            basis_m.push(op.mass.mul(&w));
            basis.push(w);
        };
        for v in found {
            let mut v = v;
            orthogonalize(&mut v, &locked, &locked_m);
            let nv = m_inner(&op.mass, &v, &v).sqrt();
            if nv < 1e-6 {
                continue;
            }
            v.iter_mut().for_each(|x| *x /= nv);
            locked_m.push(op.mass.mul(&v));
            locked.push(v);
        }
        if locked.len() < k {
            if broke && restarts < MAX_RESTARTS {
                restarts += 1;
                continue;
            }
            if restarts >= MAX_RESTARTS {
                return Err(Error::Eigen(format!("only {} of {k} eigenpairs after {MAX_RESTARTS} restarts", locked.len())));
            }
            restarts += 1;
        }
    }
    let (mut vals, mut vecs) = rayleigh_ritz(op, &locked)?;
    let mut worst = vals.iter().zip(&vecs).map(|(l, v)| pair_residual(op, v, *l)).fold(0.0, f64::max);
    let mut sweeps = 0;
    while worst > RESIDUAL_TOL && sweeps < 4 {
        let images: Result<Vec<Vec<f64>>> = vecs.iter().map(|v| si.apply(v)).collect();
        (vals, vecs) = rayleigh_ritz(op, &images?)?;
        worst = vals.iter().zip(&vecs).map(|(l, v)| pair_residual(op, v, *l)).fold(0.0, f64::max);
        sweeps += 1;
    }
    let tag = match op.kind {
        crate::operators::ProblemKind::Limit | crate::operators::ProblemKind::Reduced => FieldTag::Limit,
        _ => FieldTag::Original,
    };
    let mut out = Vec::with_capacity(k);
    for (i, (lambda, mut phi)) in vals.into_iter().zip(vecs).enumerate() {
        let lambda_rq = op.matrix.quad_form(&phi) / op.mass.quad_form(&phi);
        // Sign convention: the largest-magnitude entry is positive.
        let pivot = phi.iter().fold(0.0f64, |m, v| if v.abs() > m.abs() + 1e-12 { *v } else { m });
        if pivot < 0.0 {
            phi.iter_mut().for_each(|v| *v = -*v);
        }
        let residual = pair_residual(op, &phi, lambda_rq);
        debug_assert!((lambda - lambda_rq).abs() <= 1e-8 * lambda_rq.abs());
        out.push(EigenPair { index: i + 1, eigenvalue: lambda_rq, eigenfunction: Field::new(tag, phi)?, residual });
    }
    Ok(out)
}

/// Closed-form Neumann eigenvalues `1 + q ((n - 1) pi / L)^2` of
/// `-q u'' + u` on an interval of length `L`.
pub fn neumann_eigenvalue_1d(q: f64, length: f64, n: usize) -> f64 {
    let k = (n - 1) as f64 * std::f64::consts::PI / length;
    1.0 + q * k * k
}

/// Fraction of the `Z_eps` mass of a field on `Q` carried by its vertical
/// fluctuation `u - E(mean_y u)`. Averaging in the rescaled vertical
/// variable is the `M`-orthogonal projection onto `y`-independent fields, so
/// the fraction lies in `[0, 1]`.
pub fn vertical_energy_fraction(op: &SparseOperator, phi: &[f64]) -> Result<f64> {
    let mean = vertical_mean(&op.grid, phi);
    let ext = extend_e(&Field { tag: FieldTag::Averaged, values: mean }, &op.grid)?;
    let fluct: Vec<f64> = phi.iter().zip(&ext.values).map(|(a, b)| a - b).collect();
    let total = op.mass.quad_form(phi);
    Ok(if total > 0.0 { op.mass.quad_form(&fluct) / total } else { 0.0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralRow {
    pub epsilon: f64,
    pub n: usize,
    pub lambda_eps: f64,
    pub lambda_0: f64,
    pub gap: f64,
    pub eigfun_dist: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub rows: Vec<SpectralRow>,
    /// `(epsilon, ascending eigenvalues of L_eps)`.
    pub eps_eigenvalues: Vec<(f64, Vec<f64>)>,
    /// Eigenvalues of the discrete limit operator on the finest base grid.
    pub limit_eigenvalues: Vec<f64>,
}

impl SpectralReport {
    pub fn gaps(&self, n: usize) -> Vec<f64> {
        self.rows.iter().filter(|r| r.n == n).map(|r| r.gap).collect()
    }

    pub fn distances(&self, n: usize) -> Vec<f64> {
        self.rows.iter().filter(|r| r.n == n).map(|r| r.eigfun_dist).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralOptions {
    pub per_wavelength: usize,
    pub min_x_cells: usize,
    pub y_cells: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self { per_wavelength: 8, min_x_cells: 64, y_cells: 16 }
    }
}

/// Groups consecutive indices whose values agree within `CLUSTER_TOL`
/// relative.
pub fn clusters(values: &[f64]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, v) in values.iter().enumerate() {
        match out.last_mut() {
            Some(c) if (v - values[c[0]]).abs() <= CLUSTER_TOL * v.abs() => c.push(i),
            _ => out.push(vec![i]),
        }
    }
    out
}

/// Eigenpairs of `L_eps` (the pulled-back Neumann problem on `R^eps`) and of
/// the limit operator on the same base grid, for each `eps`; gaps and
/// rescaled-H1 eigenfunction distances after sign or subspace alignment.
/// Only horizontal modes of `L_eps` are ranked.
pub fn spectral_convergence_study(
    spec: &ThinDomainSpec,
    model: &HomogenizedModel,
    eps_list: &[f64],
    n_max: usize,
    opts: &SpectralOptions,
) -> Result<SpectralReport> {
    if n_max == 0 || n_max > MAX_MODES {
        return Err(Error::Argument(format!("n_max = {n_max} must lie in 1..={MAX_MODES}")));
    }
    let per_eps: Vec<Result<(Vec<SpectralRow>, Vec<f64>, Vec<f64>)>> = eps_list
        .par_iter()
        .map(|&eps| {
            let s = spec.with_epsilon(eps)?;
            let grids = LadderGrids::resolving(&s, opts.per_wavelength, opts.min_x_cells, opts.y_cells);
            let q = q_grid(&s, &grids.x_cells, grids.y_cells)?;
            let omega = q.base()?;
            let op_eps = assemble_original(&s, &q)?;
            let op_0 = assemble_limit(model, &omega)?;
            let pe = horizontal_eigenpairs(&op_eps, n_max).map_err(|e| match e {
                Error::Study(m) => Error::Study(format!("eps = {eps}: {m}")),
                e => e,
            })?;
            let p0 = eigenpairs(&op_0, n_max)?;
            let limit_vals: Vec<f64> = p0.iter().map(|p| p.eigenvalue).collect();
            let extended: Vec<Vec<f64>> =
                p0.iter().map(|p| extend_e(&p.eigenfunction, &q).map(|f| f.values)).collect::<Result<_>>()?;
            let ext_m: Vec<Vec<f64>> = extended.iter().map(|v| op_eps.mass.mul(v)).collect();
            let mut rows = Vec::with_capacity(n_max);
            for cluster in clusters(&limit_vals) {
                for &i in &cluster {
                    let phi = &pe[i].eigenfunction.values;
                    let aligned: Vec<f64> = if cluster.len() == 1 {
                        // Sign alignment, with E phi_0 renormalized in Z_eps.
                        let norm = dot(&extended[i], &ext_m[i]).sqrt();
                        let s = dot(phi, &ext_m[i]).signum() / norm;
                        extended[i].iter().map(|v| s * v).collect()
                    } else {
                        // Z_eps-orthogonal projection onto the extended limit eigenspace.
                        let members: Vec<&Vec<f64>> = cluster.iter().map(|&c| &extended[c]).collect();
                        let g = DMatrix::from_fn(cluster.len(), cluster.len(), |a, b| dot(members[a], &ext_m[cluster[b]]));
                        let rhs = nalgebra::DVector::from_iterator(cluster.len(), cluster.iter().map(|&c| dot(phi, &ext_m[c])));
                        let coef = g.lu().solve(&rhs).ok_or_else(|| Error::Eigen("singular cluster Gram".into()))?;
                        let mut v = vec![0.0; phi.len()];
                        for (a, m) in members.iter().enumerate() {
                            v.iter_mut().zip(m.iter()).for_each(|(vi, mi)| *vi += coef[a] * mi);
                        }
                        v
                    };
                    let diff: Vec<f64> = phi.iter().zip(&aligned).map(|(a, b)| a - b).collect();
                    rows.push(SpectralRow {
                        epsilon: eps,
                        n: i + 1,
                        lambda_eps: pe[i].eigenvalue,
                        lambda_0: limit_vals[i],
                        gap: (pe[i].eigenvalue - limit_vals[i]).abs(),
                        eigfun_dist: op_eps.energy_norm(&diff),
                    });
                }
            }
            Ok((rows, pe.iter().map(|p| p.eigenvalue).collect(), limit_vals))
        })
        .collect();
    let mut report = SpectralReport { rows: Vec::new(), eps_eigenvalues: Vec::new(), limit_eigenvalues: Vec::new() };
    for (r, &eps) in per_eps.into_iter().zip(eps_list) {
        let (rows, vals, limit) = r?;
        report.rows.extend(rows);
        report.eps_eigenvalues.push((eps, vals));
        report.limit_eigenvalues = limit;
    }
    Ok(report)
}

/// The `n_max` lowest horizontal eigenpairs of an operator on `Q`. Vertical
/// modes (see [`VERTICAL_FRACTION`]) are skipped; the search widens up to
/// [`MAX_MODES`] pairs and fails with a study error beyond that.
pub fn horizontal_eigenpairs(op: &SparseOperator, n_max: usize) -> Result<Vec<EigenPair>> {
    let mut k = n_max;
    loop {
        let all = eigenpairs(op, k.min(op.len()))?;
        let mut horizontal = Vec::with_capacity(n_max);
        for p in all {
            if vertical_energy_fraction(op, &p.eigenfunction.values)? <= VERTICAL_FRACTION {
                horizontal.push(p);
            }
            if horizontal.len() == n_max {
                return Ok(horizontal);
            }
        }
        if k >= MAX_MODES.min(op.len()) {
            return Err(Error::Study(format!(
                "fewer than {n_max} horizontal modes among the lowest {k}; use a smaller eps or fewer modes"
            )));
        }
        k = (k + n_max - horizontal.len() + 2).min(MAX_MODES);
    }
}

/// Compares the `n_max`-th limit eigenvalue with the first vertical level
/// `1 + (pi / (eps K_max))^2` of the constant-thickness problem.
pub fn check_mode_ordering(spec: &ThinDomainSpec, model: &HomogenizedModel, n_max: usize) -> Result<()> {
    let (_, k_max) = spec.thickness_bounds();
    let vertical = 1.0 + (std::f64::consts::PI / (spec.epsilon * k_max)).powi(2);
    let lo = model.a0().clone().symmetric_eigenvalues().max() / model.weight;
    let horizontal = (0..spec.dim())
        .map(|a| {
            let k = (n_max - 1) as f64 * std::f64::consts::PI / spec.base.extent(a);
            k * k
        })
        .fold(0.0, f64::max);
    if 1.0 + lo * horizontal >= vertical {
        return Err(Error::Study(format!(
            "the first {n_max} modes are not horizontal at eps = {}: use a smaller eps or fewer modes",
            spec.epsilon
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventRow {
    pub epsilon: f64,
    pub defect_max: f64,
    pub defect_mean: f64,
    pub probes: usize,
    pub seed: u64,
}

/// Cosine modes per base axis and vertically in a random probe.
pub const PROBE_MODES_X: usize = 6;
pub const PROBE_MODES_Y: usize = 3;

/// Coefficients of probe `p`: the same family is drawn at every `eps`.
fn probe_coefficients(seed: u64, probe: usize, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(probe as u64 + 1)));
    let count = PROBE_MODES_X.pow(dim as u32) * PROBE_MODES_Y;
    (0..count).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn probe_value(coef: &[f64], p: &[f64], extents: &[f64]) -> f64 {
    let n = extents.len();
    let pi = std::f64::consts::PI;
    let mut total = 0.0;
    let mut idx = 0;
    let combos = PROBE_MODES_X.pow(n as u32);
    for c in 0..combos {
        let mut rest = c;
        let mut hx = 1.0;
        for (a, ext) in extents.iter().enumerate() {
            let j = rest % PROBE_MODES_X;
            rest /= PROBE_MODES_X;
            hx *= (j as f64 * pi * p[a] / ext).cos();
        }
        for l in 0..PROBE_MODES_Y {
            total += coef[idx] * hx * (l as f64 * pi * p[n]).cos();
            idx += 1;
        }
    }
    total
}

/// Randomized lower bound for `||L_eps^{-1} - E L_0^{-1} M~||` in `Z_eps`,
/// where `M~ f = M_eps f / W` identifies the average with an element of
/// `Z_0`. Probes are smooth random fields on `Q` (cosine modes in `x` and in
/// the rescaled vertical variable) normalized to `|||f|||_{Z_eps} = 1`.
pub fn resolvent_defect(
    spec: &ThinDomainSpec,
    grids: &LadderGrids,
    model: &HomogenizedModel,
    probes: usize,
    seed: u64,
) -> Result<ResolventRow> {
    if probes == 0 {
        return Err(Error::Argument("at least one probe is needed".into()));
    }
    let q = q_grid(spec, &grids.x_cells, grids.y_cells)?;
    let omega = q.base()?;
    let op_eps = assemble_original(spec, &q)?;
    let op_0 = assemble_limit(model, &omega)?;
    let extents = spec.base.extents();
    let defects: Vec<Result<f64>> = (0..probes)
        .into_par_iter()
        .map(|p| {
            let coef = probe_coefficients(seed, p, spec.dim());
            let mut values: Vec<f64> = q.nodes().iter().map(|x| probe_value(&coef, x, &extents)).collect();
            let norm = op_eps.mass_norm(&values);
            values.iter_mut().for_each(|v| *v /= norm);
            resolvent_defect_for(spec, &op_eps, &op_0, model, &Field::new(FieldTag::Source, values)?)
        })
        .collect();
    let defects: Vec<f64> = defects.into_iter().collect::<Result<_>>()?;
    let max = defects.iter().cloned().fold(0.0, f64::max);
    let mean = defects.iter().sum::<f64>() / probes as f64;
    Ok(ResolventRow { epsilon: spec.epsilon, defect_max: max, defect_mean: mean, probes, seed })
}

/// `|||L_eps^{-1} f - E L_0^{-1} M~ f|||_{Z_eps}` for one source on `Q`.
pub fn resolvent_defect_for(
    spec: &ThinDomainSpec,
    op_eps: &SparseOperator,
    op_0: &SparseOperator,
    model: &HomogenizedModel,
    f: &Field,
) -> Result<f64> {
    let u_eps = solve(op_eps, f, DEFAULT_TOL)?;
    let mut m = average_m(spec, &op_eps.grid, f)?;
    m.values.iter_mut().for_each(|v| *v /= model.weight);
    let u0 = solve(op_0, &m, DEFAULT_TOL)?;
    let ext = extend_e(&u0, &op_eps.grid)?;
    Ok(op_eps.mass_norm(&u_eps.sub(&ext)))
}
