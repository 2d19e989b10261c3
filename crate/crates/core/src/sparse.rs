//! Compressed-row sparse matrices and Krylov solvers.

use crate::{Error, Result};

/// Square CSR matrix with sorted column indices. Explicit zeros produced by
/// assembly are kept so that operators built on the same grid share a
/// sparsity pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) outside a {n}x{n} matrix");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self {
            n: d.len(),
            row_ptr: (0..=d.len()).collect(),
            cols: (0..d.len()).collect(),
            vals: d.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map(|k| v[k]).unwrap_or(0.0)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let (c, v) = self.row(i);
            *yi = c.iter().zip(v).map(|(&j, a)| a * x[j]).sum();
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// `x^T A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul(x))
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul(y))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Row sums, i.e. the lumped version of a mass matrix.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).1.iter().sum()).collect()
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &CsrMatrix, s: f64) -> CsrMatrix {
        assert_eq!(self.n, other.n);
        if self.row_ptr == other.row_ptr && self.cols == other.cols {
            let vals = self.vals.iter().zip(&other.vals).map(|(a, b)| a + s * b).collect();
            return CsrMatrix { vals, ..self.clone() };
        }
        let mut trip = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            let (c, v) = self.row(i);
            trip.extend(c.iter().zip(v).map(|(&j, &a)| (i, j, a)));
            let (c, v) = other.row(i);
            trip.extend(c.iter().zip(v).map(|(&j, &a)| (i, j, s * a)));
        }
        CsrMatrix::from_triplets(self.n, trip)
    }

    /// Zeroes the off-diagonal entries of row and column `k`, keeping the
    /// pattern and the diagonal.
    pub fn pinned(&self, k: usize) -> CsrMatrix {
        let mut out = self.clone();
        for i in 0..self.n {
            let r = out.row_ptr[i]..out.row_ptr[i + 1];
            for idx in r {
                let j = out.cols[idx];
                if (i == k || j == k) && i != j {
                    out.vals[idx] = 0.0;
                }
            }
        }
        out
    }

    /// `A + diag(d)`.
    pub fn plus_diagonal(&self, d: &[f64]) -> CsrMatrix {
        assert_eq!(d.len(), self.n);
        let mut out = self.clone();
        let mut missing = false;
        for (i, &di) in d.iter().enumerate() {
            let r = out.row_ptr[i]..out.row_ptr[i + 1];
            match out.cols[r.clone()].binary_search(&i) {
                Ok(pos) => out.vals[r.start + pos] += di,
                Err(_) => missing = true,
            }
        }
        if missing {
            return self.add_scaled(&CsrMatrix::from_diagonal(d), 1.0);
        }
        out
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        CsrMatrix { vals: self.vals.iter().map(|v| s * v).collect(), ..self.clone() }
    }

    /// Largest `|a_ij - a_ji|` relative to the largest `|a_ij|`.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                worst = worst.max((a - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                m[(i, j)] += a;
            }
        }
        m
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub trait Preconditioner: Send + Sync {
    /// `z = P^{-1} r`.
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &CsrMatrix) -> Self {
        let inv_diag = a
            .diagonal()
            .iter()
            .map(|&d| if d.abs() > 0.0 { 1.0 / d.abs() } else { 1.0 })
            .collect();
        Self { inv_diag }
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * di;
        }
    }
}

/// Block Jacobi over runs of `line_len` consecutive unknowns, each block
/// restricted to its tridiagonal part and solved by the Thomas algorithm.
/// On a Q grid numbered with the vertical index fastest, each block is one
/// vertical line and its diagonal block is exactly tridiagonal.
pub struct LineJacobi {
    line_len: usize,
    lower: Vec<f64>,
    cprime: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl LineJacobi {
    pub fn new(a: &CsrMatrix, line_len: usize) -> Result<Self> {
        let n = a.dim();
        if line_len == 0 || n % line_len != 0 {
            return Err(Error::Argument(format!("line length {line_len} does not divide {n}")));
        }
        let mut lower = vec![0.0; n];
        let mut cprime = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        for start in (0..n).step_by(line_len) {
            for k in 0..line_len {
                let i = start + k;
                let diag = a.get(i, i);
                let sub = if k > 0 { a.get(i, i - 1) } else { 0.0 };
                let sup = if k + 1 < line_len { a.get(i, i + 1) } else { 0.0 };
                let pivot = diag - if k > 0 { sub * cprime[i - 1] } else { 0.0 };
                if pivot <= 0.0 || !pivot.is_finite() {
                    return Err(Error::Assembly(format!("line block not positive definite at row {i}")));
                }
                lower[i] = sub;
                inv_pivot[i] = 1.0 / pivot;
                cprime[i] = sup / pivot;
            }
        }
        Ok(Self { line_len, lower, cprime, inv_pivot })
    }
}

impl Preconditioner for LineJacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = r.len();
        for start in (0..n).step_by(self.line_len) {
            let end = start + self.line_len;
            let mut prev = 0.0;
            for i in start..end {
                let v = (r[i] - if i > start { self.lower[i] * prev } else { 0.0 }) * self.inv_pivot[i];
                z[i] = v;
                prev = v;
            }
            for i in (start..end - 1).rev() {
                z[i] -= self.cprime[i] * z[i + 1];
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Relative residual `||b - A x|| / ||b||` on exit.
    pub residual: f64,
}

/// Default iteration cap `50 sqrt(N)`, with a floor for tiny systems.
pub fn default_max_iter(n: usize) -> usize {
    ((50.0 * (n as f64).sqrt()).ceil() as usize).max(100)
}

/// Preconditioned conjugate gradients. `x` holds the initial guess on entry
/// and the solution on exit.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    precond: &dyn Preconditioner,
    tol: f64,
    max_iter: usize,
) -> Result<SolveStats> {
    let n = a.dim();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats { iterations: 0, residual: 0.0 });
    }
    let mut r = b.to_vec();
    let ax = a.mul(x);
    axpy(-1.0, &ax, &mut r);
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut rel = norm2(&r) / bnorm;
    if rel <= tol {
        return Ok(SolveStats { iterations: 0, residual: rel });
    }
    for it in 1..=max_iter {
        a.matvec(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 || !pq.is_finite() {
            return Err(Error::Solver { iterations: it, residual: rel });
        }
        let alpha = rz / pq;
        axpy(alpha, &p, x);
        axpy(-alpha, &q, &mut r);
        rel = norm2(&r) / bnorm;
        if rel <= tol {
            // Confirm against the true residual to guard against drift.
            let mut true_r = b.to_vec();
            axpy(-1.0, &a.mul(x), &mut true_r);
            let true_rel = norm2(&true_r) / bnorm;
            if true_rel <= tol {
                return Ok(SolveStats { iterations: it, residual: true_rel });
            }
            r = true_r;
            rel = true_rel;
            precond.apply(&r, &mut z);
            rz = dot(&r, &z);
            p.copy_from_slice(&z);
            continue;
        }
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(Error::Solver { iterations: max_iter, residual: rel })
}

/// Preconditioned MINRES for symmetric, possibly indefinite systems. The
/// preconditioner must be symmetric positive definite.
pub fn minres(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    precond: &dyn Preconditioner,
    tol: f64,
    max_iter: usize,
) -> Result<SolveStats> {
    let n = a.dim();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats { iterations: 0, residual: 0.0 });
    }
    let true_residual = |x: &[f64]| {
        let mut r = b.to_vec();
        axpy(-1.0, &a.mul(x), &mut r);
        norm2(&r) / bnorm
    };
    let mut r1 = b.to_vec();
    axpy(-1.0, &a.mul(x), &mut r1);
    let mut y = vec![0.0; n];
    precond.apply(&r1, &mut y);
    let beta1 = dot(&r1, &y);
    if beta1 < 0.0 {
        return Err(Error::Argument("MINRES preconditioner is not positive definite".into()));
    }
    let beta1 = beta1.sqrt();
    if beta1 == 0.0 {
        return Ok(SolveStats { iterations: 0, residual: true_residual(x) });
    }
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    for it in 1..=max_iter {
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        a.matvec(&v, &mut y);
        if it >= 2 {
            axpy(-beta / oldb, &r1, &mut y);
        }
        let alfa = dot(&v, &y);
        axpy(-alfa / beta, &r2, &mut y);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        precond.apply(&r2, &mut y);
        oldb = beta;
        let bb = dot(&r2, &y);
        if bb < 0.0 {
            return Err(Error::Argument("MINRES preconditioner is not positive definite".into()));
        }
        beta = bb.sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let denom = 1.0 / gamma;
        for i in 0..n {
            let w1 = w2[i];
            w2[i] = w[i];
            w[i] = (v[i] - oldeps * w1 - delta * w2[i]) * denom;
            x[i] += phi * w[i];
        }
        if phibar <= tol * beta1 || beta == 0.0 {
            let rel = true_residual(x);
            if rel <= tol * 10.0 || beta == 0.0 {
                return Ok(SolveStats { iterations: it, residual: rel });
            }
        }
    }
    Err(Error::Solver { iterations: max_iter, residual: true_residual(x) })
}

/// Smallest Ritz value of `A` after `steps` Lanczos steps (fully
/// reorthogonalized) from a deterministic start vector. Positive values
/// certify positive definiteness on the explored Krylov space.
pub fn smallest_ritz_value(a: &CsrMatrix, steps: usize) -> f64 {
    let n = a.dim();
    let mut q: Vec<f64> = (0..n).map(|i| 1.0 + 0.37 * ((i * 7919) % 101) as f64 / 101.0).collect();
    let s = norm2(&q);
    q.iter_mut().for_each(|v| *v /= s);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    for _ in 0..steps.min(n) {
        let mut w = a.mul(&q);
        let alpha = dot(&w, &q);
        axpy(-alpha, &q, &mut w);
        basis.push(q.clone());
        for b in &basis {
            let c = dot(&w, b);
            axpy(-c, b, &mut w);
        }
        alphas.push(alpha);
        let beta = norm2(&w);
        if beta < 1e-14 * alpha.abs().max(1.0) {
            break;
        }
        betas.push(beta);
        q = w.iter().map(|v| v / beta).collect();
    }
    let k = alphas.len();
    let t = nalgebra::DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j || j + 1 == i {
            betas[i.min(j)]
        } else {
            0.0
        }
    });
    nalgebra::SymmetricEigen::new(t).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laplace_1d(n: usize, shift: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + shift));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 0, 0.0), (0, 1, 4.0)]);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(0, 1), 4.0);
        assert_eq!(m.nnz(), 3);
    }

    #[test]
    fn pcg_zero_rhs_gives_zero() {
        let a = laplace_1d(10, 1.0);
        let mut x = vec![1.0; 10];
        let s = pcg(&a, &[0.0; 10], &mut x, &Jacobi::new(&a), 1e-10, 100).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
        assert_eq!(s.iterations, 0);
    }

    #[test]
    fn pcg_reports_nonconvergence() {
        let a = laplace_1d(400, 1e-6);
        let b: Vec<f64> = (0..400).map(|i| (i as f64).sin()).collect();
        let mut x = vec![0.0; 400];
        let err = pcg(&a, &b, &mut x, &IdentityPreconditioner, 1e-14, 3).unwrap_err();
        assert!(matches!(err, Error::Solver { iterations: 3, .. }));
    }

    #[test]
    fn line_preconditioner_is_exact_for_tridiagonal() {
        let a = laplace_1d(30, 0.5);
        let p = LineJacobi::new(&a, 30).unwrap();
        let b: Vec<f64> = (0..30).map(|i| (i as f64 * 0.3).cos()).collect();
        let mut z = vec![0.0; 30];
        p.apply(&b, &mut z);
        let r = a.mul(&z);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn minres_solves_indefinite_system() {
        let a = laplace_1d(50, -0.3);
        let b: Vec<f64> = (0..50).map(|i| 1.0 + (i as f64).sin()).collect();
        let mut x = vec![0.0; 50];
        minres(&a, &b, &mut x, &IdentityPreconditioner, 1e-12, 500).unwrap();
        let dense = a.to_dense();
        let exact = dense.lu().solve(&nalgebra::DVector::from_vec(b)).unwrap();
        for i in 0..50 {
            assert!((x[i] - exact[i]).abs() < 1e-8 * exact.amax());
        }
    }

    #[test]
    fn ritz_value_bounds_spectrum() {
        let a = laplace_1d(40, 1.0);
        let ritz = smallest_ritz_value(&a, 10);
        let exact = nalgebra::SymmetricEigen::new(a.to_dense()).eigenvalues.min();
        assert!(ritz >= exact - 1e-12 && ritz > 0.0);
    }

    proptest! {
        #[test]
        fn pcg_matches_dense_solve(n in 2usize..40, shift in 0.01f64..3.0, seed in 0u64..1000) {
            let a = laplace_1d(n, shift);
            let b: Vec<f64> = (0..n).map(|i| ((i as u64 * 31 + seed) % 17) as f64 - 8.0).collect();
            let mut x = vec![0.0; n];
            pcg(&a, &b, &mut x, &Jacobi::new(&a), 1e-12, 10 * n).unwrap();
            let r: Vec<f64> = a.mul(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
            prop_assert!(norm2(&r) <= 1e-11 * norm2(&b).max(1e-300));
            prop_assert!(a.symmetry_defect() == 0.0);
        }

        #[test]
        fn add_scaled_matches_dense(n in 2usize..12, s in -2.0f64..2.0) {
            let a = laplace_1d(n, 1.0);
            let b = CsrMatrix::from_diagonal(&vec![3.0; n]);
            let c = a.add_scaled(&b, s);
            let d = a.to_dense() + b.to_dense() * s;
            prop_assert!((c.to_dense() - d).amax() < 1e-14);
        }
    }
}
