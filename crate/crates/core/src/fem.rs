//! Tensor grids and conforming multilinear (Q1) finite elements.

use crate::quadrature::gauss_legendre;
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// What a grid discretizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cover {
    /// `Q = omega x (0, 1)`; the last axis is the vertical one.
    Q,
    /// The base domain `omega`.
    Omega,
    /// A periodicity cell (all axes periodic).
    Cell,
}

/// Uniform tensor grid over `[0, extent_0] x ... x [0, extent_{d-1}]`.
///
/// Nodes are numbered with the last axis fastest, so on `Q` each vertical
/// line is a contiguous block. Periodic grids identify the last node of an
/// axis with the first and therefore hold `cells` nodes per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    extents: Vec<f64>,
    cells: Vec<usize>,
    cover: Cover,
}

impl Grid {
    pub fn new(extents: Vec<f64>, cells: Vec<usize>, cover: Cover) -> Result<Self> {
        if extents.len() != cells.len() || extents.is_empty() || extents.len() > 3 {
            return Err(Error::Argument(format!("grid needs 1 to 3 axes, got {extents:?} / {cells:?}")));
        }
        let min_cells = if cover == Cover::Cell { 2 } else { 1 };
        if cells.iter().any(|&c| c < min_cells) || extents.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::Argument(format!("invalid grid {extents:?} / {cells:?}")));
        }
        Ok(Self { extents, cells, cover })
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn cover(&self) -> Cover {
        self.cover
    }

    pub fn periodic(&self) -> bool {
        self.cover == Cover::Cell
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn nodes_per_axis(&self, axis: usize) -> usize {
        self.cells[axis] + usize::from(!self.periodic())
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extents[axis] / self.cells[axis] as f64
    }

    pub fn node_count(&self) -> usize {
        (0..self.dim()).map(|a| self.nodes_per_axis(a)).product()
    }

    pub fn element_count(&self) -> usize {
        self.cells.iter().product()
    }

    /// Length of a vertical line (the contiguous fastest axis).
    pub fn line_len(&self) -> usize {
        self.nodes_per_axis(self.dim() - 1)
    }

    pub fn node_index(&self, multi: &[usize]) -> usize {
        let mut idx = 0;
        for (a, &m) in multi.iter().enumerate() {
            idx = idx * self.nodes_per_axis(a) + m;
        }
        idx
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let d = self.dim();
        let mut multi = vec![0; d];
        for a in (0..d).rev() {
            let n = self.nodes_per_axis(a);
            multi[a] = idx % n;
            idx /= n;
        }
        multi
    }

    pub fn coordinate(&self, multi: &[usize]) -> Vec<f64> {
        multi.iter().enumerate().map(|(a, &m)| m as f64 * self.spacing(a)).collect()
    }

    pub fn node(&self, idx: usize) -> Vec<f64> {
        self.coordinate(&self.multi_index(idx))
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        (0..self.node_count()).map(|i| self.node(i)).collect()
    }

    /// Same grid with every cell halved.
    pub fn refined(&self) -> Self {
        Self { cells: self.cells.iter().map(|c| 2 * c).collect(), ..self.clone() }
    }

    /// The base grid under a `Q` grid (all axes but the last).
    pub fn base(&self) -> Result<Self> {
        if self.cover != Cover::Q || self.dim() < 2 {
            return Err(Error::Argument("base() needs a grid over Q".into()));
        }
        let d = self.dim() - 1;
        Grid::new(self.extents[..d].to_vec(), self.cells[..d].to_vec(), Cover::Omega)
    }

    /// Visits every element as (global node ids, lower corner).
    fn for_each_element<F: FnMut(&[usize], &[f64])>(&self, mut visit: F) {
        let d = self.dim();
        let corners = 1usize << d;
        let mut cell = vec![0usize; d];
        let mut ids = vec![0usize; corners];
        let mut node = vec![0usize; d];
        for _ in 0..self.element_count() {
            for (c, id) in ids.iter_mut().enumerate() {
                for a in 0..d {
                    let bit = (c >> (d - 1 - a)) & 1;
                    let mut m = cell[a] + bit;
                    if self.periodic() && m == self.cells[a] {
                        m = 0;
                    }
                    node[a] = m;
                }
                *id = self.node_index(&node);
            }
            let lower: Vec<f64> = cell.iter().enumerate().map(|(a, &m)| m as f64 * self.spacing(a)).collect();
            visit(&ids, &lower);
            for a in (0..d).rev() {
                cell[a] += 1;
                if cell[a] < self.cells[a] {
                    break;
                }
                cell[a] = 0;
            }
        }
    }
}

/// Coefficients of a symmetric bilinear form at one point:
/// `a(u, v) = integral (A grad u . grad v + c u v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficient {
    /// Row-major `d x d` symmetric matrix (only the leading block is used).
    pub a: [[f64; 3]; 3],
    pub c: f64,
}

impl Coefficient {
    pub fn mass(c: f64) -> Self {
        Self { a: [[0.0; 3]; 3], c }
    }

    pub fn isotropic(k: f64, c: f64) -> Self {
        let mut a = [[0.0; 3]; 3];
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = k;
        }
        Self { a, c }
    }
}

/// Assembles `integral (A grad phi_j . grad phi_i + c phi_j phi_i)` over the
/// grid with a tensor Gauss rule of `order` points per axis. Every element
/// pushes all corner pairs, so forms assembled on one grid share a pattern.
pub fn assemble<F>(grid: &Grid, order: usize, coef: F) -> CsrMatrix
where
    F: Fn(&[f64]) -> Coefficient,
{
    let d = grid.dim();
    let corners = 1usize << d;
    let rule = ElementRule::new(grid, order);
    let mut triplets = Vec::with_capacity(grid.element_count() * corners * corners);
    let mut local = vec![0.0; corners * corners];
    let mut x = vec![0.0; d];
    grid.for_each_element(|ids, lower| {
        local.iter_mut().for_each(|v| *v = 0.0);
        for (t, w, phi, grad) in &rule.points {
            rule.physical(lower, t, &mut x);
            let k = coef(&x);
            for i in 0..corners {
                let mut agi = [0.0; 3];
                for (r, slot) in agi.iter_mut().enumerate().take(d) {
                    *slot = (0..d).map(|s| k.a[r][s] * grad[i][s]).sum();
                }
                for j in 0..corners {
                    let stiff: f64 = (0..d).map(|r| agi[r] * grad[j][r]).sum();
                    local[i * corners + j] += w * (stiff + k.c * phi[i] * phi[j]);
                }
            }
        }
        for i in 0..corners {
            for j in 0..corners {
                triplets.push((ids[i], ids[j], local[i * corners + j]));
            }
        }
    });
    CsrMatrix::from_triplets(grid.node_count(), triplets)
}

/// Gauss points mapped to one element: `(x, weight, phi, grad phi)`.
struct ElementRule {
    d: usize,
    h: Vec<f64>,
    points: Vec<(Vec<f64>, f64, Vec<f64>, Vec<[f64; 3]>)>,
}

impl ElementRule {
    fn new(grid: &Grid, order: usize) -> Self {
        let d = grid.dim();
        let corners = 1usize << d;
        let (gx, gw) = gauss_legendre(order);
        let h: Vec<f64> = (0..d).map(|a| grid.spacing(a)).collect();
        let mut points = Vec::new();
        for q in 0..gx.len().pow(d as u32) {
            let mut rem = q;
            let mut t = vec![0.0; d];
            let mut w = 1.0;
            for a in (0..d).rev() {
                let k = rem % gx.len();
                rem /= gx.len();
                t[a] = 0.5 * (gx[k] + 1.0);
                w *= 0.5 * gw[k] * h[a];
            }
            let mut phi = vec![0.0; corners];
            let mut grad = vec![[0.0f64; 3]; corners];
            for c in 0..corners {
                let bit = |a: usize| (c >> (d - 1 - a)) & 1 == 1;
                phi[c] = (0..d).map(|a| if bit(a) { t[a] } else { 1.0 - t[a] }).product();
                for g in 0..d {
                    grad[c][g] = (0..d)
                        .map(|a| match (a == g, bit(a)) {
                            (true, true) => 1.0 / h[a],
                            (true, false) => -1.0 / h[a],
                            (false, true) => t[a],
                            (false, false) => 1.0 - t[a],
                        })
                        .product();
                }
            }
            points.push((t, w, phi, grad));
        }
        Self { d, h, points }
    }

    fn physical(&self, lower: &[f64], t: &[f64], x: &mut [f64]) {
        for a in 0..self.d {
            x[a] = lower[a] + t[a] * self.h[a];
        }
    }
}

/// Load vector `integral (v . grad phi_i + s phi_i)` for a vector field `v`
/// and scalar `s` returned by `source`.
pub fn assemble_load<F>(grid: &Grid, order: usize, source: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> ([f64; 3], f64),
{
    let rule = ElementRule::new(grid, order);
    let d = grid.dim();
    let mut b = vec![0.0; grid.node_count()];
    let mut x = vec![0.0; d];
    grid.for_each_element(|ids, lower| {
        for (t, w, phi, grad) in &rule.points {
            rule.physical(lower, t, &mut x);
            let (v, s) = source(&x);
            for (c, &id) in ids.iter().enumerate() {
                let flux: f64 = (0..d).map(|a| v[a] * grad[c][a]).sum();
                b[id] += w * (flux + s * phi[c]);
            }
        }
    });
    b
}

/// `integral f` over the grid by the element Gauss rule.
pub fn integrate<F: Fn(&[f64]) -> f64>(grid: &Grid, order: usize, f: F) -> f64 {
    let rule = ElementRule::new(grid, order);
    let mut x = vec![0.0; grid.dim()];
    let mut total = 0.0;
    grid.for_each_element(|_, lower| {
        for (t, w, _, _) in &rule.points {
            rule.physical(lower, t, &mut x);
            total += w * f(&x);
        }
    });
    total
}

/// Interpolates nodal values of `f`.
pub fn interpolate<F: Fn(&[f64]) -> f64>(grid: &Grid, f: F) -> Vec<f64> {
    (0..grid.node_count()).map(|i| f(&grid.node(i))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn node_numbering_round_trips() {
        let g = Grid::new(vec![1.0, 2.0, 1.0], vec![3, 2, 4], Cover::Q).unwrap();
        assert_eq!(g.node_count(), 4 * 3 * 5);
        assert_eq!(g.line_len(), 5);
        for i in 0..g.node_count() {
            assert_eq!(g.node_index(&g.multi_index(i)), i);
        }
        assert_eq!(g.node(1), vec![0.0, 0.0, 0.25]);
        assert!((g.spacing(0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mass_matrix_integrates_measure() {
        let g = Grid::new(vec![2.0, 3.0], vec![5, 7], Cover::Omega).unwrap();
        let m = assemble(&g, 2, |_| Coefficient::mass(1.0));
        let ones = vec![1.0; g.node_count()];
        assert!((m.quad_form(&ones) - 6.0).abs() < 1e-12);
        let k = assemble(&g, 2, |_| Coefficient::isotropic(1.0, 0.0));
        assert!(k.mul(&ones).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn periodic_cell_wraps() {
        let g = Grid::new(vec![1.0], vec![8], Cover::Cell).unwrap();
        assert_eq!(g.node_count(), 8);
        let k = assemble(&g, 2, |_| Coefficient::isotropic(1.0, 0.0));
        assert!(k.get(0, 7) < 0.0);
        assert!(k.row_sums().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn same_pattern_for_all_forms() {
        let g = Grid::new(vec![1.0, 1.0], vec![4, 3], Cover::Q).unwrap();
        let a = assemble(&g, 3, |_| Coefficient::isotropic(1.0, 1.0));
        let b = assemble(&g, 3, |_| Coefficient::mass(0.0));
        assert_eq!(a.nnz(), b.nnz());
    }

    #[test]
    fn load_and_integral_agree_with_mass() {
        let g = Grid::new(vec![1.0, 2.0], vec![6, 5], Cover::Cell).unwrap();
        let b = assemble_load(&g, 3, |x| ([x[1].sin(), 0.0, 0.0], 2.0));
        // Periodic grid: the flux term of a field constant along its own
        // direction integrates to zero against the partition of unity.
        assert!((b.iter().sum::<f64>() - 4.0).abs() < 1e-12);
        assert!((integrate(&g, 3, |x| x[0] * x[0]) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn stiffness_energy_of_smooth_function() {
        let g = Grid::new(vec![1.0], vec![256], Cover::Omega).unwrap();
        let k = assemble(&g, 3, |_| Coefficient::isotropic(1.0, 0.0));
        let u = interpolate(&g, |x| (PI * x[0]).cos());
        // Exact: integral of pi^2 sin^2 = pi^2 / 2.
        assert!((k.quad_form(&u) - PI * PI / 2.0).abs() < 1e-3);
    }
}
