//! Composite Simpson rules with dyadic refinement, and Gauss-Legendre nodes
//! for element integration.

/// Hard cap on the number of subintervals used by the refining rules.
pub const MAX_POINTS: usize = 1 << 20;

/// Outcome of a refining quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// `|S(2n) - S(n)|` at the final level.
    pub estimate: f64,
    /// Number of subintervals (per axis for tensor rules) at the final level.
    pub points: usize,
    pub converged: bool,
}

/// Composite Simpson rule on `n` subintervals (`n` is rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let v = f(a + h * i as f64);
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even)
}

/// Simpson weights for `n + 1` equispaced nodes covering an interval of
/// length `len`. Falls back to the trapezoid rule for odd `n`.
pub fn simpson_weights(n: usize, len: f64) -> Vec<f64> {
    let h = len / n as f64;
    if n % 2 == 1 {
        let mut w = vec![h; n + 1];
        w[0] = 0.5 * h;
        w[n] = 0.5 * h;
        return w;
    }
    (0..=n)
        .map(|i| {
            let c = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect()
}

/// Doubles the Simpson resolution, starting from `start` subintervals, until
/// two successive values agree to `rel_tol` (relative, with an absolute
/// floor of `rel_tol` for values near zero) or [`MAX_POINTS`] is reached.
pub fn refine_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, start: usize) -> Quadrature {
    let mut n = (start.max(2) + 1) & !1;
    let mut prev = simpson(&f, a, b, n);
    loop {
        let next_n = 2 * n;
        let next = simpson(&f, a, b, next_n);
        let estimate = (next - prev).abs();
        let converged = estimate <= rel_tol * next.abs().max(1.0);
        if converged || next_n >= MAX_POINTS {
            return Quadrature { value: next, estimate, points: next_n, converged };
        }
        n = next_n;
        prev = next;
    }
}

fn simpson_2d<F: Fn(f64, f64) -> f64>(f: &F, ax: (f64, f64), ay: (f64, f64), n: usize) -> f64 {
    let wx = simpson_weights(n, ax.1 - ax.0);
    let wy = simpson_weights(n, ay.1 - ay.0);
    let hx = (ax.1 - ax.0) / n as f64;
    let hy = (ay.1 - ay.0) / n as f64;
    let mut total = 0.0;
    for (i, wi) in wx.iter().enumerate() {
        let x = ax.0 + hx * i as f64;
        let mut row = 0.0;
        for (j, wj) in wy.iter().enumerate() {
            row += wj * f(x, ay.0 + hy * j as f64);
        }
        total += wi * row;
    }
    total
}

/// Tensor-product Simpson over a rectangle with dyadic refinement. The cap
/// applies to the total number of nodes (`n^2 <= MAX_POINTS`).
pub fn refine_simpson_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    ax: (f64, f64),
    ay: (f64, f64),
    rel_tol: f64,
    start: usize,
) -> Quadrature {
    let cap = (MAX_POINTS as f64).sqrt() as usize;
    let mut n = (start.max(2) + 1) & !1;
    let mut prev = simpson_2d(&f, ax, ay, n);
    loop {
        let next_n = 2 * n;
        let next = simpson_2d(&f, ax, ay, next_n);
        let estimate = (next - prev).abs();
        let converged = estimate <= rel_tol * next.abs().max(1.0);
        if converged || next_n >= cap {
            return Quadrature { value: next, estimate, points: next_n, converged };
        }
        n = next_n;
        prev = next;
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    match order {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let a = 1.0 / 3f64.sqrt();
            (vec![-a, a], vec![1.0, 1.0])
        }
        3 => {
            let a = (0.6f64).sqrt();
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        _ => {
            let a = (3.0 / 7.0 - 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
            let b = (3.0 / 7.0 + 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
            let wa = (18.0 + 30f64.sqrt()) / 36.0;
            let wb = (18.0 - 30f64.sqrt()) / 36.0;
            (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 2);
        assert!((v - (4.0 - 4.0 + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn refinement_reaches_tolerance() {
        let q = refine_simpson(|x| (x).sin(), 0.0, PI, 1e-12, 8);
        assert!(q.converged);
        assert!((q.value - 2.0).abs() < 1e-11);
    }

    #[test]
    fn tensor_rule_integrates_separable_products() {
        let q = refine_simpson_2d(|x, y| x.exp() * y.cos(), (0.0, 1.0), (0.0, 1.0), 1e-12, 4);
        let exact = (1f64.exp() - 1.0) * 1f64.sin();
        assert!((q.value - exact).abs() < 1e-11);
    }

    #[test]
    fn gauss_rules_integrate_their_degree() {
        for order in 1..=4 {
            let (x, w) = gauss_legendre(order);
            let deg = 2 * order - 1;
            let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((v - exact).abs() < 1e-14, "order {order}");
        }
    }

    #[test]
    fn simpson_weights_sum_to_length() {
        for n in [1, 2, 7, 16] {
            let s: f64 = simpson_weights(n, 3.0).iter().sum();
            assert!((s - 3.0).abs() < 1e-14);
        }
    }
}
