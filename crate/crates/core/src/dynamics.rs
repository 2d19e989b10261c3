//! Semilinear parabolic flows `u_t + L u = f(u)` on the thin domain and on
//! the limit domain: IMEX time stepping, equilibria by damped Newton, the
//! semigroup defect and directed Hausdorff semidistances.
//!
//! Discrete forms use the operator matrix `A` (the form of `L`), the
//! weighted mass `M` and its lumping `M_L` for nonlinear terms.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::geometry::ThinDomainSpec;
use crate::homogenization::HomogenizedModel;
use crate::operators::{
    assemble_limit, assemble_original, extend_e, q_grid, Field, FieldTag, LadderGrids, ProblemKind, SparseOperator,
};
use crate::sparse::{default_max_iter, minres, pcg, CsrMatrix, LineJacobi, Jacobi, Preconditioner};
use crate::spectral::{eigenpairs, horizontal_eigenpairs, EigenPair};
use crate::{Error, Result};

/// Cubic growth is followed exactly on `[-WINDOW, WINDOW]`.
pub const WINDOW: f64 = 3.0;
/// Width over which `f''` ramps linearly to zero outside the window.
pub const RAMP: f64 = 1.0;
/// Dissipativity margin `delta` in `f(s) s <= -delta s^2`.
pub const DISSIPATION_MARGIN: f64 = 0.5;
pub const DEFAULT_DT: f64 = 1e-3;
pub const NEWTON_TOL: f64 = 1e-9;
pub const DEDUP_TOL: f64 = 1e-6;
const NEWTON_MAX_ITER: usize = 60;
const STEP_TOL: f64 = 1e-12;

/// `f(s) = c0 + c1 s + c2 s^2 + c3 s^3` on the window, continued with a
/// `C^2` ramp of `f''` to zero and then linearly, so that `f'` and `f''`
/// are bounded on the whole line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nonlinearity {
    coeffs: [f64; 4],
}

impl Nonlinearity {
    pub fn zero() -> Self {
        Self { coeffs: [0.0; 4] }
    }

    pub fn cubic(c0: f64, c1: f64, c2: f64, c3: f64) -> Result<Self> {
        let coeffs = [c0, c1, c2, c3];
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Argument("nonlinearity coefficients must be finite".into()));
        }
        Ok(Self { coeffs })
    }

    /// `2 s - s^3`.
    pub fn allen_cahn() -> Self {
        Self { coeffs: [0.0, 2.0, 0.0, -1.0] }
    }

    pub fn coefficients(&self) -> [f64; 4] {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    fn p(&self, s: f64) -> f64 {
        let [a, b, c, d] = self.coeffs;
        a + s * (b + s * (c + s * d))
    }

    fn dp(&self, s: f64) -> f64 {
        let [_, b, c, d] = self.coeffs;
        b + s * (2.0 * c + 3.0 * d * s)
    }

    fn ddp(&self, s: f64) -> f64 {
        let [_, _, c, d] = self.coeffs;
        2.0 * c + 6.0 * d * s
    }

    fn prim_p(&self, s: f64) -> f64 {
        let [a, b, c, d] = self.coeffs;
        s * (a + s * (b / 2.0 + s * (c / 3.0 + s * d / 4.0)))
    }

    /// `(f, f', f'', F)` with `F(s) = integral_0^s f`.
    fn eval_all(&self, s: f64) -> (f64, f64, f64, f64) {
        if s.abs() <= WINDOW {
            return (self.p(s), self.dp(s), self.ddp(s), self.prim_p(s));
        }
        let sign = s.signum();
        let edge = sign * WINDOW;
        let (p0, p1, p2) = (self.p(edge), self.dp(edge), self.ddp(edge));
        let f_edge = self.prim_p(edge);
        // Local coordinate t >= 0 pointing away from the window.
        let t = (s.abs() - WINDOW).min(RAMP);
        let (ft, dft, ddft, prim) = ramp_piece(sign, p0, p1, p2, t);
        let beyond = s.abs() - WINDOW - t;
        if beyond <= 0.0 {
            return (ft, dft, ddft, f_edge + prim);
        }
        let tau = sign * beyond;
        (ft + dft * tau, dft, 0.0, f_edge + prim + ft * tau + 0.5 * dft * tau * tau)
    }

    pub fn value(&self, s: f64) -> f64 {
        self.eval_all(s).0
    }

    pub fn derivative(&self, s: f64) -> f64 {
        self.eval_all(s).1
    }

    pub fn second_derivative(&self, s: f64) -> f64 {
        self.eval_all(s).2
    }

    pub fn primitive(&self, s: f64) -> f64 {
        self.eval_all(s).3
    }

    /// Dissipativity certificate `(s_star, delta)`: `f(s) / s <= -delta`
    /// for `|s| >= s_star`, with `delta =` [`DISSIPATION_MARGIN`]. `None`
    /// when the tails do not dissipate (e.g. `f = 0`).
    pub fn certificate(&self) -> Option<(f64, f64)> {
        let delta = DISSIPATION_MARGIN;
        let far = WINDOW + RAMP + 1.0;
        let ok = |s: f64| self.value(s) / s <= -delta && self.value(-s) / -s <= -delta;
        // Beyond the ramp f is affine: check its slope and the far point.
        if !(self.derivative(far) < -delta && self.derivative(-far) < -delta) {
            return None;
        }
        let mut hi = far;
        while !ok(hi) {
            hi *= 2.0;
            if hi > 1e8 {
                return None;
            }
        }
        // The smallest s_star with the property on [s_star, hi], by a fine scan
        // then bisection on the last failure.
        let n = 20_000;
        let mut last_bad = 0.0;
        for i in (0..=n).rev() {
            let s = hi * i as f64 / n as f64;
            if s == 0.0 || !ok(s) {
                last_bad = s;
                break;
            }
        }
        let (mut a, mut b) = (last_bad, last_bad + hi / n as f64);
        if a == 0.0 && ok(b) {
            return Some((0.0, delta));
        }
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if ok(m) {
                b = m;
            } else {
                a = m;
            }
        }
        Some((b, delta))
    }

    /// `s_star` of the certificate, or 0 without one.
    pub fn s_star(&self) -> f64 {
        self.certificate().map_or(0.0, |c| c.0)
    }

    /// `zero` or `cubic(c0, c1, c2, c3)`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if t == "zero" {
            return Ok(Self::zero());
        }
        let inner = t
            .strip_prefix("cubic(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::Argument(format!("unknown nonlinearity `{t}`")))?;
        let vals: std::result::Result<Vec<f64>, _> = inner.split(',').map(|v| v.trim().parse::<f64>()).collect();
        match vals {
            Ok(v) if v.len() == 4 => Self::cubic(v[0], v[1], v[2], v[3]),
            _ => Err(Error::Argument(format!("cubic needs four numbers, got `{inner}`"))),
        }
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("zero");
        }
        let [a, b, c, d] = self.coeffs;
        write!(f, "cubic({a:?}, {b:?}, {c:?}, {d:?})")
    }
}

/// Integrated ramp of `f''` from `p2` at the window edge to 0 at distance
/// `RAMP`; `t` is measured away from the window.
fn ramp_piece(sign: f64, p0: f64, p1: f64, p2: f64, t: f64) -> (f64, f64, f64, f64) {
    let s = sign * t;
    let r = RAMP;
    let dd = p2 * (1.0 - t / r);
    let d = p1 + p2 * (s - sign * s * s / (2.0 * r));
    let v = p0 + p1 * s + p2 * (s * s / 2.0 - sign * s * s * s / (6.0 * r));
    let prim = p0 * s + p1 * s * s / 2.0 + p2 * (s * s * s / 6.0 - sign * s.powi(4) / (24.0 * r));
    (v, d, dd, prim)
}

fn sup_norm(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn line_or_point(op: &SparseOperator, m: &CsrMatrix) -> Box<dyn Preconditioner> {
    match LineJacobi::new(m, op.grid.line_len()) {
        Ok(p) => Box::new(p),
        Err(_) => Box::new(Jacobi::new(m)),
    }
}

/// One IMEX step `(M + dt A) u_next = M u + dt M_L f(u)`.
pub fn step_imex(op: &SparseOperator, state: &Field, dt: f64, nl: &Nonlinearity) -> Result<Field> {
    let stepper = Stepper::new(op, dt)?;
    Ok(Field { tag: state.tag, values: stepper.step(&state.values, nl)? })
}

struct Stepper<'a> {
    op: &'a SparseOperator,
    dt: f64,
    system: CsrMatrix,
    precond: Box<dyn Preconditioner>,
}

impl<'a> Stepper<'a> {
    fn new(op: &'a SparseOperator, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Argument(format!("dt = {dt} must be positive")));
        }
        let system = op.mass.add_scaled(&op.matrix, dt);
        let precond = line_or_point(op, &system);
        Ok(Self { op, dt, system, precond })
    }

    fn step(&self, u: &[f64], nl: &Nonlinearity) -> Result<Vec<f64>> {
        let mut rhs = self.op.mass.mul(u);
        if !nl.is_zero() {
            for ((r, ui), m) in rhs.iter_mut().zip(u).zip(&self.op.lumped_mass) {
                *r += self.dt * m * nl.value(*ui);
            }
        }
        let mut next = u.to_vec();
        pcg(&self.system, &rhs, &mut next, self.precond.as_ref(), STEP_TOL, default_max_iter(u.len()))?;
        Ok(next)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<Field>,
    /// `sup |u|` at every step, starting with the initial state.
    pub sup_norms: Vec<f64>,
    /// `1/2 u^T A u - sum m_i F(u_i)` at every step.
    pub energies: Vec<f64>,
    pub absorbing_bound: f64,
    pub dt: f64,
}

/// Lyapunov energy of the discrete flow.
pub fn energy(op: &SparseOperator, u: &[f64], nl: &Nonlinearity) -> f64 {
    let pot: f64 = u.iter().zip(&op.lumped_mass).map(|(v, m)| m * nl.primitive(*v)).sum();
    0.5 * op.matrix.quad_form(u) - pot
}

/// Repeated [`step_imex`] up to `t_end`, with snapshots at `snapshot_times`
/// (rounded to the step grid). The absorbing bound
/// `max(s_star, sup |u0|) + 1` and the invariance of `[-s_star, s_star]`
/// once reached are checked at every step.
pub fn evolve(
    op: &SparseOperator,
    u0: &Field,
    t_end: f64,
    dt: f64,
    nl: &Nonlinearity,
    snapshot_times: &[f64],
) -> Result<Trajectory> {
    if u0.len() != op.len() {
        return Err(Error::Argument("initial state does not match the operator".into()));
    }
    if !(t_end >= 0.0) {
        return Err(Error::Argument(format!("t_end = {t_end} must be nonnegative")));
    }
    let stepper = Stepper::new(op, dt)?;
    let s_star = nl.s_star();
    let bound = s_star.max(sup_norm(&u0.values)) + 1.0;
    let steps = (t_end / dt).round() as usize;
    let wanted: Vec<usize> = snapshot_times.iter().map(|t| (t / dt).round() as usize).collect();
    let mut u = u0.values.clone();
    let mut inside = s_star > 0.0 && sup_norm(&u) <= s_star;
    let mut traj = Trajectory {
        times: Vec::new(),
        snapshots: Vec::new(),
        sup_norms: vec![sup_norm(&u)],
        energies: vec![energy(op, &u, nl)],
        absorbing_bound: bound,
        dt,
    };
    for (k, &w) in wanted.iter().enumerate() {
        if w == 0 {
            traj.times.push(snapshot_times[k]);
            traj.snapshots.push(u0.clone());
        }
    }
    for n in 1..=steps {
        u = stepper.step(&u, nl)?;
        let sup = sup_norm(&u);
        if !sup.is_finite() || sup > bound {
            return Err(Error::Instability(format!("sup |u| = {sup} exceeds {bound} at t = {}; reduce dt", n as f64 * dt)));
        }
        if inside && sup > s_star * (1.0 + 1e-9) {
            return Err(Error::Instability(format!("left the invariant region [-{s_star}, {s_star}] at t = {}", n as f64 * dt)));
        }
        inside |= s_star > 0.0 && sup <= s_star;
        traj.sup_norms.push(sup);
        traj.energies.push(energy(op, &u, nl));
        for (k, &w) in wanted.iter().enumerate() {
            if w == n {
                traj.times.push(snapshot_times[k]);
                traj.snapshots.push(Field { tag: FieldTag::State, values: u.clone() });
            }
        }
    }
    Ok(traj)
}

/// Discrete-time oracle for the linear flow: with `u0` in the span of the
/// M-orthonormal `pairs`, `u_n = sum (1 + dt lambda_k)^{-n} c_k phi_k`.
pub fn eigen_expansion(op: &SparseOperator, pairs: &[EigenPair], u0: &[f64], dt: f64, steps: usize) -> Vec<f64> {
    let mu0 = op.mass.mul(u0);
    let mut out = vec![0.0; u0.len()];
    for p in pairs {
        let phi = &p.eigenfunction.values;
        let c: f64 = phi.iter().zip(&mu0).map(|(a, b)| a * b).sum();
        let decay = (1.0 + dt * p.eigenvalue).powi(-(steps as i32));
        out.iter_mut().zip(phi).for_each(|(o, v)| *o += c * decay * v);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub field: Field,
    /// `(r^T M_L^{-1} r)^{1/2}` of `r = A u - M_L f(u)`.
    pub residual: f64,
    pub iterations: usize,
    pub seed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriaSet {
    pub members: Vec<Equilibrium>,
    /// Seeds whose Newton iteration failed, with the reason.
    pub failures: Vec<(usize, String)>,
}

impl EquilibriaSet {
    pub fn fields(&self) -> Vec<Vec<f64>> {
        self.members.iter().map(|e| e.field.values.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Whether some member equals the constant `c` within `tol` in sup norm.
    pub fn contains_constant(&self, c: f64, tol: f64) -> bool {
        self.members.iter().any(|e| e.field.values.iter().all(|v| (v - c).abs() <= tol))
    }
}

fn stationary_residual(op: &SparseOperator, u: &[f64], nl: &Nonlinearity) -> (Vec<f64>, f64) {
    let mut r = op.matrix.mul(u);
    for ((ri, ui), m) in r.iter_mut().zip(u).zip(&op.lumped_mass) {
        *ri -= m * nl.value(*ui);
    }
    let norm = r.iter().zip(&op.lumped_mass).map(|(v, m)| v * v / m).sum::<f64>().sqrt();
    (r, norm)
}

fn newton(op: &SparseOperator, seed: &[f64], nl: &Nonlinearity, precond: &dyn Preconditioner) -> Result<(Vec<f64>, f64, usize)> {
    let mut u = seed.to_vec();
    let (mut r, mut res) = stationary_residual(op, &u, nl);
    for it in 0..NEWTON_MAX_ITER {
        if res <= NEWTON_TOL {
            return Ok((u, res, it));
        }
        let shift: Vec<f64> = u.iter().zip(&op.lumped_mass).map(|(v, m)| -m * nl.derivative(*v)).collect();
        let jac = op.matrix.plus_diagonal(&shift);
        let mut du = vec![0.0; u.len()];
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        match minres(&jac, &neg, &mut du, precond, 1e-10, 2 * default_max_iter(u.len())) {
            Ok(_) => {}
            Err(Error::Solver { residual, .. }) if residual < 1e-6 => {}
            Err(e) => return Err(e),
        }
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + lambda * b).collect();
            let (tr, tres) = stationary_residual(op, &trial, nl);
            if tres < (1.0 - 1e-4 * lambda) * res || lambda < 1e-4 {
                u = trial;
                r = tr;
                res = tres;
                break;
            }
            lambda *= 0.5;
        }
        if !res.is_finite() {
            break;
        }
    }
    if res <= NEWTON_TOL {
        return Ok((u, res, NEWTON_MAX_ITER));
    }
    Err(Error::Study(format!("Newton stalled at residual {res:e}")))
}

/// Stationary states of `L u = f(u)` by damped Newton from each seed
/// (MINRES on the symmetric Jacobian), deduplicated at [`DEDUP_TOL`] in the
/// operator's `Z` norm.
pub fn equilibria(op: &SparseOperator, nl: &Nonlinearity, seeds: &[Vec<f64>]) -> Result<EquilibriaSet> {
    let precond = line_or_point(op, &op.matrix);
    let results: Vec<Result<(Vec<f64>, f64, usize)>> =
        seeds.par_iter().map(|s| newton(op, s, nl, precond.as_ref())).collect();
    let mut set = EquilibriaSet { members: Vec::new(), failures: Vec::new() };
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok((u, residual, iterations)) => {
                let dup = set.members.iter().any(|m| {
                    let d: Vec<f64> = m.field.values.iter().zip(&u).map(|(a, b)| a - b).collect();
                    op.mass_norm(&d) <= DEDUP_TOL
                });
                if !dup {
                    set.members.push(Equilibrium { field: Field::new(FieldTag::State, u)?, residual, iterations, seed: i });
                }
            }
            Err(e) => set.failures.push((i, e.to_string())),
        }
    }
    set.members.sort_by(|a, b| {
        let ma: f64 = a.field.values.iter().sum();
        let mb: f64 = b.field.values.iter().sum();
        ma.total_cmp(&mb)
    });
    Ok(set)
}

/// Constants on `[-2, 2]` with step 0.25, plus the constants `-1, 0, 1`
/// perturbed by `+-0.5` times the first non-constant eigenfunction.
pub fn default_seeds(op: &SparseOperator) -> Result<Vec<Vec<f64>>> {
    let n = op.len();
    let mut seeds: Vec<Vec<f64>> = (0..=16).map(|i| vec![-2.0 + 0.25 * i as f64; n]).collect();
    let pairs = match op.kind {
        ProblemKind::Limit | ProblemKind::Reduced => eigenpairs(op, 2)?,
        _ => horizontal_eigenpairs(op, 2)?,
    };
    let phi = &pairs[1].eigenfunction.values;
    for c in [-1.0, 0.0, 1.0] {
        for s in [-0.5, 0.5] {
            seeds.push(phi.iter().map(|v| c + s * v).collect());
        }
    }
    Ok(seeds)
}

/// Directed Hausdorff semidistance `sup_{a in A} inf_{b in B} norm(a - b)`.
pub fn semidistance<N: Fn(&[f64]) -> f64>(a: &[Vec<f64>], b: &[Vec<f64>], norm: N) -> Result<f64> {
    if b.is_empty() {
        return Err(Error::Argument("semidistance to an empty set".into()));
    }
    let mut worst: f64 = 0.0;
    for x in a {
        let mut best = f64::INFINITY;
        for y in b {
            if x.len() != y.len() {
                return Err(Error::Argument("semidistance between fields on different grids".into()));
            }
            let d: Vec<f64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
            best = best.min(norm(&d));
        }
        worst = worst.max(best);
    }
    Ok(worst)
}

/// Terminal states after `t_transient` from each seed: a finite sample of
/// the attractor, not the attractor itself.
pub fn attractor_surrogate(
    op: &SparseOperator,
    nl: &Nonlinearity,
    seeds: &[Vec<f64>],
    t_transient: f64,
    dt: f64,
) -> Result<Vec<Vec<f64>>> {
    if t_transient < 5.0 {
        return Err(Error::Argument(format!("t_transient = {t_transient} must be at least 5")));
    }
    seeds
        .par_iter()
        .map(|s| {
            let u0 = Field::new(FieldTag::State, s.clone())?;
            let tr = evolve(op, &u0, t_transient, dt, nl, &[t_transient])?;
            Ok(tr.snapshots.into_iter().last().map(|f| f.values).unwrap_or_default())
        })
        .collect()
}

/// Smooth random initial states on `omega` with values in `[-2, 2]`:
/// clipped random cosine sums, reproducible from the seed.
pub fn random_smooth_states(count: usize, seed: u64, nodes: &[Vec<f64>], extents: &[f64]) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pi = std::f64::consts::PI;
    (0..count)
        .map(|_| {
            let modes: Vec<(Vec<usize>, f64)> = (0..4)
                .map(|_| ((0..extents.len()).map(|_| rng.random_range(0..4usize)).collect(), rng.random_range(-1.5..1.5)))
                .collect();
            nodes
                .iter()
                .map(|x| {
                    let v: f64 = modes
                        .iter()
                        .map(|(k, a)| a * k.iter().zip(x).zip(extents).map(|((&k, xi), l)| (k as f64 * pi * xi / l).cos()).product::<f64>())
                        .sum();
                    v.clamp(-2.0, 2.0)
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectRow {
    pub epsilon: f64,
    pub t: f64,
    /// `|||T_eps(t) E u0 - E T_0(t) u0|||_{Z_eps^{1/2}}`.
    pub defect_h1: f64,
    /// The same in `Z_eps`.
    pub defect_l2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupDefect {
    pub rows: Vec<DefectRow>,
    /// `-slope` of `log defect_h1` against `log t`.
    pub gamma_fit: f64,
    pub max_sup: f64,
    pub absorbing_bound: f64,
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return f64::NAN;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Starting state of the limit flow for a general thin-domain state:
/// `M_eps w / mean(K)`, which is `u0` itself for `w = E u0` on a constant
/// thickness and the thickness-weighted average otherwise.
pub fn limit_start(spec: &ThinDomainSpec, q: &crate::fem::Grid, w: &Field) -> Result<Field> {
    let m = crate::operators::average_m(spec, q, w)?;
    let base = q.base()?;
    let mean_k = crate::fem::integrate(&base, 3, |x| spec.thickness().value(x)) / spec.base.measure();
    Ok(Field { tag: FieldTag::Averaged, values: m.values.iter().map(|v| v / mean_k).collect() })
}

/// Integrates the thin-domain flow from `E u0` and the limit flow from `u0`
/// and measures their distance at each `t`.
pub fn semigroup_defect<F: Fn(&[f64]) -> f64>(
    spec: &ThinDomainSpec,
    grids: &LadderGrids,
    model: &HomogenizedModel,
    nl: &Nonlinearity,
    t_list: &[f64],
    u0: F,
    dt: f64,
) -> Result<SemigroupDefect> {
    if t_list.is_empty() || t_list.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Argument("times must be positive".into()));
    }
    let q = q_grid(spec, &grids.x_cells, grids.y_cells)?;
    let omega = q.base()?;
    let op_eps = assemble_original(spec, &q)?;
    let op_0 = assemble_limit(model, &omega)?;
    let start0 = Field::new(FieldTag::State, omega.nodes().iter().map(|x| u0(x)).collect())?;
    let start_eps = extend_e(&start0, &q)?;
    let t_end = t_list.iter().cloned().fold(0.0, f64::max);
    let (te, t0) = rayon::join(
        || evolve(&op_eps, &start_eps, t_end, dt, nl, t_list),
        || evolve(&op_0, &start0, t_end, dt, nl, t_list),
    );
    let (te, t0) = (te?, t0?);
    let mut rows = Vec::with_capacity(t_list.len());
    for (k, &t) in t_list.iter().enumerate() {
        let ext = extend_e(&t0.snapshots[k], &q)?;
        let diff = te.snapshots[k].sub(&ext);
        rows.push(DefectRow { epsilon: spec.epsilon, t, defect_h1: op_eps.energy_norm(&diff), defect_l2: op_eps.mass_norm(&diff) });
    }
    let lx: Vec<f64> = rows.iter().map(|r| r.t.ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.defect_h1.max(1e-300).ln()).collect();
    let max_sup = te.sup_norms.iter().chain(&t0.sup_norms).cloned().fold(0.0, f64::max);
    Ok(SemigroupDefect {
        rows,
        gamma_fit: -fit_slope(&lx, &ly),
        max_sup,
        absorbing_bound: te.absorbing_bound.max(t0.absorbing_bound),
    })
}
