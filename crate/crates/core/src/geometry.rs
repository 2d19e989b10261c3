//! Boundary profiles, the thin-domain family and its coordinate maps.
//!
//! The thin domain is
//!
//! ```text
//! R^eps = { (x, y) : x in omega, -eps k1(x) < y < eps k2(x) },
//! k1(x) = h(x / eps^alpha),   k2(x) = g(x / eps^beta)
//! ```
//!
//! `L` shifts it so that the bottom is flat (`R_a^eps`), and `S` rescales the
//! vertical coordinate onto the fixed cylinder `Q = omega x (0, 1)`.

use std::f64::consts::PI;
use std::fmt;

use crate::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Sin,
    Cos,
}

/// `coef * sin(2 pi k y)` or `coef * cos(2 pi k y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigTerm {
    pub coef: f64,
    pub basis: Basis,
    pub wavenumber: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    Constant,
    Trig(Vec<TrigTerm>),
    /// Damped Fourier series of a sawtooth, normalised to `[-1, 1]`.
    /// `smoothing` lies in `(0, 1)`; smaller is sharper.
    SmoothedSawtooth { amplitude: f64, smoothing: f64 },
}

/// A C^1 periodic profile drawn from a closed-form family, with exact
/// derivative and cached bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryProfile {
    period: f64,
    offset: f64,
    kind: ProfileKind,
    lower: f64,
    upper: f64,
}

impl BoundaryProfile {
    pub fn constant(c: f64) -> Self {
        Self { period: 1.0, offset: c, kind: ProfileKind::Constant, lower: c, upper: c }
    }

    /// `offset + amplitude * sin(2 pi k y)`.
    pub fn sine(offset: f64, amplitude: f64, wavenumber: f64) -> Result<Self> {
        Self::trig(offset, vec![TrigTerm { coef: amplitude, basis: Basis::Sin, wavenumber }])
    }

    /// `offset + amplitude * cos(2 pi k y)`.
    pub fn cosine(offset: f64, amplitude: f64, wavenumber: f64) -> Result<Self> {
        Self::trig(offset, vec![TrigTerm { coef: amplitude, basis: Basis::Cos, wavenumber }])
    }

    /// A finite trigonometric sum. All wavenumbers must be positive integer
    /// multiples of the smallest one, which fixes the period.
    pub fn trig(offset: f64, terms: Vec<TrigTerm>) -> Result<Self> {
        if !offset.is_finite() {
            return Err(Error::Profile("non-finite offset".into()));
        }
        if terms.is_empty() {
            let mut p = Self::constant(offset);
            p.kind = ProfileKind::Trig(Vec::new());
            return Ok(p);
        }
        for t in &terms {
            if !(t.wavenumber > 0.0 && t.wavenumber.is_finite()) || !t.coef.is_finite() {
                return Err(Error::Profile(format!("bad trigonometric term {t:?}")));
            }
        }
        let fundamental = terms.iter().map(|t| t.wavenumber).fold(f64::INFINITY, f64::min);
        for t in &terms {
            let ratio = t.wavenumber / fundamental;
            if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
                return Err(Error::Profile(format!(
                    "wavenumber {} is not an integer multiple of {fundamental}",
                    t.wavenumber
                )));
            }
        }
        let mut p = Self {
            period: 1.0 / fundamental,
            offset,
            kind: ProfileKind::Trig(terms),
            lower: offset,
            upper: offset,
        };
        p.compute_trig_bounds();
        Ok(p)
    }

    pub fn sawtooth(offset: f64, amplitude: f64, smoothing: f64, period: f64) -> Result<Self> {
        if !(smoothing > 0.0 && smoothing < 1.0) {
            return Err(Error::Profile(format!("sawtooth smoothing {smoothing} must lie in (0, 1)")));
        }
        if !(period > 0.0 && period.is_finite()) || !offset.is_finite() || !amplitude.is_finite() {
            return Err(Error::Profile("sawtooth parameters must be finite with positive period".into()));
        }
        Ok(Self {
            period,
            offset,
            kind: ProfileKind::SmoothedSawtooth { amplitude, smoothing },
            lower: offset - amplitude.abs(),
            upper: offset + amplitude.abs(),
        })
    }

    fn compute_trig_bounds(&mut self) {
        let ProfileKind::Trig(terms) = &self.kind else { return };
        let distinct: Vec<f64> = {
            let mut ks: Vec<f64> = terms.iter().map(|t| t.wavenumber).collect();
            ks.sort_by(f64::total_cmp);
            ks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
            ks
        };
        if distinct.len() == 1 {
            let (a, b) = terms.iter().fold((0.0, 0.0), |(a, b), t| match t.basis {
                Basis::Sin => (a + t.coef, b),
                Basis::Cos => (a, b + t.coef),
            });
            let r = a.hypot(b);
            self.lower = self.offset - r;
            self.upper = self.offset + r;
            return;
        }
        // Dense sampling, then Newton on the derivative around every sampled
        // local extremum.
        let n = 2048 * distinct.iter().map(|k| (k * self.period).round() as usize).max().unwrap_or(1);
        let h = self.period / n as f64;
        let vals: Vec<f64> = (0..n).map(|i| self.value(h * i as f64)).collect();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let prev = vals[(i + n - 1) % n];
            let next = vals[(i + 1) % n];
            let v = vals[i];
            let is_max = v >= prev && v >= next;
            let is_min = v <= prev && v <= next;
            if !(is_max || is_min) {
                continue;
            }
            let mut y = h * i as f64;
            for _ in 0..20 {
                let d2 = self.second_derivative(y);
                if d2 == 0.0 {
                    break;
                }
                let step = self.derivative(y) / d2;
                if step.abs() > h {
                    break;
                }
                y -= step;
                if step.abs() < 1e-15 * self.period {
                    break;
                }
            }
            let refined = self.value(y);
            if is_max {
                hi = hi.max(v.max(refined));
            }
            if is_min {
                lo = lo.min(v.min(refined));
            }
        }
        self.lower = lo;
        self.upper = hi;
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower
    }

    pub fn upper_bound(&self) -> f64 {
        self.upper
    }

    /// True when the profile has no oscillating part.
    pub fn is_constant(&self) -> bool {
        match &self.kind {
            ProfileKind::Constant => true,
            ProfileKind::Trig(t) => t.iter().all(|t| t.coef == 0.0),
            ProfileKind::SmoothedSawtooth { amplitude, .. } => *amplitude == 0.0,
        }
    }

    /// Returns a copy whose values are multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut p = self.clone();
        p.offset *= c;
        match &mut p.kind {
            ProfileKind::Constant => {}
            ProfileKind::Trig(terms) => terms.iter_mut().for_each(|t| t.coef *= c),
            ProfileKind::SmoothedSawtooth { amplitude, .. } => *amplitude *= c,
        }
        p.lower *= c;
        p.upper *= c;
        if c < 0.0 {
            std::mem::swap(&mut p.lower, &mut p.upper);
        }
        p
    }

    fn saw_parts(&self, y: f64, smoothing: f64) -> (f64, f64) {
        let rho = 1.0 - smoothing;
        let theta = TWO_PI * y / self.period;
        let (s, c) = theta.sin_cos();
        let norm = rho.asin();
        let value = (rho * s).atan2(1.0 - rho * c) / norm;
        let dtheta = (rho * c - rho * rho) / (1.0 - 2.0 * rho * c + rho * rho) / norm;
        (value, dtheta * TWO_PI / self.period)
    }

    pub fn value(&self, y: f64) -> f64 {
        match &self.kind {
            ProfileKind::Constant => self.offset,
            ProfileKind::Trig(terms) => {
                self.offset
                    + terms
                        .iter()
                        .map(|t| {
                            let arg = TWO_PI * t.wavenumber * y;
                            t.coef * match t.basis {
                                Basis::Sin => arg.sin(),
                                Basis::Cos => arg.cos(),
                            }
                        })
                        .sum::<f64>()
            }
            ProfileKind::SmoothedSawtooth { amplitude, smoothing } => {
                self.offset + amplitude * self.saw_parts(y, *smoothing).0
            }
        }
    }

    pub fn derivative(&self, y: f64) -> f64 {
        match &self.kind {
            ProfileKind::Constant => 0.0,
            ProfileKind::Trig(terms) => terms
                .iter()
                .map(|t| {
                    let w = TWO_PI * t.wavenumber;
                    let arg = w * y;
                    t.coef * w * match t.basis {
                        Basis::Sin => arg.cos(),
                        Basis::Cos => -arg.sin(),
                    }
                })
                .sum(),
            ProfileKind::SmoothedSawtooth { amplitude, smoothing } => {
                amplitude * self.saw_parts(y, *smoothing).1
            }
        }
    }

    fn second_derivative(&self, y: f64) -> f64 {
        match &self.kind {
            ProfileKind::Trig(terms) => terms
                .iter()
                .map(|t| {
                    let w = TWO_PI * t.wavenumber;
                    let arg = w * y;
                    -t.coef * w * w * match t.basis {
                        Basis::Sin => arg.sin(),
                        Basis::Cos => arg.cos(),
                    }
                })
                .sum(),
            _ => {
                let h = 1e-5 * self.period;
                (self.derivative(y + h) - self.derivative(y - h)) / (2.0 * h)
            }
        }
    }

    /// Largest `|P'|` over one period, sampled with `per_period` points.
    pub fn max_abs_derivative(&self, per_period: usize) -> f64 {
        if self.is_constant() {
            return 0.0;
        }
        let h = self.period / per_period as f64;
        (0..per_period).map(|i| self.derivative(h * i as f64).abs()).fold(0.0, f64::max)
    }

    /// Profile over `R^n`: the average of the one-dimensional profile over the
    /// coordinates, periodic in the cell `[0, period]^n`.
    pub fn value_nd(&self, z: &[f64]) -> f64 {
        z.iter().map(|&zj| self.value(zj)).sum::<f64>() / z.len() as f64
    }

    pub fn partial_nd(&self, z: &[f64], axis: usize) -> f64 {
        self.derivative(z[axis]) / z.len() as f64
    }

    /// Parses the profile language:
    /// `const(c)`, `trig(offset; a sin k; b cos k; ...)`,
    /// `saw(offset, amplitude, smoothing[, period])`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = |msg: &str| Error::Profile(format!("{msg} in `{text}`"));
        let open = text.find('(').ok_or_else(|| bad("missing `(`"))?;
        if !text.ends_with(')') {
            return Err(bad("missing closing `)`"));
        }
        let name = text[..open].trim();
        let body = &text[open + 1..text.len() - 1];
        let num = |s: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|_| bad(&format!("`{}` is not a number", s.trim())))
        };
        match name {
            "const" => Ok(Self::constant(num(body)?)),
            "saw" => {
                let parts: Vec<&str> = body.split(',').collect();
                if parts.len() != 3 && parts.len() != 4 {
                    return Err(bad("saw takes 3 or 4 arguments"));
                }
                let period = if parts.len() == 4 { num(parts[3])? } else { 1.0 };
                Self::sawtooth(num(parts[0])?, num(parts[1])?, num(parts[2])?, period)
            }
            "trig" => {
                let mut parts = body.split(';');
                let offset = num(parts.next().unwrap_or(""))?;
                let mut terms = Vec::new();
                for part in parts {
                    let words: Vec<&str> = part.split_whitespace().collect();
                    if words.len() != 3 {
                        return Err(bad(&format!("term `{}` must read `<coef> sin|cos <k>`", part.trim())));
                    }
                    let basis = match words[1] {
                        "sin" => Basis::Sin,
                        "cos" => Basis::Cos,
                        other => return Err(bad(&format!("unknown basis `{other}`"))),
                    };
                    terms.push(TrigTerm { coef: num(words[0])?, basis, wavenumber: num(words[2])? });
                }
                Self::trig(offset, terms)
            }
            other => Err(bad(&format!("unknown profile kind `{other}`"))),
        }
    }
}

impl fmt::Display for BoundaryProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ProfileKind::Constant => write!(f, "const({})", self.offset),
            ProfileKind::Trig(terms) => {
                write!(f, "trig({}", self.offset)?;
                for t in terms {
                    let b = match t.basis {
                        Basis::Sin => "sin",
                        Basis::Cos => "cos",
                    };
                    write!(f, "; {} {} {}", t.coef, b, t.wavenumber)?;
                }
                write!(f, ")")
            }
            ProfileKind::SmoothedSawtooth { amplitude, smoothing } => {
                if self.period == 1.0 {
                    write!(f, "saw({}, {}, {})", self.offset, amplitude, smoothing)
                } else {
                    write!(f, "saw({}, {}, {}, {})", self.offset, amplitude, smoothing, self.period)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseDomain {
    /// `omega = (0, length)`.
    Interval { length: f64 },
    /// `omega = (0, lx) x (0, ly)`.
    Rectangle { lx: f64, ly: f64 },
}

impl BaseDomain {
    pub fn unit_interval() -> Self {
        BaseDomain::Interval { length: 1.0 }
    }

    pub fn dim(&self) -> usize {
        match self {
            BaseDomain::Interval { .. } => 1,
            BaseDomain::Rectangle { .. } => 2,
        }
    }

    pub fn extent(&self, axis: usize) -> f64 {
        match (self, axis) {
            (BaseDomain::Interval { length }, 0) => *length,
            (BaseDomain::Rectangle { lx, .. }, 0) => *lx,
            (BaseDomain::Rectangle { ly, .. }, 1) => *ly,
            _ => panic!("axis {axis} out of range for {self:?}"),
        }
    }

    pub fn extents(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.extent(j)).collect()
    }

    pub fn measure(&self) -> f64 {
        self.extents().iter().product()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(j, &xj)| xj >= -tol && xj <= self.extent(j) + tol)
    }
}

impl fmt::Display for BaseDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseDomain::Interval { length } => write!(f, "interval({length})"),
            BaseDomain::Rectangle { lx, ly } => write!(f, "rectangle({lx}, {ly})"),
        }
    }
}

/// Whether the spec satisfies the weak-oscillation hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    Within,
    /// Exponents outside `(0, 1)`; only constructed for negative controls.
    Outside,
}

/// One member of the thin-domain family at a fixed `epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThinDomainSpec {
    pub base: BaseDomain,
    /// Bottom profile `h`.
    pub bottom: BoundaryProfile,
    /// Top profile `g`.
    pub top: BoundaryProfile,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub hypothesis: Hypothesis,
}

impl ThinDomainSpec {
    pub fn new(
        base: BaseDomain,
        bottom: BoundaryProfile,
        top: BoundaryProfile,
        alpha: f64,
        beta: f64,
        epsilon: f64,
    ) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Spec(format!("{name} = {v} must lie strictly inside (0, 1)")));
            }
        }
        Self::build(base, bottom, top, alpha, beta, epsilon, Hypothesis::Within)
    }

    /// Builds a spec whose exponents may violate the weak-oscillation
    /// hypothesis (e.g. `alpha = 1`). The result is tagged
    /// [`Hypothesis::Outside`].
    pub fn out_of_hypothesis(
        base: BaseDomain,
        bottom: BoundaryProfile,
        top: BoundaryProfile,
        alpha: f64,
        beta: f64,
        epsilon: f64,
    ) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Spec(format!("{name} = {v} must be positive")));
            }
        }
        let within = alpha < 1.0 && beta < 1.0;
        let tag = if within { Hypothesis::Within } else { Hypothesis::Outside };
        Self::build(base, bottom, top, alpha, beta, epsilon, tag)
    }

    fn build(
        base: BaseDomain,
        bottom: BoundaryProfile,
        top: BoundaryProfile,
        alpha: f64,
        beta: f64,
        epsilon: f64,
        hypothesis: Hypothesis,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Spec(format!("epsilon = {epsilon} must be positive")));
        }
        if base.extents().iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::Spec(format!("base domain {base} must have positive extents")));
        }
        if top.lower_bound() <= 0.0 {
            return Err(Error::Spec(format!("top profile {top} must be bounded below by a positive constant")));
        }
        if bottom.lower_bound() < 0.0 {
            return Err(Error::Spec(format!("bottom profile {bottom} must be non-negative")));
        }
        Ok(Self { base, bottom, top, alpha, beta, epsilon, hypothesis })
    }

    /// Same geometry at another `epsilon`.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::build(self.base, self.bottom.clone(), self.top.clone(), self.alpha, self.beta, epsilon, self.hypothesis)
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    fn bottom_scale(&self) -> f64 {
        self.epsilon.powf(self.alpha)
    }

    fn top_scale(&self) -> f64 {
        self.epsilon.powf(self.beta)
    }

    /// Bottom thickness coefficient `k1(x) = h(x / eps^alpha)`.
    pub fn k1(&self, x: &[f64]) -> f64 {
        let s = self.bottom_scale();
        let z: Vec<f64> = x.iter().map(|v| v / s).collect();
        self.bottom.value_nd(&z)
    }

    /// Top thickness coefficient `k2(x) = g(x / eps^beta)`.
    pub fn k2(&self, x: &[f64]) -> f64 {
        let s = self.top_scale();
        let z: Vec<f64> = x.iter().map(|v| v / s).collect();
        self.top.value_nd(&z)
    }

    pub fn k1_partial(&self, x: &[f64], axis: usize) -> f64 {
        let s = self.bottom_scale();
        let z: Vec<f64> = x.iter().map(|v| v / s).collect();
        self.bottom.partial_nd(&z, axis) / s
    }

    pub fn k2_partial(&self, x: &[f64], axis: usize) -> f64 {
        let s = self.top_scale();
        let z: Vec<f64> = x.iter().map(|v| v / s).collect();
        self.top.partial_nd(&z, axis) / s
    }

    pub fn thickness(&self) -> OscillatingThickness<'_> {
        OscillatingThickness { spec: self }
    }

    /// `[g0 + h0, g1 + h1]`.
    pub fn thickness_bounds(&self) -> (f64, f64) {
        (
            self.top.lower_bound() + self.bottom.lower_bound(),
            self.top.upper_bound() + self.bottom.upper_bound(),
        )
    }

    /// Shortest oscillation wavelength in `x` units, or `None` for flat
    /// boundaries.
    pub fn shortest_wavelength(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        if !self.bottom.is_constant() {
            best = Some(self.bottom.period() * self.bottom_scale());
        }
        if !self.top.is_constant() {
            let w = self.top.period() * self.top_scale();
            best = Some(best.map_or(w, |b| b.min(w)));
        }
        best
    }

    /// Oscillation magnitude `eta = eta1 + eta2`, with
    /// `eta_i = max_j sup_x |eps d k_i / d x_j|` taken over a sample grid of
    /// at least 32 points per oscillation period.
    ///
    /// Profiles in `n > 1` are coordinate averages, so each partial
    /// derivative depends on its own coordinate only and the supremum over
    /// the `n`-dimensional grid equals the one-dimensional supremum.
    pub fn eta(&self) -> EtaReport {
        let n = self.dim();
        let per_boundary = |profile: &BoundaryProfile, scale: f64| -> f64 {
            if profile.is_constant() {
                return 0.0;
            }
            let mut best: f64 = 0.0;
            for j in 0..n {
                let extent = self.base.extent(j);
                let periods = extent / (profile.period() * scale);
                let samples = ((periods * 32.0).ceil() as usize).max(64);
                let h = extent / samples as f64;
                for i in 0..=samples {
                    let z = h * i as f64 / scale;
                    let d = profile.derivative(z) / (n as f64 * scale);
                    best = best.max((self.epsilon * d).abs());
                }
            }
            best
        };
        let eta1 = per_boundary(&self.bottom, self.bottom_scale());
        let eta2 = per_boundary(&self.top, self.top_scale());
        EtaReport { eta1, eta2, eta: eta1 + eta2 }
    }

    fn check_base(&self, point: &[f64], region: &'static str) -> Result<()> {
        let n = self.dim();
        if point.len() != n + 1 || !self.base.contains(&point[..n], 1e-12) {
            return Err(Error::Domain { point: point.to_vec(), region });
        }
        Ok(())
    }

    fn vertical_tol(&self, x: &[f64]) -> f64 {
        1e-12 * self.epsilon * self.thickness().value(x).max(1.0)
    }

    /// `L : R_a^eps -> R^eps`, `(x, ybar) -> (x, ybar - eps k1(x))`.
    pub fn map_l(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.check_base(point, "R_a^eps")?;
        let n = self.dim();
        let x = &point[..n];
        let ybar = point[n];
        let tol = self.vertical_tol(x);
        if ybar < -tol || ybar > self.epsilon * self.thickness().value(x) + tol {
            return Err(Error::Domain { point: point.to_vec(), region: "R_a^eps" });
        }
        let mut out = point.to_vec();
        out[n] = ybar - self.epsilon * self.k1(x);
        Ok(out)
    }

    /// `L^{-1} : R^eps -> R_a^eps`.
    pub fn map_l_inverse(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.check_base(point, "R^eps")?;
        let n = self.dim();
        let x = &point[..n];
        let y = point[n];
        let tol = self.vertical_tol(x);
        if y < -self.epsilon * self.k1(x) - tol || y > self.epsilon * self.k2(x) + tol {
            return Err(Error::Domain { point: point.to_vec(), region: "R^eps" });
        }
        let mut out = point.to_vec();
        out[n] = y + self.epsilon * self.k1(x);
        Ok(out)
    }

    /// Jacobian of `L` at `x` (rows: output coordinates).
    pub fn jacobian_l(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut jac = vec![vec![0.0; n + 1]; n + 1];
        for (i, row) in jac.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for j in 0..n {
            jac[n][j] = -self.epsilon * self.k1_partial(x, j);
        }
        jac
    }

    /// `S : Q -> R_a^eps`, `(x, y) -> (x, y eps K(x))`.
    pub fn map_s(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.check_base(point, "Q")?;
        let n = self.dim();
        let y = point[n];
        if !(-1e-12..=1.0 + 1e-12).contains(&y) {
            return Err(Error::Domain { point: point.to_vec(), region: "Q" });
        }
        let mut out = point.to_vec();
        out[n] = y * self.epsilon * self.thickness().value(&point[..n]);
        Ok(out)
    }

    /// `S^{-1} : R_a^eps -> Q`.
    pub fn map_s_inverse(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.check_base(point, "R_a^eps")?;
        let n = self.dim();
        let x = &point[..n];
        let k = self.epsilon * self.thickness().value(x);
        let ybar = point[n];
        let tol = self.vertical_tol(x);
        if ybar < -tol || ybar > k + tol {
            return Err(Error::Domain { point: point.to_vec(), region: "R_a^eps" });
        }
        let mut out = point.to_vec();
        out[n] = ybar / k;
        Ok(out)
    }

    /// Physical point of `R^eps` for a point of `Q` (`L o S`).
    pub fn q_to_physical(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.map_l(&self.map_s(point)?)
    }
}

/// `K(x) = k1(x) + k2(x)`; `eps K(x)` is the local thickness.
#[derive(Debug, Clone, Copy)]
pub struct OscillatingThickness<'a> {
    spec: &'a ThinDomainSpec,
}

impl OscillatingThickness<'_> {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.spec.k1(x) + self.spec.k2(x)
    }

    pub fn partial(&self, x: &[f64], axis: usize) -> f64 {
        self.spec.k1_partial(x, axis) + self.spec.k2_partial(x, axis)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len()).map(|j| self.partial(x, j)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaReport {
    pub eta1: f64,
    pub eta2: f64,
    pub eta: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn h_sin() -> BoundaryProfile {
        BoundaryProfile::sine(2.0, 1.0, 1.0).unwrap()
    }

    fn spec(alpha: f64, eps: f64) -> ThinDomainSpec {
        ThinDomainSpec::new(
            BaseDomain::unit_interval(),
            h_sin(),
            BoundaryProfile::constant(1.0),
            alpha,
            alpha,
            eps,
        )
        .unwrap()
    }

    #[test]
    fn constant_profiles_have_zero_eta() {
        let s = ThinDomainSpec::new(
            BaseDomain::unit_interval(),
            BoundaryProfile::constant(2.0),
            BoundaryProfile::constant(1.0),
            0.5,
            0.5,
            0.1,
        )
        .unwrap();
        let e = s.eta();
        assert_eq!((e.eta1, e.eta2, e.eta), (0.0, 0.0, 0.0));
    }

    // Oracle: eps * (2 pi / eps^alpha) * max|cos| evaluated directly, with a
    // centred finite-difference cross-check of the sampled derivative.
    #[test]
    fn eta_matches_power_law() {
        for (eps, expected) in [(0.01, 0.6283185307179586), (0.0001, 0.06283185307179587)] {
            let s = spec(0.5, eps);
            let e = s.eta();
            let oracle = eps * 2.0 * PI / eps.sqrt();
            assert!((oracle - expected).abs() < 1e-12);
            assert!((e.eta1 - oracle).abs() < 1e-9 * oracle, "eps {eps}: {} vs {oracle}", e.eta1);
            assert_eq!(e.eta2, 0.0);
            let x = [0.0];
            let d = 1e-7;
            let fd = (s.k1(&[x[0] + d]) - s.k1(&[x[0]])) / d;
            assert!((eps * fd - oracle).abs() < 1e-3 * oracle);
        }
    }

    #[test]
    fn map_l_constant_shift() {
        let s = ThinDomainSpec::new(
            BaseDomain::unit_interval(),
            BoundaryProfile::constant(2.0),
            BoundaryProfile::constant(1.0),
            0.5,
            0.5,
            0.1,
        )
        .unwrap();
        let p = s.map_l(&[0.5, 0.3]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn map_l_oscillating_shift() {
        let s = spec(0.5, 0.04);
        // 0.25 / 0.04^0.5 = 1.25, so h = 2 + sin(2.5 pi) = 3 and the shift is 0.12.
        let p = s.map_l(&[0.25, 0.05]).unwrap();
        assert!((0.05 - p[1] - 0.12).abs() < 1e-14);
        assert!((s.epsilon * s.k1(&[0.25]) - 0.12).abs() < 1e-14);
    }

    #[test]
    fn map_l_rejects_outside_points() {
        let s = spec(0.5, 0.04);
        assert!(matches!(s.map_l(&[0.25, -0.01]), Err(Error::Domain { .. })));
        assert!(matches!(s.map_l(&[1.5, 0.01]), Err(Error::Domain { .. })));
        assert!(matches!(s.map_s(&[0.5, 1.2]), Err(Error::Domain { .. })));
    }

    #[test]
    fn map_s_scales_vertically() {
        let s = ThinDomainSpec::new(
            BaseDomain::unit_interval(),
            BoundaryProfile::constant(2.0),
            BoundaryProfile::constant(1.0),
            0.5,
            0.5,
            0.1,
        )
        .unwrap();
        let p = s.map_s(&[0.5, 0.5]).unwrap();
        assert!((p[1] - 0.15).abs() < 1e-15);
        let osc = spec(0.5, 0.03);
        for x in [0.0, 0.17, 0.6, 1.0] {
            assert_eq!(osc.map_s(&[x, 0.0]).unwrap()[1], 0.0);
            let top = osc.map_s(&[x, 1.0]).unwrap()[1];
            assert!((top - osc.epsilon * osc.thickness().value(&[x])).abs() < 1e-15);
        }
    }

    #[test]
    fn map_s_is_linear_in_y() {
        let s = spec(0.5, 0.02);
        let x = 0.377;
        let ratio = |y: f64| s.map_s(&[x, y]).unwrap()[1] / y;
        let r0 = ratio(0.1);
        for y in [0.2, 0.5, 0.9, 1.0] {
            assert!((ratio(y) - r0).abs() < 1e-14 * r0);
        }
    }

    #[test]
    fn rejects_hypothesis_violations() {
        let b = BaseDomain::unit_interval();
        assert!(ThinDomainSpec::new(b, h_sin(), BoundaryProfile::constant(1.0), 1.0, 0.5, 0.1).is_err());
        assert!(ThinDomainSpec::new(b, h_sin(), BoundaryProfile::constant(0.0), 0.5, 0.5, 0.1).is_err());
        assert!(ThinDomainSpec::new(b, BoundaryProfile::constant(-0.1), h_sin(), 0.5, 0.5, 0.1).is_err());
        let s = ThinDomainSpec::out_of_hypothesis(b, h_sin(), BoundaryProfile::constant(1.0), 1.0, 1.0, 0.1).unwrap();
        assert_eq!(s.hypothesis, Hypothesis::Outside);
    }

    #[test]
    fn dsl_round_trips() {
        for text in ["const(2)", "trig(2; 1 sin 1; 0.5 cos 2)", "saw(1, 0.5, 0.3)", "saw(1, 0.5, 0.3, 2)"] {
            let p = BoundaryProfile::parse(text).unwrap();
            assert_eq!(p.to_string(), text);
        }
        assert!(BoundaryProfile::parse("trig(2; 1 tan 1)").is_err());
        assert!(BoundaryProfile::parse("wave(1)").is_err());
        assert!(BoundaryProfile::parse("trig(2; 1 sin 1; 1 sin 1.5)").is_err());
    }

    #[test]
    fn multi_frequency_bounds_are_tight() {
        let p = BoundaryProfile::parse("trig(3; 1 sin 1; 0.7 cos 3)").unwrap();
        let n = 200_000;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let v = p.value(i as f64 / n as f64);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        assert!(p.lower_bound() <= lo + 1e-12 && p.lower_bound() > lo - 1e-8);
        assert!(p.upper_bound() >= hi - 1e-12 && p.upper_bound() < hi + 1e-8);
    }

    fn profiles() -> impl Strategy<Value = BoundaryProfile> {
        prop_oneof![
            (0.5f64..3.0).prop_map(BoundaryProfile::constant),
            (2.0f64..3.0, -1.0f64..1.0, 0.2f64..3.0).prop_map(|(o, a, k)| BoundaryProfile::sine(o, a, k).unwrap()),
            (2.0f64..3.0, -1.0f64..1.0, 0.2f64..3.0, -0.5f64..0.5).prop_map(|(o, a, k, b)| {
                BoundaryProfile::trig(
                    o,
                    vec![
                        TrigTerm { coef: a, basis: Basis::Sin, wavenumber: k },
                        TrigTerm { coef: b, basis: Basis::Cos, wavenumber: 2.0 * k },
                    ],
                )
                .unwrap()
            }),
            (1.5f64..3.0, -1.0f64..1.0, 0.05f64..0.9, 0.3f64..2.0)
                .prop_map(|(o, a, s, p)| BoundaryProfile::sawtooth(o, a, s, p).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn profile_invariants(p in profiles(), y in -10.0f64..10.0) {
            let v = p.value(y);
            prop_assert!((p.value(y + p.period()) - v).abs() < 1e-11);
            prop_assert!(v >= p.lower_bound() - 1e-12 && v <= p.upper_bound() + 1e-12);
            let h = 1e-5 * p.period();
            let fd = (p.value(y + h) - p.value(y - h)) / (2.0 * h);
            let scale = 1.0 + p.max_abs_derivative(64);
            prop_assert!((fd - p.derivative(y)).abs() < 1e-5 * scale * scale);
        }

        #[test]
        fn maps_round_trip(x in 0.0f64..1.0, y in 0.0f64..1.0, eps in 0.001f64..0.2) {
            let s = ThinDomainSpec::new(
                BaseDomain::unit_interval(),
                h_sin(),
                BoundaryProfile::cosine(2.0, 1.0, 1.0).unwrap(),
                0.5, 0.3, eps,
            ).unwrap();
            let a = s.map_s(&[x, y]).unwrap();
            let r = s.map_l(&a).unwrap();
            let back = s.map_s_inverse(&s.map_l_inverse(&r).unwrap()).unwrap();
            prop_assert!((back[0] - x).abs() <= 1e-12 * x.max(1e-300) + 1e-15);
            prop_assert!((back[1] - y).abs() <= 1e-12 * y.max(1.0));
            let jac = nalgebra::DMatrix::from_fn(2, 2, |i, j| s.jacobian_l(&[x])[i][j]);
            prop_assert!((jac.determinant() - 1.0).abs() < 1e-14);
        }

        #[test]
        fn thickness_within_bounds(x in 0.0f64..1.0, eps in 0.0005f64..0.3) {
            let s = ThinDomainSpec::new(
                BaseDomain::unit_interval(),
                h_sin(),
                BoundaryProfile::cosine(2.0, 1.0, 1.0).unwrap(),
                0.5, 0.5, eps,
            ).unwrap();
            let (lo, hi) = s.thickness_bounds();
            let k = s.thickness().value(&[x]);
            prop_assert!(k >= lo - 1e-12 && k <= hi + 1e-12);
            let h = 1e-7 * eps.powf(0.5);
            let xm = (x - h).max(0.0);
            let fd = (s.thickness().value(&[xm + 2.0 * h]) - s.thickness().value(&[xm])) / (2.0 * h);
            let g = s.thickness().partial(&[xm + h], 0);
            prop_assert!((fd - g).abs() < 1e-4 * (1.0 + g.abs()));
        }
    }

    #[test]
    fn eta_decreases_with_epsilon() {
        let mut prev = f64::INFINITY;
        for eps in [0.2, 0.1, 0.05, 0.01, 0.001] {
            let e = spec(0.5, eps).eta().eta;
            assert!(e < prev);
            prev = e;
        }
    }

    #[test]
    fn sampled_thickness_bounds() {
        let s = ThinDomainSpec::new(
            BaseDomain::unit_interval(),
            h_sin(),
            BoundaryProfile::cosine(2.0, 1.0, 1.0).unwrap(),
            0.5,
            0.5,
            0.013,
        )
        .unwrap();
        let (lo, hi) = s.thickness_bounds();
        for i in 0..10_000 {
            let k = s.thickness().value(&[i as f64 / 9999.0]);
            assert!(k >= lo - 1e-12 && k <= hi + 1e-12);
        }
    }
}
