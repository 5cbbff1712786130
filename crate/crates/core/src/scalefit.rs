//! Chinchilla-style scaling laws `L(N, D) = E + A/N^α + B/D^β`.
//!
//! Fits minimize `Σ huber_δ(log Lᵢ − log L̂ᵢ)` over `(log E, log A, α, log B, β)`,
//! with `log L̂` evaluated as a log-sum-exp. A lattice of starting points is
//! scored, the best ones are refined with Nelder–Mead, and every refined point
//! is polished by damped Gauss–Newton steps on the Huber weights.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::{abs, exp, floor, ln, powf};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("need at least 6 points, got {0}")]
    TooFewPoints(usize),
    #[error("point {0} has a non-positive or non-finite field")]
    InvalidPoint(usize),
    #[error("degenerate design: {0}")]
    Degenerate(&'static str),
    #[error("all losses are equal; the law is not identifiable")]
    ConstantLoss,
    #[error("invalid fit configuration: {0}")]
    BadConfig(&'static str),
    #[error("target loss {target} is unreachable: the asymptote is {asymptote}")]
    Unreachable { target: f64, asymptote: f64 },
    #[error("{0} must be positive and finite")]
    NonPositive(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalingPoint {
    pub n: f64,
    pub d: f64,
    pub loss: f64,
}

impl ScalingPoint {
    pub fn new(n: f64, d: f64, loss: f64) -> Result<Self, FitError> {
        let p = ScalingPoint { n, d, loss };
        if !p.is_valid() {
            return Err(FitError::InvalidPoint(0));
        }
        Ok(p)
    }

    fn is_valid(&self) -> bool {
        [self.n, self.d, self.loss].iter().all(|x| x.is_finite() && *x > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalingLawParams {
    #[cfg_attr(feature = "serde", serde(rename = "E"))]
    pub e: f64,
    #[cfg_attr(feature = "serde", serde(rename = "A"))]
    pub a: f64,
    pub alpha: f64,
    #[cfg_attr(feature = "serde", serde(rename = "B"))]
    pub b: f64,
    pub beta: f64,
}

impl ScalingLawParams {
    pub fn new(e: f64, a: f64, alpha: f64, b: f64, beta: f64) -> Result<Self, FitError> {
        let p = ScalingLawParams { e, a, alpha, b, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), FitError> {
        for (name, v) in [("E", self.e), ("A", self.a), ("alpha", self.alpha), ("B", self.b), ("beta", self.beta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(FitError::NonPositive(name));
            }
        }
        Ok(())
    }

    /// Compute-optimal parameter exponent `β/(α+β)`.
    pub fn a_opt(&self) -> f64 {
        self.beta / (self.alpha + self.beta)
    }

    /// Compute-optimal token exponent `α/(α+β)`.
    pub fn b_opt(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.e, self.a, self.alpha, self.b, self.beta]
    }

    fn theta(&self) -> [f64; 5] {
        [ln(self.e), ln(self.a), self.alpha, ln(self.b), self.beta]
    }

    fn from_theta(t: &[f64; 5]) -> Self {
        ScalingLawParams { e: exp(t[0]), a: exp(t[1]), alpha: t[2], b: exp(t[3]), beta: t[4] }
    }
}

pub const PARAM_NAMES: [&str; 5] = ["E", "A", "alpha", "B", "beta"];

pub fn predict_loss(params: &ScalingLawParams, n: f64, d: f64) -> f64 {
    params.e + params.a / powf(n, params.alpha) + params.b / powf(d, params.beta)
}

/// Lattice of starting points in `(log E, log A, α, log B, β)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StartGrid {
    /// `E` spans `[e_lo_frac · min L, e_hi_frac · min L]`.
    pub e_lo_frac: f64,
    pub e_hi_frac: f64,
    pub e_count: usize,
    /// `A` and `B` span `[coef_lo, coef_hi]`, log-spaced.
    pub coef_lo: f64,
    pub coef_hi: f64,
    pub coef_count: usize,
    pub exp_lo: f64,
    pub exp_hi: f64,
    pub exp_count: usize,
    /// How many of the best lattice points are refined.
    pub refine: usize,
}

impl Default for StartGrid {
    fn default() -> Self {
        StartGrid {
            e_lo_frac: 0.5,
            e_hi_frac: 1.0,
            e_count: 6,
            coef_lo: 1.0,
            coef_hi: 500.0,
            coef_count: 6,
            exp_lo: 0.1,
            exp_hi: 0.5,
            exp_count: 5,
            refine: 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitConfig {
    pub huber_delta: f64,
    pub starts: StartGrid,
    pub bootstrap_n: usize,
    pub ci_level: f64,
    pub fixed_exponents: Option<(f64, f64)>,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            huber_delta: 1e-3,
            starts: StartGrid::default(),
            bootstrap_n: 1000,
            ci_level: 0.95,
            fixed_exponents: None,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), FitError> {
        if !(self.huber_delta > 0.0 && self.huber_delta.is_finite()) {
            return Err(FitError::BadConfig("huber_delta must be positive"));
        }
        if self.bootstrap_n < 1 {
            return Err(FitError::BadConfig("bootstrap_n must be at least 1"));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(FitError::BadConfig("ci_level must lie in (0, 1)"));
        }
        let g = &self.starts;
        if g.e_count == 0 || g.coef_count == 0 || g.exp_count == 0 || g.refine == 0 {
            return Err(FitError::BadConfig("start grid must be non-empty"));
        }
        if let Some((a, b)) = self.fixed_exponents {
            if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                return Err(FitError::BadConfig("fixed exponents must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitDiagnostics {
    /// Coefficient of determination of `log L`.
    pub r2: f64,
    /// `log Lᵢ − log L̂ᵢ`.
    pub residuals: Vec<f64>,
    pub objective: f64,
    /// Whether `E` lies below the smallest observed loss.
    pub e_below_min_loss: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitResult {
    pub params: ScalingLawParams,
    pub diagnostics: FitDiagnostics,
}

fn huber(r: f64, delta: f64) -> f64 {
    let a = abs(r);
    if a <= delta {
        0.5 * r * r
    } else {
        delta * (a - 0.5 * delta)
    }
}

/// Precomputed `(log N, log D, log L)` triples.
struct Problem {
    rows: Vec<[f64; 3]>,
    weights: Vec<f64>,
    delta: f64,
    lower: [f64; 5],
    upper: [f64; 5],
}

/// Box outside which the objective is infinite: `E` within `e^{±12}` of the
/// loss range, coefficients in `[e^{-30}, e^{60}]`, exponents in `[1e-3, 3]`.
fn bounds(rows: &[[f64; 3]]) -> ([f64; 5], [f64; 5]) {
    let lo = rows.iter().map(|r| r[2]).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r[2]).fold(f64::NEG_INFINITY, f64::max);
    ([lo - 12.0, -30.0, 1e-3, -30.0, 1e-3], [hi + 12.0, 60.0, 3.0, 60.0, 3.0])
}

impl Problem {
    fn new(points: &[ScalingPoint], delta: f64) -> Self {
        let rows: Vec<[f64; 3]> = points.iter().map(|p| [ln(p.n), ln(p.d), ln(p.loss)]).collect();
        let weights = vec![1.0; rows.len()];
        Self::from_rows(rows, weights, delta)
    }

    fn from_rows(rows: Vec<[f64; 3]>, weights: Vec<f64>, delta: f64) -> Self {
        let (lower, upper) = bounds(&rows);
        Problem { rows, weights, delta, lower, upper }
    }

    /// `(log L̂, softmax weights of the three terms)`.
    #[inline]
    fn log_pred(t: &[f64; 5], ln_n: f64, ln_d: f64) -> (f64, [f64; 3]) {
        let x = [t[0], t[1] - t[2] * ln_n, t[3] - t[4] * ln_d];
        let m = x[0].max(x[1]).max(x[2]);
        let e = [exp(x[0] - m), exp(x[1] - m), exp(x[2] - m)];
        let s = e[0] + e[1] + e[2];
        (m + ln(s), [e[0] / s, e[1] / s, e[2] / s])
    }

    fn objective(&self, t: &[f64; 5]) -> f64 {
        if (0..5).any(|i| !(t[i] >= self.lower[i] && t[i] <= self.upper[i])) {
            return f64::INFINITY;
        }
        let mut total = 0.0;
        for (row, w) in self.rows.iter().zip(&self.weights) {
            if *w == 0.0 {
                continue;
            }
            let (lp, _) = Self::log_pred(t, row[0], row[1]);
            total += w * huber(row[2] - lp, self.delta);
        }
        if total.is_finite() {
            total
        } else {
            f64::INFINITY
        }
    }
}

/// Which of the five coordinates are optimized; the rest stay at `base`.
#[derive(Clone, Copy)]
struct Mask {
    free: [bool; 5],
    base: [f64; 5],
}

impl Mask {
    fn all() -> Self {
        Mask { free: [true; 5], base: [0.0; 5] }
    }

    fn fixed_exponents(alpha: f64, beta: f64) -> Self {
        Mask { free: [true, true, false, true, false], base: [0.0, 0.0, alpha, 0.0, beta] }
    }

    fn dim(&self) -> usize {
        self.free.iter().filter(|&&f| f).count()
    }

    fn expand(&self, x: &[f64]) -> [f64; 5] {
        let mut t = self.base;
        let mut k = 0;
        for i in 0..5 {
            if self.free[i] {
                t[i] = x[k];
                k += 1;
            }
        }
        t
    }

    fn project(&self, t: &[f64; 5]) -> Vec<f64> {
        (0..5).filter(|&i| self.free[i]).map(|i| t[i]).collect()
    }
}

const NM_STEPS: [f64; 5] = [0.05, 0.5, 0.05, 0.5, 0.05];

fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], steps: &[f64], max_evals: usize, ftol: f64) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        simplex.push(x);
    }
    let mut vals: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
    let mut evals = n + 1;
    let mut order: Vec<usize> = (0..=n).collect();
    while evals < max_evals {
        order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(core::cmp::Ordering::Equal));
        let (best, worst, second) = (order[0], order[n], order[n - 1]);
        if abs(vals[worst] - vals[best]) <= ftol * (abs(vals[best]) + 1e-300) {
            let spread = (0..n)
                .map(|i| simplex.iter().map(|x| abs(x[i] - simplex[best][i])).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if spread < 1e-10 || vals[worst] == vals[best] {
                break;
            }
        }
        let mut centroid = vec![0.0; n];
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[worst]).map(|(c, w)| c + t * (c - w)).collect()
        };
        let xr = along(1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < vals[best] {
            let xe = along(2.0);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                simplex[worst] = xe;
                vals[worst] = fe;
            } else {
                simplex[worst] = xr;
                vals[worst] = fr;
            }
        } else if fr < vals[second] {
            simplex[worst] = xr;
            vals[worst] = fr;
        } else {
            let (xc, fc) = if fr < vals[worst] {
                let xc = along(0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            evals += 1;
            if fc < vals[worst].min(fr) {
                simplex[worst] = xc;
                vals[worst] = fc;
            } else {
                let xb = simplex[best].clone();
                for &i in &order[1..] {
                    for (x, b) in simplex[i].iter_mut().zip(&xb) {
                        *x = b + 0.5 * (*x - b);
                    }
                    vals[i] = f(&simplex[i]);
                }
                evals += n;
            }
        }
    }
    let best = (0..=n)
        .min_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(core::cmp::Ordering::Equal))
        .unwrap();
    (simplex[best].clone(), vals[best])
}

/// Solves the small symmetric system `m x = rhs` by Gaussian elimination with pivoting.
fn solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| abs(m[a][col]).partial_cmp(&abs(m[b][col])).unwrap())?;
        if abs(m[piv][col]) < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = rhs[r];
        for c in r + 1..n {
            s -= m[r][c] * x[c];
        }
        x[r] = s / m[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Levenberg–Marquardt on iteratively reweighted least squares for the Huber loss.
fn polish(problem: &Problem, mask: &Mask, x0: &[f64], max_iter: usize) -> (Vec<f64>, f64) {
    let dim = mask.dim();
    let mut x = x0.to_vec();
    let mut fx = problem.objective(&mask.expand(&x));
    let mut lambda = 1e-3;
    let free: Vec<usize> = (0..5).filter(|&i| mask.free[i]).collect();
    for _ in 0..max_iter {
        let t = mask.expand(&x);
        let mut jtj = vec![vec![0.0; dim]; dim];
        let mut jtr = vec![0.0; dim];
        for (row, w) in problem.rows.iter().zip(&problem.weights) {
            if *w == 0.0 {
                continue;
            }
            let (lp, s) = Problem::log_pred(&t, row[0], row[1]);
            let r = row[2] - lp;
            let hw = if abs(r) <= problem.delta { 1.0 } else { problem.delta / abs(r) };
            let full = [s[0], s[1], -s[1] * row[0], s[2], -s[2] * row[1]];
            let g: Vec<f64> = free.iter().map(|&i| full[i]).collect();
            for a in 0..dim {
                jtr[a] += w * hw * g[a] * r;
                for b in 0..dim {
                    jtj[a][b] += w * hw * g[a] * g[b];
                }
            }
        }
        let mut improved = false;
        for _ in 0..12 {
            let mut m = jtj.clone();
            for (a, row) in m.iter_mut().enumerate() {
                row[a] += lambda * (jtj[a][a] + 1e-12);
            }
            let Some(step) = solve(m, jtr.clone()) else {
                lambda *= 10.0;
                continue;
            };
            let cand: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
            let fc = problem.objective(&mask.expand(&cand));
            if fc < fx {
                let gain = fx - fc;
                x = cand;
                fx = fc;
                lambda = (lambda * 0.3).max(1e-12);
                improved = gain > 1e-15 * fx.max(1e-300);
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (x, fx)
}

fn check_points(points: &[ScalingPoint]) -> Result<(), FitError> {
    if let Some(i) = points.iter().position(|p| !p.is_valid()) {
        return Err(FitError::InvalidPoint(i));
    }
    if points.len() < 6 {
        return Err(FitError::TooFewPoints(points.len()));
    }
    let distinct = |f: fn(&ScalingPoint) -> f64| points.iter().any(|p| f(p) != f(&points[0]));
    if !distinct(|p| p.n) {
        return Err(FitError::Degenerate("need at least two distinct N"));
    }
    if !distinct(|p| p.d) {
        return Err(FitError::Degenerate("need at least two distinct D"));
    }
    if !distinct(|p| p.loss) {
        return Err(FitError::ConstantLoss);
    }
    Ok(())
}

fn lin_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![(lo + hi) / 2.0];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn multistart(problem: &Problem, points: &[ScalingPoint], cfg: &FitConfig, mask: &Mask) -> [f64; 5] {
    let g = &cfg.starts;
    let min_loss = points.iter().map(|p| p.loss).fold(f64::INFINITY, f64::min);
    let le = lin_grid(ln(g.e_lo_frac * min_loss), ln(g.e_hi_frac * min_loss), g.e_count);
    let lc = lin_grid(ln(g.coef_lo), ln(g.coef_hi), g.coef_count);
    let ex = if mask.free[2] { lin_grid(g.exp_lo, g.exp_hi, g.exp_count) } else { vec![mask.base[2]] };
    let ey = if mask.free[4] { lin_grid(g.exp_lo, g.exp_hi, g.exp_count) } else { vec![mask.base[4]] };
    let mut scored: Vec<(f64, [f64; 5])> = Vec::new();
    for &e in &le {
        for &a in &lc {
            for &al in &ex {
                for &b in &lc {
                    for &be in &ey {
                        let t = [e, a, al, b, be];
                        scored.push((problem.objective(&t), t));
                    }
                }
            }
        }
    }
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal));
    let steps: Vec<f64> = (0..5).filter(|&i| mask.free[i]).map(|i| NM_STEPS[i]).collect();
    let mut best = (f64::INFINITY, scored[0].1);
    for (_, t) in scored.iter().take(g.refine) {
        let (x, _) = nelder_mead(|x| problem.objective(&mask.expand(x)), &mask.project(t), &steps, 4000, 1e-15);
        let (x, fx) = polish(problem, mask, &x, 200);
        if fx < best.0 {
            best = (fx, mask.expand(&x));
        }
    }
    best.1
}

/// Refines from a known point: Nelder–Mead from a small simplex, then the polish.
fn local_fit(problem: &Problem, mask: &Mask, start: &[f64; 5]) -> [f64; 5] {
    let x0 = mask.project(start);
    let (x, fx) = polish(problem, mask, &x0, 200);
    let steps: Vec<f64> = (0..5).filter(|&i| mask.free[i]).map(|i| NM_STEPS[i] * 0.2).collect();
    let (y, _) = nelder_mead(|v| problem.objective(&mask.expand(v)), &x, &steps, 1500, 1e-15);
    let (y, fy) = polish(problem, mask, &y, 200);
    mask.expand(if fy < fx { &y } else { &x })
}

fn diagnostics(points: &[ScalingPoint], params: &ScalingLawParams, delta: f64) -> FitDiagnostics {
    let logs: Vec<f64> = points.iter().map(|p| ln(p.loss)).collect();
    let residuals: Vec<f64> = points
        .iter()
        .zip(&logs)
        .map(|(p, l)| l - ln(predict_loss(params, p.n, p.d)))
        .collect();
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    let ss_tot: f64 = logs.iter().map(|l| (l - mean) * (l - mean)).sum();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let min_loss = points.iter().map(|p| p.loss).fold(f64::INFINITY, f64::min);
    FitDiagnostics {
        r2: 1.0 - ss_res / ss_tot,
        objective: residuals.iter().map(|&r| huber(r, delta)).sum(),
        residuals,
        e_below_min_loss: params.e < min_loss,
    }
}

fn mask_for(cfg: &FitConfig) -> Mask {
    match cfg.fixed_exponents {
        Some((a, b)) => Mask::fixed_exponents(a, b),
        None => Mask::all(),
    }
}

/// Fits all five parameters, or `E, A, B` when `cfg.fixed_exponents` is set.
pub fn fit_scaling_law(points: &[ScalingPoint], cfg: &FitConfig) -> Result<FitResult, FitError> {
    cfg.validate()?;
    check_points(points)?;
    let problem = Problem::new(points, cfg.huber_delta);
    let mask = mask_for(cfg);
    let theta = multistart(&problem, points, cfg, &mask);
    let params = ScalingLawParams::from_theta(&theta);
    params.validate()?;
    Ok(FitResult { diagnostics: diagnostics(points, &params, cfg.huber_delta), params })
}

/// Fits `E, A, B` with both exponents held fixed.
pub fn fit_fixed_exponents(points: &[ScalingPoint], alpha: f64, beta: f64, cfg: &FitConfig) -> Result<FitResult, FitError> {
    let cfg = FitConfig { fixed_exponents: Some((alpha, beta)), ..*cfg };
    fit_scaling_law(points, &cfg)
}

/// Resample indices for replicate `index`: a pure function of `(seed, index)`.
pub fn bootstrap_indices(len: usize, seed: u64, index: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (0..len).map(|_| rng.gen_range(0..len)).collect()
}

/// Refit on one bootstrap resample, warm-started from `base`.
pub fn bootstrap_replicate(
    points: &[ScalingPoint],
    base: &ScalingLawParams,
    cfg: &FitConfig,
    index: u64,
) -> Result<ScalingLawParams, FitError> {
    let idx = bootstrap_indices(points.len(), cfg.seed, index);
    let mut counts = vec![0.0; points.len()];
    for i in idx {
        counts[i] += 1.0;
    }
    let rows = points.iter().map(|p| [ln(p.n), ln(p.d), ln(p.loss)]).collect();
    let problem = Problem::from_rows(rows, counts, cfg.huber_delta);
    let mut mask = mask_for(cfg);
    let start = base.theta();
    if !mask.free[2] {
        mask.base = start;
    }
    let theta = local_fit(&problem, &mask, &start);
    let params = ScalingLawParams::from_theta(&theta);
    params.validate()?;
    Ok(params)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Percentile intervals for `E, A, alpha, B, beta`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BootstrapCi {
    pub level: f64,
    pub intervals: [Interval; 5],
    pub replicates: Vec<ScalingLawParams>,
}

impl BootstrapCi {
    pub fn get(&self, name: &str) -> Option<Interval> {
        PARAM_NAMES.iter().position(|&p| p == name).map(|i| self.intervals[i])
    }

    /// Whether every parameter's interval contains the matching value of `p`.
    pub fn covers(&self, p: &ScalingLawParams) -> [bool; 5] {
        let v = p.as_array();
        core::array::from_fn(|i| self.intervals[i].contains(v[i]))
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn percentile_intervals(replicates: &[ScalingLawParams], level: f64) -> [Interval; 5] {
    let tail = (1.0 - level) / 2.0;
    core::array::from_fn(|i| {
        let mut v: Vec<f64> = replicates.iter().map(|p| p.as_array()[i]).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Interval { lo: quantile_sorted(&v, tail), hi: quantile_sorted(&v, 1.0 - tail) }
    })
}

/// Percentile bootstrap over `cfg.bootstrap_n` resamples.
pub fn bootstrap_ci(points: &[ScalingPoint], cfg: &FitConfig) -> Result<BootstrapCi, FitError> {
    let base = fit_scaling_law(points, cfg)?;
    bootstrap_ci_from(points, &base.params, cfg)
}

/// As [`bootstrap_ci`], reusing an existing full-data fit.
pub fn bootstrap_ci_from(points: &[ScalingPoint], base: &ScalingLawParams, cfg: &FitConfig) -> Result<BootstrapCi, FitError> {
    cfg.validate()?;
    check_points(points)?;
    let replicates = (0..cfg.bootstrap_n as u64)
        .map(|i| bootstrap_replicate(points, base, cfg, i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BootstrapCi { level: cfg.ci_level, intervals: percentile_intervals(&replicates, cfg.ci_level), replicates })
}

/// `D` with `predict_loss(params, N, D) = target`.
pub fn tokens_to_target(params: &ScalingLawParams, n: f64, target: f64) -> Result<f64, FitError> {
    let asymptote = params.e + params.a / powf(n, params.alpha);
    let gap = target - asymptote;
    if !(gap > 0.0) {
        return Err(FitError::Unreachable { target, asymptote });
    }
    Ok(powf(params.b / gap, 1.0 / params.beta))
}

/// `N` with `predict_loss(params, N, D) = target`.
pub fn params_to_target(params: &ScalingLawParams, d: f64, target: f64) -> Result<f64, FitError> {
    let asymptote = params.e + params.b / powf(d, params.beta);
    let gap = target - asymptote;
    if !(gap > 0.0) {
        return Err(FitError::Unreachable { target, asymptote });
    }
    Ok(powf(params.a / gap, 1.0 / params.alpha))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComputeOptimal {
    pub n: f64,
    pub d: f64,
    pub loss: f64,
}

/// Loss-minimizing split of `C = 6ND`: `N* = (C/6G)^{a_opt}`, `D* = C/(6N*)`,
/// `G = (βB/(αA))^{1/β}`.
pub fn compute_optimal(params: &ScalingLawParams, compute: f64) -> Result<ComputeOptimal, FitError> {
    if !(compute > 0.0 && compute.is_finite()) {
        return Err(FitError::NonPositive("compute"));
    }
    let g = powf(params.beta * params.b / (params.alpha * params.a), 1.0 / params.beta);
    let n = powf(compute / (6.0 * g), params.a_opt());
    let d = compute / (6.0 * n);
    Ok(ComputeOptimal { n, d, loss: predict_loss(params, n, d) })
}

/// The cheapest `(N, D)` under `C = 6ND` reaching `target`: the split
/// `A/N^α = βR/(α+β)`, `B/D^β = αR/(α+β)` with `R = target − E`.
pub fn min_compute_for_target(params: &ScalingLawParams, target: f64) -> Result<ComputeOptimal, FitError> {
    let r = target - params.e;
    if !(r > 0.0) {
        return Err(FitError::Unreachable { target, asymptote: params.e });
    }
    let s = params.alpha + params.beta;
    let n = powf(params.a * s / (params.beta * r), 1.0 / params.alpha);
    let d = powf(params.b * s / (params.alpha * r), 1.0 / params.beta);
    Ok(ComputeOptimal { n, d, loss: target })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "mode", rename_all = "snake_case"))]
pub enum SavingsMode {
    /// Token ratio at fixed `N`.
    Tokens { n: f64, target: f64 },
    /// Parameter ratio at fixed `D`.
    Params { d: f64, target: f64 },
    /// Compute ratio, each side at its own compute-optimal split.
    Compute { target: f64 },
}

/// Resource ratio `reference / arch` needed to reach the same loss.
pub fn savings_factor(reference: &ScalingLawParams, arch: &ScalingLawParams, mode: SavingsMode) -> Result<f64, FitError> {
    match mode {
        SavingsMode::Tokens { n, target } => Ok(tokens_to_target(reference, n, target)? / tokens_to_target(arch, n, target)?),
        SavingsMode::Params { d, target } => Ok(params_to_target(reference, d, target)? / params_to_target(arch, d, target)?),
        SavingsMode::Compute { target } => {
            let r = min_compute_for_target(reference, target)?;
            let a = min_compute_for_target(arch, target)?;
            Ok((r.n * r.d) / (a.n * a.d))
        }
    }
}

/// Relative residual of the first-order condition `αA/N^α = βB/D^β`.
pub fn first_order_residual(params: &ScalingLawParams, n: f64, d: f64) -> f64 {
    let lhs = params.alpha * params.a / powf(n, params.alpha);
    let rhs = params.beta * params.b / powf(d, params.beta);
    abs(lhs - rhs) / lhs.max(rhs)
}

/// The 35-point design: seven sizes, `D/N ∈ {10, 20, 40, 80, 160}`.
pub fn ladder_design(sizes: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &n in sizes {
        for r in [10.0, 20.0, 40.0, 80.0, 160.0] {
            out.push((n, n * r));
        }
    }
    out
}

/// Non-embedding sizes of the seven ablation scales.
pub const LADDER_SIZES: [f64; 7] = [57e6, 115e6, 213e6, 398e6, 531e6, 806e6, 1.3e9];
