//! Quantization model of scaling with inexpressible tasks.
//!
//! Tasks are ranked by a Zipf law `p_k ∝ k^{−(α+1)}`. A learned task lowers its
//! loss from `L0` by `Δ` if the architecture can express it and by `Δ'`
//! otherwise; inexpressible tasks (probability `ε`) also cost `C'` parameters
//! instead of `C` and need `T'` relevant tokens instead of `T`.
//!
//! Exact losses sum the Zipf series; `tail(n) = Σ_{k>n} k^{−s}` is a direct sum
//! over 64 terms followed by an Euler–Maclaurin remainder, accurate to far
//! below 1e-12 relative.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::{floor, ln, powf, sqrt};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuantError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("{what} = {value} is below the minimum {min}")]
    BelowMinimum { what: &'static str, value: f64, min: f64 },
    #[error("grid must be strictly increasing and finite")]
    BadGrid,
    #[error("alpha must be positive, got {0}")]
    BadAlpha(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "RawQuantConfig", into = "RawQuantConfig"))]
pub struct QuantConfig {
    alpha: f64,
    l0: f64,
    delta: f64,
    delta_p: f64,
    eps: f64,
    c: f64,
    c_p: f64,
    t: f64,
    t_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RawQuantConfig {
    pub alpha: f64,
    pub l0: f64,
    pub delta: f64,
    pub delta_p: f64,
    pub eps: f64,
    pub c: f64,
    pub c_p: f64,
    pub t: f64,
    pub t_p: f64,
}

impl TryFrom<RawQuantConfig> for QuantConfig {
    type Error = QuantError;
    fn try_from(r: RawQuantConfig) -> Result<Self, QuantError> {
        QuantConfig::new(r.alpha, r.l0, r.delta, r.delta_p, r.eps, r.c, r.c_p, r.t, r.t_p)
    }
}

impl From<QuantConfig> for RawQuantConfig {
    fn from(q: QuantConfig) -> Self {
        RawQuantConfig {
            alpha: q.alpha,
            l0: q.l0,
            delta: q.delta,
            delta_p: q.delta_p,
            eps: q.eps,
            c: q.c,
            c_p: q.c_p,
            t: q.t,
            t_p: q.t_p,
        }
    }
}

impl QuantConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alpha: f64,
        l0: f64,
        delta: f64,
        delta_p: f64,
        eps: f64,
        c: f64,
        c_p: f64,
        t: f64,
        t_p: f64,
    ) -> Result<Self, QuantError> {
        let all = [alpha, l0, delta, delta_p, eps, c, c_p, t, t_p];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(QuantError::InvalidConfig("all fields must be finite"));
        }
        if alpha <= 0.0 {
            return Err(QuantError::BadAlpha(alpha));
        }
        if delta < 0.0 || delta_p < 0.0 || delta_p > delta {
            return Err(QuantError::InvalidConfig("need 0 ≤ delta_p ≤ delta"));
        }
        if !(0.0..=1.0).contains(&eps) {
            return Err(QuantError::InvalidConfig("eps must lie in [0, 1]"));
        }
        if c <= 0.0 || c_p < c {
            return Err(QuantError::InvalidConfig("need 0 < C ≤ C'"));
        }
        if t <= 0.0 || t_p < t {
            return Err(QuantError::InvalidConfig("need 0 < T ≤ T'"));
        }
        Ok(QuantConfig { alpha, l0, delta, delta_p, eps, c, c_p, t, t_p })
    }

    /// The same configuration with a different inexpressibility probability.
    pub fn with_eps(&self, eps: f64) -> Result<Self, QuantError> {
        QuantConfig::new(self.alpha, self.l0, self.delta, self.delta_p, eps, self.c, self.c_p, self.t, self.t_p)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn l0(&self) -> f64 {
        self.l0
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn delta_p(&self) -> f64 {
        self.delta_p
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn c_p(&self) -> f64 {
        self.c_p
    }
    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn t_p(&self) -> f64 {
        self.t_p
    }

    /// Mean parameter cost per task, `C + ε(C' − C)`.
    pub fn mean_cost(&self) -> f64 {
        self.c + self.eps * (self.c_p - self.c)
    }

    fn s(&self) -> f64 {
        self.alpha + 1.0
    }
}

const DIRECT_TERMS: u64 = 64;

/// `Σ_{k>n} k^{−s}` for `s > 1`.
pub fn zeta_tail(n: u64, s: f64) -> f64 {
    let m = n + DIRECT_TERMS + 1;
    let x = m as f64;
    let xs = powf(x, -s);
    let em = x * xs / (s - 1.0) + xs / 2.0 + s * xs / (12.0 * x)
        - s * (s + 1.0) * (s + 2.0) * xs / (720.0 * x * x * x)
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * xs / (30240.0 * x * x * x * x * x);
    let mut sum = em;
    for k in (n + 1..m).rev() {
        sum += powf(k as f64, -s);
    }
    sum
}

/// Riemann zeta for real `s > 1`.
pub fn zeta(s: f64) -> f64 {
    zeta_tail(0, s)
}

/// `k^{−(α+1)} / ζ(α+1)`.
pub fn zipf_prob(k: u64, alpha: f64) -> Result<f64, QuantError> {
    if alpha <= 0.0 || !alpha.is_finite() {
        return Err(QuantError::BadAlpha(alpha));
    }
    if k == 0 {
        return Err(QuantError::BelowMinimum { what: "rank", value: 0.0, min: 1.0 });
    }
    Ok(powf(k as f64, -(alpha + 1.0)) / zeta(alpha + 1.0))
}

/// `L^ε_∞ = L0 − (1 − ε)Δ − εΔ'`, written as `L0 − Δ + ε(Δ − Δ')` so it is
/// exactly constant in ε when `Δ' = Δ`.
pub fn irreducible_loss(cfg: &QuantConfig) -> f64 {
    cfg.l0 - cfg.delta + cfg.eps * (cfg.delta - cfg.delta_p)
}

fn reducible_scale(cfg: &QuantConfig) -> f64 {
    cfg.alpha * zeta(cfg.s())
}

/// `L^ε_∞ + (L0 − L^ε_∞)/(α ζ(α+1)) · n^{−α}`.
pub fn loss_closed_tasks(n: f64, cfg: &QuantConfig) -> Result<f64, QuantError> {
    if !(n >= 1.0) {
        return Err(QuantError::BelowMinimum { what: "n", value: n, min: 1.0 });
    }
    let a = irreducible_loss(cfg);
    Ok(a + (cfg.l0 - a) / reducible_scale(cfg) * powf(n, -cfg.alpha))
}

/// `L^ε_∞ + c^α (L0 − L^ε_∞)/(α ζ(α+1)) · N^{−α}` with `c = C + ε(C' − C)`.
pub fn loss_closed_params(n_params: f64, cfg: &QuantConfig) -> Result<f64, QuantError> {
    let c = cfg.mean_cost();
    if !(n_params >= c) {
        return Err(QuantError::BelowMinimum { what: "N", value: n_params, min: c });
    }
    let a = irreducible_loss(cfg);
    Ok(a + powf(c, cfg.alpha) * (cfg.l0 - a) / reducible_scale(cfg) * powf(n_params, -cfg.alpha))
}

/// `B_ε = ΔT^r + ε(Δ'T'^r − ΔT^r)` with `r = α/(α+1)`.
pub fn token_coefficient(cfg: &QuantConfig) -> f64 {
    let r = cfg.alpha / cfg.s();
    let expr = cfg.delta * powf(cfg.t, r);
    let inexpr = cfg.delta_p * powf(cfg.t_p, r);
    expr + cfg.eps * (inexpr - expr)
}

/// `L^ε_∞ + B_ε/(α ζ(α+1)^{1/(α+1)}) · D^{−α/(α+1)}`.
pub fn loss_closed_tokens(d: f64, cfg: &QuantConfig) -> Result<f64, QuantError> {
    if !(d >= cfg.t) {
        return Err(QuantError::BelowMinimum { what: "D", value: d, min: cfg.t });
    }
    let s = cfg.s();
    let scale = cfg.alpha * powf(zeta(s), 1.0 / s);
    Ok(irreducible_loss(cfg) + token_coefficient(cfg) / scale * powf(d, -cfg.alpha / s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Axis {
    Tasks,
    Params,
    Tokens,
}

impl Axis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::Tasks => "tasks",
            Axis::Params => "params",
            Axis::Tokens => "tokens",
        }
    }
}

impl core::str::FromStr for Axis {
    type Err = QuantError;
    fn from_str(s: &str) -> Result<Self, QuantError> {
        match s {
            "tasks" => Ok(Axis::Tasks),
            "params" => Ok(Axis::Params),
            "tokens" => Ok(Axis::Tokens),
            _ => Err(QuantError::InvalidConfig("axis must be tasks, params or tokens")),
        }
    }
}

fn floor_count(x: f64) -> u64 {
    if x.is_finite() {
        floor(x.max(0.0)) as u64
    } else {
        u64::MAX / 2
    }
}

/// Largest ranks `(k_e, k_i)` of learnable expressible and inexpressible tasks:
/// `⌊(D/(ζ(α+1)·T))^{1/(α+1)}⌋` and the same with `T'`.
pub fn phase_boundaries(d: f64, cfg: &QuantConfig) -> (u64, u64) {
    let (ke, ki) = smooth_phase_boundaries(d, cfg);
    let (mut ke_f, mut ki_f) = (floor_count(ke), floor_count(ki));
    // Guard the floors against rounding in the fractional power.
    let learnable = |k: u64, t: f64| powf(k as f64, cfg.s()) * zeta(cfg.s()) * t <= d;
    for (k, t) in [(&mut ke_f, cfg.t), (&mut ki_f, cfg.t_p)] {
        while *k > 0 && !learnable(*k, t) {
            *k -= 1;
        }
        while learnable(*k + 1, t) {
            *k += 1;
        }
    }
    (ke_f, ki_f)
}

/// The unfloored phase boundaries used by the closed form.
pub fn smooth_phase_boundaries(d: f64, cfg: &QuantConfig) -> (f64, f64) {
    let z = zeta(cfg.s());
    let inv = 1.0 / cfg.s();
    (powf(d / (z * cfg.t), inv), powf(d / (z * cfg.t_p), inv))
}

/// Expected loss under the quantization model with exact series sums.
///
/// * tasks: the first `⌊x⌋` tasks are learned;
/// * params: `⌊N / c⌋` tasks are learned, `c` the mean cost;
/// * tokens: expressible tasks up to `k_e` and inexpressible ones up to `k_i`.
pub fn loss_exact(axis: Axis, x: f64, cfg: &QuantConfig) -> f64 {
    let s = cfg.s();
    let z = zeta(s);
    let a = irreducible_loss(cfg);
    match axis {
        Axis::Tasks => a + (cfg.l0 - a) * zeta_tail(floor_count(x), s) / z,
        Axis::Params => a + (cfg.l0 - a) * zeta_tail(floor_count(x / cfg.mean_cost()), s) / z,
        Axis::Tokens => {
            let (ke, ki) = phase_boundaries(x, cfg);
            a + cfg.eps * cfg.delta_p * zeta_tail(ki, s) / z + (1.0 - cfg.eps) * cfg.delta * zeta_tail(ke, s) / z
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub draws: usize,
}

/// Monte Carlo estimate of the loss over per-task expressibility draws.
///
/// For params the learner walks tasks in rank order and stops at the first one
/// whose drawn cost no longer fits in the budget.
pub fn loss_monte_carlo(axis: Axis, x: f64, cfg: &QuantConfig, draws: usize, seed: u64) -> McEstimate {
    let s = cfg.s();
    let z = zeta(s);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (limit, ki) = match axis {
        Axis::Tasks => (floor_count(x), 0),
        Axis::Params => (floor_count(x / cfg.c), 0),
        Axis::Tokens => phase_boundaries(x, cfg),
    };
    let probs: Vec<f64> = (1..=limit).map(|k| powf(k as f64, -s) / z).collect();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..draws.max(1) {
        let mut gained = 0.0;
        let mut budget = x;
        for (idx, p) in probs.iter().enumerate() {
            let inexpressible = rng.gen::<f64>() < cfg.eps;
            let drop = if inexpressible { cfg.delta_p } else { cfg.delta };
            match axis {
                Axis::Tasks => gained += p * drop,
                Axis::Params => {
                    budget -= if inexpressible { cfg.c_p } else { cfg.c };
                    if budget < 0.0 {
                        break;
                    }
                    gained += p * drop;
                }
                Axis::Tokens => {
                    if !inexpressible || (idx as u64) < ki {
                        gained += p * drop;
                    }
                }
            }
        }
        let loss = cfg.l0 - gained;
        sum += loss;
        sum_sq += loss * loss;
    }
    let n = draws.max(1) as f64;
    let mean = sum / n;
    let var = if n > 1.0 { ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    McEstimate { mean, std_err: sqrt(var / n), draws: draws.max(1) }
}

/// Closed-form loss on any axis.
pub fn loss_closed(axis: Axis, x: f64, cfg: &QuantConfig) -> Result<f64, QuantError> {
    match axis {
        Axis::Tasks => loss_closed_tasks(x, cfg),
        Axis::Params => loss_closed_params(x, cfg),
        Axis::Tokens => loss_closed_tokens(x, cfg),
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossCurve {
    pub axis: Axis,
    pub grid: Vec<f64>,
    pub exact: Vec<f64>,
    pub closed: Vec<f64>,
}

pub fn loss_curve(axis: Axis, grid: &[f64], cfg: &QuantConfig) -> Result<LossCurve, QuantError> {
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(QuantError::BadGrid);
    }
    let closed = grid.iter().map(|&x| loss_closed(axis, x, cfg)).collect::<Result<Vec<_>, _>>()?;
    let exact = grid.iter().map(|&x| loss_exact(axis, x, cfg)).collect();
    Ok(LossCurve { axis, grid: grid.to_vec(), exact, closed })
}

/// `n` points log-spaced from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return alloc::vec![lo];
    }
    let (a, b) = (ln(lo), ln(hi));
    (0..n)
        .map(|i| match i {
            0 => lo,
            i if i == n - 1 => hi,
            i => crate::math::exp(a + (b - a) * i as f64 / (n - 1) as f64),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn cfg(eps: f64) -> QuantConfig {
        QuantConfig::new(1.0, 1.0, 1.0, 1.0, eps, 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn zeta_known_values() {
        assert!((zeta(2.0) - PI * PI / 6.0).abs() < 1e-15);
        assert!((zeta(4.0) - PI.powi(4) / 90.0).abs() < 1e-15);
        assert!((zeta(1.5) - 2.612_375_348_685_488).abs() < 1e-13);
        assert!((zeta(1.01) - 100.577_943_338_497).abs() / 100.58 < 1e-12);
    }

    #[test]
    fn tail_is_consistent_with_direct_sum() {
        for s in [1.2, 2.0, 3.5] {
            let direct: f64 = (1..=500u64).rev().map(|k| (k as f64).powf(-s)).sum();
            let lhs = zeta(s) - zeta_tail(500, s);
            assert!((lhs - direct).abs() < 1e-13, "{s}");
        }
    }

    #[test]
    fn zipf_examples() {
        assert_eq!(zipf_prob(1, 1.0).unwrap(), 1.0 / zeta(2.0));
        assert!((zipf_prob(3, 1.0).unwrap() - 6.0 / (PI * PI * 9.0)).abs() < 1e-16);
        assert!(zipf_prob(1, 0.0).is_err());
        assert!(zipf_prob(0, 1.0).is_err());
    }

    #[test]
    fn irreducible_examples() {
        let base = QuantConfig::new(0.5, 3.0, 1.0, 0.4, 0.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(irreducible_loss(&base), 2.0);
        assert!((irreducible_loss(&base.with_eps(0.3).unwrap()) - 2.18).abs() < 1e-15);
        let none = QuantConfig::new(0.5, 3.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(irreducible_loss(&none), 3.0);
    }

    #[test]
    fn zeta_two_task_law() {
        let c = QuantConfig::new(1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        for n in [1.0, 3.0, 40.0] {
            let l = loss_closed_tasks(n, &c).unwrap();
            assert!((l - 6.0 / (PI * PI) / n).abs() < 1e-15);
        }
    }

    #[test]
    fn nothing_learned_is_l0() {
        let c = QuantConfig::new(0.7, 2.5, 1.0, 0.3, 0.4, 2.0, 5.0, 10.0, 30.0).unwrap();
        assert_eq!(loss_exact(Axis::Tasks, 0.0, &c), 2.5);
        let below = 10.0 * zeta(1.7) * 0.999;
        assert_eq!(phase_boundaries(below, &c), (0, 0));
        assert!((loss_exact(Axis::Tokens, below, &c) - 2.5).abs() < 1e-15);
        assert!(loss_exact(Axis::Tokens, 10.0 * zeta(1.7), &c) < 2.5);
    }

    #[test]
    fn config_invariants_are_enforced() {
        assert!(QuantConfig::new(1.0, 1.0, 1.0, 1.5, 0.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(QuantConfig::new(1.0, 1.0, 1.0, 1.0, 1.2, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(QuantConfig::new(1.0, 1.0, 1.0, 1.0, 0.5, 2.0, 1.0, 1.0, 1.0).is_err());
        assert!(QuantConfig::new(1.0, 1.0, 1.0, 1.0, 0.5, 1.0, 1.0, 2.0, 1.0).is_err());
        assert!(QuantConfig::new(0.0, 1.0, 1.0, 1.0, 0.5, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn closed_form_domains() {
        let c = QuantConfig::new(0.5, 3.0, 1.0, 0.5, 0.5, 2.0, 4.0, 10.0, 20.0).unwrap();
        assert!(loss_closed_params(2.9, &c).is_err());
        assert!(loss_closed_params(3.0, &c).is_ok());
        assert!(loss_closed_tokens(9.0, &c).is_err());
        assert!(loss_closed_tasks(0.5, &c).is_err());
    }

    #[test]
    fn eps_zero_params_reduce_to_tasks() {
        let c = QuantConfig::new(0.5, 3.0, 1.0, 0.5, 0.0, 2.0, 4.0, 10.0, 20.0).unwrap();
        for n in [2.0, 50.0, 1e6] {
            let lp = loss_closed_params(n, &c).unwrap();
            let lt = loss_closed_tasks(n / 2.0, &c).unwrap();
            assert!((lp - lt).abs() < 1e-14);
        }
    }

    #[test]
    fn curve_rejects_unsorted_grid() {
        assert_eq!(loss_curve(Axis::Tasks, &[3.0, 2.0], &cfg(0.0)), Err(QuantError::BadGrid));
        let curve = loss_curve(Axis::Tasks, &[1.0, 2.0, 4.0], &cfg(0.0)).unwrap();
        assert_eq!(curve.exact.len(), 3);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e2, 1e8, 7);
        assert_eq!(g.len(), 7);
        assert!((g[0] - 1e2).abs() < 1e-9 && (g[6] - 1e8).abs() < 1e-3);
    }
}
