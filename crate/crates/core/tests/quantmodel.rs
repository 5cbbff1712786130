use hybridlab_core::quantmodel::*;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

#[allow(clippy::too_many_arguments)]
fn cfg(alpha: f64, l0: f64, delta: f64, delta_p: f64, eps: f64, c: f64, c_p: f64, t: f64, t_p: f64) -> QuantConfig {
    QuantConfig::new(alpha, l0, delta, delta_p, eps, c, c_p, t, t_p).unwrap()
}

// 3 × 3 × 3 grid over (alpha, eps, delta_p / delta).
fn grid() -> Vec<QuantConfig> {
    let mut out = Vec::new();
    for alpha in [0.3, 1.0, 2.5] {
        for eps in [0.0, 0.4, 1.0] {
            for ratio in [0.0, 0.5, 1.0] {
                out.push(cfg(alpha, 3.0, 1.2, 1.2 * ratio, eps, 2.0, 6.0, 10.0, 40.0));
            }
        }
    }
    out
}

#[test]
fn sandwich_over_config_grid() {
    for c in grid() {
        for n in 1..=10_000u64 {
            let exact = loss_exact(Axis::Tasks, n as f64, &c);
            let hi = loss_closed_tasks(n as f64, &c).unwrap();
            let lo = loss_closed_tasks((n + 1) as f64, &c).unwrap();
            assert!(lo <= exact && exact <= hi, "{c:?} n={n}: {lo} {exact} {hi}");
        }
    }
}

#[test]
fn zeta_against_rational_partial_sums() {
    // Σ_{k≤40} 1/k² exactly, then the tail from the library.
    let mut sum = BigRational::from_integer(BigInt::from(0));
    for k in 1..=40i64 {
        sum += BigRational::new(BigInt::from(1), BigInt::from(k * k));
    }
    let partial = {
        let n: f64 = sum.numer().to_string().parse().unwrap();
        let d: f64 = sum.denom().to_string().parse().unwrap();
        n / d
    };
    assert!((partial + zeta_tail(40, 2.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-14);
}

#[test]
fn zipf_normalises() {
    for alpha in [0.2, 1.0, 3.0] {
        let s = alpha + 1.0;
        let head: f64 = (1..=1_000_000u64).rev().map(|k| zipf_prob(k, alpha).unwrap()).sum();
        let total = head + zeta_tail(1_000_000, s) / zeta(s);
        assert!((total - 1.0).abs() < 1e-10, "{alpha}: {total}");
    }
}

#[test]
fn token_law_tracks_phase_summation() {
    let configs = [
        cfg(0.5, 3.0, 1.0, 0.5, 0.3, 1.0, 3.0, 10.0, 50.0),
        cfg(1.0, 2.0, 1.0, 0.2, 0.7, 1.0, 1.0, 5.0, 20.0),
        cfg(2.0, 4.0, 2.0, 2.0, 0.5, 1.0, 2.0, 1.0, 8.0),
    ];
    for c in configs {
        for d in log_grid(1e4 * c.t(), 1e12 * c.t(), 60) {
            let exact = loss_exact(Axis::Tokens, d, &c);
            let closed = loss_closed_tokens(d, &c).unwrap();
            assert!((closed - exact).abs() <= 0.01 * exact, "{c:?} D={d}");
        }
    }
}

#[test]
fn expectation_mode_matches_monte_carlo() {
    let c = cfg(0.8, 3.0, 1.0, 0.3, 0.35, 2.0, 5.0, 10.0, 30.0);
    for n in [50.0, 400.0, 5000.0] {
        let mc = loss_monte_carlo(Axis::Tokens, n * 100.0, &c, 10_000, 9);
        let exact = loss_exact(Axis::Tokens, n * 100.0, &c);
        assert!((mc.mean - exact).abs() <= 3.0 * mc.std_err + 1e-12, "{mc:?} vs {exact}");
        let mc = loss_monte_carlo(Axis::Tasks, n, &c, 10_000, 10);
        let exact = loss_exact(Axis::Tasks, n, &c);
        assert!((mc.mean - exact).abs() <= 3.0 * mc.std_err + 1e-12);
        // Greedy budget spending learns about N / mean-cost tasks.
        let mc = loss_monte_carlo(Axis::Params, n * c.mean_cost(), &c, 2_000, 11);
        let lo = loss_exact(Axis::Tasks, n * 1.2, &c);
        let hi = loss_exact(Axis::Tasks, n * 0.8, &c);
        assert!(lo - 3.0 * mc.std_err <= mc.mean && mc.mean <= hi + 3.0 * mc.std_err);
    }
}

fn eps_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

fn nontrivial() -> Vec<QuantConfig> {
    vec![
        cfg(0.5, 3.0, 1.0, 0.4, 0.0, 1.0, 1.0, 10.0, 10.0),
        cfg(0.5, 3.0, 1.0, 1.0, 0.0, 1.0, 4.0, 10.0, 40.0),
        cfg(1.5, 3.0, 1.0, 0.2, 0.0, 2.0, 8.0, 1.0, 16.0),
    ]
}

fn token_valid_floor(c: &QuantConfig) -> f64 {
    let a = c.alpha();
    let k = 1.0 / (a * zeta(a + 1.0).powf(1.0 / (a + 1.0)));
    c.t_p() * k.powf((a + 1.0) / a).max(1.0)
}

#[test]
fn closed_laws_strictly_increase_with_eps() {
    for base in nontrivial() {
        for n in log_grid(base.c_p() * 2.0, 1e12, 25) {
            let losses: Vec<f64> = eps_grid()
                .into_iter()
                .map(|e| loss_closed_params(n, &base.with_eps(e).unwrap()).unwrap())
                .collect();
            assert!(losses.windows(2).all(|w| w[0] < w[1]), "{base:?} N={n}: {losses:?}");
        }
        for d in log_grid(token_valid_floor(&base) * 1.01, 1e14, 25) {
            let losses: Vec<f64> = eps_grid()
                .into_iter()
                .map(|e| loss_closed_tokens(d, &base.with_eps(e).unwrap()).unwrap())
                .collect();
            assert!(losses.windows(2).all(|w| w[0] < w[1]), "{base:?} D={d}: {losses:?}");
        }
    }
}

#[test]
fn exact_losses_never_decrease_with_eps() {
    for base in nontrivial() {
        for x in log_grid(100.0, 1e9, 15) {
            for axis in [Axis::Params, Axis::Tokens] {
                let l: Vec<f64> = eps_grid()
                    .into_iter()
                    .map(|e| loss_exact(axis, x, &base.with_eps(e).unwrap()))
                    .collect();
                assert!(l.windows(2).all(|w| w[0] <= w[1]), "{axis:?} x={x}");
            }
        }
    }
}

#[test]
fn irreducible_shift_iff_lower_delta() {
    for (delta_p, shifts) in [(0.0, true), (0.6, true), (0.999, true), (1.0, false)] {
        let base = cfg(0.7, 3.0, 1.0, delta_p, 0.0, 1.0, 2.0, 1.0, 2.0);
        let l: Vec<f64> = eps_grid().into_iter().map(|e| irreducible_loss(&base.with_eps(e).unwrap())).collect();
        if shifts {
            assert!(l.windows(2).all(|w| w[0] < w[1]));
        } else {
            assert!(l.windows(2).all(|w| w[0] == w[1]));
        }
    }
}

#[test]
fn gap_behaviour() {
    // Equal reductions: the ε gap closes as D grows.
    let c = cfg(0.6, 3.0, 1.0, 1.0, 0.5, 1.0, 4.0, 10.0, 100.0);
    let zero = c.with_eps(0.0).unwrap();
    let gaps: Vec<f64> = log_grid(1e4, 1e14, 20)
        .into_iter()
        .map(|d| loss_closed_tokens(d, &c).unwrap() - loss_closed_tokens(d, &zero).unwrap())
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]) && *gaps.last().unwrap() < 1e-3);
    // Lower reduction: the gap tends to ε(Δ − Δ').
    let c = cfg(0.6, 3.0, 1.0, 0.4, 0.5, 1.0, 4.0, 10.0, 100.0);
    let zero = c.with_eps(0.0).unwrap();
    let far = loss_closed_tokens(1e40, &c).unwrap() - loss_closed_tokens(1e40, &zero).unwrap();
    assert!((far - 0.5 * 0.6).abs() < 1e-6);
}

#[test]
fn token_exponent_is_alpha_over_alpha_plus_one() {
    for alpha in [0.3, 1.0, 2.0] {
        for eps in [0.0, 0.5, 1.0] {
            let c = cfg(alpha, 3.0, 1.0, 0.5, eps, 1.0, 2.0, 1.0, 4.0);
            let inf = irreducible_loss(&c);
            let xs: Vec<f64> = log_grid(1e6, 1e12, 40);
            let pts: Vec<(f64, f64)> = xs
                .iter()
                .map(|&d| (d.ln(), (loss_exact(Axis::Tokens, d, &c) - inf).ln()))
                .collect();
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
                / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
            let want = -alpha / (alpha + 1.0);
            assert!((slope - want).abs() <= 0.01 * want.abs(), "alpha={alpha} eps={eps}: {slope}");
        }
    }
}

#[test]
fn loss_curves_stay_in_range() {
    for c in grid() {
        for axis in [Axis::Tasks, Axis::Params, Axis::Tokens] {
            let lo = match axis {
                Axis::Tokens => c.t_p(),
                _ => c.c_p(),
            };
            let curve = loss_curve(axis, &log_grid(lo, 1e10, 30), &c).unwrap();
            for (&e, &cl) in curve.exact.iter().zip(&curve.closed) {
                assert!(e <= c.l0() + 1e-12 && e >= c.l0() - c.delta() - 1e-12);
                assert!(cl >= c.l0() - c.delta() - 1e-12 && cl.is_finite());
            }
            assert!(curve.exact.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}

proptest! {
    #[test]
    fn sandwich_for_random_configs(
        alpha in 0.05f64..4.0, l0 in 0.5f64..5.0, frac in 0.0f64..=1.0, ratio in 0.0f64..=1.0,
        eps in 0.0f64..=1.0, n in 1u64..1_000_000,
    ) {
        let delta = l0 * frac;
        let c = cfg(alpha, l0, delta, delta * ratio, eps, 1.0, 1.0, 1.0, 1.0);
        let exact = loss_exact(Axis::Tasks, n as f64, &c);
        let hi = loss_closed_tasks(n as f64, &c).unwrap();
        let lo = loss_closed_tasks((n + 1) as f64, &c).unwrap();
        prop_assert!(lo <= exact && exact <= hi);
    }

    #[test]
    fn closed_forms_decrease_along_axes(alpha in 0.1f64..3.0, eps in 0.0f64..=1.0, x in 10.0f64..1e9) {
        let c = cfg(alpha, 3.0, 1.0, 0.5, eps, 1.0, 3.0, 1.0, 5.0);
        prop_assert!(loss_closed_params(x * 1.5, &c).unwrap() <= loss_closed_params(x, &c).unwrap());
        prop_assert!(loss_closed_tasks(x * 1.5, &c).unwrap() <= loss_closed_tasks(x, &c).unwrap());
        prop_assert!(loss_exact(Axis::Tokens, x * 1.5, &c) <= loss_exact(Axis::Tokens, x, &c));
    }
}
