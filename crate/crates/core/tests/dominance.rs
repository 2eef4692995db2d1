use subpoisson::bounds::{
    bound_report, laplace_constants, laplace_integral_bound, poisson_exp_moment, KernelBounds,
};
use subpoisson::exact::{count_distribution, discretize_factored, factored_spectrum, log_exp_moment_sq, tail_bracket};
use subpoisson::kernels::{Interval, KernelSpec};
use subpoisson::specfun::{adaptive_gauss_kronrod, sinc};

fn window(a: f64, b: f64) -> Interval {
    Interval::new(a, b).unwrap()
}

/// log ∫₁^∞ exp((λ + B̃)t − δ t log t) dt by the trapezoid rule in u = log t.
fn log_laplace_numeric(b_tilde: f64, delta: f64, lambda: f64) -> f64 {
    let f = |u: f64| {
        let t = u.exp();
        (lambda + b_tilde) * t - delta * t * u + u
    };
    let peak = (lambda + b_tilde) / delta;
    let upper = peak + 6.0;
    let steps = 400_000;
    let h = upper / steps as f64;
    let vals: Vec<f64> = (0..=steps).map(|i| f(i as f64 * h)).collect();
    let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = vals
        .iter()
        .enumerate()
        .map(|(i, v)| if i == 0 || i == steps { 0.5 } else { 1.0 } * (v - m).exp())
        .sum();
    m + (s * h).ln()
}

#[test]
fn laplace_bound_dominates_numeric_integral() {
    let grid = [0.5, 1.25, 2.0];
    for &b in &grid {
        for &d in &grid {
            for &l in &grid {
                let bound = laplace_integral_bound(b, d, l).unwrap();
                let numeric = log_laplace_numeric(b, d, l);
                assert!(numeric <= bound.log_value, "B={b} delta={d} lambda={l}: {numeric} > {}", bound.log_value);
                let (c1, c2) = laplace_constants(b, d);
                assert!(bound.log_value <= c1 * (l / d).exp() + c2);
            }
        }
    }
}

#[test]
fn sine_variance_matches_kernel_integral() {
    for len in [0.5, 1.0, 3.0] {
        let s = factored_spectrum(&discretize_factored(&KernelSpec::sine(), &window(0.0, len), 200).unwrap()).unwrap();
        let f = |t: f64| 2.0 * (len - t) * sinc(t).powi(2);
        let integral = adaptive_gauss_kronrod(&f, 0.0, len, 1e-13).unwrap();
        assert!((s.variance() - (len - integral)).abs() <= 1e-9, "len {len}");
    }
}

#[test]
fn tail_chain_dominates_exact_tails() {
    for (k, w) in [
        (KernelSpec::sine(), window(0.0, 1.0)),
        (KernelSpec::sine(), window(-1.0, 1.0)),
        (KernelSpec::airy(), window(-1.0, 0.0)),
    ] {
        let c = count_distribution(&factored_spectrum(&discretize_factored(&k, &w, 200).unwrap()).unwrap());
        let kb = KernelBounds::new(&k, &w).unwrap();
        let b = kb.b_constant_auto().unwrap().b;
        for n in 1..=8 {
            let exact = tail_bracket(&c, n).1.ln();
            let chain = kb.tail_log_bound(n);
            assert!(exact <= chain, "{k} on {w} n={n}");
            assert!(chain <= KernelBounds::closed_form_log_bound(b, kb.sigma(), n) + 1e-12);
        }
    }
}

#[test]
fn moment_bound_dominates_exact_moment() {
    for (k, w) in [(KernelSpec::sine(), window(0.0, 1.0)), (KernelSpec::airy(), window(-1.0, 0.0))] {
        let c = count_distribution(&factored_spectrum(&discretize_factored(&k, &w, 200).unwrap()).unwrap());
        let kb = KernelBounds::new(&k, &w).unwrap();
        for lambda in [0.25, 0.5, 1.0] {
            let exact = log_exp_moment_sq(&c, lambda).unwrap();
            let bound = kb.exp_moment_log_bound(lambda).unwrap();
            assert!(exact <= bound, "{k} lambda={lambda}");
        }
    }
}

#[test]
fn log_space_bounds_stay_finite() {
    for (k, w) in [
        (KernelSpec::sine(), window(0.0, 1.0)),
        (KernelSpec::airy(), window(-1.0, 0.0)),
        ("sine4".parse().unwrap(), window(0.0, 1.0)),
        (KernelSpec::bessel(0.5).unwrap(), window(0.25, 1.0)),
    ] {
        let kb = KernelBounds::new(&k, &w).unwrap();
        for n in 1..=128 {
            assert!(kb.tail_log_bound(n).is_finite() && kb.pointwise_log_bound(n).is_finite(), "{k} n={n}");
        }
        let r = bound_report(&k, &w, 3.0, 32).unwrap();
        assert!(r.log_c.is_finite() && r.sigma > 0.0 && r.table.len() == 32);
    }
}

#[test]
fn tail_chain_eventually_decreases() {
    let kb = KernelBounds::new(&KernelSpec::sine(), &window(0.0, 1.0)).unwrap();
    let v: Vec<f64> = (1..=40).map(|n| kb.tail_log_bound(n)).collect();
    let peak = v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert!(v[peak..].windows(2).all(|w| w[1] < w[0]));
    assert!(v[23] < v[3]);
}

#[test]
fn poisson_moment_matches_series() {
    // log E e^{λN} for N ~ Poisson(θ), summed directly
    let (theta, lambda) = (0.7f64, 0.3f64);
    let mut term = (-theta).exp();
    let mut sum = term;
    for k in 1..60 {
        term *= theta / k as f64;
        sum += term * (lambda * k as f64).exp();
    }
    let got = poisson_exp_moment(theta, lambda).unwrap();
    assert!(sum.is_finite() && (got - sum.ln()).abs() <= 1e-12, "{got} vs {}", sum.ln());
}
