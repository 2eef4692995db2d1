//! Explicit constants for the tail and exponential-moment estimates.
//!
//! Everything is carried in log space.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::{GrowthEnvelope, Interval, KernelKind, KernelSpec};
use crate::linalg::log_abs_determinant;
use crate::specfun::ln_factorial;

/// Smallest admissible gap between divided-difference nodes.
pub const MIN_GAP: f64 = 1e-12;
/// η in the slack inequality log u ≤ ηu − log η − 1.
pub const LAPLACE_ETA: f64 = 0.125;
const C_RELATIVE_MARGIN: f64 = 1e-6;
const B_MAX_N_MAX: usize = 4096;

/// Newton divided differences Q[i][l] = Π[x_i; x_1, …, x_{l+1}] (0-based l).
///
/// Stored for every l < n: the interpolant of y ↦ Π(x_i, y) at all nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DividedDifferenceTable {
    pub points: Vec<f64>,
    pub entries: Vec<Vec<f64>>,
}

impl DividedDifferenceTable {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// ∏_{i<j} (x_j − x_i), sign included.
    pub fn vandermonde(&self) -> f64 {
        let x = &self.points;
        let mut v = 1.0;
        for j in 0..x.len() {
            for i in 0..j {
                v *= x[j] - x[i];
            }
        }
        v
    }

    pub fn det_q(&self) -> f64 {
        let n = self.len();
        let flat: Vec<f64> = self.entries.iter().flatten().copied().collect();
        let (sign, la) = log_abs_determinant(&flat, n);
        sign * la.exp()
    }
}

fn check_gaps(points: &[f64]) -> Result<()> {
    for (i, &a) in points.iter().enumerate() {
        if !a.is_finite() {
            return Err(invalid("divided differences: non-finite node"));
        }
        for &b in &points[i + 1..] {
            if (a - b).abs() <= MIN_GAP {
                return Err(Error::CoincidentPoints(a));
            }
        }
    }
    Ok(())
}

pub fn divided_differences(
    kernel: impl Fn(f64, f64) -> Result<f64>,
    points: &[f64],
) -> Result<DividedDifferenceTable> {
    if points.is_empty() {
        return Err(invalid("divided differences need at least one node"));
    }
    check_gaps(points)?;
    let n = points.len();
    let mut entries = Vec::with_capacity(n);
    for &xi in points {
        // d[j] holds Π[xi; x_j, …, x_{j+l}] after pass l
        let mut d: Vec<f64> = points.iter().map(|&y| kernel(xi, y)).collect::<Result<_>>()?;
        let mut row = vec![d[0]];
        for l in 1..n {
            for j in 0..n - l {
                d[j] = (d[j] - d[j + 1]) / (points[j] - points[j + l]);
            }
            row.push(d[0]);
        }
        entries.push(row);
    }
    Ok(DividedDifferenceTable { points: points.to_vec(), entries })
}

/// Δ·det Q with Δ = ∏_{i<j}(x_j − x_i).
pub fn det_via_divided_differences(kernel: impl Fn(f64, f64) -> Result<f64>, points: &[f64]) -> Result<f64> {
    if points.len() > 12 {
        return Err(invalid("det_via_divided_differences supports at most 12 nodes"));
    }
    let t = divided_differences(kernel, points)?;
    Ok(t.vandermonde() * t.det_q())
}

/// log of A·e^{l+1}·((l+1)/M)^{−l/σ}.
pub fn log_cauchy_coefficient_bound(env: &GrowthEnvelope, l: usize) -> f64 {
    let l1 = (l + 1) as f64;
    env.amplitude.ln() + l1 - (l as f64 / env.order) * (l1 / env.scale).ln()
}

pub fn cauchy_coefficient_bound(env: &GrowthEnvelope, l: usize) -> f64 {
    log_cauchy_coefficient_bound(env, l).exp()
}

/// Upper bound for m_l = max |∂_y^l Π̃| / l! over the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeMaxBound {
    pub order: usize,
    pub value: f64,
    pub log_value: f64,
}

pub fn derivative_max_bounds(spec: &KernelSpec, window: &Interval, n: usize) -> Result<Vec<DerivativeMaxBound>> {
    let kb = KernelBounds::new(spec, window)?;
    Ok((0..n)
        .map(|l| {
            let log_value = kb.log_ml(l);
            DerivativeMaxBound { order: l, value: log_value.exp(), log_value }
        })
        .collect())
}

fn sum_first(log_ml: &[f64], n: usize) -> Result<f64> {
    if log_ml.len() < n {
        return Err(invalid(format!("need {n} derivative bounds, got {}", log_ml.len())));
    }
    Ok(log_ml[..n].iter().sum())
}

/// log(|I|^{n(n+1)/2}·n!·∏ m_l), inputs as log m_l.
pub fn scalar_integral_bound(n: usize, window: &Interval, log_ml: &[f64]) -> Result<f64> {
    let nf = n as f64;
    Ok(nf * (nf + 1.0) / 2.0 * window.length().ln() + ln_factorial(n) + sum_first(log_ml, n)?)
}

/// log(|I|^{n + r·n(n−1)/2}·(rn)!·(∏ m_l)^r).
pub fn matrix_integral_bound(n: usize, r: usize, window: &Interval, log_ml: &[f64]) -> Result<f64> {
    if r == 0 {
        return Err(invalid("block size must be positive"));
    }
    let (nf, rf) = (n as f64, r as f64);
    let exponent = nf + rf * nf * (nf - 1.0) / 2.0;
    Ok(exponent * window.length().ln() + ln_factorial(r * n) + rf * sum_first(log_ml, n)?)
}

/// log(|I|^{n(n+1)/2}·√((2n)!)·∏ m̃_l).
pub fn pfaffian_integral_bound(n: usize, window: &Interval, log_ml_tilde: &[f64]) -> Result<f64> {
    let nf = n as f64;
    Ok(nf * (nf + 1.0) / 2.0 * window.length().ln() + 0.5 * ln_factorial(2 * n) + sum_first(log_ml_tilde, n)?)
}

/// Bound constants for one kernel on one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelBounds {
    pub spec: KernelSpec,
    pub window: Interval,
    pub envelope: GrowthEnvelope,
    pub sup_density: f64,
}

/// B with its turning-point certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BConstant {
    pub b: f64,
    pub argmax: usize,
    pub n_max: usize,
    /// g(n_max) = (tail(n_max) + n_max² log n_max/(2σ))/n_max².
    pub ratio_at_n_max: f64,
    /// Majorant of every later increment ratio; must not exceed ratio_at_n_max.
    pub increment_majorant: f64,
}

/// Output of the Laplace step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceBound {
    pub t0: f64,
    pub c1: f64,
    pub c2: f64,
    pub log_value: f64,
}

/// Laplace-type bound for ∫₁^∞ e^{λt}·exp(B̃t − δt log t) dt.
pub fn laplace_integral_bound(b_tilde: f64, delta: f64, lambda: f64) -> Result<LaplaceBound> {
    if !(delta > 0.0) {
        return Err(Error::Domain { what: "Laplace delta", value: delta });
    }
    let t0 = ((lambda + b_tilde - delta) / delta).exp();
    let a = 1.0 / (delta * 1.25f64.ln());
    let log_value = delta * t0 + (1.25 * t0 + a).ln();
    let (c1, c2) = laplace_constants(b_tilde, delta);
    Ok(LaplaceBound { t0, c1, c2, log_value })
}

/// (c₁, c₂) with log_value ≤ c₁e^{λ/δ} + c₂ for all λ ≥ 0.
///
/// log u ≤ ηu − log η − 1 applied to u = 5t₀/4 + 1/(δ log 1.25), and t₀ = e^{(B̃−δ)/δ}e^{λ/δ}.
pub fn laplace_constants(b_tilde: f64, delta: f64) -> (f64, f64) {
    let eta = LAPLACE_ETA;
    let c1 = (delta + 1.25 * eta) * ((b_tilde - delta) / delta).exp();
    let c2 = eta / (delta * 1.25f64.ln()) - eta.ln() - 1.0;
    (c1, c2)
}

/// Grid check of log_value ≤ c₁e^{λ/δ} + c₂ on λ ∈ [0, 10].
pub fn laplace_certificate(b_tilde: f64, delta: f64) -> Result<()> {
    for i in 0..=1000 {
        let lambda = i as f64 * 0.01;
        let lb = laplace_integral_bound(b_tilde, delta, lambda)?;
        let rhs = lb.c1 * (lambda / delta).exp() + lb.c2;
        if lb.log_value.is_finite() && lb.log_value > rhs * (1.0 + 1e-12) {
            return Err(Error::Certificate(format!(
                "Laplace constants fail at lambda={lambda}: {} > {rhs}",
                lb.log_value
            )));
        }
    }
    Ok(())
}

/// max(Ψ(1)/(Ψ(1)−1), e^{Ψ(1)}/Ψ′(0)), as a logarithm.
pub fn log_combination_d(psi_at_1: f64, psi_prime_at_0: f64) -> Result<f64> {
    if !(psi_at_1 > 1.0) {
        return Err(Error::Domain { what: "Psi(1) must exceed 1", value: psi_at_1 });
    }
    if !(psi_prime_at_0 > 0.0) {
        return Err(Error::Domain { what: "Psi'(0) must be positive", value: psi_prime_at_0 });
    }
    let first = (psi_at_1 / (psi_at_1 - 1.0)).ln();
    let second = psi_at_1 - psi_prime_at_0.ln();
    Ok(first.max(second))
}

pub fn combination_d(psi_at_1: f64, psi_prime_at_0: f64) -> Result<f64> {
    Ok(log_combination_d(psi_at_1, psi_prime_at_0)?.exp())
}

/// log E e^{λξ} = θ(e^λ − 1) for ξ ~ Poisson(θ).
pub fn poisson_exp_moment(theta: f64, lambda: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::Domain { what: "Poisson mean", value: theta });
    }
    Ok(theta * lambda.exp_m1())
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

impl KernelBounds {
    pub fn new(spec: &KernelSpec, window: &Interval) -> Result<Self> {
        if spec.kind == KernelKind::Ginibre {
            return Err(Error::Unsupported("the divided-difference chain is one-dimensional".into()));
        }
        let envelope = spec.growth_envelope(window)?;
        let sup_density = spec.factorization(window)?.sup_density;
        Ok(Self { spec: *spec, window: *window, envelope, sup_density })
    }

    pub fn sigma(&self) -> f64 {
        self.envelope.order
    }

    /// δ = 1/(4σ).
    pub fn delta(&self) -> f64 {
        0.25 / self.sigma()
    }

    fn is_pfaffian(&self) -> bool {
        self.spec.block_size() == 2
    }

    pub fn log_ml(&self, l: usize) -> f64 {
        log_cauchy_coefficient_bound(&self.envelope, l)
    }

    fn log_ml_list(&self, n: usize) -> Vec<f64> {
        (0..n).map(|l| self.log_ml(l)).collect()
    }

    /// Chained bound on |det Π(x_i, x_j)| (|Pf| for matrix kernels) at n window points.
    pub fn pointwise_log_bound(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let nf = n as f64;
        let ml: f64 = self.log_ml_list(n).iter().sum();
        let vander = nf * (nf - 1.0) / 2.0 * self.window.length().ln();
        if self.is_pfaffian() {
            vander + 0.5 * ln_factorial(2 * n) + ml
        } else {
            vander + ln_factorial(n) + ml + 2.0 * nf * self.sup_density.ln()
        }
    }

    /// Upper bound for log P(#_I ≥ n) through the n-th factorial moment.
    pub fn tail_log_bound(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let nf = n as f64;
        let ml: f64 = self.log_ml_list(n).iter().sum();
        let vol = nf * (nf + 1.0) / 2.0 * self.window.length().ln();
        if self.is_pfaffian() {
            vol + 0.5 * ln_factorial(2 * n) - ln_factorial(n) + ml
        } else {
            vol + 2.0 * nf * self.sup_density.ln() + ml
        }
    }

    /// (tail(n) + n² log n/(2σ))/n².
    pub fn closed_form_ratio(&self, n: usize) -> f64 {
        let nf = n as f64;
        (self.tail_log_bound(n) + nf * nf * nf.ln() / (2.0 * self.sigma())) / (nf * nf)
    }

    /// Bn² − n² log n/(2σ).
    pub fn closed_form_log_bound(b: f64, sigma: f64, n: usize) -> f64 {
        let nf = n as f64;
        if n == 0 {
            return 0.0;
        }
        b * nf * nf - nf * nf * nf.ln() / (2.0 * sigma)
    }

    /// B = max_{n ≤ n_max} closed_form_ratio(n), certified global.
    ///
    /// With T(n) = n²·g(n), g(n+1) is a convex combination of g(n) and
    /// r(n) = (T(n+1) − T(n))/(2n+1). From the closed form of the Cauchy
    /// bounds, r(n) ≤ p/2 + (q − p/2 + log(n+1)/(2σ))/(2n+1) =: U(n), and U
    /// decreases once log(n+1) ≥ 1 − 2σ(q − p/2). So U(n_max) ≤ g(n_max)
    /// keeps every later g(n) below g(n_max).
    pub fn b_constant(&self, n_max: usize) -> Result<BConstant> {
        if n_max < 8 {
            return Err(invalid(format!("n_max={n_max} below 8")));
        }
        let sigma = self.sigma();
        let mut b = f64::NEG_INFINITY;
        let mut argmax = 0;
        for n in 1..=n_max {
            let g = self.closed_form_ratio(n);
            if g > b {
                b = g;
                argmax = n;
            }
        }
        let env = &self.envelope;
        let ln_len = self.window.length().ln();
        let p = ln_len + 1.0 + env.scale.ln() / sigma + 0.5 / sigma;
        let mut q = ln_len + env.amplitude.ln() + 1.0;
        if self.is_pfaffian() {
            q += std::f64::consts::LN_2;
        } else {
            q += 2.0 * self.sup_density.ln();
        }
        let k = q - p / 2.0;
        let nm = n_max as f64;
        let majorant = p / 2.0 + (k + (nm + 1.0).ln() / (2.0 * sigma)) / (2.0 * nm + 1.0);
        let ratio = self.closed_form_ratio(n_max);
        let decreasing = (nm + 1.0).ln() >= 1.0 - 2.0 * k * sigma;
        let cert = BConstant { b, argmax, n_max, ratio_at_n_max: ratio, increment_majorant: majorant };
        if !decreasing || majorant > ratio || !b.is_finite() {
            return Err(Error::Certificate(format!(
                "increment not yet decreasing at n_max={n_max} (majorant {majorant:.6} vs ratio {ratio:.6})"
            )));
        }
        Ok(cert)
    }

    /// b_constant with n_max doubled from 64 until the certificate holds.
    pub fn b_constant_auto(&self) -> Result<BConstant> {
        let mut n_max = 64;
        loop {
            match self.b_constant(n_max) {
                Err(Error::Certificate(_)) if n_max < B_MAX_N_MAX => n_max *= 2,
                other => return other,
            }
        }
    }

    /// log E exp(λ#²) ≤ log(e^λ + λ·∫₁^∞ e^{λt}e^{B̃t − δt log t} dt).
    ///
    /// Uses P(#² ≥ t) ≤ min(1, exp(Bn² − n² log n/(2σ))) with n = ⌈√t⌉; the
    /// capped bound is below exp(Bt − δt log t) for δ = 1/(4σ), so B̃ = B.
    pub fn exp_moment_log_bound_with(&self, b_tilde: f64, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0) {
            return Err(Error::Domain { what: "lambda", value: lambda });
        }
        let lb = laplace_integral_bound(b_tilde, self.delta(), lambda)?;
        Ok(log_add_exp(lambda, lambda.ln() + lb.log_value))
    }

    pub fn exp_moment_log_bound(&self, lambda: f64) -> Result<f64> {
        let b = self.b_constant_auto()?.b;
        self.exp_moment_log_bound_with(b, lambda)
    }

    /// Smallest c (up to a 1e−6 relative margin) with the moment bound
    /// below c(e^{4σλ} − 1) on the λ-grids, plus the fitted c′ for e^{σλ} − 1.
    pub fn c_constant_with(&self, b_tilde: f64, lambda_max: f64) -> Result<CConstant> {
        if !(lambda_max > 1.0) {
            return Err(Error::Domain { what: "lambda_max", value: lambda_max });
        }
        let sigma = self.sigma();
        let mut grid: Vec<f64> = (1..=200).map(|i| lambda_max * i as f64 / 200.0).collect();
        grid.extend((1..=2000).map(|i| lambda_max * i as f64 / 2000.0));
        // log-spaced approach to 0, where the ratio tends to (1 + e^{L(0)})/(4σ)
        grid.extend((0..60).map(|i| lambda_max / 200.0 * 10f64.powf(-(i as f64) / 5.0)));
        let mut log_c = f64::NEG_INFINITY;
        let mut log_c_fitted = f64::NEG_INFINITY;
        for &l in &grid {
            let v = self.exp_moment_log_bound_with(b_tilde, l)?.ln();
            log_c = log_c.max(v - (4.0 * sigma * l).exp_m1().ln());
            log_c_fitted = log_c_fitted.max(v - (sigma * l).exp_m1().ln());
        }
        let l0 = laplace_integral_bound(b_tilde, self.delta(), 0.0)?.log_value;
        let log_limit = log_add_exp(0.0, l0) - (4.0 * sigma).ln();
        log_c = log_c.max(log_limit) + C_RELATIVE_MARGIN.ln_1p();
        log_c_fitted = log_c_fitted.max(log_limit + 4f64.ln()) + C_RELATIVE_MARGIN.ln_1p();
        if !log_c.is_finite() {
            return Err(Error::Certificate("moment constant is not finite".into()));
        }
        Ok(CConstant { c: log_c.exp(), c_fitted: log_c_fitted.exp(), log_c, log_c_fitted, lambda_max })
    }

    pub fn c_constant(&self, lambda_max: f64) -> Result<CConstant> {
        let b = self.b_constant_auto()?.b;
        self.c_constant_with(b, lambda_max)
    }

    pub fn report(&self, lambda_max: f64, n_table: usize) -> Result<BoundReport> {
        self.report_with(self.b_constant_auto()?, lambda_max, n_table)
    }

    pub fn report_with(&self, bc: BConstant, lambda_max: f64, n_table: usize) -> Result<BoundReport> {
        let delta = self.delta();
        let sigma = self.sigma();
        laplace_certificate(bc.b, delta)?;
        let (c1, c2) = laplace_constants(bc.b, delta);
        let cc = self.c_constant_with(bc.b, lambda_max)?;
        // Ψ(λ) = 1 + c(e^{4σλ} − 1); e^{Ψ(1)} dominates, so log d ≈ Ψ(1) − log Ψ′(0)
        let log_psi1_minus_1 = cc.log_c + (4.0 * sigma).exp_m1().ln();
        let log_d = if log_psi1_minus_1 < 700.0 {
            let psi1 = 1.0 + log_psi1_minus_1.exp();
            log_combination_d(psi1, 4.0 * sigma * cc.c)?
        } else {
            f64::INFINITY
        };
        let t0 = laplace_integral_bound(bc.b, delta, 1.0)?.t0;
        let table = (1..=n_table).map(|n| TableRow { n, log_bound: self.tail_log_bound(n) }).collect();
        Ok(BoundReport {
            kernel: self.spec.id(),
            window: self.window,
            sigma,
            b: bc.b,
            b_tilde: bc.b,
            delta,
            c1,
            c2,
            c: cc.c,
            d: log_d.exp(),
            log_c: cc.log_c,
            table,
            log_d,
            c_fitted: cc.c_fitted,
            t0_at_lambda_1: t0,
            lambda_max,
            n_max: bc.n_max,
            moment_exponent: "exp(4*sigma*lambda); fitted form exp(sigma*lambda) with c_fitted".to_string(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CConstant {
    /// May overflow to infinity; log_c is always finite.
    pub c: f64,
    pub c_fitted: f64,
    pub log_c: f64,
    pub log_c_fitted: f64,
    pub lambda_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub n: usize,
    pub log_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kernel: String,
    pub window: Interval,
    pub sigma: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "B_tilde")]
    pub b_tilde: f64,
    pub delta: f64,
    pub c1: f64,
    pub c2: f64,
    pub c: f64,
    /// Overflows to infinity (null in JSON) when log_d exceeds ~709.
    pub d: f64,
    pub table: Vec<TableRow>,
    pub log_c: f64,
    /// +inf (null in JSON) once Ψ(1) itself overflows.
    pub log_d: f64,
    pub c_fitted: f64,
    pub t0_at_lambda_1: f64,
    pub lambda_max: f64,
    pub n_max: usize,
    pub moment_exponent: String,
}

pub fn pointwise_det_log_bound(spec: &KernelSpec, window: &Interval, n: usize) -> Result<f64> {
    Ok(KernelBounds::new(spec, window)?.pointwise_log_bound(n))
}

pub fn tail_log_bound(spec: &KernelSpec, window: &Interval, n: usize) -> Result<f64> {
    Ok(KernelBounds::new(spec, window)?.tail_log_bound(n))
}

pub fn b_constant(spec: &KernelSpec, window: &Interval, n_max: usize) -> Result<f64> {
    Ok(KernelBounds::new(spec, window)?.b_constant(n_max)?.b)
}

pub fn exp_moment_log_bound(spec: &KernelSpec, window: &Interval, lambda: f64) -> Result<f64> {
    KernelBounds::new(spec, window)?.exp_moment_log_bound(lambda)
}

pub fn c_constant(spec: &KernelSpec, window: &Interval, lambda_max: f64) -> Result<f64> {
    Ok(KernelBounds::new(spec, window)?.c_constant(lambda_max)?.c)
}

pub fn bound_report(spec: &KernelSpec, window: &Interval, lambda_max: f64, n_table: usize) -> Result<BoundReport> {
    KernelBounds::new(spec, window)?.report(lambda_max, n_table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::determinant;
    use crate::specfun::{adaptive_gauss_kronrod, sinc};
    use std::f64::consts::{E, PI};

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn divided_difference_examples() {
        let t = divided_differences(|x, y| Ok(x + 2.0 * y), &[0.75]).unwrap();
        assert_eq!(t.entries, vec![vec![2.25]]);
        let t = divided_differences(|_, y| Ok(y), &[0.0, 1.0]).unwrap();
        assert_eq!(t.entries[0][1], 1.0);
        assert_eq!(t.entries[1][1], 1.0);
        let t = divided_differences(|_, y| Ok(y * y), &[0.0, 1.0, 3.0]).unwrap();
        for row in &t.entries {
            assert!((row[2] - 1.0).abs() < 1e-15);
        }
        assert_eq!(t.entries[2][0], 0.0);
        assert!(matches!(divided_differences(|_, y| Ok(y), &[0.5, 0.5]), Err(Error::CoincidentPoints(_))));
    }

    #[test]
    fn vandermonde_identity() {
        let sine = |x: f64, y: f64| Ok(sinc(x - y));
        let d = det_via_divided_differences(sine, &[0.0, 0.4]).unwrap();
        assert!((d - (1.0 - sinc(0.4).powi(2))).abs() < 1e-10);
        let pts = [0.05, 0.9, 0.3, 0.62, 0.17];
        let direct: Vec<f64> = pts.iter().flat_map(|&x| pts.iter().map(move |&y| sinc(x - y))).collect();
        let lu = determinant(&direct, 5);
        let dd = det_via_divided_differences(sine, &pts).unwrap();
        assert!(((dd - lu) / lu).abs() < 1e-6, "{dd} {lu}");
    }

    #[test]
    fn cauchy_examples() {
        let exp_env = GrowthEnvelope { amplitude: 1.0, scale: 1.0, order: 1.0 };
        assert!((cauchy_coefficient_bound(&exp_env, 0) - E).abs() < 1e-15);
        assert!((cauchy_coefficient_bound(&exp_env, 2) - E.powi(3) / 9.0).abs() < 1e-13);
        for l in 0..=40 {
            assert!(-ln_factorial(l) < log_cauchy_coefficient_bound(&exp_env, l), "l={l}");
        }
        let s = KernelSpec::sine();
        let b = derivative_max_bounds(&s, &unit(), 4).unwrap();
        assert!((b[0].value - E).abs() < 1e-15);
        assert!((b[3].value - E.powi(4) * (4.0 / PI).powi(-3)).abs() < 1e-12);
    }

    fn sinc_third_derivative(t: f64) -> f64 {
        let mut s = 0.0;
        let mut fact = 1.0; // (2k+1)!
        for k in 0..40 {
            if k > 0 {
                fact *= (2 * k) as f64 * (2 * k + 1) as f64;
            }
            let m = 2 * k;
            if m >= 3 {
                let coef = (m * (m - 1) * (m - 2)) as f64;
                s += (-1f64).powi(k) * PI.powi(m) * coef * t.powi(m - 3) / fact;
            }
        }
        s
    }

    #[test]
    fn third_derivative_grid() {
        let bound = derivative_max_bounds(&KernelSpec::sine(), &unit(), 4).unwrap()[3].value;
        let mut worst = 0.0f64;
        for i in 0..200 {
            for j in 0..200 {
                let t = i as f64 / 199.0 - j as f64 / 199.0;
                worst = worst.max(sinc_third_derivative(t).abs() / 6.0);
            }
        }
        assert!(worst > 0.5 && worst <= bound, "{worst} {bound}");
    }

    #[test]
    fn integral_bound_substitutions() {
        let w1 = unit();
        let w2 = Interval::new(0.0, 2.0).unwrap();
        assert_eq!(scalar_integral_bound(1, &w1, &[0.0]).unwrap(), 0.0);
        assert!((scalar_integral_bound(2, &w2, &[0.0, 0.0]).unwrap() - 16f64.ln()).abs() < 1e-14);
        assert!((matrix_integral_bound(1, 2, &w1, &[0.0]).unwrap() - 2f64.ln()).abs() < 1e-14);
        assert!((matrix_integral_bound(2, 2, &w1, &[0.0, 0.0]).unwrap() - 24f64.ln()).abs() < 1e-14);
        assert!((pfaffian_integral_bound(1, &w1, &[0.0]).unwrap() - 0.5 * 2f64.ln()).abs() < 1e-14);
        assert!((pfaffian_integral_bound(2, &w1, &[0.0, 0.0]).unwrap() - 0.5 * 24f64.ln()).abs() < 1e-14);
        let ml = [0.3, -0.2, -1.0, -2.5, -4.0, -6.0];
        let half = Interval::new(0.0, 0.7).unwrap();
        for n in 1..=6 {
            let a = scalar_integral_bound(n, &w2, &ml).unwrap();
            assert!((a - matrix_integral_bound(n, 1, &w2, &ml).unwrap()).abs() < 1e-12);
            let pf = pfaffian_integral_bound(n, &half, &ml).unwrap();
            assert!(pf <= 0.5 * matrix_integral_bound(n, 2, &half, &ml).unwrap() + 1e-12);
        }
        assert!(scalar_integral_bound(3, &w1, &[0.0]).is_err());
    }

    #[test]
    fn sine_chain_values() {
        let kb = KernelBounds::new(&KernelSpec::sine(), &unit()).unwrap();
        assert_eq!(kb.tail_log_bound(0), 0.0);
        assert!((kb.tail_log_bound(1) - 1.0).abs() < 1e-15);
        assert!((kb.pointwise_log_bound(1) - 1.0).abs() < 1e-15);
        // the bound rises before it decays
        assert!(kb.tail_log_bound(24) < kb.tail_log_bound(4));
        let bc = kb.b_constant(64).unwrap();
        for n in 1..=64 {
            assert!(kb.tail_log_bound(n) <= KernelBounds::closed_form_log_bound(bc.b, 1.0, n) + 1e-9);
        }
        // past the certificate the ratio keeps falling
        for n in 64..600 {
            assert!(kb.closed_form_ratio(n) <= bc.b);
        }
        assert!(kb.b_constant(8).is_err());
        let wide = KernelBounds::new(&KernelSpec::sine(), &Interval::new(0.0, 2.0).unwrap()).unwrap();
        assert!(wide.b_constant_auto().unwrap().b >= bc.b);
    }

    #[test]
    fn tail_bound_covers_large_n_without_overflow() {
        let kb = KernelBounds::new(&KernelSpec::sine(), &unit()).unwrap();
        for n in [64, 128] {
            assert!(kb.tail_log_bound(n).is_finite());
            assert!(kb.pointwise_log_bound(n).is_finite());
        }
    }

    #[test]
    fn laplace_examples() {
        let lb = laplace_integral_bound(0.7, 1.3, 1.3 - 0.7).unwrap();
        assert!((lb.t0 - 1.0).abs() < 1e-15);
        for i in 0..20 {
            let lambda = 0.1 * i as f64;
            let lb = laplace_integral_bound(1.0, 0.5, lambda).unwrap();
            let s = (lambda + 1.0) * lb.t0 - 0.5 * lb.t0 * lb.t0.ln();
            assert!((s - 0.5 * lb.t0).abs() < 1e-12 * lb.t0.max(1.0));
        }
        let lb = laplace_integral_bound(1.0, 1.0, 1.0).unwrap();
        let f = |t: f64| (2.0 * t - t * t.ln()).exp();
        let numeric = adaptive_gauss_kronrod(&f, 1.0, 10.0 * lb.t0, 1e-10).unwrap();
        assert!(lb.log_value >= numeric.ln());
        laplace_certificate(1.0, 1.0).unwrap();
        laplace_certificate(1.35, 0.25).unwrap();
        assert!(laplace_integral_bound(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn combination_examples() {
        let d = combination_d(E, 1.0).unwrap();
        assert!((d - E.powf(E)).abs() < 1e-12);
        for i in 0..=50 {
            let l = 0.1 * i as f64;
            let psi = l.exp();
            let lhs = psi.exp().min(1.0 + l * psi.exp());
            assert!(lhs <= (d * (psi - 1.0)).exp() * (1.0 + 1e-12), "lambda={l}");
        }
        assert!(combination_d(1.0 + 1e-9, 1e9).unwrap() > 1e8);
        assert!(combination_d(1.0, 1.0).is_err());
    }

    #[test]
    fn poisson_examples() {
        assert_eq!(poisson_exp_moment(3.0, 0.0).unwrap(), 0.0);
        assert!((poisson_exp_moment(1.0, 2f64.ln()).unwrap() - 1.0).abs() < 1e-15);
        let (theta, lambda) = (2.0f64, 1.0f64);
        let mut s = 0.0;
        for k in 0..=100 {
            s += (lambda * k as f64 - theta + k as f64 * theta.ln() - ln_factorial(k)).exp();
        }
        assert!((s.ln() - poisson_exp_moment(theta, lambda).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn moment_bound_shape() {
        let kb = KernelBounds::new(&KernelSpec::sine(), &unit()).unwrap();
        let b = kb.b_constant_auto().unwrap().b;
        let tiny = kb.exp_moment_log_bound_with(b, 1e-14).unwrap();
        assert!((0.0..1e-2).contains(&tiny));
        let mut prev = 0.0;
        for i in 1..=20 {
            let v = kb.exp_moment_log_bound_with(b, 0.15 * i as f64).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        let cc = kb.c_constant_with(b, 3.0).unwrap();
        for i in 1..=400 {
            let l = 3.0 * i as f64 / 400.0;
            assert!(kb.exp_moment_log_bound_with(b, l).unwrap() <= cc.c * (4.0 * l).exp_m1());
            assert!(kb.exp_moment_log_bound_with(b, l).unwrap().ln() <= cc.log_c + (4.0 * l).exp_m1().ln());
        }
        let small = KernelBounds::new(&KernelSpec::sine(), &Interval::new(0.0, 0.5).unwrap()).unwrap();
        assert!(small.c_constant(3.0).unwrap().c <= cc.c);
    }
}
