//! Spectral oracles: Nyström spectra, Bernoulli counting laws, Pfaffians and
//! the analytic cross-checks.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::{Interval, KernelKind, KernelSpec};
use crate::linalg::{gram_eigenvalues, jacobi_eigen, log_abs_determinant, SymmetricEigen};
use crate::specfun::{airy, gauss_legendre, incomplete_gamma_ratio, ln_factorial, QuadratureRule, AIRY_MAX};

/// Eigenvalues at or below this are discarded by the dense solver.
pub const EIGENVALUE_FLOOR: f64 = 1e-16;
/// Floor for the factored (Gram) route, whose small eigenvalues are relatively accurate.
pub const FACTORED_FLOOR: f64 = 1e-30;
/// Raw eigenvalues beyond [−band, 1 + band] mean the quadrature is unconverged.
pub const CLIP_BAND: f64 = 1e-6;
/// Relative truncation allowance for exponential moments.
pub const MOMENT_TRUNCATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct DiscretizedKernel {
    pub rule: QuadratureRule,
    /// Row-major n×n, entries sqrt(w_i w_j)·Π(x_i, x_j).
    pub matrix: Vec<f64>,
    pub kernel: String,
    pub window: Interval,
}

impl DiscretizedKernel {
    pub fn order(&self) -> usize {
        self.rule.len()
    }

    pub fn trace(&self) -> f64 {
        let n = self.order();
        (0..n).map(|i| self.matrix[i * n + i]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub raw_out_of_range: f64,
    #[serde(skip)]
    pub floor: f64,
}

impl Spectrum {
    /// Builds a spectrum from raw eigenvalues, clipping into [0, 1].
    pub fn from_raw(mut raw: Vec<f64>, floor: f64) -> Result<Self> {
        raw.sort_by(|a, b| b.total_cmp(a));
        let mut worst = 0.0f64;
        for &v in &raw {
            let excess = (-v).max(v - 1.0).max(0.0);
            if excess > CLIP_BAND {
                return Err(Error::SpectrumOutOfRange { value: v });
            }
            worst = worst.max(excess);
        }
        let eigenvalues = raw.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Ok(Self { eigenvalues, raw_out_of_range: worst, floor })
    }

    pub fn sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn variance(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l * (1.0 - l)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountDistribution {
    pub pmf: Vec<f64>,
    pub truncation_error_bound: f64,
}

impl CountDistribution {
    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.pmf.iter().enumerate().map(|(k, p)| (k as f64 - m).powi(2) * p).sum()
    }
}

pub fn discretize(spec: &KernelSpec, window: &Interval, order: usize) -> Result<DiscretizedKernel> {
    if spec.block_size() != 1 || spec.kind == KernelKind::Ginibre {
        return Err(Error::Unsupported(format!("{spec} cannot be discretized on a real window")));
    }
    spec.check_window(window)?;
    discretize_with(&spec.id(), window, order, |x, y| spec.eval_scalar(x, y))
}

/// Nyström matrix of an arbitrary symmetric kernel.
pub fn discretize_with(
    id: &str,
    window: &Interval,
    order: usize,
    kernel: impl Fn(f64, f64) -> Result<f64>,
) -> Result<DiscretizedKernel> {
    if order < 8 {
        return Err(invalid(format!("quadrature order {order} below 8")));
    }
    let rule = gauss_legendre(order, window.a, window.b)?;
    let sw: Vec<f64> = rule.weights.iter().map(|w| w.sqrt()).collect();
    let n = order;
    let mut matrix = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = sw[i] * sw[j] * kernel(rule.nodes[i], rule.nodes[j])?;
            matrix[i * n + j] = v;
            matrix[j * n + i] = v;
        }
    }
    Ok(DiscretizedKernel { rule, matrix, kernel: id.to_string(), window: *window })
}

/// Eigenvalues by cyclic Jacobi, descending and clipped.
pub fn spectrum(d: &DiscretizedKernel) -> Result<Spectrum> {
    let e = jacobi_eigen(&d.matrix, d.order(), false)?;
    Spectrum::from_raw(e.values, EIGENVALUE_FLOOR)
}

/// Eigenvalues and eigenvectors (for sampling).
pub fn eigensystem(d: &DiscretizedKernel) -> Result<SymmetricEigen> {
    let e = jacobi_eigen(&d.matrix, d.order(), true)?;
    Spectrum::from_raw(e.values.clone(), EIGENVALUE_FLOOR)?;
    Ok(e)
}

/// A factor G (rows = Nyström nodes) with G·Gᵀ equal to the Nyström matrix.
#[derive(Debug, Clone)]
pub struct FactoredKernel {
    pub rows: usize,
    pub cols: usize,
    pub factor: Vec<f64>,
}

const SINE_FEATURE_NODES: usize = 24;
const AIRY_PANEL_NODES: usize = 20;

/// Gram factor of the Nyström matrix for kernels with an integral representation.
///
/// sine: sinc(x − y) = ∫_{−1/2}^{1/2} e^{2πi(x−y)u} du, split into cos/sin features
/// in centred coordinates. Airy: 𝒜(x, y) = ∫₀^∞ Ai(x+t)Ai(y+t) dt, cut where x+t
/// reaches the Airy working range.
pub fn discretize_factored(spec: &KernelSpec, window: &Interval, order: usize) -> Result<FactoredKernel> {
    spec.check_window(window)?;
    if order < 8 {
        return Err(invalid(format!("quadrature order {order} below 8")));
    }
    let rule = gauss_legendre(order, window.a, window.b)?;
    let (inner_nodes, inner_weights, feature): (Vec<f64>, Vec<f64>, Box<dyn Fn(f64, f64) -> Result<Vec<f64>>>) =
        match spec.kind {
            KernelKind::Sine => {
                let m = SINE_FEATURE_NODES + 2 * window.length().ceil() as usize;
                let r = gauss_legendre(m, 0.0, 0.5)?;
                let mid = 0.5 * (window.a + window.b);
                let f = move |x: f64, u: f64| {
                    let phase = 2.0 * std::f64::consts::PI * (x - mid) * u;
                    Ok(vec![std::f64::consts::SQRT_2 * phase.cos(), std::f64::consts::SQRT_2 * phase.sin()])
                };
                (r.nodes, r.weights, Box::new(f))
            }
            KernelKind::Airy => {
                let t_max = AIRY_MAX - window.b;
                let panels = t_max.ceil() as usize;
                let h = t_max / panels as f64;
                let mut nodes = Vec::new();
                let mut weights = Vec::new();
                for p in 0..panels {
                    let r = gauss_legendre(AIRY_PANEL_NODES, p as f64 * h, (p + 1) as f64 * h)?;
                    nodes.extend(r.nodes);
                    weights.extend(r.weights);
                }
                let f = |x: f64, t: f64| Ok(vec![airy(x + t)?.0]);
                (nodes, weights, Box::new(f))
            }
            _ => return Err(Error::Unsupported(format!("no integral factorization for {spec}"))),
        };
    let per = feature(rule.nodes[0], inner_nodes[0])?.len();
    let cols = inner_nodes.len() * per;
    let rows = order;
    let mut factor = vec![0.0; rows * cols];
    for i in 0..rows {
        let sw = rule.weights[i].sqrt();
        for (c, (&u, &v)) in inner_nodes.iter().zip(&inner_weights).enumerate() {
            let vals = feature(rule.nodes[i], u)?;
            for (k, val) in vals.iter().enumerate() {
                factor[i * cols + c * per + k] = sw * v.sqrt() * val;
            }
        }
    }
    Ok(FactoredKernel { rows, cols, factor })
}

/// Eigenvalues of G·Gᵀ by one-sided Jacobi (small eigenvalues to high relative accuracy).
pub fn factored_spectrum(f: &FactoredKernel) -> Result<Spectrum> {
    // orthogonalize the shorter side
    let vals = if f.cols <= f.rows {
        gram_eigenvalues(&f.factor, f.rows, f.cols)?
    } else {
        let mut t = vec![0.0; f.rows * f.cols];
        for i in 0..f.rows {
            for j in 0..f.cols {
                t[j * f.rows + i] = f.factor[i * f.cols + j];
            }
        }
        gram_eigenvalues(&t, f.cols, f.rows)?
    };
    Spectrum::from_raw(vals, FACTORED_FLOOR)
}

/// Law of the count as a sum of independent Bernoulli(λ_k).
pub fn count_distribution(s: &Spectrum) -> CountDistribution {
    let mut pmf = vec![1.0];
    let mut discarded = 0.0;
    for &l in &s.eigenvalues {
        if l <= s.floor {
            discarded += l;
            continue;
        }
        let mut next = vec![0.0; pmf.len() + 1];
        for (k, &p) in pmf.iter().enumerate() {
            next[k] += p * (1.0 - l);
            next[k + 1] += p * l;
        }
        pmf = next;
    }
    CountDistribution { pmf, truncation_error_bound: discarded }
}

/// (lower, upper) bracket of P(# ≥ n).
pub fn tail_bracket(c: &CountDistribution, n: usize) -> (f64, f64) {
    if n == 0 {
        return (1.0, 1.0);
    }
    let kept: f64 = c.pmf.iter().skip(n).sum();
    (kept.min(1.0), (kept + c.truncation_error_bound).min(1.0))
}

/// Certified upper value of P(# ≥ n).
pub fn tail(c: &CountDistribution, n: usize) -> f64 {
    tail_bracket(c, n).1
}

fn log_sum_exp(v: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// log E exp(λ#²).
///
/// The discarded eigenvalue mass τ is controlled to first order: one extra
/// point shifts k to k+1, so τ·Σ p_k e^{λ(k+1)²} must stay below
/// 1e−10 of the retained sum.
pub fn log_exp_moment_sq(c: &CountDistribution, lambda: f64) -> Result<f64> {
    let terms = |shift: usize| {
        c.pmf
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(move |(k, p)| p.ln() + lambda * ((k + shift) as f64).powi(2))
    };
    let main = log_sum_exp(terms(0));
    if c.truncation_error_bound > 0.0 {
        let extra = c.truncation_error_bound.ln() + log_sum_exp(terms(1));
        if extra > main + MOMENT_TRUNCATION_TOL.ln() {
            return Err(Error::Truncation(format!(
                "discarded mass {:.3e} too large for lambda={lambda}",
                c.truncation_error_bound
            )));
        }
    }
    Ok(main)
}

pub fn exp_moment_sq(c: &CountDistribution, lambda: f64) -> Result<f64> {
    Ok(log_exp_moment_sq(c, lambda)?.exp())
}

/// ∏(1 + (z − 1)λ_k) over the whole spectrum.
pub fn generating_function(s: &Spectrum, z: f64) -> f64 {
    s.eigenvalues.iter().map(|l| 1.0 + (z - 1.0) * l).product()
}

/// Pfaffian by Parlett–Reid skew tridiagonalization with partial pivoting.
pub fn pfaffian(m: &[f64], dim: usize) -> Result<f64> {
    if m.len() != dim * dim {
        return Err(invalid("pfaffian: matrix is not square"));
    }
    let scale = m.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut defect = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            defect = defect.max((m[i * dim + j] + m[j * dim + i]).abs());
        }
    }
    if defect > 1e-12 * scale {
        return Err(Error::NotSkew(defect));
    }
    if dim % 2 == 1 {
        return Ok(0.0);
    }
    let n = dim;
    let mut a = m.to_vec();
    let mut pf = 1.0;
    for k in (0..n.saturating_sub(1)).step_by(2) {
        let kp = (k + 1..n)
            .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()).then(j.cmp(&i)))
            .unwrap();
        if kp != k + 1 {
            for c in k..n {
                a.swap((k + 1) * n + c, kp * n + c);
            }
            for r in k..n {
                a.swap(r * n + k + 1, r * n + kp);
            }
            pf = -pf;
        }
        let piv = a[k * n + k + 1];
        if piv == 0.0 {
            return Ok(0.0);
        }
        pf *= piv;
        if k + 2 < n {
            let tau: Vec<f64> = (k + 2..n).map(|c| a[k * n + c] / piv).collect();
            let col: Vec<f64> = (k + 2..n).map(|r| a[r * n + k + 1]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    a[i * n + j] += tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
    }
    Ok(pf)
}

/// Correlation function ρ_n at real points: det for scalar kernels, Pf of the
/// particle-major 2n×2n block matrix for matrix kernels.
pub fn correlation_function(spec: &KernelSpec, points: &[f64]) -> Result<f64> {
    let n = points.len();
    if n == 0 {
        return Ok(1.0);
    }
    if n > 16 {
        return Err(invalid("correlation_function supports at most 16 points"));
    }
    match spec.block_size() {
        1 => {
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    m[i * n + j] = spec.eval_scalar(points[i], points[j])?;
                }
            }
            let (sign, la) = log_abs_determinant(&m, n);
            Ok(sign * la.exp())
        }
        _ => pfaffian(&block_matrix(spec, points)?, 2 * n),
    }
}

/// 2n×2n matrix with block (i, j) = K(x_i, x_j), rows 2i, 2i+1 for particle i.
pub fn block_matrix(spec: &KernelSpec, points: &[f64]) -> Result<Vec<f64>> {
    let n = points.len();
    let d = 2 * n;
    let mut m = vec![0.0; d * d];
    for i in 0..n {
        for j in 0..n {
            let b = spec.eval_matrix(points[i], points[j])?;
            for r in 0..2 {
                for c in 0..2 {
                    m[(2 * i + r) * d + 2 * j + c] = b[r][c];
                }
            }
        }
    }
    Ok(m)
}

/// γ(k+1, r²)/k! for k = 0..=kmax (descending in k).
pub fn ginibre_disk_eigenvalues(radius: f64, kmax: usize) -> Result<Vec<f64>> {
    if !(radius > 0.0) || radius > 12.0 || kmax > 200 {
        return Err(invalid(format!("ginibre disk: radius {radius}, kmax {kmax}")));
    }
    (0..=kmax).map(|k| incomplete_gamma_ratio(k, radius * radius)).collect()
}

pub const GINIBRE_ANGLES: usize = 64;

/// Nyström eigenvalues of the planar kernel on the disk of given radius.
///
/// Polar product rule (Gauss–Legendre in r with Jacobian r, trapezoid in θ).
/// The matrix is block circulant in the angle index, so the discrete Fourier
/// transform over angle splits it into one n_radial×n_radial block per
/// angular mode; each block is real symmetric.
pub fn ginibre_nystrom_eigenvalues(radius: f64, n_radial: usize, n_angle: usize) -> Result<Vec<f64>> {
    let spec = KernelSpec { kind: KernelKind::Ginibre };
    let rule = gauss_legendre(n_radial, 0.0, radius)?;
    let dtheta = 2.0 * std::f64::consts::PI / n_angle as f64;
    let w: Vec<f64> = rule.nodes.iter().zip(&rule.weights).map(|(r, wr)| wr * r * dtheta).collect();
    let mut all = Vec::with_capacity(n_radial * n_angle);
    // c_ij(d) = sqrt(W_i W_j)·Π(r_i e^{iθ_d}, r_j)
    let mut c = vec![num_complex::Complex64::new(0.0, 0.0); n_radial * n_radial * n_angle];
    for i in 0..n_radial {
        for j in 0..n_radial {
            for d in 0..n_angle {
                let z = num_complex::Complex64::from_polar(rule.nodes[i], d as f64 * dtheta);
                let v = spec.eval_complex(z, num_complex::Complex64::new(rule.nodes[j], 0.0))?;
                c[(i * n_radial + j) * n_angle + d] = v * (w[i] * w[j]).sqrt();
            }
        }
    }
    for mode in 0..n_angle {
        let mut b = vec![0.0; n_radial * n_radial];
        for i in 0..n_radial {
            for j in 0..n_radial {
                let mut s = num_complex::Complex64::new(0.0, 0.0);
                for d in 0..n_angle {
                    let phase = -(mode as f64) * d as f64 * dtheta;
                    s += c[(i * n_radial + j) * n_angle + d] * num_complex::Complex64::from_polar(1.0, phase);
                }
                b[i * n_radial + j] = s.re;
            }
        }
        for i in 0..n_radial {
            for j in 0..i {
                let v = 0.5 * (b[i * n_radial + j] + b[j * n_radial + i]);
                b[i * n_radial + j] = v;
                b[j * n_radial + i] = v;
            }
        }
        all.extend(jacobi_eigen(&b, n_radial, false)?.values);
    }
    all.sort_by(|a, b| b.total_cmp(a));
    Ok(all)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendrePartition {
    pub n: usize,
    /// n^{n(n−1)/2}·2^{n(n+1)/2}·∏(k!)²/(2k+1)!
    pub formula: f64,
    /// Selberg's closed form of ∫_{[−n/2,n/2]ⁿ} ∏|t_i − t_j|².
    pub selberg: f64,
    pub quadrature: Option<f64>,
    /// Formula and quadrature disagree beyond 1e−6 relative.
    pub flagged: bool,
}

pub fn legendre_partition(n: usize) -> Result<LegendrePartition> {
    if n == 0 || n > 6 {
        return Err(invalid(format!("legendre_partition: n={n} outside 1..=6")));
    }
    let nf = n as f64;
    let mut log_formula = (nf * (nf - 1.0) / 2.0) * nf.ln() + (nf * (nf + 1.0) / 2.0) * 2f64.ln();
    let mut log_selberg = nf * nf * nf.ln();
    for k in 0..n {
        log_formula += 2.0 * ln_factorial(k) - ln_factorial(2 * k + 1);
        log_selberg += 2.0 * ln_factorial(k) + ln_factorial(k + 1) - ln_factorial(n + k);
    }
    let formula = log_formula.exp();
    let selberg = log_selberg.exp();
    let quadrature = if n <= 3 { Some(vandermonde_quadrature(n)?) } else { None };
    let flagged = quadrature.is_some_and(|q| (q - formula).abs() > 1e-6 * q.abs());
    Ok(LegendrePartition { n, formula, selberg, quadrature, flagged })
}

fn vandermonde_quadrature(n: usize) -> Result<f64> {
    let h = n as f64 / 2.0;
    let rule = gauss_legendre(40, -h, h)?;
    let m = rule.len();
    let mut total = 0.0;
    let mut idx = vec![0usize; n];
    loop {
        let mut w = 1.0;
        let mut v = 1.0;
        for a in 0..n {
            w *= rule.weights[idx[a]];
            for b in a + 1..n {
                let d = rule.nodes[idx[a]] - rule.nodes[idx[b]];
                v *= d * d;
            }
        }
        total += w * v;
        let mut p = 0;
        loop {
            if p == n {
                return Ok(total);
            }
            idx[p] += 1;
            if idx[p] < m {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}
