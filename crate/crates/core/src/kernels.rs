//! Correlation kernels, their growth envelopes and density factorizations.
//!
//! Scalar kernels are evaluated with the argument pair put in canonical
//! order (x ≤ y), so symmetry holds bit-for-bit.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::specfun::{
    adaptive_gauss_kronrod, airy, airy_bi_majorant, airy_tail_integral, bessel_j, bessel_j_scaled,
    ln_gamma, sinc, sinc_antiderivative, sinc_derivative, AIRY_MAX, AIRY_MIN, BESSEL_X_MAX,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(invalid(format!("interval [{a}, {b}] must satisfy a < b")));
        }
        Ok(Self { a, b })
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x <= self.b
    }

    /// max(|a|, |b|)
    pub fn sup_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs())
    }

    fn grid(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        (0..=n).map(move |i| self.a + self.length() * i as f64 / n as f64)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.a, self.b)
    }
}

/// Constants (A, M, σ) with |Π̃(x, z)| ≤ A·exp(M|z − y|^σ) for x, y in the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthEnvelope {
    pub amplitude: f64,
    pub scale: f64,
    pub order: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelKind {
    Sine,
    Bessel { s: f64 },
    Airy,
    Ginibre,
    SineSymplectic,
    AirySymplectic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    RealLine,
    PositiveHalfLine,
    ComplexPlane,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
}

const DIAGONAL_BAND: f64 = 1e-4;
const TAYLOR_TERMS: usize = 10;
// ∂_y𝒜 cancels like 1/h², so its Taylor band is wider.
const AIRY_DERIVATIVE_BAND: f64 = 0.05;
const AIRY_DERIVATIVE_TERMS: usize = 24;
const GINIBRE_RADIUS: f64 = 12.0;
const AIRY_INTEGRAL_TOL: f64 = 1e-12;

impl KernelSpec {
    pub fn new(kind: KernelKind) -> Result<Self> {
        if let KernelKind::Bessel { s } = kind {
            if !(s > -1.0) || !s.is_finite() {
                return Err(invalid(format!("Bessel parameter s={s} must exceed -1")));
            }
        }
        Ok(Self { kind })
    }

    pub fn sine() -> Self {
        Self { kind: KernelKind::Sine }
    }

    pub fn airy() -> Self {
        Self { kind: KernelKind::Airy }
    }

    pub fn bessel(s: f64) -> Result<Self> {
        Self::new(KernelKind::Bessel { s })
    }

    pub fn id(&self) -> String {
        self.to_string()
    }

    pub fn block_size(&self) -> usize {
        match self.kind {
            KernelKind::SineSymplectic | KernelKind::AirySymplectic => 2,
            _ => 1,
        }
    }

    pub fn domain(&self) -> Domain {
        match self.kind {
            KernelKind::Bessel { .. } => Domain::PositiveHalfLine,
            KernelKind::Ginibre => Domain::ComplexPlane,
            _ => Domain::RealLine,
        }
    }

    pub fn has_factorization(&self) -> bool {
        !matches!(self.kind, KernelKind::Ginibre)
    }

    /// Rejects windows outside the kernel's domain or working range.
    pub fn check_window(&self, w: &Interval) -> Result<()> {
        match self.kind {
            KernelKind::Bessel { s } => {
                if w.a < 0.0 || (s < 0.0 && w.a <= 0.0) {
                    return Err(invalid(format!(
                        "Bessel(s={s}) window {w} must lie in {}",
                        if s < 0.0 { "(0, inf)" } else { "[0, inf)" }
                    )));
                }
                if w.b > BESSEL_X_MAX * BESSEL_X_MAX {
                    return Err(Error::Domain { what: "Bessel window", value: w.b });
                }
            }
            KernelKind::Airy | KernelKind::AirySymplectic => {
                // the integral entries need x ≥ −10
                let lo = if self.block_size() == 2 { -10.0 } else { AIRY_MIN };
                if w.a < lo || w.b > AIRY_MAX {
                    return Err(Error::Domain { what: "Airy window", value: if w.a < lo { w.a } else { w.b } });
                }
            }
            KernelKind::Ginibre => {
                if w.a < 0.0 || w.b > GINIBRE_RADIUS {
                    return Err(invalid(format!("Ginibre window {w} is a radius range inside [0, 12]")));
                }
            }
            KernelKind::Sine | KernelKind::SineSymplectic => {}
        }
        Ok(())
    }

    /// Scalar kernel value Π(x, y).
    pub fn eval_scalar(&self, x: f64, y: f64) -> Result<f64> {
        let (x, y) = if x <= y { (x, y) } else { (y, x) };
        match self.kind {
            KernelKind::Sine => Ok(sinc(x - y)),
            KernelKind::Airy => airy_kernel(x, y),
            KernelKind::Bessel { s } => bessel_kernel(s, x, y),
            _ => Err(Error::Unsupported(format!("{self} is not a scalar real kernel"))),
        }
    }

    /// 2×2 block of a Pfaffian kernel.
    pub fn eval_matrix(&self, x: f64, y: f64) -> Result<[[f64; 2]; 2]> {
        match self.kind {
            KernelKind::SineSymplectic => {
                let t = x - y;
                let (is, s, ds) = (sinc_antiderivative(t), sinc(t), sinc_derivative(t));
                Ok([[-0.5 * is, 0.5 * s], [-0.5 * s, 0.5 * ds]])
            }
            KernelKind::AirySymplectic => airy4(x, y),
            _ => Err(Error::Unsupported(format!("{self} is not a matrix kernel"))),
        }
    }

    /// Ginibre kernel (1/π)·exp(z w̄ − |z|²/2 − |w|²/2).
    pub fn eval_complex(&self, z: Complex64, w: Complex64) -> Result<Complex64> {
        if self.kind != KernelKind::Ginibre {
            return Err(Error::Unsupported(format!("{self} is not a planar kernel")));
        }
        for v in [z, w] {
            if v.norm() > GINIBRE_RADIUS {
                return Err(Error::Domain { what: "Ginibre kernel", value: v.norm() });
            }
        }
        let e = z * w.conj() - 0.5 * (z.norm_sqr() + w.norm_sqr());
        Ok(e.exp() / std::f64::consts::PI)
    }

    /// One-point intensity on the real line.
    pub fn intensity(&self, x: f64) -> Result<f64> {
        match self.block_size() {
            1 if self.kind != KernelKind::Ginibre => self.eval_scalar(x, x),
            2 => Ok(self.eval_matrix(x, x)?[0][1]),
            _ => Ok(self.eval_complex(Complex64::new(x, 0.0), Complex64::new(x, 0.0))?.re),
        }
    }

    /// Growth constants of the reduced kernel, valid uniformly for centres in the window.
    pub fn growth_envelope(&self, window: &Interval) -> Result<GrowthEnvelope> {
        self.check_window(window)?;
        let env = match self.kind {
            // |sinc(x − z)| ≤ exp(π|Im z|) ≤ exp(π|z − y|)
            KernelKind::Sine => GrowthEnvelope { amplitude: 1.0, scale: std::f64::consts::PI, order: 1.0 },
            // entrywise; the DS entry needs π/4 (see sine4_entry_bound)
            KernelKind::SineSymplectic => GrowthEnvelope {
                amplitude: std::f64::consts::FRAC_PI_4,
                scale: std::f64::consts::PI,
                order: 1.0,
            },
            KernelKind::Bessel { s } => bessel_envelope(s, window),
            KernelKind::Airy => airy_envelope(window)?,
            KernelKind::AirySymplectic => airy4_envelope(window)?,
            KernelKind::Ginibre => GrowthEnvelope { amplitude: 1.0 / std::f64::consts::PI, scale: 1.0, order: 2.0 },
        };
        Ok(env)
    }

    pub fn factorization(&self, window: &Interval) -> Result<Factorization> {
        self.check_window(window)?;
        let sup_density = match self.kind {
            KernelKind::Bessel { s } => bessel_density(s, window.a).max(bessel_density(s, window.b)),
            KernelKind::Ginibre => {
                return Err(Error::Unsupported("the planar kernel has no real-line factorization".into()))
            }
            _ => 1.0,
        };
        if !sup_density.is_finite() || sup_density <= 0.0 {
            return Err(Error::Domain { what: "density factor on window", value: window.a });
        }
        Ok(Factorization { spec: *self, window: *window, sup_density })
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            KernelKind::Sine => write!(f, "sine"),
            KernelKind::Bessel { s } => write!(f, "bessel:s={s}"),
            KernelKind::Airy => write!(f, "airy"),
            KernelKind::Ginibre => write!(f, "ginibre"),
            KernelKind::SineSymplectic => write!(f, "sine4"),
            KernelKind::AirySymplectic => write!(f, "airy4"),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s.trim() {
            "sine" => KernelKind::Sine,
            "airy" => KernelKind::Airy,
            "ginibre" => KernelKind::Ginibre,
            "sine4" => KernelKind::SineSymplectic,
            "airy4" => KernelKind::AirySymplectic,
            other => {
                let param = other
                    .strip_prefix("bessel:s=")
                    .ok_or_else(|| invalid(format!("unknown kernel id '{other}'")))?;
                let s: f64 = param
                    .parse()
                    .map_err(|_| invalid(format!("bad Bessel parameter '{param}'")))?;
                KernelKind::Bessel { s }
            }
        };
        KernelSpec::new(kind)
    }
}

/// Π = ρ(x)ρ(y)Π̃ on a window.
#[derive(Debug, Clone, Copy)]
pub struct Factorization {
    spec: KernelSpec,
    pub window: Interval,
    pub sup_density: f64,
}

impl Factorization {
    pub fn density(&self, x: f64) -> f64 {
        match self.spec.kind {
            KernelKind::Bessel { s } => bessel_density(s, x),
            _ => 1.0,
        }
    }

    pub fn reduced_kernel(&self, x: f64, y: f64) -> Result<f64> {
        let (x, y) = if x <= y { (x, y) } else { (y, x) };
        match self.spec.kind {
            KernelKind::Bessel { s } => bessel_reduced(s, x, y),
            KernelKind::Sine | KernelKind::Airy => self.spec.eval_scalar(x, y),
            _ => Err(Error::Unsupported(format!("{} has a matrix-valued reduced kernel", self.spec))),
        }
    }
}

fn near_diagonal(x: f64, y: f64) -> bool {
    (y - x).abs() < DIAGONAL_BAND * (1.0 + x.abs())
}

// ---------------------------------------------------------------- Airy

/// Derivatives Ai^{(k)}(x), k < n, from Ai″ = x·Ai.
fn airy_derivatives(x: f64, n: usize) -> Result<Vec<f64>> {
    let (ai, aip) = airy(x)?;
    let mut d = vec![0.0; n.max(2)];
    d[0] = ai;
    d[1] = aip;
    for k in 0..n.saturating_sub(2) {
        d[k + 2] = x * d[k] + if k > 0 { k as f64 * d[k - 1] } else { 0.0 };
    }
    Ok(d)
}

/// Taylor coefficients c_j of h ↦ 𝒜(x, x + h).
fn airy_kernel_taylor(x: f64, n: usize) -> Result<Vec<f64>> {
    let a = airy_derivatives(x, n + 2)?;
    let mut fact = 1.0;
    Ok((1..=n)
        .map(|k| {
            fact *= k as f64;
            (a[1] * a[k] - a[0] * a[k + 1]) / fact
        })
        .collect())
}

fn airy_kernel(x: f64, y: f64) -> Result<f64> {
    if near_diagonal(x, y) {
        let c = airy_kernel_taylor(x, TAYLOR_TERMS)?;
        let h = y - x;
        return Ok(c.iter().rev().fold(0.0, |acc, &cj| acc * h + cj));
    }
    let (ax, apx) = airy(x)?;
    let (ay, apy) = airy(y)?;
    Ok((ax * apy - ay * apx) / (x - y))
}

/// ∂_y𝒜(x, y).
fn airy_kernel_dy(x: f64, y: f64) -> Result<f64> {
    let h = y - x;
    if h.abs() < AIRY_DERIVATIVE_BAND {
        let c = airy_kernel_taylor(x, AIRY_DERIVATIVE_TERMS)?;
        let mut acc = 0.0;
        for j in (1..c.len()).rev() {
            acc = acc * h + j as f64 * c[j];
        }
        return Ok(acc);
    }
    let (ax, apx) = airy(x)?;
    let (ay, apy) = airy(y)?;
    let k = (ax * apy - ay * apx) / (x - y);
    Ok((ax * y * ay - apx * apy + k) / (x - y))
}

fn airy4(x: f64, y: f64) -> Result<[[f64; 2]; 2]> {
    for v in [x, y] {
        if !(-10.0..=AIRY_MAX).contains(&v) {
            return Err(Error::Domain { what: "symplectic Airy kernel", value: v });
        }
    }
    let (ax, _) = airy(x)?;
    let (ay, _) = airy(y)?;
    let tx = airy_tail_integral(x)?;
    let ty = airy_tail_integral(y)?;
    let k = airy_kernel(x.min(y), x.max(y))?;
    let kyx = k;
    let int_x = airy_kernel_column_integral(x, y)?;
    let k11 = -0.5 * int_x + 0.25 * tx * ty;
    let k12 = 0.5 * k - 0.25 * ay * tx;
    // 𝒜⁽⁴⁾₂₁(x, y) = −𝒜⁽⁴⁾₁₂(y, x)
    let k21 = -(0.5 * kyx - 0.25 * ax * ty);
    let k22 = 0.5 * airy_kernel_dy(x, y)? + 0.25 * ax * ay;
    Ok([[k11, k12], [k21, k22]])
}

/// ∫ₓ^∞ 𝒜(u, y) du.
fn airy_kernel_column_integral(x: f64, y: f64) -> Result<f64> {
    let f = |u: f64| {
        let (p, q) = if u <= y { (u, y) } else { (y, u) };
        airy_kernel(p, q).unwrap_or(f64::NAN)
    };
    let mut total = 0.0;
    // split at y where the integrand switches evaluation branch
    if x < y && y < AIRY_MAX {
        total += adaptive_gauss_kronrod(&f, x, y, AIRY_INTEGRAL_TOL)?;
        total += adaptive_gauss_kronrod(&f, y, AIRY_MAX, AIRY_INTEGRAL_TOL)?;
    } else {
        total += adaptive_gauss_kronrod(&f, x, AIRY_MAX, AIRY_INTEGRAL_TOL)?;
    }
    Ok(total)
}

/// (sup|Ai|, sup|Ai′|, sup|T|) on the window, T(x) = ∫ₓ^∞ Ai, with grid slack.
fn airy_sups(window: &Interval, with_tail: bool) -> Result<(f64, f64, f64)> {
    let n = 400;
    let h = window.length() / n as f64;
    let b = window.sup_abs();
    let (beta, beta1) = airy_bi_majorant(b);
    let (mut s0, mut s1, mut st) = (0.0f64, 0.0f64, 0.0f64);
    for x in window.grid(n) {
        let (a, ap) = airy(x)?;
        s0 = s0.max(a.abs());
        s1 = s1.max(ap.abs());
        if with_tail {
            st = st.max(airy_tail_integral(x)?.abs());
        }
    }
    let s0 = s0 + 0.5 * h * beta1;
    let s1 = s1 + 0.5 * h * b * beta;
    let st = st + 0.5 * h * s0;
    Ok((s0, s1, st))
}

/// Majorant of |𝒜(x, z)| for x in the window and |z| ≤ r.
///
/// For |z − x| ≥ 1 divide by 1; for |z − x| < 1 use the maximum principle on
/// the unit circle around x.
fn airy_kernel_majorant(sup_ai: f64, sup_aip: f64, b: f64, r: f64) -> f64 {
    let (beta, beta1) = airy_bi_majorant(r.max(b + 1.0));
    sup_ai * beta1 + sup_aip * beta
}

const ENVELOPE_MARGIN: f64 = 1.01;

/// sup_R f(R)·exp(−R^σ) over R ≥ 0, f nondecreasing, on a grid bracketing each cell.
fn sup_against_decay(f: impl Fn(f64) -> f64, sigma: f64, r_max: f64) -> f64 {
    let step = 0.01;
    let n = (r_max / step).ceil() as usize;
    let mut best = 0.0f64;
    for i in 0..n {
        let r0 = i as f64 * step;
        let r1 = r0 + step;
        best = best.max(f(r1) * (-r0.powf(sigma)).exp());
    }
    best * ENVELOPE_MARGIN
}

fn airy_envelope(window: &Interval) -> Result<GrowthEnvelope> {
    let (s0, s1, _) = airy_sups(window, false)?;
    let b = window.sup_abs();
    let amp = sup_against_decay(|r| airy_kernel_majorant(s0, s1, b, b + r), 1.5, 40.0 + 2.0 * b);
    Ok(GrowthEnvelope { amplitude: amp, scale: 1.0, order: 1.5 })
}

fn airy4_envelope(window: &Interval) -> Result<GrowthEnvelope> {
    let (s0, s1, st) = airy_sups(window, true)?;
    let b = window.sup_abs();
    let len = window.length();
    let abs_int = |g: &dyn Fn(f64) -> f64| adaptive_gauss_kronrod(g, window.a, AIRY_MAX, 1e-10).map(|v| v + 1e-9);
    let l0 = abs_int(&|u: f64| airy(u).map(|v| v.0.abs()).unwrap_or(f64::NAN))?;
    let l1 = abs_int(&|u: f64| airy(u).map(|v| v.1.abs()).unwrap_or(f64::NAN))?;
    let entry = |big_r: f64| {
        let r = b + big_r;
        let (beta, _) = airy_bi_majorant(r);
        let (beta2, beta12) = airy_bi_majorant(r + 2.0);
        let t_far = st + (big_r + len) * beta;
        let k11 = 0.5 * (l0 * beta12 + l1 * beta2) + 0.25 * st * t_far;
        let k12 = 0.5 * airy_kernel_majorant(s0, s1, b, r) + 0.25 * beta * st;
        let k21 = 0.5 * airy_kernel_majorant(s0, s1, b, r) + 0.25 * s0 * t_far;
        let k22 = 0.5 * airy_kernel_majorant(s0, s1, b, r + 1.0) + 0.25 * s0 * beta;
        k11.max(k12).max(k21).max(k22)
    };
    let amp = sup_against_decay(entry, 1.5, 40.0 + 2.0 * b);
    Ok(GrowthEnvelope { amplitude: amp, scale: 1.0, order: 1.5 })
}

// -------------------------------------------------------------- Bessel

fn bessel_density(s: f64, x: f64) -> f64 {
    (x / 4.0).powf(s / 2.0)
}

/// E_ν(x) = J_ν(√x)/(x/4)^{ν/2}; E′_ν = −E_{ν+1}/4.
fn bessel_e(nu: f64, x: f64) -> Result<f64> {
    bessel_j_scaled(nu, x.sqrt())
}

fn bessel_reduced(s: f64, x: f64, y: f64) -> Result<f64> {
    for v in [x, y] {
        if !(v >= 0.0) || v > BESSEL_X_MAX * BESSEL_X_MAX {
            return Err(Error::Domain { what: "Bessel kernel", value: v });
        }
    }
    if near_diagonal(x, y) {
        let k = TAYLOR_TERMS;
        let e: Vec<f64> = (0..=k + 1).map(|j| bessel_e(s + j as f64, x)).collect::<Result<_>>()?;
        let q: f64 = -0.25;
        let h = y - x;
        // divided differences G[x,y], F[x,y] from G^{(j)}, F^{(j)}
        let (mut gdd, mut fdd) = (0.0, 0.0);
        let mut hp = 1.0; // h^{j−1}/j!
        for j in 1..=k {
            hp /= j as f64;
            let jf = j as f64;
            let g_j = q.powi(j as i32) * e[j];
            let f_j = 0.25 * x * q.powi(j as i32) * e[j + 1] + 0.25 * jf * q.powi(j as i32 - 1) * e[j];
            gdd += g_j * hp;
            fdd += f_j * hp;
            hp *= h;
        }
        let g0 = e[0];
        let f0 = 0.25 * x * e[1];
        return Ok(g0 * fdd - f0 * gdd);
    }
    let f = |v: f64| -> Result<f64> { Ok(0.25 * v * bessel_e(s + 1.0, v)?) };
    let (fx, fy) = (f(x)?, f(y)?);
    let (gx, gy) = (bessel_e(s, x)?, bessel_e(s, y)?);
    Ok((fx * gy - fy * gx) / (x - y))
}

fn bessel_kernel(s: f64, x: f64, y: f64) -> Result<f64> {
    if s < 0.0 && x.min(y) <= 0.0 {
        return Err(Error::Domain { what: "Bessel kernel with s < 0", value: x.min(y) });
    }
    if near_diagonal(x, y) {
        return Ok(bessel_density(s, x) * bessel_density(s, y) * bessel_reduced(s, x, y)?);
    }
    for v in [x, y] {
        if !(v >= 0.0) || v > BESSEL_X_MAX * BESSEL_X_MAX {
            return Err(Error::Domain { what: "Bessel kernel", value: v });
        }
    }
    let (rx, ry) = (x.sqrt(), y.sqrt());
    let num = rx * bessel_j(s + 1.0, rx)? * bessel_j(s, ry)? - ry * bessel_j(s + 1.0, ry)? * bessel_j(s, rx)?;
    Ok(num / (2.0 * (x - y)))
}

/// A_s = e^{b/2}/(4(s+1)Γ*²), Γ* = min_{m≥0} Γ(m+s+1).
///
/// From Π̃(x, z) = ¼∫₀¹ t^s E_s(tx)E_s(tz) dt and |E_s(w)| ≤ e^{|w|/4}/Γ*,
/// with |z| ≤ b + |z − y|.
fn bessel_envelope(s: f64, window: &Interval) -> GrowthEnvelope {
    let b = window.sup_abs();
    let ln_gamma_min = (0..64).map(|m| ln_gamma(m as f64 + s + 1.0)).fold(f64::INFINITY, f64::min);
    let ln_a = 0.5 * b - (4.0 * (s + 1.0)).ln() - 2.0 * ln_gamma_min;
    GrowthEnvelope { amplitude: ln_a.exp(), scale: 1.0, order: 1.0 }
}
