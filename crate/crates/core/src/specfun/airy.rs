use std::f64::consts::PI;

use super::bessel::{bessel_jy, bessel_k_pair};
use super::quadrature::adaptive_gauss_kronrod;
use crate::error::{Error, Result};

pub const AIRY_MIN: f64 = -20.0;
pub const AIRY_MAX: f64 = 15.0;

/// Ai(0) and −Ai′(0).
const C1: f64 = 0.355_028_053_887_817_24;
const C2: f64 = 0.258_819_403_792_806_8;

const SERIES_LO: f64 = -2.5;
const SERIES_HI: f64 = 2.5;
// |Ai| < 1e-17 beyond this point, so the tail integral stops here.
const TAIL_CUTOFF: f64 = AIRY_MAX;
const TAIL_TOL: f64 = 1e-13;

/// The two Maclaurin solutions f, g of y″ = xy with f(0)=1, g′(0)=1, and derivatives.
fn maclaurin(x: f64) -> (f64, f64, f64, f64) {
    let x3 = x * x * x;
    let (mut f, mut tf) = (1.0, 1.0);
    let (mut fp, mut tfp) = (0.0, 0.5 * x * x);
    let (mut g, mut tg) = (x, x);
    let (mut gp, mut tgp) = (1.0, 1.0);
    for k in 0..2000 {
        let kf = k as f64;
        tf *= x3 / ((3.0 * kf + 2.0) * (3.0 * kf + 3.0));
        tg *= x3 / ((3.0 * kf + 3.0) * (3.0 * kf + 4.0));
        tgp *= x3 / ((3.0 * kf + 1.0) * (3.0 * kf + 3.0));
        f += tf;
        g += tg;
        gp += tgp;
        fp += tfp;
        tfp *= x3 / ((3.0 * kf + 3.0) * (3.0 * kf + 5.0));
        let scale = f.abs() + g.abs() + fp.abs() + gp.abs();
        if tf.abs() + tg.abs() + tfp.abs() + tgp.abs() < 1e-18 * scale && k > 2 {
            break;
        }
    }
    (f, fp, g, gp)
}

/// (Ai(x), Ai′(x)) on the working range [−20, 15].
///
/// Maclaurin series on [−2.5, 2.5]; K_{1/3}, K_{2/3} above; J and Y of
/// orders 1/3, 2/3 below.
pub fn airy(x: f64) -> Result<(f64, f64)> {
    if !(AIRY_MIN..=AIRY_MAX).contains(&x) {
        return Err(Error::Domain { what: "airy", value: x });
    }
    if (SERIES_LO..=SERIES_HI).contains(&x) {
        Ok(airy_series(x))
    } else if x > SERIES_HI {
        airy_decaying(x)
    } else {
        airy_oscillatory(x)
    }
}

fn airy_series(x: f64) -> (f64, f64) {
    let (f, fp, g, gp) = maclaurin(x);
    (C1 * f - C2 * g, C1 * fp - C2 * gp)
}

fn airy_decaying(x: f64) -> Result<(f64, f64)> {
    let zeta = 2.0 / 3.0 * x * x.sqrt();
    let (k13, k23) = bessel_k_pair(-1.0 / 3.0, zeta)?;
    let ai = (x / 3.0).sqrt() * k13 / PI;
    let aip = -x / (PI * 3f64.sqrt()) * k23;
    Ok((ai, aip))
}

fn airy_oscillatory(x: f64) -> Result<(f64, f64)> {
    let t = -x;
    let zeta = 2.0 / 3.0 * t * t.sqrt();
    let s3 = 3f64.sqrt();
    let (j13, y13, _, _) = bessel_jy(1.0 / 3.0, zeta)?;
    let (j23, y23, _, _) = bessel_jy(2.0 / 3.0, zeta)?;
    let ai = 0.5 * t.sqrt() * (j13 - y13 / s3);
    let aip = 0.5 * t * (j23 + y23 / s3);
    Ok((ai, aip))
}

pub fn airy_ai(x: f64) -> Result<f64> {
    Ok(airy(x)?.0)
}

pub fn airy_ai_prime(x: f64) -> Result<f64> {
    Ok(airy(x)?.1)
}

/// Positive majorant of the Airy pair on the disk |z| ≤ r.
///
/// Returns (β(r), β₁(r)) with β = c₁f + c₂g (= Bi/√3) and β₁ its derivative;
/// since f, g have nonnegative Taylor coefficients, |Ai(z)| ≤ β(|z|) and
/// |Ai′(z)| ≤ β₁(|z|).
pub fn airy_bi_majorant(r: f64) -> (f64, f64) {
    let r = r.abs();
    let (f, fp, g, gp) = maclaurin(r);
    (C1 * f + C2 * g, C1 * fp + C2 * gp)
}

/// ∫ₓ^∞ Ai(u) du for x ≥ −10.
pub fn airy_tail_integral(x: f64) -> Result<f64> {
    airy_tail_integral_tol(x, TAIL_TOL)
}

pub(crate) fn airy_tail_integral_tol(x: f64, tol: f64) -> Result<f64> {
    if !(x >= -10.0) || x > AIRY_MAX {
        return Err(Error::Domain { what: "airy_tail_integral", value: x });
    }
    let ai = |u: f64| airy(u).map(|v| v.0).unwrap_or(f64::NAN);
    if x >= 0.0 {
        // keep relative accuracy where the tail itself is tiny
        let tol = tol.min(1e-6 * airy(x)?.0);
        // leading asymptotic term of ∫_X^∞ Ai beyond the cutoff
        let beyond = airy(TAIL_CUTOFF)?.0 / TAIL_CUTOFF.sqrt();
        Ok(adaptive_gauss_kronrod(&ai, x, TAIL_CUTOFF, tol)? + beyond)
    } else {
        Ok(1.0 / 3.0 + adaptive_gauss_kronrod(&ai, x, 0.0, tol)?)
    }
}
