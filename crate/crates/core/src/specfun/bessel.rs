use std::f64::consts::PI;

use num_complex::Complex64;

use super::gamma::gamma;
use crate::error::{Error, Result};

/// Largest argument supported by [`bessel_j`].
pub const BESSEL_X_MAX: f64 = 200.0;

const SERIES_X_MAX: f64 = 2.0;
const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const MAXIT: usize = 100_000;
// Complex Lentz guard; its square must stay a normal double.
const CF_TINY: f64 = 1e-100;

/// Ascending series for J_ν(x)/(x/2)^ν.
fn scaled_series(nu: f64, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0 / gamma(nu + 1.0);
    let mut sum = term;
    let mut m = 1.0;
    while m < 500.0 {
        term *= q / (m * (m + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        m += 1.0;
    }
    sum
}

/// Steed's method: J_ν, Y_ν and their derivatives for ν ≥ 0, x ≥ 2.
///
/// CF1 gives J′/J, the complex CF2 gives (J′+iY′)/(J+iY); the Wronskian fixes
/// the scale.
pub fn bessel_jy(nu: f64, x: f64) -> Result<(f64, f64, f64, f64)> {
    if !(nu >= 0.0) || !(x >= SERIES_X_MAX) || !x.is_finite() {
        return Err(Error::Domain { what: "bessel_jy", value: x });
    }
    let nl = (nu - x + 1.5).floor().max(0.0) as usize;
    let xmu = nu - nl as f64;
    let xmu2 = xmu * xmu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let w = xi2 / PI;

    let mut isign = 1.0;
    let mut h = (nu * xi).max(FPMIN);
    let mut b = xi2 * nu;
    let mut d = 0.0;
    let mut c = h;
    let mut converged = false;
    for _ in 0..MAXIT {
        b += xi2;
        d = b - d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b - 1.0 / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if d < 0.0 {
            isign = -isign;
        }
        if (del - 1.0).abs() < EPS {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence("Bessel CF1"));
    }

    let mut rjl = isign * FPMIN;
    let mut rjpl = h * rjl;
    let rjl1 = rjl;
    let rjp1 = rjpl;
    let mut fact = nu * xi;
    for _ in 0..nl {
        let rjtemp = fact * rjl + rjpl;
        fact -= xi;
        rjpl = fact * rjtemp - rjl;
        rjl = rjtemp;
    }
    if rjl == 0.0 {
        rjl = EPS;
    }
    let f = rjpl / rjl;

    // CF2 by modified Lentz.
    let one = Complex64::new(1.0, 0.0);
    let tiny = Complex64::new(CF_TINY, 0.0);
    let mut cf = tiny;
    let mut cc = cf;
    let mut dd = Complex64::new(0.0, 0.0);
    converged = false;
    for k in 1..MAXIT {
        let kf = k as f64;
        let a = (kf - 0.5) * (kf - 0.5) - xmu2;
        let bk = Complex64::new(2.0 * x, 2.0 * kf);
        dd = bk + dd * a;
        if dd.norm() < CF_TINY {
            dd = tiny;
        }
        dd = one / dd;
        cc = bk + cc.inv() * a;
        if cc.norm() < CF_TINY {
            cc = tiny;
        }
        let del = cc * dd;
        cf *= del;
        if (del - one).norm() < EPS {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence("Bessel CF2"));
    }
    let pq = Complex64::new(-0.5 * xi, 1.0) + Complex64::new(0.0, xi) * cf;
    let (p, q) = (pq.re, pq.im);

    let gam = (p - f) / q;
    let rjmu = (w / ((p - f) * gam + q)).sqrt().copysign(rjl);
    let mut rymu = rjmu * gam;
    let rymup = rymu * (p + q / gam);
    let mut ry1 = xmu * xi * rymu - rymup;
    let scale = rjmu / rjl;
    let rj = rjl1 * scale;
    let rjp = rjp1 * scale;
    for i in 1..=nl {
        let rytemp = (xmu + i as f64) * xi2 * ry1 - rymu;
        rymu = ry1;
        ry1 = rytemp;
    }
    let ry = rymu;
    let ryp = nu * xi * rymu - ry1;
    Ok((rj, ry, rjp, ryp))
}

/// J_ν(x) for ν > −1 and 0 ≤ x ≤ 200.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    if !(nu > -1.0) || !(0.0..=BESSEL_X_MAX).contains(&x) {
        return Err(Error::Domain { what: "bessel_j", value: if nu > -1.0 { x } else { nu } });
    }
    if x == 0.0 {
        return if nu == 0.0 {
            Ok(1.0)
        } else if nu > 0.0 {
            Ok(0.0)
        } else {
            Err(Error::Domain { what: "bessel_j at 0 with negative order", value: nu })
        };
    }
    if x < SERIES_X_MAX {
        return Ok(scaled_series(nu, x) * (0.5 * x).powf(nu));
    }
    if nu >= 0.0 {
        return Ok(bessel_jy(nu, x)?.0);
    }
    // ν ∈ (−1, 0): one step down from μ = ν + 1.
    let mu = nu + 1.0;
    let (j, _, jp, _) = bessel_jy(mu, x)?;
    let j_up = mu / x * j - jp;
    Ok(2.0 * mu / x * j - j_up)
}

/// J_ν(x)/(x/2)^ν, an entire function of x² (equal to 1/Γ(ν+1) at 0).
pub fn bessel_j_scaled(nu: f64, x: f64) -> Result<f64> {
    if !(nu > -1.0) || !(0.0..=BESSEL_X_MAX).contains(&x) {
        return Err(Error::Domain { what: "bessel_j_scaled", value: x });
    }
    if x < SERIES_X_MAX {
        Ok(scaled_series(nu, x))
    } else {
        Ok(bessel_j(nu, x)? / (0.5 * x).powf(nu))
    }
}

/// (K_μ(x), K_{μ+1}(x)) for |μ| ≤ 1/2 and x ≥ 2 via Temme's continued fraction.
pub fn bessel_k_pair(mu: f64, x: f64) -> Result<(f64, f64)> {
    if mu.abs() > 0.5 || !(x >= SERIES_X_MAX) || !x.is_finite() {
        return Err(Error::Domain { what: "bessel_k_pair", value: x });
    }
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu * mu;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    let mut converged = false;
    for i in 2..MAXIT {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence("Bessel K continued fraction"));
    }
    h *= a1;
    let k_mu = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k_mu1 = k_mu * (mu + x + 0.5 - h) / x;
    Ok((k_mu, k_mu1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn reference_values() {
        // 30-digit values from an independent arbitrary-precision library.
        let cases = [
            (0.0, 1.0, 0.765_197_686_557_966_6),
            (0.0, 2.0, 0.223_890_779_141_235_67),
            (0.0, 5.0, -0.177_596_771_314_338_3),
            (0.0, 10.0, -0.245_935_764_451_348_34),
            (1.0, 10.0, 0.043_472_746_168_861_44),
            (0.5, 3.0, 0.065_008_182_877_375_78),
            (2.5, 7.3, -0.300_849_431_587_499_8),
            (0.3, 0.7, 0.738_591_820_620_218_9),
            (0.3, 2.5, 0.175_641_082_743_773_66),
            (-0.5, 3.0, -0.456_048_820_794_633_2),
            (-0.7, 4.2, -0.066_209_816_449_384_84),
            (-0.7, 1.1, 0.052_807_325_317_388_93),
            (5.0, 3.0, 0.043_028_434_877_047_58),
            (10.0, 30.0, -0.129_876_893_998_588_77),
            (0.0, 150.0, -0.000_774_090_375_394_291_2),
            (3.2, 199.0, 0.000_294_477_523_235_202_7),
        ];
        for (nu, x, v) in cases {
            let got = bessel_j(nu, x).unwrap();
            assert!((got - v).abs() < 1e-13, "J_{nu}({x}) = {got}, want {v}");
        }
    }

    #[test]
    fn y_and_k_reference() {
        let (_, y0, _, _) = bessel_jy(0.0, 10.0).unwrap();
        assert!(rel(y0, 0.055_671_167_283_599_39) < 1e-12);
        let (_, y13, _, _) = bessel_jy(1.0 / 3.0, 12.0).unwrap();
        assert!(rel(y13, -0.219_274_358_220_647_5) < 1e-12);
        let (k13, _) = bessel_k_pair(-1.0 / 3.0, 2.0).unwrap();
        assert!(rel(k13, 0.116_544_961_296_165_25) < 1e-13);
        let (_, k23) = bessel_k_pair(-1.0 / 3.0, 5.0).unwrap();
        assert!(rel(k23, 0.003_844_424_634_496_821) < 1e-13);
    }

    #[test]
    fn half_integer_closed_forms() {
        for i in 0..200 {
            let x = 0.05 + i as f64 * 0.99;
            let pre = (2.0 / (PI * x)).sqrt();
            let j_half = pre * x.sin();
            assert!((bessel_j(0.5, x).unwrap() - j_half).abs() < 1e-10 * j_half.abs().max(1e-3));
            let j_mhalf = pre * x.cos();
            assert!((bessel_j(-0.5, x).unwrap() - j_mhalf).abs() < 1e-12);
            let j_3half = pre * (x.sin() / x - x.cos());
            assert!((bessel_j(1.5, x).unwrap() - j_3half).abs() < 1e-12);
        }
    }

    #[test]
    fn three_term_recurrence() {
        for &nu in &[1.0, 2.0, 3.0] {
            for i in 0..=190 {
                let x = 1.0 + i as f64 * 0.1;
                let lhs = bessel_j(nu - 1.0, x).unwrap() + bessel_j(nu + 1.0, x).unwrap();
                let rhs = 2.0 * nu / x * bessel_j(nu, x).unwrap();
                assert!((lhs - rhs).abs() < 1e-8, "nu={nu} x={x}");
            }
        }
    }

    #[test]
    fn branches_agree_at_switch() {
        for &nu in &[-0.7, -0.2, 0.0, 0.4, 1.0, 2.7] {
            let below = scaled_series(nu, SERIES_X_MAX) * (0.5 * SERIES_X_MAX).powf(nu);
            let above = bessel_j(nu, SERIES_X_MAX).unwrap();
            assert!((below - above).abs() < 1e-14, "nu={nu}");
        }
    }

    #[test]
    fn scaled_is_finite_at_origin() {
        assert!((bessel_j_scaled(-0.5, 0.0).unwrap() - 1.0 / PI.sqrt()).abs() < 1e-14);
        assert_eq!(bessel_j_scaled(0.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_j(-1.0, 1.0).is_err());
        assert!(bessel_j(0.0, 201.0).is_err());
        assert!(bessel_j(-0.5, 0.0).is_err());
        assert!(bessel_j(0.0, -1.0).is_err());
    }
}
