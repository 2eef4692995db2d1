use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

const SINC_SERIES_CUTOFF: f64 = 1e-4;
// x cos x − sin x cancels like x³; the closed form loses digits below this.
const DERIVATIVE_SERIES_CUTOFF: f64 = 1.0;

/// S(t) = sin(πt)/(πt), S(0) = 1.
pub fn sinc(t: f64) -> f64 {
    if t.abs() < SINC_SERIES_CUTOFF {
        let x2 = (PI * t) * (PI * t);
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0))
    } else {
        let x = PI * t;
        x.sin() / x
    }
}

/// DS(t) = S′(t) = (πt cos πt − sin πt)/(πt²).
pub fn sinc_derivative(t: f64) -> f64 {
    let x = PI * t;
    if x.abs() < DERIVATIVE_SERIES_CUTOFF {
        // π Σ_{k≥1} (−1)^k 2k x^{2k−1}/(2k+1)!
        let x2 = x * x;
        let mut term = x; // x^{2k-1}/(2k+1)! · 2k at k=1 is x·2/6
        let mut fact = 6.0;
        let mut sum = 0.0;
        let mut sign = -1.0;
        for k in 1..=12 {
            let kf = k as f64;
            sum += sign * 2.0 * kf * term / fact;
            term *= x2;
            fact *= (2.0 * kf + 2.0) * (2.0 * kf + 3.0);
            sign = -sign;
        }
        PI * sum
    } else {
        (x * x.cos() - x.sin()) / (PI * t * t)
    }
}

/// Si(x) = ∫₀ˣ sin(u)/u du.
pub fn sine_integral(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= 4.0 {
        let x2 = ax * ax;
        let mut term = ax; // x^{2k+1}/(2k+1)!
        let mut sum = 0.0;
        let mut k = 0usize;
        loop {
            let contrib = term / (2 * k + 1) as f64;
            sum += if k % 2 == 0 { contrib } else { -contrib };
            if contrib <= 1e-18 * sum.abs() {
                break;
            }
            k += 1;
            term *= x2 / ((2 * k) as f64 * (2 * k + 1) as f64);
        }
        sum
    } else {
        // E₁(ix) by Lentz on its continued fraction; Si = π/2 + Im(e^{−ix}·CF).
        let tiny = 1e-300;
        let mut b = Complex64::new(1.0, ax);
        let mut c = Complex64::new(1.0 / tiny, 0.0);
        let mut d = Complex64::new(1.0, 0.0) / b;
        let mut h = d;
        for i in 2..100_000usize {
            let a = -(((i - 1) * (i - 1)) as f64);
            b += 2.0;
            d = Complex64::new(1.0, 0.0) / (d * a + b);
            c = b + c.inv() * a;
            let del = c * d;
            h *= del;
            if (del.re - 1.0).abs() + del.im.abs() < 1e-16 {
                break;
            }
        }
        h *= Complex64::new(ax.cos(), -ax.sin());
        FRAC_PI_2 + h.im
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// IS(t) = ∫₀ᵗ S(u) du = Si(πt)/π.
pub fn sinc_antiderivative(t: f64) -> f64 {
    sine_integral(PI * t) / PI
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_examples() {
        assert_eq!(sinc(0.0), 1.0);
        assert!(sinc(1.0).abs() < 1e-15);
        assert!((sinc(0.5) - 2.0 / PI).abs() < 1e-15);
        assert!((sinc_derivative(0.5) + 4.0 / PI).abs() < 1e-14);
        assert_eq!(sinc_derivative(0.0), 0.0);
        assert_eq!(sinc_antiderivative(0.0), 0.0);
        for t in [0.3, 1.7, 9.0] {
            assert_eq!(sinc_antiderivative(t), -sinc_antiderivative(-t));
        }
        assert!((sinc_antiderivative(1.0) - 0.589_489_872_236_083_6).abs() < 1e-12);
    }

    #[test]
    fn series_and_closed_forms_agree_at_cutoff() {
        let t = SINC_SERIES_CUTOFF;
        let x = PI * t;
        assert!((sinc(0.999_999_999 * t) - x.sin() / x).abs() < 1e-15);
        let t = DERIVATIVE_SERIES_CUTOFF / PI;
        let closed = (PI * t * (PI * t).cos() - (PI * t).sin()) / (PI * t * t);
        assert!((sinc_derivative(t * (1.0 - 1e-15)) - closed).abs() < 1e-14);
    }

    #[test]
    fn sine_integral_reference() {
        // 30-digit values from an independent arbitrary-precision library.
        let cases = [
            (0.3, 0.298_504_043_807_043_15),
            (1.0, 0.946_083_070_367_183),
            (3.0, 1.848_652_527_999_468_3),
            (4.0, 1.758_203_138_949_053),
            (5.0, 1.549_931_244_944_674_1),
            (10.0, 1.658_347_594_218_874),
            (50.0, 1.551_617_072_485_935_9),
            (157.0, 1.564_450_826_188_246_7),
        ];
        for (x, v) in cases {
            assert!((sine_integral(x) - v).abs() < 1e-14, "Si({x})");
            assert!((sine_integral(-x) + v).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_and_integral_match_finite_differences() {
        let h = 1e-5;
        for i in 0..50 {
            let t = -3.0 + 6.0 * i as f64 / 49.0 + 0.013;
            let fd = (sinc(t + h) - sinc(t - h)) / (2.0 * h);
            assert!((fd - sinc_derivative(t)).abs() < 1e-6, "t={t}");
            let fi = (sinc_antiderivative(t + h) - sinc_antiderivative(t - h)) / (2.0 * h);
            assert!((fi - sinc(t)).abs() < 1e-6, "t={t}");
        }
    }
}
