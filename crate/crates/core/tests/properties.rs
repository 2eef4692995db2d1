use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use subpoisson::bounds::det_via_divided_differences;
use subpoisson::exact::{
    block_matrix, correlation_function, count_distribution, discretize, generating_function, pfaffian, Spectrum,
    EIGENVALUE_FLOOR,
};
use subpoisson::kernels::{Interval, KernelSpec};
use subpoisson::sampler::{additive_functional, PairFunctional};

fn scalar_kernels() -> Vec<(KernelSpec, Interval)> {
    vec![
        (KernelSpec::sine(), Interval::new(-0.5, 0.5).unwrap()),
        (KernelSpec::airy(), Interval::new(-1.0, 0.0).unwrap()),
        (KernelSpec::bessel(0.5).unwrap(), Interval::new(1.0, 2.0).unwrap()),
        (KernelSpec::bessel(2.0).unwrap(), Interval::new(1.0, 2.0).unwrap()),
    ]
}

fn skew(dim: usize, entries: &[f64]) -> Vec<f64> {
    let mut m = vec![0.0; dim * dim];
    let mut it = entries.iter();
    for i in 0..dim {
        for j in i + 1..dim {
            let v = *it.next().unwrap();
            m[i * dim + j] = v;
            m[j * dim + i] = -v;
        }
    }
    m
}

fn separated(mut p: Vec<f64>, gap: f64) -> Option<Vec<f64>> {
    p.sort_by(f64::total_cmp);
    p.windows(2).all(|w| w[1] - w[0] >= gap).then_some(p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scalar_kernels_symmetric_with_psd_minors(u in 0.0f64..1.0, v in 0.0f64..1.0) {
        for (k, w) in scalar_kernels() {
            let x = w.a + u * w.length();
            let y = w.a + v * w.length();
            let kxy = k.eval_scalar(x, y).unwrap();
            prop_assert!((kxy - k.eval_scalar(y, x).unwrap()).abs() <= 1e-12 * kxy.abs().max(1.0));
            let minor = k.eval_scalar(x, x).unwrap() * k.eval_scalar(y, y).unwrap() - kxy * kxy;
            prop_assert!(minor >= -1e-10, "{k}: minor {minor}");
        }
    }

    #[test]
    fn matrix_kernels_antisymmetric(x in -1.0f64..1.0, y in -1.0f64..1.0) {
        for id in ["sine4", "airy4"] {
            let k: KernelSpec = id.parse().unwrap();
            let a = k.eval_matrix(x, y).unwrap();
            let b = k.eval_matrix(y, x).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    prop_assert!((a[i][j] + b[j][i]).abs() <= 1e-10, "{id} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn divided_difference_determinant(raw in prop::collection::vec(0.0f64..1.0, 1..=6)) {
        let n = raw.len();
        for (k, w) in scalar_kernels().into_iter().take(2) {
            let Some(p) = separated(raw.iter().map(|u| w.a + u * w.length()).collect(), 0.05) else {
                return Ok(());
            };
            let direct = DMatrix::from_fn(n, n, |i, j| k.eval_scalar(p[i], p[j]).unwrap()).determinant();
            let dd = det_via_divided_differences(|x, y| k.eval_scalar(x, y), &p).unwrap();
            prop_assert!((dd - direct).abs() <= 1e-6 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn ginibre_modulus_identity(zr in -2.0f64..2.0, zi in -2.0f64..2.0, wr in -2.0f64..2.0, wi in -2.0f64..2.0) {
        let k = "ginibre".parse::<KernelSpec>().unwrap();
        let (z, w) = (Complex64::new(zr, zi), Complex64::new(wr, wi));
        let kzw = k.eval_complex(z, w).unwrap();
        let expected = (-(z - w).norm_sqr()).exp() / std::f64::consts::PI.powi(2);
        prop_assert!((kzw.norm_sqr() - expected).abs() <= 1e-14);
        prop_assert!((kzw - k.eval_complex(w, z).unwrap().conj()).norm() <= 1e-15);
    }

    #[test]
    fn pfaffian_squares_to_determinant(half in 1usize..=6, seed in prop::collection::vec(-1.0f64..1.0, 66)) {
        let dim = 2 * half;
        let m = skew(dim, &seed);
        let pf = pfaffian(&m, dim).unwrap();
        let det = DMatrix::from_row_slice(dim, dim, &m).determinant();
        prop_assert!((pf * pf - det).abs() <= 1e-10 * det.abs().max(1e-300));
    }

    #[test]
    fn pfaffian_permutation_sign(seed in prop::collection::vec(-1.0f64..1.0, 15), perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle()) {
        let dim = 6;
        let m = skew(dim, &seed);
        let mut pm = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                pm[i * dim + j] = m[perm[i] * dim + perm[j]];
            }
        }
        let mut inversions = 0;
        for i in 0..dim {
            for j in i + 1..dim {
                inversions += usize::from(perm[i] > perm[j]);
            }
        }
        let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
        let (a, b) = (pfaffian(&pm, dim).unwrap(), sign * pfaffian(&m, dim).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn pmf_moments(l in prop::collection::vec(0.0f64..=1.0, 0..40)) {
        let s = Spectrum::from_raw(l, EIGENVALUE_FLOOR).unwrap();
        let c = count_distribution(&s);
        prop_assert!(c.pmf.iter().all(|&p| p >= 0.0));
        prop_assert!((c.pmf.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        prop_assert!((c.mean() - s.sum()).abs() <= 1e-8);
        prop_assert!((c.variance() - s.variance()).abs() <= 1e-8);
    }

    #[test]
    fn projection_correlations_nonnegative(p in prop::collection::vec(-2.0f64..2.0, 1..=6)) {
        for k in [KernelSpec::sine(), KernelSpec::airy()] {
            prop_assert!(correlation_function(&k, &p).unwrap() >= -1e-10);
        }
    }

    #[test]
    fn poisson_exponent_super_multiplicative(c in 0.01f64..50.0, l1 in 0.0f64..3.0, l2 in 0.0f64..3.0) {
        let log_phi = |l: f64| c * l.exp_m1();
        prop_assert!(log_phi(l1) + log_phi(l2) <= log_phi(l1 + l2) + 1e-12 * log_phi(l1 + l2));
    }

    #[test]
    fn additive_functional_permutation_invariant(
        config in prop::collection::vec(-3.0f64..3.0, 0..8).prop_shuffle(),
        rot in 0usize..8,
    ) {
        let q = PairFunctional::new("skewed", Interval::new(-3.0, 3.0).unwrap(), Interval::new(-3.0, 3.0).unwrap(), |x, y| {
            (x - 2.0 * y).sin() + x * y
        }).unwrap();
        let mut other = config.clone();
        if !other.is_empty() {
            let r = rot % other.len();
            other.rotate_left(r);
        }
        other.reverse();
        let (a, b) = (additive_functional(&config, &q), additive_functional(&other, &q));
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

#[test]
fn pfaffian_block_matrix_is_skew() {
    let k: KernelSpec = "airy4".parse().unwrap();
    let p = [-0.9, -0.4, 0.3, 1.1];
    let m = block_matrix(&k, &p).unwrap();
    let dim = 2 * p.len();
    for i in 0..dim {
        for j in 0..dim {
            assert!((m[i * dim + j] + m[j * dim + i]).abs() <= 1e-10);
        }
    }
}

#[test]
fn generating_function_is_fredholm_determinant() {
    let d = discretize(&KernelSpec::sine(), &Interval::new(0.0, 1.5).unwrap(), 48).unwrap();
    let s = subpoisson::exact::spectrum(&d).unwrap();
    let n = d.order();
    for z in [-1.0, 0.0, 0.3, 2.5] {
        let m = DMatrix::from_fn(n, n, |i, j| f64::from(u8::from(i == j)) + (z - 1.0) * d.matrix[i * n + j]);
        let g = generating_function(&s, z);
        assert!((g - m.determinant()).abs() <= 1e-8, "z = {z}");
    }
}

#[test]
fn spectrum_refinement_is_stable() {
    let cases = [
        (KernelSpec::sine(), Interval::new(0.0, 1.0).unwrap()),
        (KernelSpec::bessel(0.5).unwrap(), Interval::new(1.0, 2.0).unwrap()),
        (KernelSpec::bessel(2.0).unwrap(), Interval::new(1.0, 2.0).unwrap()),
        (KernelSpec::airy(), Interval::new(-1.0, 0.0).unwrap()),
    ];
    for (k, w) in cases {
        let a = subpoisson::exact::spectrum(&discretize(&k, &w, 40).unwrap()).unwrap();
        let b = subpoisson::exact::spectrum(&discretize(&k, &w, 80).unwrap()).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).abs() <= 1e-8, "{k}: {x} vs {y}");
        }
        assert!(a.sum() <= d_trace(&k, &w, 40) + 1e-8);
    }
}

fn d_trace(k: &KernelSpec, w: &Interval, order: usize) -> f64 {
    discretize(k, w, order).unwrap().trace()
}
