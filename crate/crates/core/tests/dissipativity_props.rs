mod common;

use antieig_core::dissipativity::{
    check_equivalence, check_two_vector, gamma_best, lagrange_stationary, stationarity_residual, threshold,
    two_vector_functional, DECISION_BAND, DEPENDENCE_TOL,
};
use antieig_core::linalg::{min_hermitian_part_eigenvalue, norm, RealMatrix};
use antieig_core::sphere::OptimizerOptions;
use proptest::prelude::*;

fn opts() -> OptimizerOptions {
    OptimizerOptions::default()
}

fn unit_real(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| common::gaussian(r)).collect();
    let s = norm(&v);
    v.into_iter().map(|x| x / s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn p2_is_hermitian_part_minimum(seed in any::<u64>(), n in 1usize..6) {
        let mut r = common::rng(seed);
        let a = common::random_matrix(&mut r, n);
        let rep = gamma_best(&a, 2.0, &opts()).unwrap();
        prop_assert!((rep.gamma_best - min_hermitian_part_eigenvalue(&a).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn oracle_sandwich(seed in any::<u64>(), n in 1usize..5, p in 1.05f64..12.0) {
        let mut r = common::rng(seed);
        let a = common::random_matrix(&mut r, n);
        let g = gamma_best(&a, p, &opts()).unwrap().gamma_best;
        let mut previous = f64::INFINITY;
        for samples in [1usize, 4, 16] {
            let found = check_two_vector(&a, p, samples, seed).unwrap().min_found;
            prop_assert!(found >= g - 1e-6, "samples {samples}: {found} < {g}");
            prop_assert!(found <= previous);
            previous = found;
        }
        prop_assert!((previous - g).abs() <= 1e-6, "{previous} vs {g}");
    }

    #[test]
    fn conjugate_exponents_share_threshold(p in 1.0001f64..1e4) {
        let q = p / (p - 1.0);
        prop_assert!((threshold(p) - threshold(q)).abs() <= 1e-15);
    }

    #[test]
    fn lagrange_trace_is_stationary_and_minimal(seed in any::<u64>(), n in 2usize..6, b in -0.99f64..10.0) {
        prop_assume!(b.abs() > 1e-3);
        let mut r = common::rng(seed);
        let m = RealMatrix::from_fn(n, n, |_, _| common::gaussian(&mut r));
        let w = unit_real(&mut r, n);
        let mw = m.mul_vec(&w);
        let q: f64 = w.iter().zip(&mw).map(|(a, b)| a * b).sum();
        prop_assume!(q > 1e-3);
        let perp: Vec<f64> = mw.iter().zip(&w).map(|(a, b)| a - q * b).collect();
        prop_assume!(norm(&perp) / norm(&mw) > 1e3 * DEPENDENCE_TOL);
        let t = lagrange_stationary(&m, &w, b).unwrap();
        prop_assert!((norm(&t.z_star) - 1.0).abs() <= 1e-10);
        prop_assert!(stationarity_residual(&m, &t, b) <= 1e-9 * (1.0 + m.frobenius_norm()));
        let reduced = (1.0 + b / 2.0) * t.q - (b.abs() / 2.0) * t.r;
        prop_assert!((t.f_at_star - reduced).abs() <= 1e-10 * (1.0 + t.r));
        for _ in 0..200 {
            let z = unit_real(&mut r, n);
            prop_assert!(t.f_at_star <= two_vector_functional(&m, &w, &z, b) + 1e-8);
        }
    }

    #[test]
    fn equivalence_outside_band(seed in any::<u64>(), n in 1usize..5, p in 1.05f64..12.0) {
        let mut r = common::rng(seed);
        let a = common::random_matrix(&mut r, n);
        let e = check_equivalence(&a, p, DECISION_BAND, &opts()).unwrap();
        prop_assert!(e.boundary_indeterminate || e.agree, "{e:?}");
    }
}
