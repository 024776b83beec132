mod common;

use antieig_core::antieigen::{
    antieigen_quotient, mu1_brute, mu1_brute_real, mu1_hermitian_pd, mu1_normal_accretive,
};
use antieig_core::linalg::{real_embed_matrix, C64};
use antieig_core::sphere::OptimizerOptions;
use proptest::prelude::*;

fn opts() -> OptimizerOptions {
    OptimizerOptions::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn positive_scale_invariance(seed in any::<u64>(), n in 1usize..5, scale in 0.01f64..100.0) {
        let mut r = common::rng(seed);
        let a = common::random_matrix(&mut r, n);
        let base = mu1_brute(&a, &opts()).unwrap().mu1;
        let scaled = mu1_brute(&a.scale(C64::new(scale, 0.0)), &opts()).unwrap().mu1;
        prop_assert!((base - scaled).abs() <= 1e-8, "{base} vs {scaled}");
    }

    #[test]
    fn unitary_similarity_invariance(seed in any::<u64>(), n in 1usize..5) {
        let mut r = common::rng(seed);
        let a = common::random_matrix(&mut r, n);
        let u = common::random_unitary(&mut r, n);
        let b = u.matmul(&a).matmul(&u.adjoint());
        let (x, y) = (mu1_brute(&a, &opts()).unwrap().mu1, mu1_brute(&b, &opts()).unwrap().mu1);
        prop_assert!((x - y).abs() <= 1e-7, "{x} vs {y}");
    }

    #[test]
    fn real_embedding_invariance(seed in any::<u64>(), n in 1usize..5) {
        let mut r = common::rng(seed);
        let a = common::random_matrix(&mut r, n);
        let complex = mu1_brute(&a, &opts()).unwrap().mu1;
        let (real, _) = mu1_brute_real(&real_embed_matrix(&a).unwrap(), &opts()).unwrap();
        prop_assert!((complex - real).abs() <= 1e-7, "{complex} vs {real}");
    }

    #[test]
    fn range_and_witness(seed in any::<u64>(), n in 1usize..6) {
        let mut r = common::rng(seed);
        let a = common::random_matrix(&mut r, n);
        let res = mu1_brute(&a, &opts()).unwrap();
        prop_assert!((-1.0..=1.0).contains(&res.mu1));
        let q = antieigen_quotient(&a, &res.antieigenvector).unwrap();
        prop_assert!((q - res.mu1).abs() <= 1e-9);
        prop_assert!((res.angle_rad - res.mu1.acos()).abs() <= 1e-15);
    }

    #[test]
    fn hermitian_closed_form_matches_optimizer(seed in any::<u64>(), n in 1usize..6) {
        let mut r = common::rng(seed);
        let a = common::random_hermitian_pd(&mut r, n);
        let closed = mu1_hermitian_pd(&a).unwrap();
        let brute = mu1_brute(&a, &opts()).unwrap();
        prop_assert!((closed.mu1 - brute.mu1).abs() <= 1e-6);
        let q = antieigen_quotient(&a, &closed.antieigenvector).unwrap();
        prop_assert!((q - closed.mu1).abs() <= 1e-9);
    }

    #[test]
    fn normal_closed_form_matches_optimizer(seed in any::<u64>(), n in 1usize..6) {
        let mut r = common::rng(seed);
        let a = common::random_normal_accretive(&mut r, n);
        let (closed, _) = mu1_normal_accretive(&a).unwrap();
        let brute = mu1_brute(&a, &opts()).unwrap();
        prop_assert!((closed.mu1 - brute.mu1).abs() <= 1e-6, "{} vs {}", closed.mu1, brute.mu1);
        let q = antieigen_quotient(&a, &closed.antieigenvector).unwrap();
        prop_assert!((q - closed.mu1).abs() <= 1e-9);
    }
}

#[test]
fn identity_attains_one() {
    for n in 1..5 {
        let res = mu1_brute(&antieig_core::linalg::ComplexMatrix::identity(n), &opts()).unwrap();
        assert!((res.mu1 - 1.0).abs() < 1e-12);
    }
}
