mod common;

use antieig_core::linalg::{
    expm_skew, hermitian_eigen, inner, norm, real_embed_matrix, real_embed_vector, ComplexMatrix, RealMatrix, C64,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inner_is_conjugate_symmetric(seed in any::<u64>(), n in 1usize..7) {
        let mut r = common::rng(seed);
        let (u, v) = (common::random_vector(&mut r, n), common::random_vector(&mut r, n));
        let uv = inner(&u, &v).unwrap();
        let vu = inner(&v, &u).unwrap();
        prop_assert!((uv - vu.conj()).norm() <= 1e-15 * (1.0 + uv.norm()));
        let uu = inner(&u, &u).unwrap();
        prop_assert!(uu.im.abs() <= 1e-15 * uu.re);
    }

    #[test]
    fn embedding_is_isometric(seed in any::<u64>(), n in 1usize..7) {
        let mut r = common::rng(seed);
        let a = common::random_matrix(&mut r, n);
        let w = common::random_unit(&mut r, n);
        let ar = real_embed_matrix(&a).unwrap();
        let wr = real_embed_vector(&w);
        let aw = a.mul_vec(&w);
        let arwr = ar.mul_vec(&wr);
        let lhs = inner(&w, &aw).unwrap().re;
        let rhs: f64 = wr.iter().zip(&arwr).map(|(x, y)| x * y).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-13);
        prop_assert!((norm(&aw) - norm(&arwr)).abs() <= 1e-13);
    }

    #[test]
    fn hermitian_eigen_reconstructs(seed in any::<u64>(), n in 1usize..7) {
        let mut r = common::rng(seed);
        let m = common::random_matrix(&mut r, n);
        let a = m.add(&m.adjoint());
        let eig = hermitian_eigen(&a).unwrap();
        prop_assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let u = &eig.eigenvectors;
        let diag: Vec<C64> = eig.eigenvalues.iter().map(|&l| C64::new(l, 0.0)).collect();
        let back = u.matmul(&ComplexMatrix::from_diagonal(&diag)).matmul(&u.adjoint());
        prop_assert!(back.sub(&a).frobenius_norm() <= 1e-10 * a.frobenius_norm());
        let gram = u.adjoint().matmul(u);
        prop_assert!(gram.sub(&ComplexMatrix::identity(n)).max_abs() <= 1e-12);
    }

    #[test]
    fn expm_skew_group_law(seed in any::<u64>(), d in 2usize..5, t in -3.0f64..3.0, s in -3.0f64..3.0) {
        let mut r = common::rng(seed);
        let m = RealMatrix::from_fn(d, d, |_, _| common::gaussian(&mut r));
        let skew = m.sub(&m.transpose());
        let whole = expm_skew(&skew, t + s).unwrap();
        let parts = expm_skew(&skew, t).unwrap().matmul(&expm_skew(&skew, s).unwrap());
        prop_assert!(whole.sub(&parts).max_abs() <= 1e-11);
        let q = expm_skew(&skew, t).unwrap();
        prop_assert!(q.transpose().matmul(&q).sub(&RealMatrix::identity(d)).max_abs() <= 1e-12);
    }
}
