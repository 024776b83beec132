#![allow(dead_code)]

use antieig_core::linalg::{ComplexMatrix, C64};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    lo + (hi - lo) * u
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(gaussian(rng), gaussian(rng))).collect()
}

pub fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    let v = random_vector(rng, n);
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| C64::new(gaussian(rng), gaussian(rng)))
}

pub fn random_real_matrix(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| C64::new(gaussian(rng), 0.0))
}

/// Modified Gram–Schmidt on a Gaussian matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = (0..n).map(|_| random_vector(rng, n)).collect();
    for j in 0..n {
        for k in 0..j {
            let proj: C64 = cols[k].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
            let ck = cols[k].clone();
            for (x, y) in cols[j].iter_mut().zip(&ck) {
                *x -= proj * y;
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols[j].iter_mut().for_each(|z| *z /= norm);
    }
    ComplexMatrix::from_fn(n, n, |i, j| cols[j][i])
}

pub fn conjugate_diagonal(u: &ComplexMatrix, diag: &[C64]) -> ComplexMatrix {
    u.matmul(&ComplexMatrix::from_diagonal(diag)).matmul(&u.adjoint())
}

pub fn random_hermitian_pd(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let u = random_unitary(rng, n);
    let diag: Vec<C64> = (0..n).map(|_| C64::new(uniform(rng, -2.0, 2.0).exp(), 0.0)).collect();
    conjugate_diagonal(&u, &diag)
}

pub fn random_normal_accretive(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let u = random_unitary(rng, n);
    let diag: Vec<C64> = (0..n).map(|_| C64::new(uniform(rng, 0.05, 3.0), uniform(rng, -3.0, 3.0))).collect();
    conjugate_diagonal(&u, &diag)
}
