use alloc::vec::Vec;

use num_traits::Zero;

use super::{cabs, csqrt, ComplexMatrix, Matrix, Scalar, C64};
use crate::error::{numerical_err, precondition_err, Result};

const JACOBI_MAX_SWEEPS: usize = 100;
const QR_MAX_ITERS_PER_EIGENVALUE: usize = 100;

/// Spectrum of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigenSystem {
    /// Ascending: `λ₁ ≤ … ≤ λ_N`.
    pub eigenvalues: Vec<f64>,
    /// Unitary; column `j` is the eigenvector for `eigenvalues[j]`.
    pub eigenvectors: ComplexMatrix,
}

/// Cyclic complex Jacobi eigensolver for Hermitian matrices.
///
/// Each rotation first removes the phase of the pivot entry, then applies a
/// real symmetric Schur rotation, so the iteration is the classical real one
/// conjugated by a diagonal unitary.
pub fn hermitian_eigen(a: &ComplexMatrix) -> Result<HermitianEigenSystem> {
    let n = a.require_square("Hermitian matrix")?;
    let scale = a.frobenius_norm();
    if a.sub(&a.adjoint()).frobenius_norm() > super::STRUCTURE_TOL * scale {
        return Err(precondition_err!("matrix is not Hermitian"));
    }
    let mut m = a.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let target = f64::EPSILON * 1e-1 * scale;

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum();
        if libm::sqrt(off) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(numerical_err!("Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps"));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| m[(i, i)].re).collect();
    let eigenvectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(HermitianEigenSystem { eigenvalues, eigenvectors })
}

fn rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let r = apq.modulus();
    if r == 0.0 {
        return;
    }
    let n = m.rows();
    // D = diag(1, d) on (p, q) makes the pivot real: d = conj(apq)/|apq|
    let d = apq.conj() / r;
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta >= 0.0 {
        1.0 / (theta + libm::sqrt(theta * theta + 1.0))
    } else {
        -1.0 / (-theta + libm::sqrt(theta * theta + 1.0))
    };
    let c = 1.0 / libm::sqrt(t * t + 1.0);
    let s = t * c;
    // U = D·J with J the real rotation; columns p, q of U:
    //   U_pp = c, U_qp = -s d, U_pq = s, U_qq = c d
    let u_qp = -d * s;
    let u_qq = d * c;
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = mkp * c + mkq * u_qp;
        m[(k, q)] = mkp * s + mkq * u_qq;
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c + vkq * u_qp;
        v[(k, q)] = vkp * s + vkq * u_qq;
    }
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = mpk * c + mqk * u_qp.conj();
        m[(q, k)] = mpk * s + mqk * u_qq.conj();
    }
    m[(p, q)] = C64::zero();
    m[(q, p)] = C64::zero();
    m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
}

/// Complex Schur form `A = Q T Q*` with `Q` unitary and `T` upper triangular.
#[derive(Clone, Debug)]
pub struct SchurForm {
    pub q: ComplexMatrix,
    pub t: ComplexMatrix,
}

/// Householder reduction to Hessenberg form followed by single-shift QR
/// with Wilkinson shifts and deflation.
pub fn complex_schur(a: &ComplexMatrix) -> Result<SchurForm> {
    let n = a.require_square("matrix")?;
    let mut t = a.clone();
    let mut q = ComplexMatrix::identity(n);
    hessenberg(&mut t, &mut q);
    if n == 1 {
        return Ok(SchurForm { q, t });
    }

    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut hi = n - 1;
    let mut iters_since_deflation = 0;
    let mut total_iters = 0;
    while hi > 0 {
        // find the start of the unreduced block ending at hi
        let mut lo = hi;
        while lo > 0 {
            let sub = t[(lo, lo - 1)].modulus();
            let diag = t[(lo, lo)].modulus() + t[(lo - 1, lo - 1)].modulus();
            if sub <= f64::EPSILON * diag.max(scale * 1e-3) {
                t[(lo, lo - 1)] = C64::zero();
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iters_since_deflation = 0;
            continue;
        }
        iters_since_deflation += 1;
        total_iters += 1;
        if total_iters > QR_MAX_ITERS_PER_EIGENVALUE * n {
            return Err(numerical_err!("QR iteration did not converge"));
        }
        let shift = if iters_since_deflation % 11 == 10 {
            // exceptional shift to break cycles
            t[(hi, hi)] + C64::new(t[(hi, hi - 1)].modulus(), 0.0) * 0.75
        } else {
            wilkinson_shift(t[(hi - 1, hi - 1)], t[(hi - 1, hi)], t[(hi, hi - 1)], t[(hi, hi)])
        };
        qr_step(&mut t, &mut q, lo, hi, shift);
    }
    for i in 1..n {
        for j in 0..i {
            t[(i, j)] = C64::zero();
        }
    }
    Ok(SchurForm { q, t })
}

fn hessenberg(t: &mut ComplexMatrix, q: &mut ComplexMatrix) {
    let n = t.rows();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| t[(i, k)]).collect();
        let alpha = super::norm(&x);
        if alpha == 0.0 {
            continue;
        }
        let phase = if x[0].modulus() > 0.0 { x[0] / x[0].modulus() } else { C64::new(1.0, 0.0) };
        let mut v = x;
        v[0] += phase * alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // H = I - 2 v v* / (v* v), applied as T <- H T H, Q <- Q H
        let off = k + 1;
        for j in 0..n {
            let s: C64 = (0..v.len()).map(|i| v[i].conj() * t[(off + i, j)]).sum::<C64>() * (2.0 / vnorm2);
            for i in 0..v.len() {
                t[(off + i, j)] -= v[i] * s;
            }
        }
        for mat in [&mut *t, &mut *q] {
            for i in 0..n {
                let s: C64 = (0..v.len()).map(|l| mat[(i, off + l)] * v[l]).sum::<C64>() * (2.0 / vnorm2);
                for l in 0..v.len() {
                    mat[(i, off + l)] -= s * v[l].conj();
                }
            }
        }
    }
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let tr_half = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = csqrt(tr_half * tr_half - det);
    let l1 = tr_half + disc;
    let l2 = tr_half - disc;
    if cabs(l1 - d) < cabs(l2 - d) {
        l1
    } else {
        l2
    }
}

/// Givens `G = [[c, s], [-s̄, c]]` with `G (a, b)ᵀ = (ρ, 0)ᵀ`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let na = a.modulus();
    let nb = b.modulus();
    if nb == 0.0 {
        return (1.0, C64::zero());
    }
    if na == 0.0 {
        return (0.0, C64::new(1.0, 0.0));
    }
    let rho = libm::hypot(na, nb);
    (na / rho, (a / na) * b.conj() / rho)
}

fn qr_step(t: &mut ComplexMatrix, q: &mut ComplexMatrix, lo: usize, hi: usize, shift: C64) {
    let n = t.rows();
    for i in lo..=hi {
        t[(i, i)] -= shift;
    }
    let mut rotations = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let (c, s) = givens(t[(k, k)], t[(k + 1, k)]);
        for j in k..n {
            let x = t[(k, j)];
            let y = t[(k + 1, j)];
            t[(k, j)] = x * c + s * y;
            t[(k + 1, j)] = -s.conj() * x + y * c;
        }
        rotations.push((c, s));
    }
    for (idx, &(c, s)) in rotations.iter().enumerate() {
        let k = lo + idx;
        let rows = (k + 2).min(hi + 1);
        for i in 0..rows {
            let x = t[(i, k)];
            let y = t[(i, k + 1)];
            t[(i, k)] = x * c + y * s.conj();
            t[(i, k + 1)] = -x * s + y * c;
        }
        for i in 0..n {
            let x = q[(i, k)];
            let y = q[(i, k + 1)];
            q[(i, k)] = x * c + y * s.conj();
            q[(i, k + 1)] = -x * s + y * c;
        }
    }
    for i in lo..=hi {
        t[(i, i)] += shift;
    }
}

/// Eigenpairs of a diagonalizable matrix, `A V = V diag(λ)`.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<C64>,
    /// Unit-norm eigenvectors as columns.
    pub eigenvectors: ComplexMatrix,
}

/// Eigenvalues from the Schur form and eigenvectors by back-substitution
/// on `T`. Fails when the eigenvector matrix is numerically singular, which
/// is how a defective (non-diagonalizable) input shows up.
pub fn eigen_decompose(a: &ComplexMatrix) -> Result<EigenDecomposition> {
    let n = a.require_square("matrix")?;
    let SchurForm { q, t } = complex_schur(a)?;
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * scale;
    let mut vecs = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut y = alloc::vec![C64::zero(); n];
        y[k] = C64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let rhs: C64 = (j + 1..=k).map(|l| t[(j, l)] * y[l]).sum();
            let mut denom = t[(j, j)] - lambda;
            if denom.modulus() < small {
                denom = C64::new(small, 0.0);
            }
            y[j] = -rhs / denom;
        }
        let x = q.mul_vec(&y);
        let x = super::normalized(&x).ok_or_else(|| numerical_err!("zero eigenvector"))?;
        vecs.set_column(k, &x);
    }
    let eigenvalues: Vec<C64> = t.diagonal();
    // columns are unit vectors, so this is an absolute conditioning test
    if super::smallest_singular_value(&vecs)? < 1e-10 {
        return Err(numerical_err!("eigenvector matrix is numerically singular (defective input)"));
    }
    Ok(EigenDecomposition { eigenvalues, eigenvectors: vecs })
}
