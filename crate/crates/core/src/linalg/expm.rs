use super::{Lu, Matrix, RealMatrix, Scalar};
use crate::error::{input_err, precondition_err, Result};

/// Diagonal Padé degree.
const PADE_DEGREE: usize = 8;
/// Scaled one-norm bound; for [8/8] at 0.5 the truncation error is far
/// below double precision.
const SCALED_NORM_BOUND: f64 = 0.5;

fn pade_coefficients() -> [f64; PADE_DEGREE + 1] {
    // c_k = (2m-k)! m! / ((2m)! k! (m-k)!), via c_{k+1} = c_k (m-k) / ((2m-k) (k+1))
    let m = PADE_DEGREE as f64;
    let mut c = [0.0; PADE_DEGREE + 1];
    c[0] = 1.0;
    for k in 0..PADE_DEGREE {
        let kf = k as f64;
        c[k + 1] = c[k] * (m - kf) / ((2.0 * m - kf) * (kf + 1.0));
    }
    c
}

/// Matrix exponential by scaling and squaring with a fixed [8/8] Padé
/// approximant.
pub fn expm<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let n = a.require_square("matrix exponent")?;
    let norm = a.one_norm();
    let squarings = if norm > SCALED_NORM_BOUND {
        libm::ceil(libm::log2(norm / SCALED_NORM_BOUND)) as i32
    } else {
        0
    };
    if squarings > 1000 {
        return Err(input_err!("matrix exponent norm {norm} too large"));
    }
    let x = a.scale(T::from_real(libm::ldexp(1.0, -squarings)));
    let coeffs = pade_coefficients();

    let mut num = Matrix::identity(n);
    let mut den = Matrix::identity(n);
    let mut power = Matrix::identity(n);
    for (k, &ck) in coeffs.iter().enumerate().skip(1) {
        power = power.matmul(&x);
        let term = power.scale(T::from_real(ck));
        num = num.add(&term);
        den = if k % 2 == 0 { den.add(&term) } else { den.sub(&term) };
    }
    let mut result = Lu::factor(&den)?.solve_matrix(&num);
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    Ok(result)
}

/// `e^{tS}` for a skew-symmetric `S` (`‖S + Sᵀ‖_F ≤ 1e-12`).
///
/// The diagonal Padé approximant of a skew matrix is exactly orthogonal in
/// exact arithmetic, so the result stays orthogonal to rounding level.
pub fn expm_skew(s: &RealMatrix, t: f64) -> Result<RealMatrix> {
    s.require_square("drift matrix")?;
    if !t.is_finite() {
        return Err(input_err!("time {t} is not finite"));
    }
    if !s.is_skew_symmetric(1e-12) {
        return Err(precondition_err!("drift matrix is not skew-symmetric"));
    }
    expm(&s.scale(t))
}
