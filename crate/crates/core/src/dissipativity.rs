//! The two-vector Lp-dissipativity condition
//!
//! ```text
//! Re⟨w,Aw⟩ + b·Re⟨w,z⟩·Re⟨z,Aw⟩ ≥ γ   for all unit w, z,   b = p − 2,
//! ```
//!
//! its one-vector reduction `(1 + b/2)·Re⟨w,Aw⟩ − (|b|/2)·|Aw| ≥ γ`, and the
//! antieigenvalue criterion `A invertible ∧ μ₁(A) > |p−2|/p` that decides
//! whether some `γ > 0` exists.
//!
//! Complex problems are handled on the real embedding: with `w ↦ w_R`,
//! `A ↦ A_R`, `Re⟨w,z⟩ = ⟨w_R,z_R⟩`, `Re⟨w,Aw⟩ = ⟨w_R,A_R w_R⟩` and
//! `|Aw| = |A_R w_R|`.

use alloc::vec;
use alloc::vec::Vec;

use crate::antieigen::{mu1 as mu1_dispatch, mu1_with, MethodChoice};
use crate::error::{input_err, precondition_err, Result};
use crate::linalg::{
    complex_from_embedded, dot_conj, hermitian_eigen, min_hermitian_part_eigenvalue, norm,
    real_embed_matrix, real_embed_vector, structural_predicates, ComplexMatrix, ComplexVector,
    RealMatrix, C64,
};
use crate::sphere::{minimize, random_unit_vector, restart_rng, OptimizerOptions, SphereObjective};

/// `gamma_best > DECISION_TOL` is reported as dissipative.
pub const DECISION_TOL: f64 = 1e-10;
/// Default half-width of the band in which verdicts are not trusted.
pub const DECISION_BAND: f64 = 1e-6;
/// `w` and `Aw` count as linearly dependent when the sine of their angle is below this.
pub const DEPENDENCE_TOL: f64 = 1e-8;

const ALTERNATING_MAX_ROUNDS: usize = 500;

/// Validates `1 < p < ∞`.
pub fn check_exponent(p: f64) -> Result<f64> {
    if p.is_finite() && p > 1.0 {
        Ok(p)
    } else {
        Err(input_err!("exponent p = {p} outside (1, inf)"))
    }
}

/// `|p − 2| / p`, the antieigenvalue threshold. Lies in `[0, 1)`.
pub fn threshold(p: f64) -> f64 {
    libm::fabs(p - 2.0) / p
}

#[derive(Clone, Debug)]
pub struct DissipativityReport {
    pub p: f64,
    /// `p − 2`.
    pub b: f64,
    /// Minimum of the reduced functional over the unit sphere.
    pub gamma_best: f64,
    pub witness_w: ComplexVector,
    pub threshold: f64,
    /// `None` for the zero matrix.
    pub mu1: Option<f64>,
    /// `mu1 − threshold`.
    pub margin: Option<f64>,
    pub verdict: bool,
    /// Best accretivity constant, i.e. `gamma_best` at `p = 2`.
    pub accretivity_constant: f64,
    pub tol_decide: f64,
    pub restarts_used: usize,
}

/// `(1 + b/2)⟨x, Mx⟩ − (|b|/2)|Mx|` on the sphere of `ℝⁿ`.
struct ReducedFunctional<'a> {
    m: &'a RealMatrix,
    mt: RealMatrix,
    quad: f64,
    lin: f64,
    floor: f64,
}

impl<'a> ReducedFunctional<'a> {
    fn new(m: &'a RealMatrix, b: f64) -> Self {
        Self {
            m,
            mt: m.transpose(),
            quad: 1.0 + 0.5 * b,
            lin: 0.5 * libm::fabs(b),
            floor: 1e-14 * m.frobenius_norm(),
        }
    }
}

impl SphereObjective for ReducedFunctional<'_> {
    fn dim(&self) -> usize {
        self.m.rows()
    }

    fn eval(&self, x: &[f64], grad: &mut [f64]) -> Option<f64> {
        let mx = self.m.mul_vec(x);
        let mtx = self.mt.mul_vec(x);
        let q: f64 = x.iter().zip(&mx).map(|(a, b)| a * b).sum();
        let r = norm(&mx);
        for k in 0..x.len() {
            grad[k] = self.quad * (mx[k] + mtx[k]);
        }
        // at Mx = 0 the |Mx| term is not differentiable; its one-sided
        // contribution vanishes there
        if r > self.floor && self.lin > 0.0 {
            let mtmx = self.mt.mul_vec(&mx);
            for k in 0..x.len() {
                grad[k] -= self.lin * mtmx[k] / r;
            }
        }
        Some(self.quad * q - self.lin * r)
    }
}

/// Best constant `γ` of the reduced condition for complex `A`, by
/// multi-start projected gradient on `S^{2N−1}`.
pub fn gamma_best(a: &ComplexMatrix, p: f64, opts: &OptimizerOptions) -> Result<DissipativityReport> {
    let p = check_exponent(p)?;
    a.require_square("matrix")?;
    let b = p - 2.0;
    let m = real_embed_matrix(a)?;
    let best = minimize(&ReducedFunctional::new(&m, b), opts)?;
    let thr = threshold(p);
    let mu1 = if a.frobenius_norm() > 0.0 {
        Some(mu1_with(a, MethodChoice::Auto, opts, false)?.mu1)
    } else {
        None
    };
    Ok(DissipativityReport {
        p,
        b,
        gamma_best: best.value,
        witness_w: complex_from_embedded(&best.point),
        threshold: thr,
        mu1,
        margin: mu1.map(|m| m - thr),
        verdict: best.value > DECISION_TOL,
        accretivity_constant: min_hermitian_part_eigenvalue(a)?,
        tol_decide: DECISION_TOL,
        restarts_used: best.restarts_used,
    })
}

/// Best constant for a real matrix over real vectors (`𝕂 = ℝ`).
///
/// For `N = 1` the two-vector condition only admits `z = ±w` and the best
/// constant is `(p − 1)·a`; the reduced functional is not equivalent there.
pub fn gamma_best_real(m: &RealMatrix, p: f64, opts: &OptimizerOptions) -> Result<(f64, Vec<f64>)> {
    let p = check_exponent(p)?;
    let n = m.require_square("matrix")?;
    if n == 1 {
        return Ok(((p - 1.0) * m[(0, 0)], vec![1.0]));
    }
    let best = minimize(&ReducedFunctional::new(m, p - 2.0), opts)?;
    Ok((best.value, best.point))
}

/// Scalar real case: some `γ > 0` exists iff `(p − 1)a > 0`, i.e. `a > 0`.
pub fn scalar_real_dissipative(a: f64, p: f64) -> Result<bool> {
    let p = check_exponent(p)?;
    Ok((p - 1.0) * a > 0.0)
}

/// Intermediate quantities of the inner minimization over `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct LagrangeTrace {
    pub w: Vec<f64>,
    /// `⟨w, Aw⟩`.
    pub q: f64,
    /// `|Aw|`.
    pub r: f64,
    /// `⟨z*, Aw⟩`.
    pub alpha: f64,
    /// `⟨w, z*⟩`.
    pub beta: f64,
    /// `−b·α·β`.
    pub multiplier_mu: f64,
    pub z_star: Vec<f64>,
    /// `f(w, z*)` evaluated directly; equals `(1 + b/2)q − (|b|/2)r`.
    pub f_at_star: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `⟨w,Aw⟩ + b⟨w,z⟩⟨z,Aw⟩` for real vectors.
pub fn two_vector_functional(m: &RealMatrix, w: &[f64], z: &[f64], b: f64) -> f64 {
    let mw = m.mul_vec(w);
    dot(w, &mw) + b * dot(w, z) * dot(z, &mw)
}

/// `Re⟨w,Aw⟩ + b·Re⟨w,z⟩·Re⟨z,Aw⟩` for complex vectors.
pub fn two_vector_functional_complex(a: &ComplexMatrix, w: &[C64], z: &[C64], b: f64) -> f64 {
    let aw = a.mul_vec(w);
    dot_conj(w, &aw).re + b * dot_conj(w, z).re * dot_conj(z, &aw).re
}

/// `(α, β)` from the sign rule: opposite signs for `b > 0`, equal signs for
/// `b < 0`. `d` is `r − q` or `r + q` respectively.
fn alpha_beta(r: f64, d: f64, b: f64) -> (f64, f64) {
    let (a, c) = (libm::sqrt(r * d / 2.0), libm::sqrt(d / (2.0 * r)));
    if b > 0.0 {
        (-a, c)
    } else {
        (a, c)
    }
}

fn sine_between(w: &[f64], mw: &[f64], q: f64, r: f64) -> f64 {
    let perp: Vec<f64> = mw.iter().zip(w).map(|(a, b)| a - q * b).collect();
    norm(&perp) / r
}

/// Stationary point `z* = w/(2β) + Aw/(2α)` of `z ↦ f(w, z)` on the unit
/// sphere, for unit `w` with `w`, `Aw` linearly independent and `q, r > 0`.
pub fn lagrange_stationary(m: &RealMatrix, w: &[f64], b: f64) -> Result<LagrangeTrace> {
    let n = m.require_square("matrix")?;
    if w.len() != n {
        return Err(input_err!("vector of dim {} for a {n}x{n} matrix", w.len()));
    }
    if !(b.is_finite() && b != 0.0) {
        return Err(input_err!("b must be finite and nonzero, got {b}"));
    }
    if libm::fabs(norm(w) - 1.0) > 1e-10 {
        return Err(input_err!("w must be a unit vector (|w| = {})", norm(w)));
    }
    let mw = m.mul_vec(w);
    let q = dot(w, &mw);
    let r = norm(&mw);
    if !(q > 0.0 && r > 0.0) {
        return Err(precondition_err!("need q > 0 and r > 0, got q = {q}, r = {r}"));
    }
    if sine_between(w, &mw, q, r) <= DEPENDENCE_TOL {
        return Err(precondition_err!(
            "w and Aw are linearly dependent; the inner minimum is min(λ, λ(1+b))"
        ));
    }
    Ok(stationary_unchecked(m, w, &mw, q, r, b))
}

fn stationary_unchecked(m: &RealMatrix, w: &[f64], mw: &[f64], q: f64, r: f64, b: f64) -> LagrangeTrace {
    // v = Aw − qw is orthogonal to w, so r² − q² = |v|². Writing
    // w/(2β) + Aw/(2α) as (d·w ∓ v)/√(2rd) avoids cancelling two large
    // terms when w is close to an eigenvector.
    let v: Vec<f64> = mw.iter().zip(w).map(|(a, x)| a - q * x).collect();
    let s2 = dot(&v, &v);
    let d = if b > 0.0 { s2 / (r + q) } else { r + q };
    let (alpha, beta) = alpha_beta(r, d, b);
    let sign = if b > 0.0 { -1.0 } else { 1.0 };
    let scale = 1.0 / libm::sqrt(2.0 * r * d);
    let z_star: Vec<f64> = w.iter().zip(&v).map(|(wi, vi)| (d * wi + sign * vi) * scale).collect();
    LagrangeTrace {
        w: w.to_vec(),
        q,
        r,
        alpha,
        beta,
        multiplier_mu: -b * alpha * beta,
        f_at_star: two_vector_functional(m, w, &z_star, b),
        z_star,
    }
}

/// `‖b⟨z,Aw⟩w + b⟨w,z⟩Aw + 2μz‖` at the trace's stationary point.
pub fn stationarity_residual(m: &RealMatrix, trace: &LagrangeTrace, b: f64) -> f64 {
    let mw = m.mul_vec(&trace.w);
    let za = dot(&trace.z_star, &mw);
    let wz = dot(&trace.w, &trace.z_star);
    let res: Vec<f64> = (0..trace.w.len())
        .map(|k| b * za * trace.w[k] + b * wz * mw[k] + 2.0 * trace.multiplier_mu * trace.z_star[k])
        .collect();
    norm(&res)
}

/// [`lagrange_stationary`] for a complex matrix: real entries are used
/// as-is, anything else goes through the real embedding.
pub fn lagrange_stationary_complex(a: &ComplexMatrix, w: &[C64], b: f64) -> Result<LagrangeTrace> {
    if a.has_real_entries() && w.iter().all(|z| z.im == 0.0) {
        let wr: Vec<f64> = w.iter().map(|z| z.re).collect();
        lagrange_stationary(&a.real_part(), &wr, b)
    } else {
        lagrange_stationary(&real_embed_matrix(a)?, &real_embed_vector(w), b)
    }
}

fn unit_orthogonal_to(w: &[f64]) -> Vec<f64> {
    // start from the axis least aligned with w
    let k = (0..w.len()).min_by(|&i, &j| libm::fabs(w[i]).total_cmp(&libm::fabs(w[j]))).unwrap_or(0);
    let mut e = vec![0.0; w.len()];
    e[k] = 1.0;
    let proj = w[k];
    for (ei, wi) in e.iter_mut().zip(w) {
        *ei -= proj * wi;
    }
    let n = norm(&e);
    e.into_iter().map(|x| x / n).collect()
}

/// Global minimizer of `z ↦ f(w, z)` over unit `z`, for unit `w`.
fn inner_minimizer(m: &RealMatrix, w: &[f64], b: f64) -> Vec<f64> {
    let mw = m.mul_vec(w);
    let q = dot(w, &mw);
    let r = norm(&mw);
    let n = w.len();
    if b == 0.0 {
        return w.to_vec();
    }
    let dependent = r == 0.0 || sine_between(w, &mw, q, r) <= DEPENDENCE_TOL;
    if dependent {
        // Aw = λw with λ = q: f = λ + bλ⟨w,z⟩²
        return if b * q > 0.0 && n >= 2 { unit_orthogonal_to(w) } else { w.to_vec() };
    }
    stationary_unchecked(m, w, &mw, q, r, b).z_star
}

/// Minimizer of `w ↦ f(w, z)` over unit `w`: the bottom eigenvector of
/// `sym(M) + (b/2)(z uᵀ + u zᵀ)` with `u = Mᵀz`.
fn outer_minimizer(m: &RealMatrix, z: &[f64], b: f64) -> Result<Vec<f64>> {
    let n = z.len();
    let u = m.transpose().mul_vec(z);
    let k = crate::linalg::ComplexMatrix::from_fn(n, n, |i, j| {
        C64::new(0.5 * (m[(i, j)] + m[(j, i)]) + 0.5 * b * (z[i] * u[j] + u[i] * z[j]), 0.0)
    });
    let eig = hermitian_eigen(&k)?;
    let v = eig.eigenvectors.column(0);
    Ok(v.iter().map(|c| c.re).collect())
}

#[derive(Clone, Debug)]
pub struct TwoVectorCheck {
    pub min_found: f64,
    pub w: ComplexVector,
    pub z: ComplexVector,
}

fn alternating_minimum(m: &RealMatrix, b: f64, samples: usize, seed: u64) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if samples == 0 {
        return Err(input_err!("samples must be positive"));
    }
    let n = m.rows();
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    for s in 0..samples {
        let mut rng = restart_rng(seed, s);
        let mut w = random_unit_vector(&mut rng, n);
        let mut z = random_unit_vector(&mut rng, n);
        let mut f = two_vector_functional(m, &w, &z, b);
        for _ in 0..ALTERNATING_MAX_ROUNDS {
            let z_new = inner_minimizer(m, &w, b);
            let f_z = two_vector_functional(m, &w, &z_new, b);
            if f_z <= f {
                z = z_new;
                f = f_z;
            }
            let w_new = outer_minimizer(m, &z, b)?;
            let f_w = two_vector_functional(m, &w_new, &z, b);
            let before = f;
            if f_w <= f {
                w = w_new;
                f = f_w;
            }
            if before - f <= 1e-15 * (1.0 + libm::fabs(f)) {
                break;
            }
        }
        if best.as_ref().is_none_or(|(bf, _, _)| f < *bf) {
            best = Some((f, w, z));
        }
    }
    Ok(best.expect("samples > 0"))
}

/// Independent oracle for the two-vector condition: alternating exact
/// minimization over `z` (Lagrange closed form) and `w` (bottom eigenvector)
/// from `samples` seeded random starting pairs. The reported minimum is
/// re-evaluated in complex arithmetic.
pub fn check_two_vector(a: &ComplexMatrix, p: f64, samples: usize, seed: u64) -> Result<TwoVectorCheck> {
    let p = check_exponent(p)?;
    let b = p - 2.0;
    let m = real_embed_matrix(a)?;
    let (_, w, z) = alternating_minimum(&m, b, samples, seed)?;
    let (w, z) = (complex_from_embedded(&w), complex_from_embedded(&z));
    Ok(TwoVectorCheck { min_found: two_vector_functional_complex(a, &w, &z, b), w, z })
}

/// [`check_two_vector`] over real vectors (`𝕂 = ℝ`) for a real matrix.
pub fn check_two_vector_real(m: &RealMatrix, p: f64, samples: usize, seed: u64) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let p = check_exponent(p)?;
    m.require_square("matrix")?;
    alternating_minimum(m, p - 2.0, samples, seed)
}

#[derive(Clone, Debug)]
pub struct EquivalenceCheck {
    pub p: f64,
    pub gamma_best: f64,
    pub mu1: Option<f64>,
    pub threshold: f64,
    pub invertible: bool,
    pub verdict_dissipativity: bool,
    pub verdict_antieigen: bool,
    pub agree: bool,
    /// `mu1 − threshold`.
    pub margin: Option<f64>,
    /// `|gamma_best|` or `|margin|` fell inside the decision band.
    pub boundary_indeterminate: bool,
}

/// Decides both sides of the equivalence
/// `(∃γ>0 reduced condition) ⇔ (A invertible ∧ μ₁(A) > |p−2|/p)`.
pub fn check_equivalence(a: &ComplexMatrix, p: f64, band: f64, opts: &OptimizerOptions) -> Result<EquivalenceCheck> {
    let report = gamma_best(a, p, opts)?;
    let invertible = structural_predicates(a)?.invertible;
    let verdict_antieigen = invertible && report.margin.is_some_and(|m| m > 0.0);
    let boundary_indeterminate =
        libm::fabs(report.gamma_best) <= band || report.margin.is_some_and(|m| libm::fabs(m) <= band);
    Ok(EquivalenceCheck {
        p: report.p,
        gamma_best: report.gamma_best,
        mu1: report.mu1,
        threshold: report.threshold,
        invertible,
        verdict_dissipativity: report.verdict,
        verdict_antieigen,
        agree: report.verdict == verdict_antieigen,
        margin: report.margin,
        boundary_indeterminate,
    })
}

/// Exponents `p` for which the antieigenvalue criterion holds.
#[derive(Clone, Debug, PartialEq)]
pub struct PRange {
    pub mu1: Option<f64>,
    pub invertible: bool,
    /// Open interval `(lower, upper)`, `upper` possibly `+∞`; `None` if empty.
    pub interval: Option<(f64, f64)>,
}

impl PRange {
    pub fn contains(&self, p: f64) -> bool {
        self.interval.is_some_and(|(lo, hi)| lo < p && p < hi)
    }
}

/// Solves `|p−2|/p < μ₁(A)` for `p`: `(2/(1+μ₁), 2/(1−μ₁))`.
pub fn p_range_from_mu1(mu1: f64) -> Option<(f64, f64)> {
    if mu1 <= 0.0 {
        None
    } else if mu1 >= 1.0 {
        Some((1.0, f64::INFINITY))
    } else {
        Some((2.0 / (1.0 + mu1), 2.0 / (1.0 - mu1)))
    }
}

pub fn p_range(a: &ComplexMatrix, opts: &OptimizerOptions) -> Result<PRange> {
    a.require_square("matrix")?;
    let invertible = structural_predicates(a)?.invertible;
    if !invertible {
        return Ok(PRange { mu1: None, invertible, interval: None });
    }
    let m = mu1_dispatch(a, MethodChoice::Auto, opts)?.mu1;
    Ok(PRange { mu1: Some(m), invertible, interval: p_range_from_mu1(m) })
}
