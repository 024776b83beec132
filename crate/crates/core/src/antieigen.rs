//! First antieigenvalue `μ₁(A) = inf Re⟨w,Aw⟩ / (|w||Aw|)` over `w ≠ 0`,
//! `Aw ≠ 0`, its witness vector and the real angle `arccos μ₁(A)`.
//!
//! Three routes are provided: multi-start sphere optimization for arbitrary
//! matrices, and closed forms for Hermitian positive definite and for normal
//! accretive matrices. [`mu1`] picks one and cross-checks closed forms
//! against a short optimizer run.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{input_err, numerical_err, precondition_err, Result};
use crate::linalg::{
    complex_from_embedded, complex_schur, hermitian_eigen, norm, normalized,
    structural_predicates, ComplexMatrix, ComplexVector, RealMatrix, C64,
};
use crate::sphere::{minimize, OptimizerOptions, SphereObjective};

/// Points with `|Aw| < KERNEL_FLOOR·‖A‖_F` are excluded from the infimum.
pub const KERNEL_FLOOR: f64 = 1e-14;
/// Relative modulus gap below which two eigenvalues count as equal in F.
pub const MODULUS_TIE_TOL: f64 = 1e-10;
/// Required agreement between a closed form and its confirmation run.
pub const CONFIRMATION_TOL: f64 = 1e-6;
/// Restarts of the confirmation run.
pub const CONFIRMATION_RESTARTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mu1Method {
    Brute,
    HermitianPd,
    NormalAccretive,
    Scalar,
}

impl Mu1Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Mu1Method::Brute => "brute",
            Mu1Method::HermitianPd => "hermitian_pd",
            Mu1Method::NormalAccretive => "normal_accretive",
            Mu1Method::Scalar => "scalar",
        }
    }
}

/// Method requested from the dispatcher.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MethodChoice {
    #[default]
    Auto,
    Brute,
    Hermitian,
    Normal,
}

impl core::str::FromStr for MethodChoice {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "brute" => Ok(Self::Brute),
            "hermitian" | "hermitian_pd" => Ok(Self::Hermitian),
            "normal" | "normal_accretive" => Ok(Self::Normal),
            other => Err(input_err!("unknown method '{other}' (expected auto, brute, hermitian, normal)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AntieigenResult {
    /// In `[-1, 1]`.
    pub mu1: f64,
    /// Unit vector attaining `mu1`.
    pub antieigenvector: ComplexVector,
    /// `arccos(mu1)` in `[0, π]`.
    pub angle_rad: f64,
    pub method: Mu1Method,
    pub restarts_used: usize,
    pub best_objective_history: Option<Vec<f64>>,
}

impl AntieigenResult {
    fn new(mu1: f64, antieigenvector: ComplexVector, method: Mu1Method) -> Self {
        let mu1 = mu1.clamp(-1.0, 1.0);
        Self { mu1, antieigenvector, angle_rad: libm::acos(mu1), method, restarts_used: 0, best_objective_history: None }
    }
}

/// `Re⟨w,Aw⟩ / (|w||Aw|)`, or `None` when `w = 0` or `Aw = 0`.
pub fn antieigen_quotient(a: &ComplexMatrix, w: &[C64]) -> Option<f64> {
    let aw = a.mul_vec(w);
    let denom = norm(w) * norm(&aw);
    (denom > 0.0).then(|| crate::linalg::dot_conj(w, &aw).re / denom)
}

/// The antieigen quotient on `S^{2N-1}`, evaluated in complex arithmetic.
struct ComplexQuotient<'a> {
    a: &'a ComplexMatrix,
    adjoint: ComplexMatrix,
    floor: f64,
}

impl SphereObjective for ComplexQuotient<'_> {
    fn dim(&self) -> usize {
        2 * self.a.rows()
    }

    fn eval(&self, x: &[f64], grad: &mut [f64]) -> Option<f64> {
        let w = complex_from_embedded(x);
        let aw = self.a.mul_vec(&w);
        let r = norm(&aw);
        if r < self.floor {
            return None;
        }
        let q = crate::linalg::dot_conj(&w, &aw).re;
        let adj_w = self.adjoint.mul_vec(&w);
        let adj_aw = self.adjoint.mul_vec(&aw);
        // ∇q ↔ (A + A*)w,  ∇r ↔ A*Aw / r
        let n = w.len();
        let inv_r = 1.0 / r;
        let c = q * inv_r * inv_r * inv_r;
        for k in 0..n {
            let g = (aw[k] + adj_w[k]) * inv_r - adj_aw[k] * c;
            grad[k] = g.re;
            grad[n + k] = g.im;
        }
        Some(q * inv_r)
    }
}

/// The antieigen quotient of a real matrix on `S^{n-1}`.
struct RealQuotient<'a> {
    m: &'a RealMatrix,
    mt: RealMatrix,
    floor: f64,
}

impl SphereObjective for RealQuotient<'_> {
    fn dim(&self) -> usize {
        self.m.rows()
    }

    fn eval(&self, x: &[f64], grad: &mut [f64]) -> Option<f64> {
        let mx = self.m.mul_vec(x);
        let r = norm(&mx);
        if r < self.floor {
            return None;
        }
        let q: f64 = x.iter().zip(&mx).map(|(a, b)| a * b).sum();
        let mtx = self.mt.mul_vec(x);
        let mtmx = self.mt.mul_vec(&mx);
        let c = q / (r * r * r);
        for k in 0..x.len() {
            grad[k] = (mx[k] + mtx[k]) / r - mtmx[k] * c;
        }
        Some(q / r)
    }
}

fn require_nonzero_square(a: &ComplexMatrix) -> Result<f64> {
    a.require_square("matrix")?;
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return Err(input_err!("zero matrix: the antieigen quotient is undefined everywhere"));
    }
    Ok(scale)
}

/// `μ₁(A)` by multi-start projected gradient on the sphere of `ℂᴺ ≅ ℝ²ᴺ`.
pub fn mu1_brute(a: &ComplexMatrix, opts: &OptimizerOptions) -> Result<AntieigenResult> {
    let scale = require_nonzero_square(a)?;
    let obj = ComplexQuotient { a, adjoint: a.adjoint(), floor: KERNEL_FLOOR * scale };
    let best = minimize(&obj, opts)?;
    let w = complex_from_embedded(&best.point);
    let mut out = AntieigenResult::new(best.value, w, Mu1Method::Brute);
    out.restarts_used = best.restarts_used;
    out.best_objective_history = Some(best.history);
    Ok(out)
}

/// `μ₁` of a real matrix over real vectors only. For a real embedding
/// `A_R` this agrees with `μ₁(A)` over `ℂᴺ`.
pub fn mu1_brute_real(m: &RealMatrix, opts: &OptimizerOptions) -> Result<(f64, Vec<f64>)> {
    m.require_square("matrix")?;
    let scale = m.frobenius_norm();
    if scale == 0.0 {
        return Err(input_err!("zero matrix: the antieigen quotient is undefined everywhere"));
    }
    let obj = RealQuotient { m, mt: m.transpose(), floor: KERNEL_FLOOR * scale };
    let best = minimize(&obj, opts)?;
    Ok((best.value.clamp(-1.0, 1.0), best.point))
}

/// Hermitian positive definite closed form
/// `μ₁ = 2√(λ₁λ_N)/(λ₁+λ_N)`, witness `∝ √λ_N u₁ + √λ₁ u_N`.
pub fn mu1_hermitian_pd(a: &ComplexMatrix) -> Result<AntieigenResult> {
    require_nonzero_square(a)?;
    let flags = structural_predicates(a)?;
    if !flags.hermitian {
        return Err(precondition_err!("closed form requires a Hermitian matrix"));
    }
    if !flags.strictly_accretive {
        return Err(precondition_err!("closed form requires a positive definite matrix"));
    }
    let eig = hermitian_eigen(a)?;
    let n = eig.eigenvalues.len();
    let (l1, ln) = (eig.eigenvalues[0], eig.eigenvalues[n - 1]);
    let mu1 = 2.0 * libm::sqrt(l1 * ln) / (l1 + ln);
    let u1 = eig.eigenvectors.column(0);
    let un = eig.eigenvectors.column(n - 1);
    let (s1, sn) = (libm::sqrt(ln), libm::sqrt(l1));
    let raw: ComplexVector = u1.iter().zip(&un).map(|(x, y)| *x * s1 + *y * sn).collect();
    let w = normalized(&raw).ok_or_else(|| numerical_err!("degenerate Hermitian witness"))?;
    Ok(AntieigenResult::new(mu1, w, Mu1Method::HermitianPd))
}

/// One interior candidate of the normal-matrix closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct InteriorCandidate {
    pub i: usize,
    pub j: usize,
    pub value: f64,
    /// `|w_i|²` of the two-component witness; lies in `(0, 1)`.
    pub interiority: f64,
}

/// Intermediate sets of the normal accretive closed form.
#[derive(Clone, Debug)]
pub struct NormalFormTrace {
    pub eigenvalues: Vec<C64>,
    /// `E = { a_j / |λ_j| }`, one entry per eigenvalue.
    pub e: Vec<f64>,
    /// `F`, ordered pairs with `|λ_i| < |λ_j|` whose interiority is in `(0,1)`.
    pub f: Vec<InteriorCandidate>,
    /// `ρ_ij = |λ_j| / |λ_i|`, row-major `N×N`.
    pub rho: RealMatrix,
    /// `r_k = a_k / |λ_k|`.
    pub r_values: Vec<f64>,
}

/// Value of the interior candidate for `(i, j)` through the `ρ`/`r`
/// reformulation, `2√((r_i ρ − r_j)(r_j ρ − r_i) ρ) / (ρ² − 1)`.
pub fn interior_value_from_ratios(r_i: f64, r_j: f64, rho_ij: f64) -> f64 {
    let rad = (r_i * rho_ij - r_j) * (r_j * rho_ij - r_i) * rho_ij;
    2.0 * libm::sqrt(rad.max(0.0)) / (rho_ij * rho_ij - 1.0)
}

/// `μ₁(A) = min(E ∪ F)` for normal accretive `A`, with the witness built
/// in the eigenbasis from the minimizing candidate.
pub fn mu1_normal_accretive(a: &ComplexMatrix) -> Result<(AntieigenResult, NormalFormTrace)> {
    require_nonzero_square(a)?;
    let flags = structural_predicates(a)?;
    if !flags.normal {
        return Err(precondition_err!("closed form requires a normal matrix"));
    }
    if !flags.accretive {
        return Err(precondition_err!("closed form requires an accretive matrix"));
    }
    // Schur form of a normal matrix is diagonal with unitary Q
    let schur = complex_schur(a)?;
    let n = a.rows();
    let lambdas = schur.t.diagonal();
    let re: Vec<f64> = lambdas.iter().map(|l| l.re).collect();
    let modulus: Vec<f64> = lambdas.iter().map(|l| libm::hypot(l.re, l.im)).collect();
    if let Some(j) = modulus.iter().position(|&m| m <= f64::EPSILON * a.frobenius_norm()) {
        return Err(precondition_err!("zero eigenvalue at index {j}: a_j/|λ_j| is undefined"));
    }

    let e: Vec<f64> = (0..n).map(|j| re[j] / modulus[j]).collect();
    let rho = RealMatrix::from_fn(n, n, |i, j| modulus[j] / modulus[i]);

    let mut f = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let (mi2, mj2) = (modulus[i] * modulus[i], modulus[j] * modulus[j]);
            if modulus[j] <= modulus[i] * (1.0 + MODULUS_TIE_TOL) {
                continue;
            }
            let (ai, aj) = (re[i], re[j]);
            let denom = (mi2 - mj2) * (ai - aj);
            if denom == 0.0 {
                continue;
            }
            let interiority = (aj * mj2 - 2.0 * ai * mj2 + aj * mi2) / denom;
            if !(interiority > 0.0 && interiority < 1.0) {
                continue;
            }
            let radicand = (aj - ai) * (ai * mj2 - aj * mi2);
            if radicand < 0.0 {
                continue;
            }
            let value = 2.0 * libm::sqrt(radicand) / (mj2 - mi2);
            f.push(InteriorCandidate { i, j, value, interiority });
        }
    }

    let best_e = (0..n).min_by(|&x, &y| e[x].total_cmp(&e[y]).then(x.cmp(&y))).expect("n >= 1");
    let best_f = f.iter().min_by(|x, y| x.value.total_cmp(&y.value));
    let mut coeffs = vec![C64::new(0.0, 0.0); n];
    let mu1 = match best_f {
        Some(cand) if cand.value < e[best_e] => {
            coeffs[cand.i] = C64::new(libm::sqrt(cand.interiority), 0.0);
            coeffs[cand.j] = C64::new(libm::sqrt(1.0 - cand.interiority), 0.0);
            cand.value
        }
        _ => {
            coeffs[best_e] = C64::new(1.0, 0.0);
            e[best_e]
        }
    };
    let w = normalized(&schur.q.mul_vec(&coeffs)).ok_or_else(|| numerical_err!("degenerate normal witness"))?;
    let trace = NormalFormTrace { eigenvalues: lambdas, e: e.clone(), f, rho, r_values: e };
    Ok((AntieigenResult::new(mu1, w, Mu1Method::NormalAccretive), trace))
}

fn mu1_scalar(a: &ComplexMatrix) -> Result<AntieigenResult> {
    let alpha = a[(0, 0)];
    let modulus = libm::hypot(alpha.re, alpha.im);
    if modulus == 0.0 {
        return Err(input_err!("zero matrix: the antieigen quotient is undefined everywhere"));
    }
    Ok(AntieigenResult::new(alpha.re / modulus, vec![C64::new(1.0, 0.0)], Mu1Method::Scalar))
}

fn confirm(a: &ComplexMatrix, closed: &AntieigenResult, opts: &OptimizerOptions) -> Result<()> {
    let check = mu1_brute(a, &opts.with_restarts(CONFIRMATION_RESTARTS))?;
    let gap = check.mu1 - closed.mu1;
    if libm::fabs(gap) > CONFIRMATION_TOL {
        return Err(numerical_err!(
            "closed form {} = {} disagrees with optimizer value {} (gap {gap:e})",
            closed.method.as_str(),
            closed.mu1,
            check.mu1
        ));
    }
    Ok(())
}

/// Dispatcher. `Auto` uses the scalar formula for `N = 1`, then the
/// Hermitian PD closed form, then the normal accretive one, and otherwise
/// the optimizer. Closed forms chosen by `Auto` are confirmed by a short
/// optimizer run when `confirm_closed_forms` is set.
pub fn mu1_with(
    a: &ComplexMatrix,
    method: MethodChoice,
    opts: &OptimizerOptions,
    confirm_closed_forms: bool,
) -> Result<AntieigenResult> {
    require_nonzero_square(a)?;
    match method {
        MethodChoice::Brute => mu1_brute(a, opts),
        MethodChoice::Hermitian => mu1_hermitian_pd(a),
        MethodChoice::Normal => mu1_normal_accretive(a).map(|(r, _)| r),
        MethodChoice::Auto => {
            if a.rows() == 1 {
                return mu1_scalar(a);
            }
            let flags = structural_predicates(a)?;
            let closed = if flags.hermitian && flags.strictly_accretive {
                Some(mu1_hermitian_pd(a)?)
            } else if flags.normal && flags.accretive && flags.invertible {
                Some(mu1_normal_accretive(a)?.0)
            } else {
                None
            };
            match closed {
                Some(result) => {
                    if confirm_closed_forms {
                        confirm(a, &result, opts)?;
                    }
                    Ok(result)
                }
                None => mu1_brute(a, opts),
            }
        }
    }
}

/// [`mu1_with`] with default confirmation.
pub fn mu1(a: &ComplexMatrix, method: MethodChoice, opts: &OptimizerOptions) -> Result<AntieigenResult> {
    mu1_with(a, method, opts, true)
}

/// Real angle `arccos μ₁(A)` in radians.
pub fn angle(a: &ComplexMatrix, opts: &OptimizerOptions) -> Result<f64> {
    Ok(mu1(a, MethodChoice::Auto, opts)?.angle_rad)
}
