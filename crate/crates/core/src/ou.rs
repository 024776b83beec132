//! Heat kernel of the perturbed Ornstein–Uhlenbeck operator
//! `AΔv + ⟨Sx, ∇v⟩ − Bv` for `v: ℝ^d → ℂ^N`, with skew `S` and `A`, `B`
//! simultaneously diagonalizable, plus quadrature probes of the semigroup.
//!
//! In the joint eigenbasis the kernel splits into scalar Gaussians
//! `(4πtλ_j)^{-d/2} exp(−λ^B_j t − |e^{tS}x − ξ|²/(4tλ_j))`, each a product
//! of one-dimensional factors, which keeps grid sums cheap.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Zero;

use crate::error::{input_err, precondition_err, Result};
use crate::linalg::{
    cabs, cexp, cln, eigen_decompose, expm, expm_skew, min_hermitian_part_eigenvalue, ComplexMatrix, Lu, RealMatrix,
    C64,
};
use crate::sphere::{random_unit_vector, restart_rng};

/// Gaussian mass allowed outside the box by the grid prechecks.
pub const TRUNCATION_TOL: f64 = 1e-8;
/// Resolvent probe: allowed `e^{−(Re λ − β_B)t}`-weighted mass outside the box.
pub const PROBE_TRUNCATION_TOL: f64 = 1e-6;
/// Resolvent probe: allowed aliasing level at the first positive time node.
pub const PROBE_ALIASING_TOL: f64 = 1e-6;
/// `e^{−(Re λ − β_B)T_max}` must be below this.
pub const PROBE_TAIL_TOL: f64 = 1e-6;
/// Chapman–Kolmogorov probes skip times below this.
pub const CHAPMAN_MIN_TIME: f64 = 1e-3;
/// Relative residual allowed for the joint eigendecomposition.
pub const DIAGONALIZATION_TOL: f64 = 1e-9;

// weight of B in the matrix whose eigenvectors give the joint basis
const MIXING: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Debug)]
pub struct OuSpec {
    a: ComplexMatrix,
    b: ComplexMatrix,
    s: RealMatrix,
    d: usize,
    v: ComplexMatrix,
    v_inv: ComplexMatrix,
    lambda_a: Vec<C64>,
    lambda_b: Vec<C64>,
    beta_b: f64,
}

fn diagonal_residual(x: &ComplexMatrix, v: &ComplexMatrix, lambda: &[C64]) -> f64 {
    let xv = x.matmul(v);
    let vd = ComplexMatrix::from_fn(v.rows(), v.cols(), |i, j| v[(i, j)] * lambda[j]);
    xv.sub(&vd).frobenius_norm()
}

impl OuSpec {
    /// Validates the operator data and computes the joint eigenbasis.
    ///
    /// The basis comes from `A + c·B` for a fixed irrational weight `c`, so a
    /// repeated eigenvalue of `A` does not leave the basis undetermined.
    pub fn new(a: ComplexMatrix, b: ComplexMatrix, s: RealMatrix, d: usize) -> Result<Self> {
        let n = a.require_square("A")?;
        if b.rows() != n || b.cols() != n {
            return Err(input_err!("B is {}x{}, expected {n}x{n}", b.rows(), b.cols()));
        }
        if d < 2 {
            return Err(input_err!("spatial dimension must be at least 2, got {d}"));
        }
        if s.rows() != d || s.cols() != d {
            return Err(input_err!("S is {}x{}, expected {d}x{d}", s.rows(), s.cols()));
        }
        if !s.is_skew_symmetric(1e-12) {
            return Err(precondition_err!("S is not skew-symmetric"));
        }
        let (norm_a, norm_b) = (a.frobenius_norm(), b.frobenius_norm());
        let mixed = if norm_b > 0.0 { a.add(&b.scale(C64::new(MIXING * norm_a.max(1.0) / norm_b, 0.0))) } else { a.clone() };
        let v = eigen_decompose(&mixed)
            .map_err(|e| precondition_err!("A and B are not simultaneously diagonalizable ({e})"))?
            .eigenvectors;
        let v_inv = Lu::factor(&v)?.inverse();
        let lambda_a = v_inv.matmul(&a).matmul(&v).diagonal();
        let lambda_b = v_inv.matmul(&b).matmul(&v).diagonal();
        let res_a = diagonal_residual(&a, &v, &lambda_a);
        let res_b = diagonal_residual(&b, &v, &lambda_b);
        if res_a > DIAGONALIZATION_TOL * norm_a || res_b > DIAGONALIZATION_TOL * norm_b.max(norm_a) {
            return Err(precondition_err!(
                "A and B are not simultaneously diagonalizable (residuals {res_a:.3e}, {res_b:.3e})"
            ));
        }
        if let Some(l) = lambda_a.iter().find(|l| l.re <= 0.0) {
            return Err(precondition_err!("A has an eigenvalue {l} with non-positive real part"));
        }
        let beta_b = -min_hermitian_part_eigenvalue(&b)?;
        Ok(Self { a, b, s, d, v, v_inv, lambda_a, lambda_b, beta_b })
    }

    pub fn a(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn b(&self) -> &ComplexMatrix {
        &self.b
    }

    pub fn s(&self) -> &RealMatrix {
        &self.s
    }

    /// Spatial dimension `d`.
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of components `N`.
    pub fn components(&self) -> usize {
        self.lambda_a.len()
    }

    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.v
    }

    pub fn lambda_a(&self) -> &[C64] {
        &self.lambda_a
    }

    pub fn lambda_b(&self) -> &[C64] {
        &self.lambda_b
    }

    /// `−λ_min((B + B*)/2)`.
    pub fn beta_b(&self) -> f64 {
        self.beta_b
    }

    /// Largest per-axis standard deviation of `|kernel|` at time `t`:
    /// `max_j √(2t|λ_j|²/Re λ_j)`.
    pub fn kernel_width(&self, t: f64) -> f64 {
        self.lambda_a.iter().map(|l| libm::sqrt(2.0 * t * l.norm_sqr() / l.re)).fold(0.0, f64::max)
    }

    /// Size of the first aliased Fourier mode of the kernel on spacing `h`:
    /// `max_j exp(−t Re λ_j (2π/h)²)`. Trapezoid sums are accurate to
    /// about this level.
    pub fn aliasing_estimate(&self, t: f64, h: f64) -> f64 {
        let k = 2.0 * PI / h;
        self.lambda_a.iter().map(|l| libm::exp(-t * l.re * k * k)).fold(0.0, f64::max)
    }

    fn physical_to_eigen(&self, v: &[C64]) -> Vec<C64> {
        self.v_inv.mul_vec(v)
    }

    fn eigen_to_physical(&self, v: &[C64]) -> Vec<C64> {
        self.v.mul_vec(v)
    }

    fn conjugate_diag(&self, diag: &[C64]) -> ComplexMatrix {
        let n = diag.len();
        let vd = ComplexMatrix::from_fn(n, n, |i, j| self.v[(i, j)] * diag[j]);
        vd.matmul(&self.v_inv)
    }
}

fn check_time(t: f64) -> Result<f64> {
    if t.is_finite() && t > 0.0 {
        Ok(t)
    } else {
        Err(input_err!("time must be positive and finite, got {t}"))
    }
}

fn check_point(spec: &OuSpec, x: &[f64], what: &str) -> Result<()> {
    if x.len() != spec.d {
        return Err(input_err!("{what} has dimension {}, expected {}", x.len(), spec.d));
    }
    if x.iter().any(|c| !c.is_finite()) {
        return Err(input_err!("{what} has non-finite coordinates"));
    }
    Ok(())
}

/// The kernel at a fixed time, in the joint eigenbasis.
struct Propagator<'a> {
    spec: &'a OuSpec,
    rotation: RealMatrix,
    /// `(4πtλ_j)^{-d/2} e^{−λ^B_j t}`, or without the `B` factor.
    prefactor: Vec<C64>,
    /// `1/(4tλ_j)`.
    kappa: Vec<C64>,
}

impl<'a> Propagator<'a> {
    fn new(spec: &'a OuSpec, t: f64, with_b: bool) -> Result<Self> {
        let rotation = expm_skew(&spec.s, t)?;
        let half_d = spec.d as f64 / 2.0;
        let prefactor = spec
            .lambda_a
            .iter()
            .zip(&spec.lambda_b)
            .map(|(&la, &lb)| {
                let power = cln(la * (4.0 * PI * t)) * (-half_d);
                if with_b { cexp(power - lb * t) } else { cexp(power) }
            })
            .collect();
        let kappa = spec.lambda_a.iter().map(|&la| (la * (4.0 * t)).inv()).collect();
        Ok(Self { spec, rotation, prefactor, kappa })
    }

    fn center(&self, x: &[f64]) -> Vec<f64> {
        self.rotation.mul_vec(x)
    }

    fn diag(&self, x: &[f64], xi: &[f64]) -> Vec<C64> {
        let y = self.center(x);
        let s2: f64 = y.iter().zip(xi).map(|(a, b)| (a - b) * (a - b)).sum();
        self.prefactor.iter().zip(&self.kappa).map(|(&c, &k)| c * cexp(-k * s2)).collect()
    }

    fn matrix(&self, x: &[f64], xi: &[f64]) -> ComplexMatrix {
        self.spec.conjugate_diag(&self.diag(x, xi))
    }
}

/// `H(x, ξ, t)` as an `N×N` matrix.
pub fn kernel_eval(spec: &OuSpec, x: &[f64], xi: &[f64], t: f64) -> Result<ComplexMatrix> {
    check_time(t)?;
    check_point(spec, x, "x")?;
    check_point(spec, xi, "xi")?;
    Ok(Propagator::new(spec, t, true)?.matrix(x, xi))
}

/// Uniform tensor grid on `[−L, L]^d` with `n` points per axis and
/// trapezoid weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub d: usize,
    pub n: usize,
    pub half_width: f64,
}

impl GridSpec {
    pub fn new(d: usize, n: usize, half_width: f64) -> Result<Self> {
        if !(d == 2 || d == 3) {
            return Err(input_err!("grid probes support d = 2 or 3, got {d}"));
        }
        if n < 8 {
            return Err(input_err!("need at least 8 points per axis, got {n}"));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(input_err!("grid half-width must be positive, got {half_width}"));
        }
        if n.checked_pow(d as u32).is_none_or(|total| total > 50_000_000) {
            return Err(input_err!("grid with {n}^{d} points is too large"));
        }
        Ok(Self { d, n, half_width })
    }

    /// Default grid: spacing 0.5 on `[−16, 16]²` or on `[−8, 8]³`.
    pub fn default_for(d: usize) -> Result<Self> {
        match d {
            2 => Self::new(2, 65, 16.0),
            3 => Self::new(3, 33, 8.0),
            _ => Err(input_err!("grid probes support d = 2 or 3, got {d}")),
        }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    /// Same box, spacing halved.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.d, 2 * self.n - 1, self.half_width)
    }

    pub fn axis(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n).map(|k| -self.half_width + k as f64 * h).collect()
    }

    pub fn axis_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = vec![h; self.n];
        w[0] = 0.5 * h;
        w[self.n - 1] = 0.5 * h;
        w
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinates of point `index` (row-major, first axis slowest).
    pub fn point(&self, index: usize) -> Vec<f64> {
        let h = self.spacing();
        let mut x = vec![0.0; self.d];
        let mut rest = index;
        for a in (0..self.d).rev() {
            x[a] = -self.half_width + (rest % self.n) as f64 * h;
            rest /= self.n;
        }
        x
    }

    fn point_weight(&self, index: usize, axis_w: &[f64]) -> f64 {
        let mut w = 1.0;
        let mut rest = index;
        for _ in 0..self.d {
            w *= axis_w[rest % self.n];
            rest /= self.n;
        }
        w
    }
}

/// A `ℂ^N`-valued function sampled on a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub grid: GridSpec,
    pub components: usize,
    /// Point-major: the value at point `p` is `values[p*N .. (p+1)*N]`.
    pub values: Vec<C64>,
}

impl GridField {
    pub fn from_fn(grid: GridSpec, components: usize, mut f: impl FnMut(&[f64]) -> Vec<C64>) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len() * components);
        for p in 0..grid.len() {
            let v = f(&grid.point(p));
            if v.len() != components {
                return Err(input_err!("field returned {} components, expected {components}", v.len()));
            }
            values.extend(v);
        }
        Ok(Self { grid, components, values })
    }

    pub fn value(&self, p: usize) -> &[C64] {
        &self.values[p * self.components..(p + 1) * self.components]
    }

    /// Trapezoid `L^p` norm of the pointwise Euclidean norm.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(input_err!("norm exponent must be in [1, inf), got {p}"));
        }
        let aw = self.grid.axis_weights();
        let sum: f64 = (0..self.grid.len())
            .map(|i| {
                let m = libm::sqrt(self.value(i).iter().map(|z| z.norm_sqr()).sum());
                self.grid.point_weight(i, &aw) * libm::pow(m, p)
            })
            .sum();
        Ok(libm::pow(sum, 1.0 / p))
    }

    /// Largest pointwise Euclidean distance to another field on the same grid.
    pub fn max_distance(&self, other: &GridField) -> f64 {
        self.values
            .chunks(self.components)
            .zip(other.values.chunks(other.components))
            .map(|(a, b)| libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()))
            .fold(0.0, f64::max)
    }

    fn component_arrays(&self, spec: &OuSpec) -> Vec<Vec<C64>> {
        let mut out = vec![Vec::with_capacity(self.grid.len()); self.components];
        for chunk in self.values.chunks(self.components) {
            for (j, z) in spec.physical_to_eigen(chunk).into_iter().enumerate() {
                out[j].push(z);
            }
        }
        out
    }

    fn from_component_arrays(spec: &OuSpec, grid: GridSpec, arrays: &[Vec<C64>]) -> Self {
        let components = arrays.len();
        let mut values = Vec::with_capacity(grid.len() * components);
        let mut buf = vec![C64::zero(); components];
        for p in 0..grid.len() {
            for (b, array) in buf.iter_mut().zip(arrays) {
                *b = array[p];
            }
            values.extend(spec.eigen_to_physical(&buf));
        }
        Self { grid, components, values }
    }
}

/// Mass of a unit Gaussian of per-axis deviation `sigma`, centred at
/// `center`, that falls outside `[−L, L]^d`.
fn tail_mass(center: &[f64], sigma: f64, half_width: f64) -> f64 {
    if sigma == 0.0 {
        return if center.iter().all(|c| libm::fabs(*c) < half_width) { 0.0 } else { 1.0 };
    }
    let s = core::f64::consts::SQRT_2 * sigma;
    center
        .iter()
        .map(|&c| 0.5 * libm::erfc((half_width - c) / s) + 0.5 * libm::erfc((half_width + c) / s))
        .sum()
}

fn required_half_width(center: &[f64], sigma: f64, tol: f64) -> f64 {
    let mut lo = center.iter().fold(0.0, |m: f64, c| m.max(libm::fabs(*c)));
    let mut hi = lo + 50.0 * sigma.max(1e-300);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail_mass(center, sigma, mid) < tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn check_truncation(center: &[f64], sigma: f64, grid: &GridSpec, what: &str) -> Result<()> {
    let mass = tail_mass(center, sigma, grid.half_width);
    if mass >= TRUNCATION_TOL {
        return Err(input_err!(
            "{what}: kernel mass {mass:.3e} lies outside the box; need L >= {:.4}",
            required_half_width(center, sigma, TRUNCATION_TOL)
        ));
    }
    Ok(())
}

fn reduce_last_axis(src: &[C64], f: &[C64], dst: &mut Vec<C64>) {
    dst.clear();
    dst.extend(src.chunks_exact(f.len()).map(|row| row.iter().zip(f).map(|(x, w)| x * w).sum::<C64>()));
}

/// `Σ_ξ ∏_a f_a[ξ_a] u[ξ]` over a row-major `n^d` tensor.
fn contract(u: &[C64], factors: &[Vec<C64>], buf: &mut Vec<C64>, spare: &mut Vec<C64>) -> C64 {
    let (last, rest) = factors.split_last().expect("d >= 1");
    reduce_last_axis(u, last, buf);
    for f in rest.iter().rev() {
        reduce_last_axis(buf, f, spare);
        core::mem::swap(buf, spare);
    }
    buf[0]
}

/// Applies the eigenbasis kernel componentwise: `out_j(x) = c_j Σ_ξ w(ξ) G_j(Qx − ξ) u_j(ξ)`.
fn apply_eigen(prop: &Propagator, u: &[Vec<C64>], grid: &GridSpec) -> Vec<Vec<C64>> {
    let axis = grid.axis();
    let aw = grid.axis_weights();
    let n = grid.n;
    let (mut buf, mut spare) = (Vec::new(), Vec::new());
    let mut factors = vec![vec![C64::zero(); n]; grid.d];
    let mut out = vec![Vec::with_capacity(grid.len()); u.len()];
    for p in 0..grid.len() {
        let y = prop.center(&grid.point(p));
        for (j, uj) in u.iter().enumerate() {
            let kappa = prop.kappa[j];
            for (a, fa) in factors.iter_mut().enumerate() {
                for k in 0..n {
                    let z = y[a] - axis[k];
                    fa[k] = cexp(-kappa * (z * z)) * aw[k];
                }
            }
            out[j].push(prop.prefactor[j] * contract(uj, &factors, &mut buf, &mut spare));
        }
    }
    out
}

fn check_field(spec: &OuSpec, v: &GridField) -> Result<()> {
    if v.grid.d != spec.d {
        return Err(input_err!("grid dimension {} does not match d = {}", v.grid.d, spec.d));
    }
    if v.components != spec.components() {
        return Err(input_err!("field has {} components, expected {}", v.components, spec.components()));
    }
    Ok(())
}

/// `T(t)v` by tensor trapezoid quadrature of `∫ H(x, ξ, t) v(ξ) dξ` at every
/// grid point. `t = 0` returns `v`.
pub fn apply_semigroup(spec: &OuSpec, v: &GridField, t: f64) -> Result<GridField> {
    check_field(spec, v)?;
    if t == 0.0 {
        return Ok(v.clone());
    }
    check_time(t)?;
    check_truncation(&vec![0.0; spec.d], spec.kernel_width(t), &v.grid, "apply_semigroup")?;
    let prop = Propagator::new(spec, t, true)?;
    let out = apply_eigen(&prop, &v.component_arrays(spec), &v.grid);
    Ok(GridField::from_component_arrays(spec, v.grid, &out))
}

#[derive(Clone, Debug)]
pub struct MassReport {
    /// `∫ H(x, ξ, t) dξ` by quadrature.
    pub computed: ComplexMatrix,
    /// `e^{−Bt}`.
    pub expected: ComplexMatrix,
    /// Frobenius norm of the difference.
    pub deviation: f64,
    pub aliasing_estimate: f64,
}

/// Compares the quadrature of `ξ ↦ H(x, ξ, t)` with `e^{−Bt}`.
pub fn mass_check(spec: &OuSpec, x: &[f64], t: f64, grid: &GridSpec) -> Result<MassReport> {
    check_time(t)?;
    check_point(spec, x, "x")?;
    if grid.d != spec.d {
        return Err(input_err!("grid dimension {} does not match d = {}", grid.d, spec.d));
    }
    let prop = Propagator::new(spec, t, true)?;
    let y = prop.center(x);
    check_truncation(&y, spec.kernel_width(t), grid, "mass_check")?;
    let axis = grid.axis();
    let aw = grid.axis_weights();
    let diag: Vec<C64> = (0..spec.components())
        .map(|j| {
            let mut total = prop.prefactor[j];
            for &ya in &y {
                let s: C64 = axis
                    .iter()
                    .zip(&aw)
                    .map(|(&xk, &w)| cexp(-prop.kappa[j] * ((ya - xk) * (ya - xk))) * w)
                    .sum();
                total *= s;
            }
            total
        })
        .collect();
    let computed = spec.conjugate_diag(&diag);
    let expected = expm(&spec.b.scale(C64::new(-t, 0.0)))?;
    let deviation = computed.sub(&expected).frobenius_norm();
    Ok(MassReport { computed, expected, deviation, aliasing_estimate: spec.aliasing_estimate(t, grid.spacing()) })
}

/// Mass deviation on `grid` and on the grid with half the spacing.
pub fn mass_refinement(spec: &OuSpec, x: &[f64], t: f64, grid: &GridSpec) -> Result<(f64, f64)> {
    let coarse = mass_check(spec, x, t, grid)?.deviation;
    let fine = mass_check(spec, x, t, &grid.refined()?)?.deviation;
    Ok((coarse, fine))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChapmanReport {
    /// Largest entrywise modulus of `H(t+s) − ∫H(t)H(s)`; `None` when skipped.
    pub deviation: Option<f64>,
    pub pairs: usize,
}

/// Chapman–Kolmogorov probe on `samples` seeded pairs `(x, ξ)` drawn from the
/// central quarter of the box. Skipped when `t` or `s` is below
/// [`CHAPMAN_MIN_TIME`].
pub fn chapman_check(spec: &OuSpec, t: f64, s: f64, grid: &GridSpec, samples: usize, seed: u64) -> Result<ChapmanReport> {
    check_time(t)?;
    check_time(s)?;
    if grid.d != spec.d {
        return Err(input_err!("grid dimension {} does not match d = {}", grid.d, spec.d));
    }
    if t < CHAPMAN_MIN_TIME || s < CHAPMAN_MIN_TIME {
        return Ok(ChapmanReport { deviation: None, pairs: 0 });
    }
    let first = Propagator::new(spec, t, true)?;
    let second = Propagator::new(spec, s, true)?;
    let whole = Propagator::new(spec, t + s, true)?;
    let back = expm_skew(&spec.s, -s)?;
    let aw = grid.axis_weights();
    let radius = 0.25 * grid.half_width;
    let mut worst: f64 = 0.0;
    for k in 0..samples {
        let mut rng = restart_rng(seed, k);
        let mut draw = || -> Vec<f64> {
            let dir = random_unit_vector(&mut rng, spec.d);
            let u = random_unit_vector(&mut rng, 1)[0];
            dir.into_iter().map(|c| c * radius * libm::fabs(u)).collect()
        };
        let (x, xi) = (draw(), draw());
        check_truncation(&first.center(&x), spec.kernel_width(t), grid, "chapman_check")?;
        check_truncation(&back.mul_vec(&xi), spec.kernel_width(s), grid, "chapman_check")?;
        let n = spec.components();
        let mut sum = ComplexMatrix::zeros(n, n);
        for p in 0..grid.len() {
            let y = grid.point(p);
            let w = grid.point_weight(p, &aw);
            let term = first.matrix(&x, &y).matmul(&second.matrix(&y, &xi));
            sum = sum.add(&term.scale(C64::new(w, 0.0)));
        }
        worst = worst.max(whole.matrix(&x, &xi).sub(&sum).max_abs());
    }
    Ok(ChapmanReport { deviation: Some(worst), pairs: samples })
}

#[derive(Clone, Debug)]
pub struct ResolventReport {
    pub lambda: C64,
    pub p: f64,
    /// `‖v‖_p / ‖g‖_p` on the grid.
    pub ratio: f64,
    /// `1/(Re λ − β_B)`.
    pub bound: f64,
    pub norm_v: f64,
    pub norm_g: f64,
    pub t_max: f64,
    pub n_time: usize,
    pub truncation_estimate: f64,
    pub aliasing_estimate: f64,
}

/// Smallest convenient `T_max` with `e^{−gap·T_max} < 1e−6`.
pub fn default_t_max(gap: f64) -> f64 {
    14.0 / gap
}

/// Even step count giving a time step of about 0.2.
pub fn default_n_time(t_max: f64) -> usize {
    2 * (libm::ceil(t_max / 0.4) as usize).max(1)
}

/// `Δ·∫_0^2 e^{−zs} s^m ds` for `m = 0, 1, 2`, with `z = μΔ`.
fn exponential_moments(mu: C64, dt: f64) -> [C64; 3] {
    let z = mu * dt;
    let one = C64::new(1.0, 0.0);
    let m = if cabs(z) < 0.5 {
        // Σ_k (−z)^k/k! · 2^{m+k+1}/(m+k+1)
        let mut out = [C64::zero(); 3];
        for (order, slot) in out.iter_mut().enumerate() {
            let mut term = one;
            let mut pow2 = libm::pow(2.0, (order + 1) as f64);
            for k in 0..40 {
                *slot += term * (pow2 / (order + k + 1) as f64);
                term *= -z / (k + 1) as f64;
                pow2 *= 2.0;
            }
        }
        out
    } else {
        let e = cexp(-z * 2.0);
        [
            (one - e) / z,
            (one - e * (one + z * 2.0)) / (z * z),
            (one * 2.0 - e * (one * 2.0 + z * 4.0 + z * z * 4.0)) / (z * z * z),
        ]
    };
    [m[0] * dt, m[1] * dt, m[2] * dt]
}

/// Weights of the three nodes of `∫_0^{2Δ} e^{−μτ} q(τ) dτ` where `q` is the
/// quadratic through the node values. Reduces to Simpson's rule at `μ = 0`.
fn fitted_simpson_weights(mu: C64, dt: f64) -> [C64; 3] {
    let [i0, i1, i2] = exponential_moments(mu, dt);
    [(i2 - i1 * 3.0 + i0 * 2.0) / 2.0, -(i2 - i1 * 2.0), (i2 - i1) / 2.0]
}

/// Grid probe of the resolvent bound `‖(λ − L)^{-1} g‖ ≤ ‖g‖/(Re λ − β_B)`.
///
/// `v = ∫_0^{T_max} e^{−λt} T(t) g dt` on `n_time` uniform steps (`n_time`
/// even). In the eigenbasis the exponential factor `e^{−(λ + λ^B_j)t}` is
/// integrated exactly against the piecewise-quadratic interpolant of the
/// remaining diffusion-and-drift part.
pub fn resolvent_probe(
    spec: &OuSpec,
    lambda: C64,
    g: &GridField,
    p: f64,
    t_max: f64,
    n_time: usize,
) -> Result<ResolventReport> {
    check_field(spec, g)?;
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(input_err!("lambda must be finite"));
    }
    let gap = lambda.re - spec.beta_b;
    if gap <= 0.1 {
        return Err(input_err!(
            "need Re lambda > beta_B + 0.1 (Re lambda = {}, beta_B = {})",
            lambda.re,
            spec.beta_b
        ));
    }
    check_time(t_max)?;
    if libm::exp(-gap * t_max) >= PROBE_TAIL_TOL {
        return Err(input_err!("T_max = {t_max} too short; need T_max > {}", libm::log(1.0 / PROBE_TAIL_TOL) / gap));
    }
    if n_time == 0 || n_time % 2 == 1 {
        return Err(input_err!("number of time steps must be positive and even, got {n_time}"));
    }
    let norm_g = g.lp_norm(p)?;
    if norm_g == 0.0 {
        return Err(input_err!("g vanishes on the grid"));
    }
    let dt = t_max / n_time as f64;
    let aliasing = spec.aliasing_estimate(dt, g.grid.spacing());
    if aliasing > PROBE_ALIASING_TOL {
        return Err(input_err!(
            "time step {dt} too small for grid spacing {} (aliasing {aliasing:.3e}); use fewer steps or a finer grid",
            g.grid.spacing()
        ));
    }
    let origin = vec![0.0; spec.d];
    let truncation = (1..=n_time)
        .map(|k| {
            let t = k as f64 * dt;
            libm::exp(-gap * t) * tail_mass(&origin, spec.kernel_width(t), g.grid.half_width)
        })
        .fold(0.0, f64::max);
    if truncation > PROBE_TRUNCATION_TOL {
        return Err(input_err!(
            "kernel leaves the box before it decays (weighted mass {truncation:.3e}); enlarge L"
        ));
    }

    let u = g.component_arrays(spec);
    let n = spec.components();
    let mu: Vec<C64> = spec.lambda_b.iter().map(|&lb| lambda + lb).collect();
    let weights: Vec<[C64; 3]> = mu.iter().map(|&m| fitted_simpson_weights(m, dt)).collect();
    let mut acc: Vec<Vec<C64>> = vec![vec![C64::zero(); g.grid.len()]; n];
    let mut left = u.clone();
    for pair in 0..n_time / 2 {
        let t0 = 2.0 * pair as f64 * dt;
        let mid = apply_eigen(&Propagator::new(spec, t0 + dt, false)?, &u, &g.grid);
        let right = apply_eigen(&Propagator::new(spec, t0 + 2.0 * dt, false)?, &u, &g.grid);
        for j in 0..n {
            let decay = cexp(-mu[j] * t0);
            let [w0, w1, w2] = weights[j].map(|w| w * decay);
            for (k, a) in acc[j].iter_mut().enumerate() {
                *a += w0 * left[j][k] + w1 * mid[j][k] + w2 * right[j][k];
            }
        }
        left = right;
    }
    let v = GridField::from_component_arrays(spec, g.grid, &acc);
    let norm_v = v.lp_norm(p)?;
    Ok(ResolventReport {
        lambda,
        p,
        ratio: norm_v / norm_g,
        bound: 1.0 / gap,
        norm_v,
        norm_g,
        t_max,
        n_time,
        truncation_estimate: truncation,
        aliasing_estimate: aliasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn scalar_spec(a: C64, b: C64, omega: f64) -> OuSpec {
        let s = RealMatrix::new(2, 2, vec![0.0, -omega, omega, 0.0]).unwrap();
        OuSpec::new(ComplexMatrix::from_diagonal(&[a]), ComplexMatrix::from_diagonal(&[b]), s, 2).unwrap()
    }

    fn pair_spec() -> OuSpec {
        // A = V diag(1+0.5i, 2) V⁻¹, B = V diag(0.3, -0.2+i) V⁻¹
        let v = ComplexMatrix::from_rows(&[vec![c(1., 0.), c(0.5, 0.5)], vec![c(0.2, 0.), c(1., -0.3)]]).unwrap();
        let vi = Lu::factor(&v).unwrap().inverse();
        let a = v.matmul(&ComplexMatrix::from_diagonal(&[c(1., 0.5), c(2., 0.)])).matmul(&vi);
        let b = v.matmul(&ComplexMatrix::from_diagonal(&[c(0.3, 0.), c(-0.2, 1.)])).matmul(&vi);
        let s = RealMatrix::new(2, 2, vec![0.0, -0.7, 0.7, 0.0]).unwrap();
        OuSpec::new(a, b, s, 2).unwrap()
    }

    #[test]
    fn classical_heat_kernel() {
        let spec = scalar_spec(c(1., 0.), c(0., 0.), 0.0);
        let (x, xi, t) = ([0.3, -1.0], [1.1, 0.4], 0.7);
        let h = kernel_eval(&spec, &x, &xi, t).unwrap()[(0, 0)];
        let r2 = 0.8 * 0.8 + 1.4 * 1.4;
        let expected = libm::exp(-r2 / (4.0 * t)) / (4.0 * PI * t);
        assert!((h - c(expected, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn peak_sits_on_rotated_point() {
        let spec = scalar_spec(c(0.8, 0.), c(0., 0.), 1.3);
        let t = 0.9;
        let x = [1.0, 2.0];
        let y = expm_skew(spec.s(), t).unwrap().mul_vec(&x);
        let h = kernel_eval(&spec, &x, &y, t).unwrap()[(0, 0)];
        assert!((h.re - 1.0 / (4.0 * PI * t * 0.8)).abs() < 1e-14 && h.im.abs() < 1e-15);
    }

    #[test]
    fn matrix_kernel_matches_scalar_kernels() {
        let spec = pair_spec();
        let (x, xi, t) = ([0.5, -0.2], [-0.3, 0.9], 0.6);
        let h = kernel_eval(&spec, &x, &xi, t).unwrap();
        let diag: Vec<C64> = spec
            .lambda_a()
            .iter()
            .zip(spec.lambda_b())
            .map(|(&la, &lb)| {
                let single = OuSpec::new(
                    ComplexMatrix::from_diagonal(&[la]),
                    ComplexMatrix::from_diagonal(&[lb]),
                    spec.s().clone(),
                    2,
                )
                .unwrap();
                kernel_eval(&single, &x, &xi, t).unwrap()[(0, 0)]
            })
            .collect();
        let v = spec.eigenvectors();
        let lhs = h.matmul(v);
        for i in 0..2 {
            for j in 0..2 {
                assert!((lhs[(i, j)] - v[(i, j)] * diag[j]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn spec_validation() {
        let s = RealMatrix::zeros(2, 2);
        let one = ComplexMatrix::identity(1);
        assert!(matches!(OuSpec::new(one.scale(c(-1., 0.)), one.clone(), s.clone(), 2), Err(crate::Error::Precondition(_))));
        assert!(matches!(OuSpec::new(one.clone(), one.clone(), s.clone(), 3), Err(crate::Error::Input(_))));
        let skewless = RealMatrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(matches!(OuSpec::new(one.clone(), one.clone(), skewless, 2), Err(crate::Error::Precondition(_))));
        // non-commuting pair
        let a = ComplexMatrix::from_diagonal(&[c(1., 0.), c(2., 0.)]);
        let b = ComplexMatrix::from_rows(&[vec![c(0., 0.), c(1., 0.)], vec![c(1., 0.), c(0., 0.)]]).unwrap();
        assert!(matches!(OuSpec::new(a, b, s.clone(), 2), Err(crate::Error::Precondition(_))));
        // repeated eigenvalue of A with a non-diagonal B still has a joint basis
        let b = ComplexMatrix::from_rows(&[vec![c(1., 0.), c(1., 0.)], vec![c(1., 0.), c(1., 0.)]]).unwrap();
        let spec = OuSpec::new(ComplexMatrix::identity(2), b, s.clone(), 2).unwrap();
        assert!(spec.beta_b().abs() < 1e-12);
        let spec = OuSpec::new(one.clone(), one.scale(c(1., 3.)), s, 2).unwrap();
        assert!((spec.beta_b() + 1.0).abs() < 1e-15);
        assert!(kernel_eval(&spec, &[0., 0.], &[0., 0.], 0.0).is_err());
    }

    #[test]
    fn grid_basics() {
        assert!(GridSpec::new(2, 7, 1.0).is_err());
        assert!(GridSpec::new(4, 9, 1.0).is_err());
        assert!(GridSpec::new(2, 9, 0.0).is_err());
        let g = GridSpec::new(2, 9, 2.0).unwrap();
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.point(0), vec![-2.0, -2.0]);
        assert_eq!(g.point(10), vec![-1.5, -1.5]);
        assert_eq!(g.refined().unwrap().n, 17);
        let one = GridField::from_fn(g, 1, |_| vec![c(1., 0.)]).unwrap();
        assert!((one.lp_norm(2.0).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn identity_at_time_zero() {
        let spec = scalar_spec(c(1., 0.), c(0., 0.), 1.0);
        let grid = GridSpec::new(2, 9, 2.0).unwrap();
        let f = GridField::from_fn(grid, 1, |x| vec![c(x[0], x[1])]).unwrap();
        assert_eq!(apply_semigroup(&spec, &f, 0.0).unwrap(), f);
    }

    #[test]
    fn mass_identity_default_grid() {
        let spec = pair_spec();
        let grid = GridSpec::default_for(2).unwrap();
        for &t in &[0.25, 1.0] {
            let rep = mass_check(&spec, &[0.5, -1.0], t, &grid).unwrap();
            assert!(rep.deviation < 1e-6, "t = {t}: {}", rep.deviation);
        }
        let b = ComplexMatrix::from_diagonal(&[c(1., 0.), c(2., 0.)]);
        let spec = OuSpec::new(ComplexMatrix::identity(2), b, RealMatrix::zeros(2, 2), 2).unwrap();
        let rep = mass_check(&spec, &[0.0, 0.0], 0.5, &grid).unwrap();
        assert!((rep.expected[(0, 0)].re - libm::exp(-0.5)).abs() < 1e-15);
        assert!((rep.expected[(1, 1)].re - libm::exp(-1.0)).abs() < 1e-15);
        assert!(rep.deviation < 1e-12);
    }

    #[test]
    fn truncation_precheck_reports_required_width() {
        let spec = scalar_spec(c(1., 0.), c(0., 0.), 0.0);
        let grid = GridSpec::new(2, 17, 2.0).unwrap();
        let err = mass_check(&spec, &[0., 0.], 1.0, &grid).unwrap_err();
        let crate::Error::Input(msg) = err else { panic!() };
        assert!(msg.contains("need L >="));
    }

    #[test]
    fn fitted_simpson_is_exact_for_quadratics() {
        // oracle: composite Simpson with many panels on e^{−μτ}(1 + 2τ − 3τ²)
        let q = |t: f64| 1.0 + 2.0 * t - 3.0 * t * t;
        for &mu in &[c(0.0, 0.0), c(1e-6, 2e-6), c(0.2, -0.1), c(1.0, 0.5), c(-0.3, 4.0), c(30.0, 0.0)] {
            let dt = 0.37;
            let w = fitted_simpson_weights(mu, dt);
            let got = w[0] * q(0.0) + w[1] * q(dt) + w[2] * q(2.0 * dt);
            let m = 20_000;
            let h = 2.0 * dt / m as f64;
            let f = |k: usize| (-mu * (k as f64 * h)).exp() * q(k as f64 * h);
            let mut sum = f(0) + f(m);
            for k in 1..m {
                sum += f(k) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            let exact = sum * (h / 3.0);
            assert!((got - exact).norm() < 1e-11, "{mu}: {got} vs {exact}");
        }
    }
}
