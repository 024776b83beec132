//! Multi-start projected gradient descent on the unit sphere `S^{n-1} ⊂ ℝⁿ`.
//!
//! Each restart draws a uniform starting point, projects the Euclidean
//! gradient onto the tangent space, steps with a Barzilai–Borwein trial
//! length, retracts by normalization and backtracks until the Armijo
//! condition holds. A restart ends when the tangential gradient is below
//! the tolerance, when no step decreases the value, or when the value has
//! stopped moving beyond rounding for a run of steps. Restart `k` draws
//! from ChaCha stream `k` of the seed, and the winner is the lexicographic
//! minimum of `(value, k)`, so results do not depend on the order in which
//! restarts are run.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{input_err, numerical_err, Result};

/// Default seed used everywhere a seed is not supplied.
pub const DEFAULT_SEED: u64 = 0x5EED_A171;

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
const MAX_START_ATTEMPTS: usize = 64;
/// Consecutive steps without meaningful decrease after which a restart is
/// treated as stationary to rounding.
const STALL_STEPS: usize = 25;
const STALL_REL_DECREASE: f64 = 1e-14;

/// A smooth function on the sphere, evaluated in ambient coordinates.
pub trait SphereObjective: Sync {
    fn dim(&self) -> usize;

    /// Writes the Euclidean gradient into `grad` and returns the value, or
    /// `None` where the function is undefined.
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> Option<f64>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerOptions {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop once the tangential gradient norm drops below this.
    pub tol: f64,
    pub seed: u64,
    /// Worker threads for restarts; only honoured with the `std` feature.
    pub threads: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self { restarts: 64, max_iters: 10_000, tol: 1e-10, seed: DEFAULT_SEED, threads: 1 }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(input_err!("restarts must be positive"));
        }
        if self.max_iters == 0 {
            return Err(input_err!("max_iters must be positive"));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(input_err!("tol must be positive and finite, got {}", self.tol));
        }
        Ok(())
    }

    pub fn with_restarts(self, restarts: usize) -> Self {
        Self { restarts, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// Outcome of a single restart.
#[derive(Clone, Debug)]
pub struct RestartOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct SphereMinimum {
    pub point: Vec<f64>,
    pub value: f64,
    /// Index of the winning restart.
    pub restart: usize,
    pub grad_norm: f64,
    pub converged: bool,
    /// Restarts that produced a finite value.
    pub restarts_used: usize,
    /// Final value of every restart, `NaN` where a restart failed to start.
    pub history: Vec<f64>,
}

/// Deterministic generator for restart `index` of `seed`.
pub fn restart_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Uniform point on `S^{n-1}`.
pub fn random_unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let norm = libm::sqrt(v.iter().map(|x| x * x).sum());
        if norm > 1e-8 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project_tangent(x: &[f64], grad: &[f64], out: &mut [f64]) -> f64 {
    let radial = dot(x, grad);
    for ((o, &g), &xi) in out.iter_mut().zip(grad).zip(x) {
        *o = g - radial * xi;
    }
    libm::sqrt(dot(out, out))
}

/// Runs one restart from the given starting point.
pub fn descend<O: SphereObjective + ?Sized>(
    obj: &O,
    start: Vec<f64>,
    max_iters: usize,
    tol: f64,
) -> Option<RestartOutcome> {
    let n = obj.dim();
    let mut x = start;
    let mut grad = vec![0.0; n];
    let mut f = obj.eval(&x, &mut grad)?;
    let mut rgrad = vec![0.0; n];
    let mut gnorm = project_tangent(&x, &grad, &mut rgrad);

    let mut prev_x = x.clone();
    let mut prev_rgrad = rgrad.clone();
    let mut trial = vec![0.0; n];
    let mut trial_grad = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = gnorm <= tol;
    let mut stalled = 0;

    while !converged && iterations < max_iters {
        iterations += 1;
        let mut step = if iterations == 1 {
            1.0 / gnorm.max(1.0)
        } else {
            let s: Vec<f64> = x.iter().zip(&prev_x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = rgrad.iter().zip(&prev_rgrad).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 0.0 {
                (dot(&s, &s) / sy).clamp(1e-10, 1e10)
            } else {
                1.0 / gnorm.max(1.0)
            }
        };

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            for ((t, &xi), &gi) in trial.iter_mut().zip(&x).zip(&rgrad) {
                *t = xi - step * gi;
            }
            let norm = libm::sqrt(dot(&trial, &trial));
            trial.iter_mut().for_each(|t| *t /= norm);
            if let Some(ft) = obj.eval(&trial, &mut trial_grad) {
                if ft <= f - ARMIJO_C1 * step * gnorm * gnorm {
                    accepted = Some(ft);
                    break;
                }
            }
            step *= 0.5;
        }
        let Some(ft) = accepted else {
            // no sufficient decrease representable: stationary to rounding
            break;
        };
        if f - ft <= STALL_REL_DECREASE * (1.0 + libm::fabs(f)) {
            stalled += 1;
        } else {
            stalled = 0;
        }
        core::mem::swap(&mut prev_x, &mut x);
        core::mem::swap(&mut prev_rgrad, &mut rgrad);
        x.copy_from_slice(&trial);
        grad.copy_from_slice(&trial_grad);
        f = ft;
        gnorm = project_tangent(&x, &grad, &mut rgrad);
        converged = gnorm <= tol;
        if stalled >= STALL_STEPS {
            // gradient stuck above `tol` at the rounding floor
            break;
        }
    }
    Some(RestartOutcome { point: x, value: f, grad_norm: gnorm, iterations, converged })
}

/// One full restart: draw starting points until the objective is defined,
/// then descend.
pub fn run_restart<O: SphereObjective + ?Sized>(
    obj: &O,
    opts: &OptimizerOptions,
    index: usize,
) -> Option<RestartOutcome> {
    let mut rng = restart_rng(opts.seed, index);
    let mut scratch = vec![0.0; obj.dim()];
    for _ in 0..MAX_START_ATTEMPTS {
        let start = random_unit_vector(&mut rng, obj.dim());
        if obj.eval(&start, &mut scratch).is_none() {
            continue;
        }
        if let Some(out) = descend(obj, start, opts.max_iters, opts.tol) {
            return Some(out);
        }
    }
    None
}

fn run_all<O: SphereObjective + ?Sized>(obj: &O, opts: &OptimizerOptions) -> Vec<Option<RestartOutcome>> {
    #[cfg(feature = "std")]
    if opts.threads > 1 && opts.restarts > 1 {
        let workers = opts.threads.min(opts.restarts);
        let mut slots: Vec<Option<RestartOutcome>> = vec![None; opts.restarts];
        std::thread::scope(|scope| {
            let chunk = opts.restarts.div_ceil(workers);
            for (w, slot) in slots.chunks_mut(chunk).enumerate() {
                scope.spawn(move || {
                    for (k, out) in slot.iter_mut().enumerate() {
                        *out = run_restart(obj, opts, w * chunk + k);
                    }
                });
            }
        });
        return slots;
    }
    (0..opts.restarts).map(|k| run_restart(obj, opts, k)).collect()
}

/// Multi-start minimization. Fails only if no restart ever found a point
/// where the objective is defined.
pub fn minimize<O: SphereObjective + ?Sized>(obj: &O, opts: &OptimizerOptions) -> Result<SphereMinimum> {
    opts.validate()?;
    if obj.dim() == 0 {
        return Err(input_err!("sphere dimension must be positive"));
    }
    let outcomes = run_all(obj, opts);
    let history: Vec<f64> = outcomes.iter().map(|o| o.as_ref().map_or(f64::NAN, |o| o.value)).collect();
    let restarts_used = outcomes.iter().filter(|o| o.is_some()).count();
    let (restart, best) = outcomes
        .into_iter()
        .enumerate()
        .filter_map(|(k, o)| o.map(|o| (k, o)))
        .filter(|(_, o)| o.value.is_finite())
        .min_by(|(ka, a), (kb, b)| a.value.total_cmp(&b.value).then(ka.cmp(kb)))
        .ok_or_else(|| numerical_err!("every restart landed where the objective is undefined"))?;
    Ok(SphereMinimum {
        point: best.point,
        value: best.value,
        restart,
        grad_norm: best.grad_norm,
        converged: best.converged,
        restarts_used,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Rayleigh quotient xᵀDx for diagonal D; minimum is min(D).
    struct Rayleigh(Vec<f64>);

    impl SphereObjective for Rayleigh {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn eval(&self, x: &[f64], grad: &mut [f64]) -> Option<f64> {
            let mut f = 0.0;
            for ((g, &xi), &d) in grad.iter_mut().zip(x).zip(&self.0) {
                *g = 2.0 * d * xi;
                f += d * xi * xi;
            }
            Some(f)
        }
    }

    struct Nowhere;

    impl SphereObjective for Nowhere {
        fn dim(&self) -> usize {
            3
        }
        fn eval(&self, _: &[f64], _: &mut [f64]) -> Option<f64> {
            None
        }
    }

    #[test]
    fn finds_smallest_eigenvalue() {
        let obj = Rayleigh(vec![3.0, -1.5, 0.25, 10.0]);
        let best = minimize(&obj, &OptimizerOptions::default().with_restarts(4)).unwrap();
        assert!((best.value + 1.5).abs() < 1e-14);
        assert!((best.point[1].abs() - 1.0).abs() < 1e-8);
        assert_eq!(best.restarts_used, 4);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let obj = Rayleigh(vec![1.0, 2.0, 0.5]);
        let opts = OptimizerOptions::default().with_restarts(5);
        let a = minimize(&obj, &opts).unwrap();
        let b = minimize(&obj, &opts).unwrap();
        assert_eq!(a.point, b.point);
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn undefined_everywhere_is_numerical_failure() {
        let err = minimize(&Nowhere, &OptimizerOptions::default().with_restarts(2)).unwrap_err();
        assert!(matches!(err, crate::Error::Numerical(_)));
    }

    #[test]
    fn rejects_bad_options() {
        let obj = Rayleigh(vec![1.0]);
        let opts = OptimizerOptions { tol: -1.0, ..Default::default() };
        assert!(matches!(minimize(&obj, &opts), Err(crate::Error::Input(_))));
    }

    #[test]
    fn restart_streams_differ() {
        let a = random_unit_vector(&mut restart_rng(7, 0), 4);
        let b = random_unit_vector(&mut restart_rng(7, 1), 4);
        assert_ne!(a, b);
        let a2 = random_unit_vector(&mut restart_rng(7, 0), 4);
        assert_eq!(a, a2);
    }
}
