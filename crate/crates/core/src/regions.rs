//! Geometric objects depending on the exponent `p`: the sector of admissible
//! eigenvalues, the scalar cone tests and the condition-number window for
//! Hermitian positive definite matrices.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;
use core::str::FromStr;

use crate::dissipativity::{check_exponent, threshold};
use crate::error::{input_err, Error, Result};
use crate::linalg::{cabs, carg, C64};

/// The open sector `{λ ≠ 0 : |arg λ| < half_angle}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectorSpec {
    pub p: f64,
    /// `arccos(|p−2|/p)`, in `(0, π/2]`.
    pub half_angle_rad: f64,
    /// `2√(p−1)/|p−2|`, the slope `|Im|/Re` of the boundary rays; `+∞` at `p = 2`.
    pub slope: f64,
}

impl SectorSpec {
    pub fn new(p: f64) -> Result<Self> {
        let p = check_exponent(p)?;
        let slope = if p == 2.0 { f64::INFINITY } else { 2.0 * libm::sqrt(p - 1.0) / libm::fabs(p - 2.0) };
        Ok(Self { p, half_angle_rad: libm::acos(threshold(p)), slope })
    }

    /// Same half-angle through the slope: `arctan(2√(p−1)/|p−2|)`.
    pub fn half_angle_from_slope(&self) -> f64 {
        libm::atan(self.slope)
    }

    pub fn contains(&self, lambda: C64) -> bool {
        lambda != C64::new(0.0, 0.0) && libm::fabs(carg(lambda)) < self.half_angle_rad
    }
}

/// Open window `(c_left, c_right)` for the spectral condition number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KappaWindow {
    pub p: f64,
    pub c_left: f64,
    pub c_right: f64,
}

impl KappaWindow {
    pub fn contains(&self, kappa: f64) -> bool {
        self.c_left < kappa && kappa < self.c_right
    }
}

/// `|p−2|/(2√(p−1))·|Im α| < Re α`.
pub fn cone_test_scalar(alpha: C64, p: f64) -> Result<bool> {
    let p = check_exponent(p)?;
    Ok(libm::fabs(p - 2.0) / (2.0 * libm::sqrt(p - 1.0)) * libm::fabs(alpha.im) < alpha.re)
}

/// `|arg α| < arccos(|p−2|/p)`.
pub fn cone_test_arg(alpha: C64, p: f64) -> Result<bool> {
    Ok(SectorSpec::new(p)?.contains(alpha))
}

/// `Re α/|α| > |p−2|/p`, the one-dimensional antieigenvalue test.
pub fn cone_test_threshold(alpha: C64, p: f64) -> Result<bool> {
    let p = check_exponent(p)?;
    let modulus = cabs(alpha);
    Ok(modulus > 0.0 && alpha.re / modulus > threshold(p))
}

/// `|arg λ| < arccos(|p−2|/p)`; `λ = 0` is never inside.
pub fn sector_membership(lambda: C64, p: f64) -> Result<bool> {
    cone_test_arg(lambda, p)
}

/// `C_{L,R}(p) = (p² + 4p − 4 ∓ 4p√(p−1)) / (p−2)²`.
///
/// The left end is evaluated as `(p−2)² / (p² + 4p − 4 + 4p√(p−1))`, which
/// is the same number (the product of the two numerators is `(p−2)⁴`) without
/// the cancellation near `p = 2`.
pub fn kappa_window(p: f64) -> Result<KappaWindow> {
    let p = check_exponent(p)?;
    if p == 2.0 {
        return Err(input_err!("the condition-number window is unbounded at p = 2"));
    }
    let wide = p * p + 4.0 * p - 4.0 + 4.0 * p * libm::sqrt(p - 1.0);
    let den = (p - 2.0) * (p - 2.0);
    Ok(KappaWindow { p, c_left: den / wide, c_right: wide / den })
}

/// The same window written through `q = |p−2|/p`: `(2 − q² ∓ 2√(1−q²))/q²`.
pub fn kappa_window_from_threshold(p: f64) -> Result<KappaWindow> {
    let p = check_exponent(p)?;
    if p == 2.0 {
        return Err(input_err!("the condition-number window is unbounded at p = 2"));
    }
    let q2 = threshold(p) * threshold(p);
    let root = 2.0 * libm::sqrt(1.0 - q2);
    Ok(KappaWindow { p, c_left: (2.0 - q2 - root) / q2, c_right: (2.0 - q2 + root) / q2 })
}

/// A list of exponents, parsed from `start:stop:step` (inclusive of `stop`
/// up to rounding) or a comma-separated list.
#[derive(Clone, Debug, PartialEq)]
pub struct PGrid(pub Vec<f64>);

impl FromStr for PGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let num = |t: &str| -> Result<f64> {
            t.trim().parse::<f64>().map_err(|_| input_err!("malformed number {t:?} in range {s:?}"))
        };
        let values = if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let [start, stop, step] = parts[..] else {
                return Err(input_err!("range {s:?} is not start:stop:step"));
            };
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0 && step.is_finite() && start.is_finite() && stop.is_finite() && stop >= start) {
                return Err(input_err!("range {s:?} needs finite start <= stop and step > 0"));
            }
            let count = libm::floor((stop - start) / step + 1e-9) as usize + 1;
            if count > 1_000_000 {
                return Err(input_err!("range {s:?} has too many points"));
            }
            (0..count).map(|k| start + k as f64 * step).collect()
        } else {
            s.split(',').map(num).collect::<Result<Vec<f64>>>()?
        };
        for &p in &values {
            check_exponent(p)?;
        }
        if values.is_empty() {
            return Err(input_err!("empty p grid"));
        }
        Ok(Self(values))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionKind {
    Sector,
    Kappa,
}

impl FromStr for RegionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sector" => Ok(Self::Sector),
            "kappa" => Ok(Self::Kappa),
            _ => Err(input_err!("unknown region kind {s:?}, expected sector or kappa")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RegionRow {
    Sector { p: f64, half_angle_rad: f64 },
    /// `None` marks the unbounded window at `p = 2`.
    Kappa { p: f64, window: Option<KappaWindow> },
}

pub fn region_rows(kind: RegionKind, grid: &PGrid) -> Result<Vec<RegionRow>> {
    grid.0
        .iter()
        .map(|&p| match kind {
            RegionKind::Sector => Ok(RegionRow::Sector { p, half_angle_rad: SectorSpec::new(p)?.half_angle_rad }),
            RegionKind::Kappa if p == 2.0 => Ok(RegionRow::Kappa { p, window: None }),
            RegionKind::Kappa => Ok(RegionRow::Kappa { p, window: Some(kappa_window(p)?) }),
        })
        .collect()
}

/// 12 significant digits, plain `.` decimal point.
pub fn format_sig12(x: f64) -> String {
    let mut s = String::new();
    let _ = write!(s, "{x:.11e}");
    s
}

/// CSV with a header line; the unbounded window is written as `unbounded`.
pub fn emit_region_table(kind: RegionKind, grid: &PGrid) -> Result<String> {
    let rows = region_rows(kind, grid)?;
    let mut out = String::from(match kind {
        RegionKind::Sector => "p,half_angle_rad\n",
        RegionKind::Kappa => "p,c_left,c_right\n",
    });
    for row in rows {
        let line = match row {
            RegionRow::Sector { p, half_angle_rad } => {
                alloc::format!("{},{}\n", format_sig12(p), format_sig12(half_angle_rad))
            }
            RegionRow::Kappa { p, window: Some(w) } => {
                alloc::format!("{},{},{}\n", format_sig12(p), format_sig12(w.c_left), format_sig12(w.c_right))
            }
            RegionRow::Kappa { p, window: None } => alloc::format!("{},unbounded,unbounded\n", format_sig12(p)),
        };
        out.push_str(&line);
    }
    Ok(out)
}
