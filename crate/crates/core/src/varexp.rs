//! Variable-exponent modulars and Luxemburg norms on a finite space.
//!
//! For `f` with values in `E = R^d` the modular is
//! `Σ_i μ_i ‖f_i‖^{p_i}` with the Euclidean norm on `E`, and the Luxemburg
//! norm is the gauge `inf { λ > 0 : modular(f / λ) <= 1 }`. Because the
//! weights form a probability, `λ = max_i ‖f_i‖` is always feasible, so
//! bisection on `[0, max_i ‖f_i‖]` brackets the norm.

use crate::error::{Error, Result};
use crate::ordered::{pairing, DualDensity, RandomVector};
use crate::space::FiniteMeasureSpace;

pub const DEFAULT_NORM_TOL: f64 = 1e-10;
const MAX_BISECTIONS: usize = 200;

/// Per-outcome exponent `p(ω) ∈ (1, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFunction {
    p: Vec<f64>,
}

impl ExponentFunction {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::EmptySpace);
        }
        for (index, &value) in p.iter().enumerate() {
            if !(value > 1.0 && value.is_finite()) {
                return Err(Error::ExponentOutOfRange { index, value });
            }
        }
        Ok(Self { p })
    }

    pub fn constant(n: usize, q: f64) -> Result<Self> {
        Self::new(vec![q; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    pub fn p_minus(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn p_plus(&self) -> f64 {
        self.p.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Pointwise conjugate exponent `p / (p - 1)`.
    pub fn dual(&self) -> Result<Self> {
        Self::new(self.p.iter().map(|&p| p / (p - 1.0)).collect())
    }
}

/// `Σ_i μ_i ‖f_i‖^{p_i}`.
pub fn modular(space: &FiniteMeasureSpace, f: &RandomVector, p: &ExponentFunction) -> Result<f64> {
    check(space, f.outcomes(), p)?;
    Ok(modular_of(space.weights(), &magnitudes(f.rows()), p.values(), 1.0))
}

/// Luxemburg norm of a random vector by bisection to bracket width `tol`.
pub fn luxemburg_norm(space: &FiniteMeasureSpace, f: &RandomVector, p: &ExponentFunction, tol: f64) -> Result<f64> {
    check(space, f.outcomes(), p)?;
    let (lo, hi) = norm_bracket(space.weights(), &magnitudes(f.rows()), p.values(), tol)?;
    Ok(0.5 * (lo + hi))
}

/// Luxemburg norm of a dual density, usually with the dual exponent.
pub fn luxemburg_norm_dual(space: &FiniteMeasureSpace, g: &DualDensity, p: &ExponentFunction, tol: f64) -> Result<f64> {
    check(space, g.outcomes(), p)?;
    let (lo, hi) = norm_bracket(space.weights(), &magnitudes(g.rows()), p.values(), tol)?;
    Ok(0.5 * (lo + hi))
}

/// `p / (p - 1)` per outcome; rejects exponents at the boundary.
pub fn dual_exponent(p: &ExponentFunction) -> Result<ExponentFunction> {
    p.dual()
}

/// `2 ‖f‖_{p(.)} ‖g‖_{p'(.)} - |<g, f>|`, nonnegative by the Hölder inequality.
///
/// Both norms use the upper end of their bisection bracket, so rounding in
/// the root-finding never makes the gap spuriously negative.
pub fn holder_gap(space: &FiniteMeasureSpace, f: &RandomVector, g: &DualDensity, p: &ExponentFunction) -> Result<f64> {
    check(space, f.outcomes(), p)?;
    check(space, g.outcomes(), p)?;
    let q = p.dual()?;
    let (_, nf) = norm_bracket(space.weights(), &magnitudes(f.rows()), p.values(), DEFAULT_NORM_TOL)?;
    let (_, ng) = norm_bracket(space.weights(), &magnitudes(g.rows()), q.values(), DEFAULT_NORM_TOL)?;
    Ok(2.0 * nf * ng - pairing(space, g, f)?.abs())
}

fn magnitudes<'a>(rows: impl Iterator<Item = &'a [f64]>) -> Vec<f64> {
    rows.map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt()).collect()
}

fn modular_of(weights: &[f64], mags: &[f64], p: &[f64], lambda: f64) -> f64 {
    weights.iter().zip(mags).zip(p).map(|((m, a), q)| m * (a / lambda).powf(*q)).sum()
}

fn norm_bracket(weights: &[f64], mags: &[f64], p: &[f64], tol: f64) -> Result<(f64, f64)> {
    if !(tol > 0.0) {
        return Err(Error::NonPositiveTolerance(tol));
    }
    let top = mags.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return Ok((0.0, 0.0));
    }
    let (mut lo, mut hi) = (0.0, top);
    for _ in 0..MAX_BISECTIONS {
        if hi - lo < tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if modular_of(weights, mags, p, mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

fn check(space: &FiniteMeasureSpace, n: usize, p: &ExponentFunction) -> Result<()> {
    if n != space.len() || p.values().len() != space.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} outcomes", space.len()),
            actual: format!("values {n}, exponents {}", p.values().len()),
        });
    }
    Ok(())
}
