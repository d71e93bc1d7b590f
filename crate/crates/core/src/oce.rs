//! Utilities on `E` and the optimized certainty equivalent
//! `S_u(f) = sup_η { η + E u(f - η z) }`.
//!
//! A utility is a scalar core `v` composed with a weight `w` in the dual
//! cone, `u(x) = v(<w, x>)`, where `<w, z> = 1`. Then
//! `u(f - η z) = v(Y - η)` with `Y = <w, f>`, which turns the supremum into
//! a one-dimensional concave maximization. Cores are normalized with
//! `v(0) = 0` and `1 ∈ ∂v(0)`, so the maximizer lies between `min Y` and
//! `max Y`.

use crate::error::{Error, Result};
use crate::ordered::{dot, OrderedSpace, RandomVector, FEASIBILITY_TOLERANCE};
use crate::search::golden_maximize;
use crate::space::FiniteMeasureSpace;

pub const DEFAULT_SOLVER_TOL: f64 = 1e-8;
const MAX_GOLDEN_STEPS: usize = 300;
/// Largest exponent argument accepted before the exponential core is
/// considered to leave its finite domain.
const MAX_EXP_ARGUMENT: f64 = 700.0;
const BOUND_SLACK: f64 = 1e-12;

/// Scalar concave core `v` with `v(0) = 0` and slopes straddling 1 at 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Core {
    /// `v(t) = (1 - exp(-γ t)) / γ`.
    Exponential { rate: f64 },
    /// `v(t) = min(t, 0) / (1 - α)`.
    Cvar { level: f64 },
    /// `v(t) = a t` for `t < 0`, `b t` for `t >= 0`, with `a >= 1 >= b >= 0`.
    PiecewiseLinear { loss_slope: f64, gain_slope: f64 },
}

impl Core {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Core::Exponential { rate } if !(rate > 0.0 && rate.is_finite()) => {
                Err(Error::InadmissibleUtility(format!("exponential rate must be positive, got {rate}")))
            }
            Core::Cvar { level } if !(level > 0.0 && level < 1.0) => {
                Err(Error::InadmissibleUtility(format!("cvar level must lie in (0, 1), got {level}")))
            }
            Core::PiecewiseLinear { loss_slope: a, gain_slope: b }
                if !(a.is_finite() && a >= 1.0 && (0.0..=1.0).contains(&b)) =>
            {
                Err(Error::InadmissibleUtility(format!("slopes must satisfy a >= 1 >= b >= 0, got a = {a}, b = {b}")))
            }
            _ => Ok(()),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Core::Exponential { .. } => "exponential",
            Core::Cvar { .. } => "cvar",
            Core::PiecewiseLinear { .. } => "piecewise",
        }
    }

    /// `(a, b)` slopes left and right of zero, for the piecewise-linear cores.
    pub fn slopes(&self) -> Option<(f64, f64)> {
        match *self {
            Core::Exponential { .. } => None,
            Core::Cvar { level } => Some((1.0 / (1.0 - level), 0.0)),
            Core::PiecewiseLinear { loss_slope, gain_slope } => Some((loss_slope, gain_slope)),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match (*self, self.slopes()) {
            (Core::Exponential { rate }, _) => -(-rate * t).exp_m1() / rate,
            (_, Some((a, b))) => {
                if t < 0.0 {
                    a * t
                } else {
                    b * t
                }
            }
            _ => unreachable!(),
        }
    }

    /// An element of the superdifferential; `1` at the kink.
    pub fn derivative(&self, t: f64) -> f64 {
        match (*self, self.slopes()) {
            (Core::Exponential { rate }, _) => (-rate * t).exp(),
            (_, Some((a, b))) => {
                if t < 0.0 {
                    a
                } else if t > 0.0 {
                    b
                } else {
                    1.0
                }
            }
            _ => unreachable!(),
        }
    }

    /// `v^{-1}(s)`, when `v` is strictly increasing.
    pub fn inverse(&self, s: f64) -> Result<f64> {
        match (*self, self.slopes()) {
            (Core::Exponential { rate }, _) => {
                if rate * s >= 1.0 {
                    return Err(Error::DomainViolation(format!("{s} outside the range of the exponential core")));
                }
                Ok(-(-rate * s).ln_1p() / rate)
            }
            (_, Some((_, b))) if b == 0.0 => {
                Err(Error::NotInvertible(format!("{} core is flat on [0, inf)", self.family())))
            }
            (_, Some((a, b))) => Ok(if s < 0.0 { s / a } else { s / b }),
            _ => unreachable!(),
        }
    }

    /// Convex conjugate density cost `φ(q) = sup_t { v(t) - q t }`
    /// (`+inf` outside its domain).
    pub fn conjugate(&self, q: f64) -> f64 {
        let (lo, hi) = self.density_bounds();
        if q < lo - BOUND_SLACK || q > hi + BOUND_SLACK {
            return f64::INFINITY;
        }
        match *self {
            Core::Exponential { rate } => {
                if q <= 0.0 {
                    1.0 / rate
                } else {
                    (q * q.ln() - q + 1.0) / rate
                }
            }
            _ => 0.0,
        }
    }

    /// Derivative of `φ` on the interior of its domain.
    pub fn conjugate_slope(&self, q: f64) -> f64 {
        match *self {
            Core::Exponential { rate } => q.max(f64::MIN_POSITIVE).ln() / rate,
            _ => 0.0,
        }
    }

    /// Domain `[lo, hi]` of `φ`, i.e. the admissible density values.
    pub fn density_bounds(&self) -> (f64, f64) {
        match self.slopes() {
            None => (0.0, f64::INFINITY),
            Some((a, b)) => (b, a),
        }
    }
}

/// `u(x) = v(<w, x>)` with `w` in the dual cone and `<w, z> = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Utility {
    core: Core,
    weight: Vec<f64>,
}

impl Utility {
    pub fn new(core: Core, weight: Vec<f64>, order: &OrderedSpace) -> Result<Self> {
        core.validate()?;
        if weight.len() != order.dimension() {
            return Err(Error::InadmissibleUtility(format!(
                "weight has dimension {}, space has {}",
                weight.len(),
                order.dimension()
            )));
        }
        if weight.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InadmissibleUtility("weight must lie in the dual cone".into()));
        }
        let mass = dot(&weight, order.numeraire());
        if (mass - 1.0).abs() > FEASIBILITY_TOLERANCE {
            return Err(Error::InadmissibleUtility(format!("<w, z> = {mass}, expected 1")));
        }
        Ok(Self { core, weight })
    }

    /// Weight `z / |z|^2`, the canonical choice with `<w, z> = 1`.
    pub fn with_default_weight(core: Core, order: &OrderedSpace) -> Result<Self> {
        let z = order.numeraire();
        let zz = dot(z, z);
        Self::new(core, z.iter().map(|c| c / zz).collect(), order)
    }

    /// One-dimensional utility with `z = 1`, `w = 1`.
    pub fn scalar(core: Core) -> Result<Self> {
        Self::new(core, vec![1.0], &OrderedSpace::scalar())
    }

    pub fn core(&self) -> &Core {
        &self.core
    }

    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.core.eval(dot(&self.weight, x))
    }

    fn check(&self, f: &RandomVector, space: &FiniteMeasureSpace) -> Result<()> {
        if f.dimension() != self.weight.len() || f.outcomes() != space.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", space.len(), self.weight.len()),
                actual: format!("{}x{}", f.outcomes(), f.dimension()),
            });
        }
        Ok(())
    }
}

/// Value of the optimized certainty equivalent with its maximizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OceResult {
    pub value: f64,
    pub eta_star: f64,
    pub iterations: usize,
}

/// `η + Σ_i w_i v(y_i - η)`.
pub(crate) fn objective(core: &Core, weights: &[f64], ys: &[f64], eta: f64) -> f64 {
    eta + weights.iter().zip(ys).map(|(w, y)| w * core.eval(y - eta)).sum::<f64>()
}

/// OCE of scalar outcomes `ys` under probability `weights`.
pub(crate) fn oce_scalar(core: &Core, weights: &[f64], ys: &[f64], tol: f64) -> Result<OceResult> {
    if !(tol > 0.0) {
        return Err(Error::NonPositiveTolerance(tol));
    }
    let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        // a constant is its own certainty equivalent: v(0) = 0 at η = y
        return Ok(OceResult { value: lo, eta_star: lo, iterations: 0 });
    }
    if core.slopes().is_some() {
        // concave piecewise-linear in η with kinks at the y_i: exact on breakpoints
        let mut best = OceResult { value: f64::NEG_INFINITY, eta_star: lo, iterations: 0 };
        for &eta in ys {
            let value = objective(core, weights, ys, eta);
            best.iterations += 1;
            if value > best.value || (value == best.value && eta < best.eta_star) {
                best.value = value;
                best.eta_star = eta;
            }
        }
        return Ok(best);
    }
    if let Core::Exponential { rate } = core {
        if rate * (hi - lo + 2.0) > MAX_EXP_ARGUMENT {
            return Err(Error::DomainViolation(format!(
                "exponential core overflows for payoff spread {} at rate {rate}",
                hi - lo
            )));
        }
    }
    let line = golden_maximize(|eta| objective(core, weights, ys, eta), lo - 1.0, hi + 1.0, tol, MAX_GOLDEN_STEPS);
    if !line.value.is_finite() {
        return Err(Error::DomainViolation("objective is not finite".into()));
    }
    Ok(OceResult { value: line.value, eta_star: line.x, iterations: line.iterations })
}

/// `S_u(f)`.
pub fn oce(space: &FiniteMeasureSpace, f: &RandomVector, u: &Utility, tol: f64) -> Result<OceResult> {
    u.check(f, space)?;
    oce_scalar(&u.core, space.weights(), &f.project(&u.weight), tol)
}

/// The induced risk measure `ρ(f) = -S_u(f)`.
pub fn rho(space: &FiniteMeasureSpace, f: &RandomVector, u: &Utility, tol: f64) -> Result<f64> {
    Ok(-oce(space, f, u, tol)?.value)
}

/// `C_u(f) = v^{-1}(E v(<w, f>))`.
pub fn certainty_equivalent(space: &FiniteMeasureSpace, f: &RandomVector, u: &Utility) -> Result<f64> {
    u.check(f, space)?;
    // probe invertibility first so flat cores are reported even when E u(f) < 0
    u.core.inverse(0.0)?;
    let expected = space.expectation(&f.project(&u.weight).iter().map(|&y| u.core.eval(y)).collect::<Vec<_>>());
    u.core.inverse(expected)
}

/// Signs of `S_u(f1) - S_u(f2)` and `C_u(f1) - C_u(f2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsdReport {
    pub su_diff: f64,
    pub cu_diff: f64,
    pub su_order: i8,
    pub cu_order: i8,
}

impl SsdReport {
    /// Whether the orderings agree when both differences are resolved.
    pub fn agree(&self) -> bool {
        self.su_order == 0 || self.cu_order == 0 || self.su_order == self.cu_order
    }
}

pub fn ssd_compare(
    space: &FiniteMeasureSpace,
    f1: &RandomVector,
    f2: &RandomVector,
    u: &Utility,
    tol: f64,
) -> Result<SsdReport> {
    let cu_diff = certainty_equivalent(space, f1, u)? - certainty_equivalent(space, f2, u)?;
    let su_diff = oce(space, f1, u, tol)?.value - oce(space, f2, u, tol)?.value;
    let sign = |x: f64| if x.abs() <= tol { 0 } else if x > 0.0 { 1 } else { -1 };
    Ok(SsdReport { su_diff, cu_diff, su_order: sign(su_diff), cu_order: sign(cu_diff) })
}

/// `a S_u(f) - S_u(a f)` for `a > 1`, `S_u(a f) - a S_u(f)` for `0 <= a <= 1`;
/// both are nonnegative for admissible utilities.
pub fn subhomogeneity_gap(space: &FiniteMeasureSpace, f: &RandomVector, u: &Utility, a: f64, tol: f64) -> Result<f64> {
    if !(a >= 0.0) {
        return Err(Error::NegativeScale(a));
    }
    let base = oce(space, f, u, tol)?.value;
    let scaled = oce(space, &f.scale(a), u, tol)?.value;
    Ok(if a > 1.0 { a * base - scaled } else { scaled - a * base })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entropic() -> Utility {
        Utility::scalar(Core::Exponential { rate: 1.0 }).unwrap()
    }

    fn cvar(level: f64) -> Utility {
        Utility::scalar(Core::Cvar { level }).unwrap()
    }

    fn two_point() -> (FiniteMeasureSpace, RandomVector) {
        (FiniteMeasureSpace::uniform(2).unwrap(), RandomVector::scalar(&[0.0, 1.0]).unwrap())
    }

    #[test]
    fn cash_is_its_own_oce() {
        let s = FiniteMeasureSpace::one_period(vec![0.3, 0.7]).unwrap();
        let f = RandomVector::scalar(&[2.0, 2.0]).unwrap();
        for u in [entropic(), cvar(0.5), Utility::scalar(Core::PiecewiseLinear { loss_slope: 3.0, gain_slope: 0.5 }).unwrap()] {
            let r = oce(&s, &f, &u, 1e-10).unwrap();
            assert!((r.value - 2.0).abs() < 1e-12, "{:?}: {}", u.core(), r.value);
        }
    }

    #[test]
    fn entropic_two_point() {
        let (s, f) = two_point();
        let expected = -(0.5 * (1.0 + (-1.0f64).exp())).ln();
        let r = oce(&s, &f, &entropic(), 1e-10).unwrap();
        assert!((r.value - expected).abs() < 1e-12);
        assert!((r.value - 0.37989).abs() < 1e-5);
        assert!((rho(&s, &f, &entropic(), 1e-10).unwrap() + expected).abs() < 1e-12);
    }

    #[test]
    fn cvar_two_point_is_zero() {
        let (s, f) = two_point();
        let r = oce(&s, &f, &cvar(0.5), 1e-10).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn rho_translation_and_normalization() {
        let (s, f) = two_point();
        let order = OrderedSpace::scalar();
        let u = entropic();
        assert!(rho(&s, &RandomVector::zeros(2, 1), &u, 1e-10).unwrap().abs() < 1e-14);
        let shifted = f.add_numeraire(&order, &[1.5, 1.5]);
        let lhs = rho(&s, &shifted, &u, 1e-10).unwrap();
        assert!((lhs - (rho(&s, &f, &u, 1e-10).unwrap() - 1.5)).abs() < 1e-12);
    }

    #[test]
    fn certainty_equivalent_examples() {
        let s = FiniteMeasureSpace::one_period(vec![0.4, 0.6]).unwrap();
        let c = certainty_equivalent(&s, &RandomVector::scalar(&[2.0, 2.0]).unwrap(), &entropic()).unwrap();
        assert!((c - 2.0).abs() < 1e-14);
        let (s2, f) = two_point();
        let expected = -(0.5 * (1.0 + (-1.0f64).exp())).ln();
        assert!((certainty_equivalent(&s2, &f, &entropic()).unwrap() - expected).abs() < 1e-14);
        let s1 = FiniteMeasureSpace::one_period(vec![1.0]).unwrap();
        let c = certainty_equivalent(&s1, &RandomVector::scalar(&[7.0]).unwrap(), &entropic()).unwrap();
        assert!((c - 7.0).abs() < 1e-12);
        assert!(matches!(certainty_equivalent(&s2, &f, &cvar(0.5)), Err(Error::NotInvertible(_))));
    }

    #[test]
    fn ssd_examples() {
        let (s, f) = two_point();
        let u = entropic();
        let same = ssd_compare(&s, &f, &f, &u, 1e-9).unwrap();
        assert_eq!((same.su_order, same.cu_order), (0, 0));
        let up = f.add_numeraire(&OrderedSpace::scalar(), &[1.0, 1.0]);
        let r = ssd_compare(&s, &up, &f, &u, 1e-9).unwrap();
        assert_eq!((r.su_order, r.cu_order), (1, 1));
        assert!(ssd_compare(&s, &up, &f, &cvar(0.3), 1e-9).is_err());
    }

    #[test]
    fn subhomogeneity_examples() {
        let (s, f) = two_point();
        let u = entropic();
        assert!(subhomogeneity_gap(&s, &f, &u, 1.0, 1e-10).unwrap().abs() < 1e-12);
        assert!(subhomogeneity_gap(&s, &f, &u, 0.0, 1e-10).unwrap().abs() < 1e-12);
        let s1 = -(0.5 * (1.0 + (-1.0f64).exp())).ln();
        let s2 = -(0.5 * (1.0 + (-2.0f64).exp())).ln();
        let gap = subhomogeneity_gap(&s, &f, &u, 2.0, 1e-10).unwrap();
        assert!((gap - (2.0 * s1 - s2)).abs() < 1e-10);
        assert!((gap - 0.193_552).abs() < 1e-6);
        assert!(matches!(subhomogeneity_gap(&s, &f, &u, -1.0, 1e-10), Err(Error::NegativeScale(_))));
    }

    #[test]
    fn admissibility() {
        assert!(Utility::scalar(Core::Exponential { rate: 0.0 }).is_err());
        assert!(Utility::scalar(Core::Cvar { level: 1.0 }).is_err());
        assert!(Utility::scalar(Core::PiecewiseLinear { loss_slope: 0.9, gain_slope: 0.5 }).is_err());
        assert!(Utility::scalar(Core::PiecewiseLinear { loss_slope: 2.0, gain_slope: 1.2 }).is_err());
        let order = OrderedSpace::new(vec![1.0, 1.0]).unwrap();
        assert!(Utility::new(Core::Cvar { level: 0.5 }, vec![0.5, 0.6], &order).is_err());
        assert!(Utility::new(Core::Cvar { level: 0.5 }, vec![-0.5, 1.5], &order).is_err());
        let u = Utility::with_default_weight(Core::Cvar { level: 0.5 }, &order).unwrap();
        assert_eq!(u.weight(), &[0.5, 0.5]);
        let (s, f) = two_point();
        assert!(matches!(oce(&s, &f, &entropic(), 0.0), Err(Error::NonPositiveTolerance(_))));
    }

    #[test]
    fn exponential_domain_violation_is_rejected() {
        let s = FiniteMeasureSpace::uniform(2).unwrap();
        let f = RandomVector::scalar(&[0.0, 1000.0]).unwrap();
        assert!(matches!(oce(&s, &f, &entropic(), 1e-8), Err(Error::DomainViolation(_))));
    }

    #[test]
    fn conjugates_match_their_definition() {
        // φ(q) = sup_t v(t) - q t, checked on a fine grid of t
        for core in [Core::Exponential { rate: 1.3 }, Core::Cvar { level: 0.4 }] {
            for &q in &[0.2, 0.9, 1.0, 1.5] {
                let grid = (-4000..=4000).map(|k| k as f64 * 0.005);
                let sup = grid.map(|t| core.eval(t) - q * t).fold(f64::NEG_INFINITY, f64::max);
                let phi = core.conjugate(q);
                assert!((sup - phi).abs() < 1e-4, "{core:?} q={q}: {sup} vs {phi}");
            }
        }
        assert_eq!(Core::Cvar { level: 0.5 }.conjugate(2.5), f64::INFINITY);
        assert_eq!(Core::Exponential { rate: 1.0 }.conjugate(-0.1), f64::INFINITY);
    }
}
