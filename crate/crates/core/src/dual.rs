//! Dual side of OCE risk measures: feasible densities, minimal penalties,
//! and numerical verification of `ρ(f) = sup_g { <g, -f> - α_min(g) }`.
//!
//! For `u = v(<w, .>)` the risk only sees `Y = <w, f>`, so a density `h`
//! has a finite penalty only when `h_i = q_i w` at every outcome. On that
//! slice the minimal penalty is `Σ_i μ_i φ(q_i)` with `φ` the conjugate of
//! the core, and feasibility reduces to `q >= 0`, `Σ μ_i q_i = 1`. The dual
//! search therefore runs over `p_i = μ_i q_i` on the probability simplex.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::oce::{oce, rho, Core, Utility};
use crate::ordered::{in_dual_feasible, pairing, DualDensity, OrderedSpace, RandomVector};
use crate::search::golden_maximize;
use crate::space::FiniteMeasureSpace;

/// Collinearity tolerance when reading `h` as `q w`.
const COLLINEAR_TOL: f64 = 1e-10;
/// Upper limit on lattice points of a uniform simplex grid.
pub const GRID_LIMIT: u128 = 400_000_000;
/// Lattice budget used by [`DualSearch::Auto`].
pub const AUTO_GRID_BUDGET: u128 = 3_000_000;
const POLISH_SWEEPS: usize = 200;

/// A density `h` with `h >= 0` and `Σ_i μ_i <h_i, z> = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFeasibleElement {
    density: DualDensity,
}

impl DualFeasibleElement {
    pub fn new(space: &FiniteMeasureSpace, order: &OrderedSpace, density: DualDensity) -> Result<Self> {
        if !in_dual_feasible(space, order, &density) {
            return Err(Error::InfeasibleDual("requires h >= 0 and Σ μ <h, z> = 1".into()));
        }
        Ok(Self { density })
    }

    /// `h_i = q_i w`.
    pub fn from_scalar_density(space: &FiniteMeasureSpace, order: &OrderedSpace, q: &[f64], w: &[f64]) -> Result<Self> {
        Self::new(space, order, DualDensity::from_density(q, w))
    }

    /// The reference measure itself in the direction of the utility weight.
    pub fn reference(space: &FiniteMeasureSpace, u: &Utility) -> Self {
        Self { density: DualDensity::from_density(&vec![1.0; space.len()], u.weight()) }
    }

    pub fn density(&self) -> &DualDensity {
        &self.density
    }
}

/// How a penalty value was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyMethod {
    ClosedForm,
    Grid,
    SupremumOverF { bound: f64 },
}

impl PenaltyMethod {
    pub fn tag(&self) -> String {
        match self {
            PenaltyMethod::ClosedForm => "closed-form".into(),
            PenaltyMethod::Grid => "grid".into(),
            PenaltyMethod::SupremumOverF { bound } => format!("supremum-over-f(box={bound})"),
        }
    }
}

/// Penalty in `[0, +inf]`. Numerical strategies report a lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyValue {
    pub value: f64,
    pub method: PenaltyMethod,
    pub lower_bound: bool,
}

impl PenaltyValue {
    pub fn is_infinite(&self) -> bool {
        self.value == f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyStrategy {
    /// Conjugate of the utility core.
    ClosedForm,
    /// `sup_f { <g, -f> - ρ(f) }` with `f` restricted to `[-bound, bound]^{n d}`.
    SupremumOverF { bound: f64, iterations: usize },
    /// `sup_{f ∈ A_ρ} <g, -f>` along the same box-restricted search.
    AcceptanceSet { bound: f64, iterations: usize },
}

/// Minimal penalty `α_min(g)`.
pub fn penalty_minimal(
    space: &FiniteMeasureSpace,
    order: &OrderedSpace,
    g: &DualFeasibleElement,
    u: &Utility,
    strategy: PenaltyStrategy,
) -> Result<PenaltyValue> {
    let h = g.density();
    if h.dimension() != u.weight().len() {
        return Err(Error::ShapeMismatch {
            expected: format!("dimension {}", u.weight().len()),
            actual: format!("{}", h.dimension()),
        });
    }
    match strategy {
        PenaltyStrategy::ClosedForm => {
            let value = match h.as_multiple_of(u.weight(), COLLINEAR_TOL) {
                Some(q) => closed_form_penalty(u.core(), space.weights(), &q),
                None => f64::INFINITY,
            };
            Ok(PenaltyValue { value, method: PenaltyMethod::ClosedForm, lower_bound: false })
        }
        PenaltyStrategy::SupremumOverF { bound, iterations } => {
            let value = box_supremum(space, order, h, u, bound, iterations, false)?;
            Ok(PenaltyValue { value, method: PenaltyMethod::SupremumOverF { bound }, lower_bound: true })
        }
        PenaltyStrategy::AcceptanceSet { bound, iterations } => {
            let value = box_supremum(space, order, h, u, bound, iterations, true)?;
            Ok(PenaltyValue { value, method: PenaltyMethod::SupremumOverF { bound }, lower_bound: true })
        }
    }
}

/// `Σ_i μ_i φ(q_i)` for a scalar density `q`.
pub(crate) fn closed_form_penalty(core: &Core, weights: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (m, &qi) in weights.iter().zip(q) {
        let phi = core.conjugate(qi);
        if phi == f64::INFINITY {
            return f64::INFINITY;
        }
        total += m * phi;
    }
    total
}

/// Projected ascent on `F(f) = <g, -f> - ρ(f)` over the box, using the
/// envelope supergradient `μ_i (v'(Y_i - η*) w - h_i)`.
pub(crate) fn box_supremum(
    space: &FiniteMeasureSpace,
    order: &OrderedSpace,
    h: &DualDensity,
    u: &Utility,
    bound: f64,
    iterations: usize,
    via_acceptance: bool,
) -> Result<f64> {
    if !(bound > 0.0) {
        return Err(Error::StrategyUnavailable(format!("box bound must be positive, got {bound}")));
    }
    let tol = 1e-10;
    let n = space.len();
    let d = u.weight().len();
    let evaluate = |f: &RandomVector| -> Result<(f64, f64)> {
        let r = oce(space, f, u, tol)?;
        let value = if via_acceptance {
            // shift into the acceptance set: f + ρ(f) z has zero risk
            let accepted = f.add_numeraire(order, &vec![-r.value; n]);
            -pairing(space, h, &accepted)?
        } else {
            -pairing(space, h, f)? + r.value
        };
        Ok((value, r.eta_star))
    };
    let mut f = RandomVector::zeros(n, d);
    let (mut value, mut eta) = evaluate(&f)?;
    let mut step = 0.5;
    for _ in 0..iterations {
        let ys = f.project(u.weight());
        let mut dir = vec![0.0; n * d];
        for i in 0..n {
            let slope = u.core().derivative(ys[i] - eta);
            for j in 0..d {
                dir[i * d + j] = slope * u.weight()[j] - h.row(i)[j];
            }
        }
        let mut moved = false;
        for _ in 0..50 {
            let cand: Vec<f64> =
                f.values().iter().zip(&dir).map(|(x, g)| (x + step * g).clamp(-bound, bound)).collect();
            let cand = RandomVector::new(n, d, cand)?;
            let (cv, ce) = evaluate(&cand)?;
            if cv > value {
                f = cand;
                value = cv;
                eta = ce;
                step *= 1.5;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok(value)
}

/// Strategy for the supremum over feasible densities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DualSearch {
    /// Uniform lattice on the simplex with `resolution` steps per coordinate,
    /// followed by exact pairwise-exchange line searches.
    Grid { resolution: usize },
    /// Projected supergradient ascent on the capped simplex.
    Ascent { iterations: usize },
    /// Grid for at most four outcomes (resolution capped by a lattice budget),
    /// ascent beyond.
    Auto { resolution: usize, iterations: usize },
}

impl Default for DualSearch {
    fn default() -> Self {
        DualSearch::Auto { resolution: 1000, iterations: 5000 }
    }
}

/// Best dual candidate found.
#[derive(Debug, Clone, PartialEq)]
pub struct DualResult {
    pub value: f64,
    /// Scalar density `q` (the argmax is `h_i = q_i w`).
    pub density: Vec<f64>,
    pub method: String,
    pub evaluations: usize,
}

/// `sup_g { <g, -f> - α_min(g) }` over feasible densities with finite penalty.
pub fn dual_value(space: &FiniteMeasureSpace, f: &RandomVector, u: &Utility, search: DualSearch) -> Result<DualResult> {
    if f.dimension() != u.weight().len() || f.outcomes() != space.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", space.len(), u.weight().len()),
            actual: format!("{}x{}", f.outcomes(), f.dimension()),
        });
    }
    maximize_over_densities(u.core(), space.weights(), &f.project(u.weight()), search)
}

/// Dual objective in simplex coordinates `p_i = μ_i q_i`.
fn dual_objective(core: &Core, weights: &[f64], ys: &[f64], p: &[f64]) -> f64 {
    let mut total = 0.0;
    for ((w, y), pi) in weights.iter().zip(ys).zip(p) {
        let phi = core.conjugate(pi / w);
        if phi == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
        total += -pi * y - w * phi;
    }
    total
}

pub(crate) fn maximize_over_densities(core: &Core, weights: &[f64], ys: &[f64], search: DualSearch) -> Result<DualResult> {
    let m = weights.len();
    let (mut p, mut evaluations, method) = match search {
        DualSearch::Grid { resolution } => {
            let (p, e) = grid_search(core, weights, ys, resolution)?;
            (p, e, format!("grid(resolution={resolution})+exchange"))
        }
        DualSearch::Ascent { iterations } => {
            let (p, e) = ascent(core, weights, ys, iterations);
            (p, e, format!("projected-ascent(iterations={iterations})+exchange"))
        }
        DualSearch::Auto { resolution, iterations } => {
            if m <= 4 {
                let mut r = resolution.max(1);
                while r > 1 && lattice_size(r, m) > AUTO_GRID_BUDGET {
                    r = r * 9 / 10;
                }
                let (p, e) = grid_search(core, weights, ys, r)?;
                (p, e, format!("grid(resolution={r})+exchange"))
            } else {
                let (p, e) = ascent(core, weights, ys, iterations);
                (p, e, format!("projected-ascent(iterations={iterations})+exchange"))
            }
        }
    };
    evaluations += polish(core, weights, ys, &mut p);
    let value = dual_objective(core, weights, ys, &p);
    let density = p.iter().zip(weights).map(|(pi, w)| pi / w).collect();
    Ok(DualResult { value, density, method, evaluations })
}

fn lattice_size(r: usize, m: usize) -> u128 {
    // C(r + m - 1, m - 1)
    let mut c: u128 = 1;
    for k in 1..m as u128 {
        c = c * (r as u128 + k) / k;
    }
    c
}

fn grid_search(core: &Core, weights: &[f64], ys: &[f64], resolution: usize) -> Result<(Vec<f64>, usize)> {
    let m = weights.len();
    if resolution == 0 {
        return Err(Error::StrategyUnavailable("grid resolution must be positive".into()));
    }
    let size = lattice_size(resolution, m);
    if size > GRID_LIMIT {
        return Err(Error::SearchBudget {
            reason: format!("simplex grid with {size} points exceeds the limit {GRID_LIMIT}"),
            best: f64::NAN,
        });
    }
    let r = resolution;
    // candidates are compared by value, ties broken by lexicographic order of
    // the lattice point, so the reduction is deterministic
    let best = (0..=r)
        .into_par_iter()
        .map(|k0| {
            let mut counts = vec![0usize; m];
            counts[0] = k0;
            let mut best: Option<(f64, Vec<usize>)> = None;
            let mut p = vec![0.0; m];
            enumerate(&mut counts, 1, r - k0, &mut |c| {
                if m == 1 && c[0] != r {
                    return;
                }
                for (pi, &ci) in p.iter_mut().zip(c) {
                    *pi = ci as f64 / r as f64;
                }
                let v = dual_objective(core, weights, ys, &p);
                if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                    best = Some((v, c.to_vec()));
                }
            });
            best
        })
        .reduce(|| None, pick_better);
    let (value, counts) = best.expect("lattice is non-empty");
    if value == f64::NEG_INFINITY {
        return Err(Error::SearchBudget { reason: "no lattice point has finite penalty".into(), best: value });
    }
    Ok((counts.iter().map(|&c| c as f64 / r as f64).collect(), size as usize))
}

fn pick_better(a: Option<(f64, Vec<usize>)>, b: Option<(f64, Vec<usize>)>) -> Option<(f64, Vec<usize>)> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => {
            if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                Some(b)
            } else {
                Some(a)
            }
        }
    }
}

/// Calls `visit` on every composition of the remaining mass into
/// `counts[pos..]`.
fn enumerate(counts: &mut [usize], pos: usize, remaining: usize, visit: &mut impl FnMut(&[usize])) {
    let m = counts.len();
    if pos >= m {
        if remaining == 0 {
            visit(counts);
        }
        return;
    }
    if pos == m - 1 {
        counts[pos] = remaining;
        visit(counts);
        return;
    }
    for k in 0..=remaining {
        counts[pos] = k;
        enumerate(counts, pos + 1, remaining - k, visit);
    }
}

/// Coordinate bounds of `p` from the density domain of the core.
fn p_bounds(core: &Core, weights: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = core.density_bounds();
    let lower = weights.iter().map(|w| lo * w).collect();
    let upper = weights.iter().map(|w| (hi * w).min(1.0)).collect();
    (lower, upper)
}

/// Exact line searches along the exchange directions `e_i - e_j`. For a
/// concave objective on a box-capped simplex these are the edge directions,
/// so a point with no improving exchange is optimal.
fn polish(core: &Core, weights: &[f64], ys: &[f64], p: &mut [f64]) -> usize {
    let m = p.len();
    let (lower, upper) = p_bounds(core, weights);
    let mut current = dual_objective(core, weights, ys, p);
    let mut evaluations = 0;
    for _ in 0..POLISH_SWEEPS {
        let mut improved = false;
        for i in 0..m {
            for j in 0..m {
                if i == j {
                    continue;
                }
                let reach = (upper[i] - p[i]).min(p[j] - lower[j]);
                if !(reach > 0.0) {
                    continue;
                }
                let (pi, pj) = (p[i], p[j]);
                let mut trial = p.to_vec();
                let line = golden_maximize(
                    |delta| {
                        trial[i] = pi + delta;
                        trial[j] = pj - delta;
                        dual_objective(core, weights, ys, &trial)
                    },
                    0.0,
                    reach,
                    1e-14,
                    200,
                );
                evaluations += line.iterations + 3;
                if line.value > current + 1e-15 {
                    p[i] = pi + line.x;
                    p[j] = pj - line.x;
                    current = line.value;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    evaluations
}

/// Euclidean projection onto `{ Σ p = 1, lower <= p <= upper }`.
fn project_capped_simplex(x: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    let mass = |tau: f64| -> f64 { x.iter().zip(lower).zip(upper).map(|((v, l), u)| (v - tau).clamp(*l, *u)).sum() };
    let span = x.iter().fold(0.0f64, |a, v| a.max(v.abs())) + 2.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    x.iter().zip(lower).zip(upper).map(|((v, l), u)| (v - tau).clamp(*l, *u)).collect()
}

fn ascent(core: &Core, weights: &[f64], ys: &[f64], iterations: usize) -> (Vec<f64>, usize) {
    let (lower, upper) = p_bounds(core, weights);
    let mut p = weights.to_vec();
    let mut best = p.clone();
    let mut best_value = dual_objective(core, weights, ys, &p);
    let scale = 1.0 + ys.iter().fold(0.0f64, |a, y| a.max(y.abs()));
    for k in 0..iterations {
        let grad: Vec<f64> = p
            .iter()
            .zip(weights)
            .zip(ys)
            .map(|((pi, w), y)| (-y - core.conjugate_slope(pi / w)).clamp(-1e6, 1e6))
            .collect();
        let step = 0.5 / (scale * ((k + 1) as f64).sqrt());
        let moved: Vec<f64> = p.iter().zip(&grad).map(|(pi, g)| pi + step * g).collect();
        p = project_capped_simplex(&moved, &lower, &upper);
        let v = dual_objective(core, weights, ys, &p);
        if v > best_value {
            best_value = v;
            best.clone_from(&p);
        }
    }
    (best, iterations + 1)
}

/// `ρ(f) <= tol`.
pub fn acceptance_test(space: &FiniteMeasureSpace, f: &RandomVector, u: &Utility, tol: f64) -> Result<bool> {
    Ok(rho(space, f, u, tol.min(1e-8))? <= tol)
}

/// Falsification test for `<g, f> >= 0` on the acceptance set.
///
/// Probes constructive counterexamples along every negative coordinate of
/// `h`, then `samples` random accepted positions. Returns `false` on the
/// first violation.
pub fn polar_cone_test<R: Rng>(
    space: &FiniteMeasureSpace,
    order: &OrderedSpace,
    g: &DualDensity,
    u: &Utility,
    samples: usize,
    rng: &mut R,
    tol: f64,
) -> Result<bool> {
    let n = space.len();
    let d = order.dimension();
    let solver_tol = 1e-10;
    let violates = |f: &RandomVector| -> Result<bool> {
        let risk = match rho(space, f, u, solver_tol) {
            Ok(r) => r,
            Err(Error::DomainViolation(_)) => return Ok(false),
            Err(e) => return Err(e),
        };
        let accepted = f.add_numeraire(order, &vec![risk.max(0.0); n]);
        Ok(pairing(space, g, &accepted)? < -tol)
    };
    for i in 0..n {
        for j in 0..d {
            if g.row(i)[j] >= 0.0 {
                continue;
            }
            for scale in [1.0, 10.0, 100.0] {
                let mut values = vec![0.0; n * d];
                values[i * d + j] = scale;
                if violates(&RandomVector::new(n, d, values)?)? {
                    return Ok(false);
                }
            }
        }
    }
    for _ in 0..samples {
        let values = (0..n * d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let f = RandomVector::new(n, d, values)?;
        let extra = rng.random_range(0.0..1.0);
        let risk = rho(space, &f, u, solver_tol)?;
        let accepted = f.add_numeraire(order, &vec![risk + extra; n]);
        if pairing(space, g, &accepted)? < -tol {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn entropic() -> Utility {
        Utility::scalar(Core::Exponential { rate: 1.0 }).unwrap()
    }

    fn cvar() -> Utility {
        Utility::scalar(Core::Cvar { level: 0.5 }).unwrap()
    }

    #[test]
    fn penalty_of_reference_measure_is_zero() {
        let s = FiniteMeasureSpace::uniform(3).unwrap();
        let order = OrderedSpace::scalar();
        for u in [entropic(), cvar()] {
            let g = DualFeasibleElement::reference(&s, &u);
            let p = penalty_minimal(&s, &order, &g, &u, PenaltyStrategy::ClosedForm).unwrap();
            assert!(p.value.abs() < 1e-15);
            assert!(!p.lower_bound);
        }
    }

    #[test]
    fn entropic_penalty_is_relative_entropy() {
        let s = FiniteMeasureSpace::uniform(2).unwrap();
        let order = OrderedSpace::scalar();
        let g = DualFeasibleElement::from_scalar_density(&s, &order, &[1.6, 0.4], &[1.0]).unwrap();
        let p = penalty_minimal(&s, &order, &g, &entropic(), PenaltyStrategy::ClosedForm).unwrap();
        let oracle = 0.5 * (1.6 * 1.6f64.ln() + 0.4 * 0.4f64.ln());
        assert!((p.value - oracle).abs() < 1e-14);
        assert!((p.value - 0.19274).abs() < 1e-5);
    }

    #[test]
    fn cvar_penalty_is_indicator() {
        let s = FiniteMeasureSpace::uniform(2).unwrap();
        let order = OrderedSpace::scalar();
        let g = DualFeasibleElement::from_scalar_density(&s, &order, &[1.6, 0.4], &[1.0]).unwrap();
        assert_eq!(penalty_minimal(&s, &order, &g, &cvar(), PenaltyStrategy::ClosedForm).unwrap().value, 0.0);
        let s3 = FiniteMeasureSpace::one_period(vec![0.2, 0.3, 0.5]).unwrap();
        let g = DualFeasibleElement::from_scalar_density(&s3, &order, &[2.5, 0.0, 1.0], &[1.0]).unwrap();
        assert!(penalty_minimal(&s3, &order, &g, &cvar(), PenaltyStrategy::ClosedForm).unwrap().is_infinite());
    }

    #[test]
    fn non_collinear_density_has_infinite_penalty() {
        let s = FiniteMeasureSpace::uniform(2).unwrap();
        let order = OrderedSpace::new(vec![1.0, 1.0]).unwrap();
        let u = Utility::new(Core::Exponential { rate: 1.0 }, vec![0.5, 0.5], &order).unwrap();
        let h = DualDensity::from_rows(&[vec![0.2, 0.8], vec![0.5, 0.5]]).unwrap();
        let g = DualFeasibleElement::new(&s, &order, h).unwrap();
        assert!(penalty_minimal(&s, &order, &g, &u, PenaltyStrategy::ClosedForm).unwrap().is_infinite());
    }

    #[test]
    fn infeasible_density_rejected() {
        let s = FiniteMeasureSpace::uniform(2).unwrap();
        let order = OrderedSpace::scalar();
        assert!(matches!(
            DualFeasibleElement::from_scalar_density(&s, &order, &[1.0, 1.5], &[1.0]),
            Err(Error::InfeasibleDual(_))
        ));
    }

    #[test]
    fn box_penalty_matches_closed_form() {
        let s = FiniteMeasureSpace::uniform(2).unwrap();
        let order = OrderedSpace::scalar();
        let u = entropic();
        let g = DualFeasibleElement::from_scalar_density(&s, &order, &[1.6, 0.4], &[1.0]).unwrap();
        let exact = penalty_minimal(&s, &order, &g, &u, PenaltyStrategy::ClosedForm).unwrap().value;
        let sup_f = penalty_minimal(&s, &order, &g, &u, PenaltyStrategy::SupremumOverF { bound: 10.0, iterations: 400 })
            .unwrap();
        let acc = penalty_minimal(&s, &order, &g, &u, PenaltyStrategy::AcceptanceSet { bound: 10.0, iterations: 400 })
            .unwrap();
        assert!(sup_f.lower_bound && acc.lower_bound);
        assert!(sup_f.value <= exact + 1e-9 && exact - sup_f.value < 1e-4, "{} vs {exact}", sup_f.value);
        assert!((sup_f.value - acc.value).abs() < 1e-4);
    }

    #[test]
    fn dual_value_examples() {
        let s = FiniteMeasureSpace::uniform(2).unwrap();
        let f = RandomVector::scalar(&[0.0, 1.0]).unwrap();
        let expected = (0.5 * (1.0 + (-1.0f64).exp())).ln();
        let r = dual_value(&s, &f, &entropic(), DualSearch::Grid { resolution: 1000 }).unwrap();
        assert!((r.value - expected).abs() < 1e-9, "{} vs {expected}", r.value);
        let r = dual_value(&s, &f, &cvar(), DualSearch::Grid { resolution: 1000 }).unwrap();
        assert!(r.value.abs() < 1e-12);
        let cash = RandomVector::scalar(&[2.0, 2.0]).unwrap();
        for u in [entropic(), cvar()] {
            let r = dual_value(&s, &cash, &u, DualSearch::default()).unwrap();
            assert!((r.value + 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ascent_matches_grid() {
        let s = FiniteMeasureSpace::one_period(vec![0.1, 0.2, 0.3, 0.15, 0.25]).unwrap();
        let f = RandomVector::scalar(&[0.3, -1.2, 0.8, 2.0, -0.4]).unwrap();
        for u in [entropic(), Utility::scalar(Core::Cvar { level: 0.7 }).unwrap()] {
            let primal = rho(&s, &f, &u, 1e-10).unwrap();
            let asc = dual_value(&s, &f, &u, DualSearch::Ascent { iterations: 2000 }).unwrap();
            assert!(asc.value <= primal + 1e-9);
            assert!((asc.value - primal).abs() < 1e-6, "{:?}: {} vs {primal}", u.core(), asc.value);
        }
    }

    #[test]
    fn grid_budget_is_enforced() {
        let s = FiniteMeasureSpace::uniform(8).unwrap();
        let f = RandomVector::scalar(&[0.0; 8]).unwrap();
        assert!(matches!(
            dual_value(&s, &f, &entropic(), DualSearch::Grid { resolution: 1000 }),
            Err(Error::SearchBudget { .. })
        ));
    }

    #[test]
    fn acceptance_examples() {
        let s = FiniteMeasureSpace::uniform(2).unwrap();
        let u = entropic();
        assert!(acceptance_test(&s, &RandomVector::zeros(2, 1), &u, 1e-9).unwrap());
        assert!(!acceptance_test(&s, &RandomVector::scalar(&[-1.0, -1.0]).unwrap(), &u, 1e-9).unwrap());
        assert!(acceptance_test(&s, &RandomVector::scalar(&[1.0, 1.0]).unwrap(), &u, 1e-9).unwrap());
    }

    #[test]
    fn polar_cone_examples() {
        let s = FiniteMeasureSpace::uniform(2).unwrap();
        let order = OrderedSpace::scalar();
        let mut rng = StdRng::seed_from_u64(3);
        for u in [entropic(), cvar()] {
            assert!(polar_cone_test(&s, &order, &DualDensity::zeros(2, 1), &u, 200, &mut rng, 1e-9).unwrap());
            let negative = DualDensity::from_density(&[-1.0, 3.0], &[1.0]);
            assert!(!polar_cone_test(&s, &order, &negative, &u, 200, &mut rng, 1e-9).unwrap());
        }
        let reference = DualFeasibleElement::reference(&s, &entropic());
        assert!(polar_cone_test(&s, &order, reference.density(), &entropic(), 500, &mut rng, 1e-9).unwrap());
    }
}
