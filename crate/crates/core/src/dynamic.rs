//! Conditional OCE risk measures on a filtration tree.
//!
//! A level-`t` evaluation is a real function constant on the atoms of `P_t`.
//! The conditional OCE `sup_η { η + E[u(f - η z) | F_t] }` over
//! `F_t`-measurable `η` decouples across atoms, so every atom is a
//! one-dimensional problem under the normalized atom weights.
//!
//! Dual elements at level `t` are normalized per atom, `E[<h, z> | F_t] = 1`.
//! For a density `h = q w` with atom mean `κ = E[q | A]`, the minimal
//! conditional penalty on `A` is `κ E[φ(q / κ) | A]` (zero when `κ = 0`).

use rand::Rng;

use crate::dual::{box_supremum, closed_form_penalty, maximize_over_densities, DualSearch, PenaltyMethod, PenaltyStrategy};
use crate::error::{Error, Result};
use crate::oce::{oce_scalar, Core, Utility};
use crate::ordered::{pointwise_pairing, DualDensity, OrderedSpace, RandomVector};
use crate::space::FiniteMeasureSpace;

const COLLINEAR_TOL: f64 = 1e-10;
/// Tolerance on `f1 + f2 = f` in [`decompose_acceptance`].
pub const DECOMPOSITION_SUM_TOL: f64 = 1e-12;

/// A level-`t` random variable stored by atom and expanded to outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalValue {
    level: usize,
    atoms: Vec<f64>,
    values: Vec<f64>,
}

impl ConditionalValue {
    pub fn from_atoms(space: &FiniteMeasureSpace, t: usize, atoms: Vec<f64>) -> Result<Self> {
        let partition = space.filtration().partition(t)?;
        if atoms.len() != partition.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} atoms at level {t}", partition.len()),
                actual: format!("{}", atoms.len()),
            });
        }
        let mut values = vec![0.0; space.len()];
        for (members, &a) in partition.iter().zip(&atoms) {
            for &i in members {
                values[i] = a;
            }
        }
        Ok(Self { level: t, atoms, values })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn atom_values(&self) -> &[f64] {
        &self.atoms
    }

    /// Per-outcome values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.atoms.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    fn negated(mut self) -> Self {
        self.atoms.iter_mut().for_each(|x| *x = -*x);
        self.values.iter_mut().for_each(|x| *x = -*x);
        self
    }
}

/// Per-level conditional risk measures `(ρ_t)_{t = 0..T}`.
#[derive(Debug, Clone, PartialEq)]
pub enum DynamicFamily {
    /// `ρ_t = -S_{u_t}(. | F_t)`. A single utility is used at every level.
    Conditional { utilities: Vec<Utility> },
    /// `ρ_T(f) = -<w, f>`, `ρ_t(f) = ρ_t^{step}(-ρ_{t+1}(f) z)`.
    Composed { steps: Vec<Utility>, terminal_weight: Vec<f64> },
}

impl DynamicFamily {
    pub fn conditional(u: Utility) -> Self {
        DynamicFamily::Conditional { utilities: vec![u] }
    }

    /// One utility per level `0..=T`.
    pub fn level_dependent(utilities: Vec<Utility>) -> Result<Self> {
        if utilities.is_empty() {
            return Err(Error::MissingLevel(0));
        }
        Ok(DynamicFamily::Conditional { utilities })
    }

    /// Composition of the same one-step measure over `horizon` steps.
    pub fn composed(u: Utility, horizon: usize) -> Result<Self> {
        compose_recursive(vec![u; horizon], horizon)
    }

    pub fn utility_at(&self, t: usize) -> Result<&Utility> {
        let list = match self {
            DynamicFamily::Conditional { utilities } => utilities,
            DynamicFamily::Composed { steps, .. } => steps,
        };
        match list.len() {
            1 => Ok(&list[0]),
            _ => list.get(t).ok_or(Error::MissingLevel(t)),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            DynamicFamily::Conditional { utilities } => utilities[0].weight().len(),
            DynamicFamily::Composed { terminal_weight, .. } => terminal_weight.len(),
        }
    }

    pub fn tag(&self) -> String {
        match self {
            DynamicFamily::Conditional { utilities } => format!("conditional-{}", utilities[0].core().family()),
            DynamicFamily::Composed { steps, .. } => format!("composed-{}", steps[0].core().family()),
        }
    }
}

/// Builds `ρ̃_t(f) = ρ_t^{step}(-ρ̃_{t+1}(f) z)` backward from `ρ̃_T(f) = -<w, f>`,
/// with `steps[t]` the one-step measure from `t + 1` to `t`. The terminal
/// weight is the one of the last step.
pub fn compose_recursive(steps: Vec<Utility>, horizon: usize) -> Result<DynamicFamily> {
    if horizon == 0 {
        return Err(Error::InvalidLevels("composition needs a horizon of at least one step".into()));
    }
    if steps.len() < horizon {
        return Err(Error::MissingLevel(steps.len()));
    }
    let terminal_weight = steps[horizon - 1].weight().to_vec();
    if steps.iter().any(|u| u.weight().len() != terminal_weight.len()) {
        return Err(Error::InadmissibleUtility("one-step measures disagree on the dimension".into()));
    }
    Ok(DynamicFamily::Composed { steps, terminal_weight })
}

fn check_shape(space: &FiniteMeasureSpace, f: &RandomVector, d: usize) -> Result<()> {
    if f.outcomes() != space.len() || f.dimension() != d {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{d}", space.len()),
            actual: format!("{}x{}", f.outcomes(), f.dimension()),
        });
    }
    Ok(())
}

/// Per-atom OCE of the scalar outcomes `ys` at level `t`.
fn atomwise_oce(space: &FiniteMeasureSpace, core: &Core, ys: &[f64], t: usize, tol: f64) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for atom in space.atoms_at(t)? {
        if let [i] = atom.members[..] {
            out.push(ys[i]);
            continue;
        }
        let weights: Vec<f64> = atom.members.iter().map(|&i| space.weights()[i] / atom.mass).collect();
        let local: Vec<f64> = atom.members.iter().map(|&i| ys[i]).collect();
        out.push(oce_scalar(core, &weights, &local, tol)?.value);
    }
    Ok(out)
}

/// `S_u(f | F_t)`, atom by atom.
pub fn conditional_oce(space: &FiniteMeasureSpace, f: &RandomVector, u: &Utility, t: usize, tol: f64) -> Result<ConditionalValue> {
    space.check_level(t)?;
    check_shape(space, f, u.weight().len())?;
    let s = atomwise_oce(space, u.core(), &f.project(u.weight()), t, tol)?;
    ConditionalValue::from_atoms(space, t, s)
}

/// Level-`t` risk of `f` under the family.
pub fn rho_t(space: &FiniteMeasureSpace, f: &RandomVector, family: &DynamicFamily, t: usize, tol: f64) -> Result<ConditionalValue> {
    space.check_level(t)?;
    match family {
        DynamicFamily::Conditional { .. } => Ok(conditional_oce(space, f, family.utility_at(t)?, t, tol)?.negated()),
        DynamicFamily::Composed { steps, terminal_weight } => {
            let horizon = space.horizon();
            if steps.len() < horizon {
                return Err(Error::MissingLevel(steps.len()));
            }
            check_shape(space, f, terminal_weight.len())?;
            // every step acts on -ρ̃_{k+1}(f) z, whose projection is the scalar itself
            let mut current = f.project(terminal_weight);
            for k in (t..horizon).rev() {
                let s = atomwise_oce(space, steps[k].core(), &current, k, tol)?;
                current = ConditionalValue::from_atoms(space, k, s)?.values;
            }
            let atoms = space.filtration().partition(t)?.iter().map(|m| -current[m[0]]).collect();
            ConditionalValue::from_atoms(space, t, atoms)
        }
    }
}

/// `E[<h, -f> | F_t]`.
pub fn conditional_pairing(space: &FiniteMeasureSpace, g: &DualDensity, f: &RandomVector, t: usize) -> Result<ConditionalValue> {
    if g.outcomes() != space.len() {
        return Err(Error::ShapeMismatch { expected: format!("{} outcomes", space.len()), actual: format!("{}", g.outcomes()) });
    }
    let local: Vec<f64> = pointwise_pairing(g, f)?.into_iter().map(|x| -x).collect();
    let atoms = space
        .atoms_at(t)?
        .iter()
        .map(|a| a.members.iter().map(|&i| space.weights()[i] * local[i]).sum::<f64>() / a.mass)
        .collect();
    ConditionalValue::from_atoms(space, t, atoms)
}

/// Minimal conditional penalty with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalPenalty {
    pub value: ConditionalValue,
    pub method: PenaltyMethod,
    pub lower_bound: bool,
}

/// `α_t^min(g)` per atom: `ess sup_{f ∈ A_t} <g, -f>_t`.
pub fn conditional_penalty_min(
    space: &FiniteMeasureSpace,
    order: &OrderedSpace,
    g: &DualDensity,
    u: &Utility,
    t: usize,
    strategy: PenaltyStrategy,
) -> Result<ConditionalPenalty> {
    if g.outcomes() != space.len() || g.dimension() != u.weight().len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", space.len(), u.weight().len()),
            actual: format!("{}x{}", g.outcomes(), g.dimension()),
        });
    }
    let atoms = space.atoms_at(t)?;
    match strategy {
        PenaltyStrategy::ClosedForm => {
            let values = match g.as_multiple_of(u.weight(), COLLINEAR_TOL) {
                None => vec![f64::INFINITY; atoms.len()],
                Some(q) => atoms
                    .iter()
                    .map(|a| {
                        let weights: Vec<f64> = a.members.iter().map(|&i| space.weights()[i] / a.mass).collect();
                        let local: Vec<f64> = a.members.iter().map(|&i| q[i]).collect();
                        let kappa: f64 = weights.iter().zip(&local).map(|(w, x)| w * x).sum();
                        if kappa <= 0.0 {
                            return 0.0;
                        }
                        let scaled: Vec<f64> = local.iter().map(|x| x / kappa).collect();
                        kappa * closed_form_penalty(u.core(), &weights, &scaled)
                    })
                    .collect(),
            };
            Ok(ConditionalPenalty {
                value: ConditionalValue::from_atoms(space, t, values)?,
                method: PenaltyMethod::ClosedForm,
                lower_bound: false,
            })
        }
        PenaltyStrategy::AcceptanceSet { bound, iterations } => {
            let mut values = Vec::with_capacity(atoms.len());
            for a in &atoms {
                let weights: Vec<f64> = a.members.iter().map(|&i| space.weights()[i] / a.mass).collect();
                let local = FiniteMeasureSpace::one_period(weights)?;
                let rows: Vec<Vec<f64>> = a.members.iter().map(|&i| g.row(i).to_vec()).collect();
                let h = DualDensity::from_rows(&rows)?;
                values.push(box_supremum(&local, order, &h, u, bound, iterations, true)?);
            }
            Ok(ConditionalPenalty {
                value: ConditionalValue::from_atoms(space, t, values)?,
                method: PenaltyMethod::SupremumOverF { bound },
                lower_bound: true,
            })
        }
        PenaltyStrategy::SupremumOverF { .. } => Err(Error::StrategyUnavailable(
            "the conditional penalty is computed from the conditional acceptance set".into(),
        )),
    }
}

/// Atomwise comparison of `ρ_t(f)` with its robust representation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDualReport {
    pub primal: ConditionalValue,
    pub dual: ConditionalValue,
    pub max_gap: f64,
    pub method: String,
}

/// `ρ_t(f)` against `sup_g { <g, -f>_t - α_t^min(g) }` over conditionally
/// normalized densities, one atom at a time.
pub fn conditional_dual_check(
    space: &FiniteMeasureSpace,
    f: &RandomVector,
    u: &Utility,
    t: usize,
    search: DualSearch,
    tol: f64,
) -> Result<ConditionalDualReport> {
    let primal = conditional_oce(space, f, u, t, tol)?.negated();
    let ys = f.project(u.weight());
    let mut dual = Vec::new();
    let mut method = String::new();
    for a in space.atoms_at(t)? {
        let weights: Vec<f64> = a.members.iter().map(|&i| space.weights()[i] / a.mass).collect();
        let local: Vec<f64> = a.members.iter().map(|&i| ys[i]).collect();
        let r = maximize_over_densities(u.core(), &weights, &local, search)?;
        if method.is_empty() || a.members.len() > 1 {
            method = r.method;
        }
        dual.push(r.value);
    }
    let dual = ConditionalValue::from_atoms(space, t, dual)?;
    let max_gap = primal.max_abs_diff(&dual);
    Ok(ConditionalDualReport { primal, dual, max_gap, method })
}

fn check_pair(space: &FiniteMeasureSpace, t: usize, s: usize) -> Result<()> {
    if s == 0 || t + s > space.horizon() {
        return Err(Error::InvalidLevels(format!("need 0 <= t < t + s <= {}, got t = {t}, s = {s}", space.horizon())));
    }
    Ok(())
}

/// `ρ_t(f) <= tol` on every atom.
pub fn in_acceptance_set(space: &FiniteMeasureSpace, f: &RandomVector, family: &DynamicFamily, t: usize, tol: f64) -> Result<bool> {
    Ok(rho_t(space, f, family, t, tol.min(1e-8))?.max() <= tol)
}

/// Membership in `A_{t, t+s}`: accepted at `t` and constant on the atoms of `P_{t+s}`.
pub fn in_stepped_acceptance_set(
    space: &FiniteMeasureSpace,
    f: &RandomVector,
    family: &DynamicFamily,
    t: usize,
    s: usize,
    tol: f64,
) -> Result<bool> {
    check_pair(space, t, s)?;
    Ok(space.is_measurable(f.values(), f.dimension(), t + s, 0.0)? && in_acceptance_set(space, f, family, t, tol)?)
}

fn sample_payoff<R: Rng>(rng: &mut R, n: usize, d: usize, bound: f64) -> Result<RandomVector> {
    RandomVector::new(n, d, (0..n * d).map(|_| rng.random_range(-bound..=bound)).collect())
}

fn sample_level_constant<R: Rng>(rng: &mut R, space: &FiniteMeasureSpace, t: usize, lo: f64, hi: f64) -> Result<ConditionalValue> {
    let k = space.filtration().partition(t)?.len();
    ConditionalValue::from_atoms(space, t, (0..k).map(|_| rng.random_range(lo..=hi)).collect())
}

/// Outcome of sampling the level-`t` acceptance sets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AcceptanceReport {
    pub trials: usize,
    /// Raw samples that happened to lie in `A_t`.
    pub accepted: usize,
    /// Raw `P_{t+s}`-measurable samples that lay in `A_{t, t+s}`.
    pub stepped_accepted: usize,
    pub convexity_violations: usize,
    pub solidity_violations: usize,
    pub stepped_violations: usize,
    pub normalization: bool,
}

impl AcceptanceReport {
    pub fn violations(&self) -> usize {
        self.convexity_violations + self.solidity_violations + self.stepped_violations + usize::from(!self.normalization)
    }
}

/// Samples positions in `[-2, 2]^{n d}`, pushes them into `A_t` by level-`t`
/// cash, and checks conditional convexity, solidity and normalization,
/// together with closure of `A_{t, t+s}` under the same operations.
#[allow(clippy::too_many_arguments)]
pub fn acceptance_sets<R: Rng>(
    space: &FiniteMeasureSpace,
    order: &OrderedSpace,
    family: &DynamicFamily,
    t: usize,
    s: usize,
    trials: usize,
    rng: &mut R,
    tol: f64,
) -> Result<AcceptanceReport> {
    check_pair(space, t, s)?;
    let (n, d) = (space.len(), family.dimension());
    let solver_tol = 1e-10;
    let zero = RandomVector::zeros(n, d);
    let mut report = AcceptanceReport {
        trials,
        normalization: rho_t(space, &zero, family, t, solver_tol)?.values().iter().all(|r| r.abs() <= tol),
        ..Default::default()
    };
    let push_in = |f: &RandomVector, extra: &ConditionalValue| -> Result<RandomVector> {
        let r = rho_t(space, f, family, t, solver_tol)?;
        let shift: Vec<f64> = r.values().iter().zip(extra.values()).map(|(a, b)| a + b).collect();
        Ok(f.add_numeraire(order, &shift))
    };
    for _ in 0..trials {
        let f1 = sample_payoff(rng, n, d, 2.0)?;
        let f2 = sample_payoff(rng, n, d, 2.0)?;
        if in_acceptance_set(space, &f1, family, t, tol)? {
            report.accepted += 1;
        }
        let a1 = push_in(&f1, &sample_level_constant(rng, space, t, 0.0, 0.5)?)?;
        let a2 = push_in(&f2, &sample_level_constant(rng, space, t, 0.0, 0.5)?)?;
        let lambda = sample_level_constant(rng, space, t, 0.0, 1.0)?;
        if !in_acceptance_set(space, &a1.mix(&a2, lambda.values())?, family, t, tol)? {
            report.convexity_violations += 1;
        }
        let k = RandomVector::new(n, d, (0..n * d).map(|_| rng.random_range(0.0..=1.0)).collect())?;
        if !in_acceptance_set(space, &a1.add(&k)?, family, t, tol)? {
            report.solidity_violations += 1;
        }

        // stepped set: average onto P_{t+s}, then the same closure checks
        let s1 = RandomVector::new(n, d, space.conditional_expectation_vec(f1.values(), d, t + s)?)?;
        let s2 = RandomVector::new(n, d, space.conditional_expectation_vec(f2.values(), d, t + s)?)?;
        if in_stepped_acceptance_set(space, &s1, family, t, s, tol)? {
            report.stepped_accepted += 1;
        }
        let b1 = push_in(&s1, &sample_level_constant(rng, space, t, 0.0, 0.5)?)?;
        let b2 = push_in(&s2, &sample_level_constant(rng, space, t, 0.0, 0.5)?)?;
        let mixed = b1.mix(&b2, lambda.values())?;
        let kc = sample_level_constant(rng, space, t + s, 0.0, 1.0)?;
        let raised = b1.add_numeraire(order, kc.values());
        for member in [&b1, &b2, &mixed, &raised] {
            if !in_stepped_acceptance_set(space, member, family, t, s, tol)? {
                report.stepped_violations += 1;
            }
        }
    }
    Ok(report)
}

/// Recursion audit for one pair of levels `(t, t + s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub level: usize,
    pub step: usize,
    pub trials: usize,
    pub tolerance: f64,
    /// `max ‖ρ_t(-ρ_{t+s}(f) z) - ρ_t(f)‖_∞` over the samples.
    pub max_residual: f64,
    /// The sample attaining the largest residual, when it exceeds the tolerance.
    pub witness: Option<RandomVector>,
    /// Pairs with `ρ_{t+s}(f1) <= ρ_{t+s}(f2)` but `ρ_t(f1) > ρ_t(f2)`.
    pub implication_violations: usize,
    pub implication_witness: Option<(RandomVector, RandomVector)>,
}

impl ConsistencyReport {
    pub fn consistent(&self) -> bool {
        self.max_residual <= self.tolerance
    }

    pub fn verdict(&self) -> &'static str {
        if self.consistent() {
            "consistent"
        } else {
            "inconsistent"
        }
    }
}

/// Randomized audit of `ρ_t(-ρ_{t+s}(f) z) = ρ_t(f)` and of the ordering
/// implication, with leaf payoffs drawn from `[-2, 2]`.
#[allow(clippy::too_many_arguments)]
pub fn consistency_audit<R: Rng>(
    space: &FiniteMeasureSpace,
    order: &OrderedSpace,
    family: &DynamicFamily,
    t: usize,
    s: usize,
    trials: usize,
    tol: f64,
    rng: &mut R,
) -> Result<ConsistencyReport> {
    check_pair(space, t, s)?;
    let (n, d) = (space.len(), family.dimension());
    let solver_tol = 1e-10;
    let mut report = ConsistencyReport {
        level: t,
        step: s,
        trials,
        tolerance: tol,
        max_residual: 0.0,
        witness: None,
        implication_violations: 0,
        implication_witness: None,
    };
    let mut worst: Option<RandomVector> = None;
    for _ in 0..trials {
        let f = sample_payoff(rng, n, d, 2.0)?;
        let later = rho_t(space, &f, family, t + s, solver_tol)?;
        let cash: Vec<f64> = later.values().iter().map(|r| -r).collect();
        let recursed = rho_t(space, &RandomVector::numeraire_multiple(order, &cash), family, t, solver_tol)?;
        let direct = rho_t(space, &f, family, t, solver_tol)?;
        let residual = recursed.max_abs_diff(&direct);
        if residual > report.max_residual {
            report.max_residual = residual;
            worst = Some(f.clone());
        }

        // f2 := g + (ρ_{t+s}(g) - ρ_{t+s}(f) - δ) z has ρ_{t+s}(f2) = ρ_{t+s}(f) + δ
        let g = sample_payoff(rng, n, d, 2.0)?;
        let delta = sample_level_constant(rng, space, t + s, 0.0, 0.1)?;
        let rg = rho_t(space, &g, family, t + s, solver_tol)?;
        let shift: Vec<f64> =
            rg.values().iter().zip(later.values()).zip(delta.values()).map(|((a, b), c)| a - b - c).collect();
        let f2 = g.add_numeraire(order, &shift);
        let r2 = rho_t(space, &f2, family, t, solver_tol)?;
        if direct.values().iter().zip(r2.values()).any(|(a, b)| a > &(b + tol)) {
            report.implication_violations += 1;
            if report.implication_witness.is_none() {
                report.implication_witness = Some((f.clone(), f2));
            }
        }
    }
    if !report.consistent() {
        report.witness = worst;
    }
    Ok(report)
}

/// `f = f1 + f2` with `f1 ∈ A_{t, t+s}` and `f2 ∈ A_{t+s}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub f1: RandomVector,
    pub f2: RandomVector,
    /// `max ρ_t(f1)`.
    pub stepped_risk: f64,
    /// `max |ρ_{t+s}(f2)|`.
    pub tail_risk: f64,
    /// `max |f1 + f2 - f|`.
    pub sum_residual: f64,
}

/// Splits an accepted `f` as `f2 = f + ρ_{t+s}(f) z`, `f1 = -ρ_{t+s}(f) z`
/// and verifies both memberships to `tol`.
pub fn decompose_acceptance(
    space: &FiniteMeasureSpace,
    order: &OrderedSpace,
    f: &RandomVector,
    family: &DynamicFamily,
    t: usize,
    s: usize,
    tol: f64,
) -> Result<Decomposition> {
    check_pair(space, t, s)?;
    let solver_tol = 1e-10;
    let risk = rho_t(space, f, family, t, solver_tol)?.max();
    if risk > tol {
        return Err(Error::NotAccepted { level: t, risk });
    }
    let later = rho_t(space, f, family, t + s, solver_tol)?;
    let f2 = f.add_numeraire(order, later.values());
    let cash: Vec<f64> = later.values().iter().map(|r| -r).collect();
    let f1 = RandomVector::numeraire_multiple(order, &cash);
    let tail_risk = rho_t(space, &f2, family, t + s, solver_tol)?.values().iter().fold(0.0f64, |m, r| m.max(r.abs()));
    if tail_risk > tol {
        return Err(Error::DecompositionFailed { level: t + s, risk: tail_risk });
    }
    let stepped_risk = rho_t(space, &f1, family, t, solver_tol)?.max();
    if stepped_risk > tol {
        return Err(Error::DecompositionFailed { level: t, risk: stepped_risk });
    }
    let sum_residual = f1.add(&f2)?.sub(f)?.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let scale = f.values().iter().fold(1.0f64, |m, x| m.max(x.abs()));
    if sum_residual > DECOMPOSITION_SUM_TOL * scale {
        return Err(Error::DecompositionFailed { level: t, risk: sum_residual });
    }
    Ok(Decomposition { f1, f2, stepped_risk, tail_risk, sum_residual })
}
