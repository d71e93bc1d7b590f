//! The acceptance battery: ten randomized property and oracle checks with
//! runtime budgets, shared by the `selftest` command and the acceptance
//! test target.
//!
//! Every criterion is seeded. A trial cap shrinks the sample sizes for quick
//! runs; without a cap the full sizes are used.

use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::cli::{run, Command, Flags};
use crate::dual::{dual_value, penalty_minimal, DualFeasibleElement, DualSearch, PenaltyStrategy};
use crate::dynamic::{
    acceptance_sets, conditional_dual_check, conditional_pairing, conditional_penalty_min, consistency_audit,
    decompose_acceptance, rho_t, ConditionalValue, DynamicFamily,
};
use crate::error::{Error, Result};
use crate::oce::{oce, rho, ssd_compare, subhomogeneity_gap, Core, Utility};
use crate::ordered::{pairing, DualDensity, OrderedSpace, RandomVector};
use crate::report::Format;
use crate::scenario::{parse_document, parse_scenario, Scenario, FIXTURES};
use crate::space::FiniteMeasureSpace;
use crate::varexp::{holder_gap, luxemburg_norm, modular, ExponentFunction};

pub const DEFAULT_SEED: u64 = 20_250_101;
const SOLVER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryConfig {
    /// Upper bound on every per-criterion sample size.
    pub trial_cap: Option<usize>,
    pub seed: u64,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self { trial_cap: None, seed: DEFAULT_SEED }
    }
}

impl BatteryConfig {
    fn trials(&self, full: usize) -> usize {
        self.trial_cap.map_or(full, |c| c.clamp(1, full))
    }

    fn rng(&self, id: u64) -> StdRng {
        StdRng::seed_from_u64(self.seed ^ id.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    /// Whether every numerical check held; timing is reported separately.
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl CriterionOutcome {
    pub fn within_budget(&self) -> bool {
        self.elapsed < self.budget
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {:>2} {:<34} {:>8.2}s / {:>3}s  {}",
            if self.passed && self.within_budget() { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs(),
            self.detail
        )
    }
}

type Check = fn(&BatteryConfig) -> Result<(bool, String)>;

pub const CRITERIA: [(usize, &str, u64); 10] = [
    (1, "norm axioms and unit ball", 10),
    (2, "Hölder bound", 10),
    (3, "OCE axioms", 30),
    (4, "sub-homogeneity", 5),
    (5, "SSD equivalence", 10),
    (6, "static strong duality", 60),
    (7, "conditional dual representation", 60),
    (8, "time consistency", 120),
    (9, "acceptance-set properties", 20),
    (10, "CLI determinism and round-trip", 5),
];

fn check_for(id: usize) -> Check {
    match id {
        1 => norm_axioms,
        2 => holder_bound,
        3 => oce_axioms,
        4 => subhomogeneity,
        5 => ssd_equivalence,
        6 => static_duality,
        7 => conditional_duality,
        8 => time_consistency,
        9 => acceptance_properties,
        _ => cli_determinism,
    }
}

pub fn run_criterion(id: usize, cfg: &BatteryConfig) -> Result<CriterionOutcome> {
    let &(id, name, budget) =
        CRITERIA.iter().find(|c| c.0 == id).ok_or_else(|| Error::InvalidLevels(format!("no criterion {id}")))?;
    let start = Instant::now();
    let (passed, detail) = match check_for(id)(cfg) {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Ok(CriterionOutcome { id, name, passed, detail, elapsed: start.elapsed(), budget: Duration::from_secs(budget) })
}

pub fn run_battery(cfg: &BatteryConfig) -> Vec<CriterionOutcome> {
    CRITERIA.iter().map(|c| run_criterion(c.0, cfg).expect("listed criterion")).collect()
}

fn random_space<R: Rng>(rng: &mut R, n: usize) -> Result<FiniteMeasureSpace> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    FiniteMeasureSpace::one_period(raw.iter().map(|x| x / total).collect())
}

fn random_vector<R: Rng>(rng: &mut R, n: usize, d: usize, bound: f64) -> Result<RandomVector> {
    RandomVector::new(n, d, (0..n * d).map(|_| rng.random_range(-bound..=bound)).collect())
}

fn random_order<R: Rng>(rng: &mut R, d: usize) -> Result<OrderedSpace> {
    OrderedSpace::new((0..d).map(|_| rng.random_range(0.5..2.0)).collect())
}

/// A weight in the dual cone with `<w, z> = 1`.
fn random_weight<R: Rng>(rng: &mut R, order: &OrderedSpace) -> Vec<f64> {
    let raw: Vec<f64> = (0..order.dimension()).map(|_| rng.random_range(0.0..1.0) + 1e-3).collect();
    let mass: f64 = raw.iter().zip(order.numeraire()).map(|(a, b)| a * b).sum();
    raw.iter().map(|x| x / mass).collect()
}

fn random_core<R: Rng>(rng: &mut R, family: usize) -> Core {
    match family {
        0 => Core::Exponential { rate: rng.random_range(0.2..3.0) },
        1 => Core::Cvar { level: rng.random_range(0.05..0.95) },
        _ => Core::PiecewiseLinear { loss_slope: rng.random_range(1.0..4.0), gain_slope: rng.random_range(0.0..=1.0) },
    }
}

fn random_exponent<R: Rng>(rng: &mut R, n: usize) -> Result<ExponentFunction> {
    ExponentFunction::new((0..n).map(|_| rng.random_range(1.1..=6.0)).collect())
}

fn norm_axioms(cfg: &BatteryConfig) -> Result<(bool, String)> {
    let mut rng = cfg.rng(1);
    let trials = cfg.trials(10_000);
    let tol = 1e-12;
    let (mut homog, mut tri, mut unit, mut qnorm) = (0.0f64, f64::NEG_INFINITY, 0.0f64, 0.0f64);
    let mut definite = true;
    for _ in 0..trials {
        let n = rng.random_range(1..=8);
        let d = rng.random_range(1..=3);
        let space = random_space(&mut rng, n)?;
        let p = random_exponent(&mut rng, n)?;
        let f = random_vector(&mut rng, n, d, 5.0)?;
        let g = random_vector(&mut rng, n, d, 5.0)?;
        let a = rng.random_range(-5.0..=5.0);
        let nf = luxemburg_norm(&space, &f, &p, tol)?;
        let ng = luxemburg_norm(&space, &g, &p, tol)?;
        homog = homog.max((luxemburg_norm(&space, &f.scale(a), &p, tol)? - a.abs() * nf).abs());
        tri = tri.max(luxemburg_norm(&space, &f.add(&g)?, &p, tol)? - nf - ng);
        definite &= luxemburg_norm(&space, &RandomVector::zeros(n, d), &p, tol)? == 0.0 && (f.is_zero() || nf > 0.0);
        if nf > 0.0 {
            unit = unit.max((modular(&space, &f.scale(1.0 / nf), &p)? - 1.0).abs());
        }
        let q = rng.random_range(1.1..=6.0);
        let pq = ExponentFunction::constant(n, q)?;
        let closed = space
            .weights()
            .iter()
            .zip(f.rows())
            .map(|(m, r)| m * r.iter().map(|x| x * x).sum::<f64>().sqrt().powf(q))
            .sum::<f64>()
            .powf(1.0 / q);
        qnorm = qnorm.max((luxemburg_norm(&space, &f, &pq, tol)? - closed).abs());
    }
    let passed = homog <= 1e-8 && tri <= 1e-8 && definite && unit <= 1e-7 && qnorm <= 1e-8;
    Ok((
        passed,
        format!(
            "{trials} trials: homogeneity {homog:.1e}, triangle excess {tri:.1e}, unit modular {unit:.1e}, q-norm {qnorm:.1e}"
        ),
    ))
}

fn holder_bound(cfg: &BatteryConfig) -> Result<(bool, String)> {
    let mut rng = cfg.rng(2);
    let trials = cfg.trials(10_000);
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let n = rng.random_range(1..=8);
        let d = rng.random_range(1..=3);
        let space = random_space(&mut rng, n)?;
        let p = random_exponent(&mut rng, n)?;
        let f = random_vector(&mut rng, n, d, 5.0)?;
        let g = DualDensity::new(n, d, random_vector(&mut rng, n, d, 5.0)?.values().to_vec())?;
        worst = worst.min(holder_gap(&space, &f, &g, &p)?);
    }
    Ok((worst >= -1e-9, format!("{trials} trials: smallest slack {worst:.3e}")))
}

fn oce_axioms(cfg: &BatteryConfig) -> Result<(bool, String)> {
    let mut rng = cfg.rng(3);
    let trials = cfg.trials(10_000);
    let tol = 1e-6;
    let mut worst = [0.0f64; 6];
    let mut entropic = 0.0f64;
    for family in 0..3 {
        for _ in 0..trials {
            let n = rng.random_range(1..=8);
            let d = rng.random_range(1..=3);
            let space = random_space(&mut rng, n)?;
            let order = random_order(&mut rng, d)?;
            let w = random_weight(&mut rng, &order);
            let u = Utility::new(random_core(&mut rng, family), w, &order)?;
            let s = |f: &RandomVector| oce(&space, f, &u, SOLVER_TOL).map(|r| r.value);
            let r = |f: &RandomVector| rho(&space, f, &u, SOLVER_TOL);
            let f1 = random_vector(&mut rng, n, d, 3.0)?;
            let f2 = random_vector(&mut rng, n, d, 3.0)?;
            let m = rng.random_range(-5.0..=5.0);
            let k = RandomVector::new(n, d, (0..n * d).map(|_| rng.random_range(0.0..2.0)).collect())?;
            let lambda = rng.random_range(0.0..1.0);
            let mixed = f1.mix(&f2, &vec![lambda; n])?;
            let shifted = f1.add_numeraire(&order, &vec![m; n]);
            let larger = f1.add(&k)?;
            // translation, monotonicity and concavity of S, then A1-A3 for ρ
            worst[0] = worst[0].max((s(&shifted)? - s(&f1)? - m).abs());
            worst[1] = worst[1].max(s(&f1)? - s(&larger)?);
            worst[2] = worst[2].max(lambda * s(&f1)? + (1.0 - lambda) * s(&f2)? - s(&mixed)?);
            let g1 = random_vector(&mut rng, n, d, 3.0)?;
            let g2 = random_vector(&mut rng, n, d, 3.0)?;
            let m = rng.random_range(-5.0..=5.0);
            let k = RandomVector::new(n, d, (0..n * d).map(|_| rng.random_range(0.0..2.0)).collect())?;
            let lambda = rng.random_range(0.0..1.0);
            worst[3] = worst[3].max(r(&g1.add(&k)?)? - r(&g1)?);
            worst[4] = worst[4].max((r(&g1.add_numeraire(&order, &vec![m; n]))? - r(&g1)? + m).abs());
            worst[5] = worst[5].max(r(&g1.mix(&g2, &vec![lambda; n])?)? - lambda * r(&g1)? - (1.0 - lambda) * r(&g2)?);
            if let Core::Exponential { rate } = *u.core() {
                let ys = f1.project(u.weight());
                let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
                let mean: f64 = space.weights().iter().zip(&ys).map(|(mu, y)| mu * (-rate * (y - lo)).exp()).sum();
                let closed = lo - mean.ln() / rate;
                entropic = entropic.max((s(&f1)? - closed).abs());
            }
        }
    }
    let passed = worst.iter().all(|&v| v <= tol) && entropic <= 1e-8;
    Ok((
        passed,
        format!(
            "{trials} trials x 3 families: S(a,b,c) {:.1e}/{:.1e}/{:.1e}, rho(A1,A2,A3) {:.1e}/{:.1e}/{:.1e}, entropic {entropic:.1e}",
            worst[0], worst[1], worst[2], worst[3], worst[4], worst[5]
        ),
    ))
}

fn subhomogeneity(cfg: &BatteryConfig) -> Result<(bool, String)> {
    let mut rng = cfg.rng(4);
    let trials = cfg.trials(1_000);
    let mut worst = f64::INFINITY;
    for family in 0..3 {
        for _ in 0..trials {
            let n = rng.random_range(1..=8);
            let d = rng.random_range(1..=3);
            let space = random_space(&mut rng, n)?;
            let order = random_order(&mut rng, d)?;
            let w = random_weight(&mut rng, &order);
            let u = Utility::new(random_core(&mut rng, family), w, &order)?;
            let f = random_vector(&mut rng, n, d, 2.0)?;
            let a = rng.random_range(0.0..=5.0);
            worst = worst.min(subhomogeneity_gap(&space, &f, &u, a, SOLVER_TOL)?);
        }
    }
    Ok((worst >= -1e-6, format!("{trials} trials x 3 families: smallest gap {worst:.3e}")))
}

fn ssd_equivalence(cfg: &BatteryConfig) -> Result<(bool, String)> {
    let mut rng = cfg.rng(5);
    let trials = cfg.trials(10_000);
    let (mut resolved, mut disagreements) = (0usize, 0usize);
    for _ in 0..trials {
        let n = rng.random_range(1..=8);
        let d = rng.random_range(1..=3);
        let space = random_space(&mut rng, n)?;
        let order = random_order(&mut rng, d)?;
        let w = random_weight(&mut rng, &order);
        let u = Utility::new(random_core(&mut rng, 0), w, &order)?;
        let f1 = random_vector(&mut rng, n, d, 3.0)?;
        let f2 = random_vector(&mut rng, n, d, 3.0)?;
        let r = ssd_compare(&space, &f1, &f2, &u, SOLVER_TOL)?;
        if r.su_diff.abs() > 1e-6 && r.cu_diff.abs() > 1e-6 {
            resolved += 1;
            if r.su_diff.signum() != r.cu_diff.signum() {
                disagreements += 1;
            }
        }
    }
    Ok((disagreements == 0, format!("{trials} pairs, {resolved} resolved, {disagreements} disagreements")))
}

fn static_duality(cfg: &BatteryConfig) -> Result<(bool, String)> {
    let mut rng = cfg.rng(6);
    let reps = cfg.trials(3);
    let samples = cfg.trials(300);
    let (mut gap, mut weak) = (0.0f64, f64::NEG_INFINITY);
    let mut instances = 0;
    let mut method_n4 = String::new();
    for family in 0..2 {
        for n in 1..=4 {
            for d in 1..=2 {
                for _ in 0..reps {
                    let space = random_space(&mut rng, n)?;
                    let order = random_order(&mut rng, d)?;
                    let w = random_weight(&mut rng, &order);
                    let core = match family {
                        0 => Core::Exponential { rate: rng.random_range(0.5..2.0) },
                        _ => Core::Cvar { level: rng.random_range(0.1..0.9) },
                    };
                    let u = Utility::new(core, w.clone(), &order)?;
                    let f = random_vector(&mut rng, n, d, 2.0)?;
                    let primal = rho(&space, &f, &u, SOLVER_TOL)?;
                    let dual = dual_value(&space, &f, &u, DualSearch::default())?;
                    gap = gap.max((primal - dual.value).abs());
                    if n == 4 {
                        method_n4 = dual.method.clone();
                    }
                    instances += 1;
                    let (lo, hi) = core.density_bounds();
                    for _ in 0..samples {
                        // random density with Σ μ q = 1 inside the conjugate's domain
                        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
                        let mass: f64 = space.weights().iter().zip(&raw).map(|(m, x)| m * x).sum::<f64>().max(1e-12);
                        let mut q: Vec<f64> = raw.iter().map(|x| x / mass).collect();
                        if q.iter().any(|x| *x > hi || *x < lo) {
                            let t = rng.random_range(0.0..1.0);
                            q.iter_mut().for_each(|x| *x = 1.0 + t * (*x - 1.0));
                            if q.iter().any(|x| *x > hi || *x < lo) {
                                continue;
                            }
                        }
                        let g = DualFeasibleElement::from_scalar_density(&space, &order, &q, &w)?;
                        let alpha = penalty_minimal(&space, &order, &g, &u, PenaltyStrategy::ClosedForm)?.value;
                        weak = weak.max(-pairing(&space, g.density(), &f)? - alpha - primal);
                    }
                }
            }
        }
    }
    let passed = gap <= 1e-3 && weak <= 1e-6;
    Ok((passed, format!("{instances} instances: max |primal - dual| {gap:.2e}, weak-duality excess {weak:.2e}, n=4 search {method_n4}")))
}

fn fixture(name: &str) -> Result<Scenario> {
    let text = FIXTURES.iter().find(|f| f.0 == name).map(|f| f.1).ok_or_else(|| Error::Io(format!("no fixture {name}")))?;
    Ok(parse_scenario(text, true)?.1)
}

/// A density with `E[q | A] = 1` on every atom of `P_t`, inside `[lo, hi]`.
fn conditional_density<R: Rng>(rng: &mut R, space: &FiniteMeasureSpace, t: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let mut q = vec![0.0; space.len()];
    for a in space.atoms_at(t)? {
        loop {
            let raw: Vec<f64> = a.members.iter().map(|_| rng.random_range(0.05..1.0)).collect();
            let mean = a.members.iter().zip(&raw).map(|(&i, x)| space.weights()[i] * x).sum::<f64>() / a.mass;
            let t = rng.random_range(0.0..=1.0);
            let local: Vec<f64> = raw.iter().map(|x| 1.0 + t * (x / mean - 1.0)).collect();
            if local.iter().all(|x| *x >= lo && *x <= hi) {
                for (&i, x) in a.members.iter().zip(local) {
                    q[i] = x;
                }
                break;
            }
        }
    }
    Ok(q)
}

fn conditional_duality(cfg: &BatteryConfig) -> Result<(bool, String)> {
    let mut rng = cfg.rng(7);
    let sc = fixture("four_leaf")?;
    let (space, order) = (&sc.space, &sc.order);
    let t = 1;
    let payoffs = cfg.trials(20);
    let (mut gap, mut lemma, mut lower_excess, mut integration) = (0.0f64, 0.0f64, f64::NEG_INFINITY, 0.0f64);
    for name in ["entropic", "cvar"] {
        let u = &sc.utilities[name];
        let mut fs: Vec<RandomVector> = sc.payoffs.values().cloned().collect();
        for _ in 0..payoffs {
            fs.push(random_vector(&mut rng, space.len(), 1, 2.0)?);
        }
        for f in &fs {
            let report = conditional_dual_check(space, f, u, t, DualSearch::default(), SOLVER_TOL)?;
            gap = gap.max(report.max_gap);
        }
        let (lo, hi) = u.core().density_bounds();
        let mut densities = vec![sc.densities["q"].values().to_vec()];
        for _ in 0..cfg.trials(10) {
            densities.push(conditional_density(&mut rng, space, t, lo, hi.min(10.0))?);
        }
        for q in &densities {
            let h = DualDensity::from_density(q, u.weight());
            let closed = conditional_penalty_min(space, order, &h, u, t, PenaltyStrategy::ClosedForm)?;
            let numeric = conditional_penalty_min(
                space,
                order,
                &h,
                u,
                t,
                PenaltyStrategy::AcceptanceSet { bound: 10.0, iterations: 2000 },
            )?;
            for (a, (c, s)) in space.atoms_at(t)?.iter().zip(closed.value.atom_values().iter().zip(numeric.value.atom_values())) {
                lemma = lemma.max((a.mass * (c - s)).abs());
                lower_excess = lower_excess.max(s - c);
            }
        }
    }
    // integrating the conditional pairing over a union of atoms recovers the restricted pairing
    let atoms = space.atoms_at(t)?;
    for _ in 0..cfg.trials(1000) {
        let f = random_vector(&mut rng, space.len(), 1, 5.0)?;
        let h = DualDensity::new(space.len(), 1, (0..space.len()).map(|_| rng.random_range(0.0..3.0)).collect())?;
        let c = conditional_pairing(space, &h, &f, t)?;
        let chosen: Vec<bool> = atoms.iter().map(|_| rng.random_bool(0.5)).collect();
        let lhs: f64 = atoms.iter().zip(&chosen).zip(c.atom_values()).filter(|((_, k), _)| **k).map(|((a, _), v)| a.mass * v).sum();
        let rhs: f64 = atoms
            .iter()
            .zip(&chosen)
            .filter(|(_, k)| **k)
            .flat_map(|(a, _)| a.members.iter())
            .map(|&i| space.weights()[i] * -(h.row(i)[0] * f.row(i)[0]))
            .sum();
        integration = integration.max((lhs - rhs).abs());
    }
    let passed = gap <= 1e-3 && lemma <= 1e-3 && lower_excess <= 1e-6 && integration <= 1e-12;
    Ok((
        passed,
        format!(
            "t=1: atomwise gap {gap:.2e}, penalty identity {lemma:.2e} (lower-bound excess {lower_excess:.1e}), integration {integration:.1e}"
        ),
    ))
}

fn time_consistency(cfg: &BatteryConfig) -> Result<(bool, String)> {
    let mut rng = cfg.rng(8);
    let sc = fixture("four_leaf")?;
    let (space, order) = (&sc.space, &sc.order);
    let entropic = sc.utilities["entropic"].clone();
    let cvar = sc.utilities["cvar"].clone();
    let horizon = space.horizon();
    let pairs: Vec<(usize, usize)> = (0..horizon).flat_map(|t| (1..=horizon - t).map(move |s| (t, s))).collect();

    let plain = DynamicFamily::conditional(entropic.clone());
    let mut entropic_residual = 0.0f64;
    let mut implication = 0;
    for &(t, s) in &pairs {
        let r = consistency_audit(space, order, &plain, t, s, cfg.trials(10_000), 1e-6, &mut rng)?;
        entropic_residual = entropic_residual.max(r.max_residual);
        implication += r.implication_violations;
    }
    let mut composed_residual = 0.0f64;
    for u in [&entropic, &cvar] {
        let family = DynamicFamily::composed(u.clone(), horizon)?;
        for &(t, s) in &pairs {
            let r = consistency_audit(space, order, &family, t, s, cfg.trials(1_000), 1e-6, &mut rng)?;
            composed_residual = composed_residual.max(r.max_residual);
            implication += r.implication_violations;
        }
    }
    let mut witness_rng = StdRng::seed_from_u64(sc.settings.seed);
    let audit = consistency_audit(space, order, &DynamicFamily::conditional(cvar), 0, 1, cfg.trials(5_000), 1e-6, &mut witness_rng)?;
    let witness = audit.witness.is_some() && audit.max_residual > 1e-2;

    let composed = DynamicFamily::composed(entropic, horizon)?;
    let samples = cfg.trials(1_000);
    let (mut decomposed, mut worst_membership) = (0, 0.0f64);
    for k in 0..samples {
        let (t, s) = pairs[k % pairs.len()];
        let f = random_vector(&mut rng, space.len(), 1, 2.0)?;
        let risk = rho_t(space, &f, &composed, t, SOLVER_TOL)?;
        let extra: Vec<f64> = risk.atom_values().iter().map(|r| r + rng.random_range(0.0..0.5)).collect();
        let shift = ConditionalValue::from_atoms(space, t, extra)?;
        let accepted = f.add_numeraire(order, shift.values());
        let d = decompose_acceptance(space, order, &accepted, &composed, t, s, 1e-6)?;
        let measurable = space.is_measurable(d.f1.values(), 1, t + s, 0.0)?;
        worst_membership = worst_membership.max(d.tail_risk).max(d.stepped_risk);
        if measurable && d.tail_risk <= 1e-6 && d.stepped_risk <= 1e-6 {
            decomposed += 1;
        }
    }
    let passed = entropic_residual <= 1e-6
        && composed_residual <= 1e-6
        && implication == 0
        && witness
        && decomposed == samples;
    Ok((
        passed,
        format!(
            "entropic residual {entropic_residual:.1e}, composed {composed_residual:.1e}, cvar witness residual {:.3} ({}), \
             decompositions {decomposed}/{samples} (worst {worst_membership:.1e})",
            audit.max_residual,
            audit.verdict()
        ),
    ))
}

fn acceptance_properties(cfg: &BatteryConfig) -> Result<(bool, String)> {
    let mut rng = cfg.rng(9);
    let sc = fixture("four_leaf")?;
    let (space, order) = (&sc.space, &sc.order);
    let families = [
        DynamicFamily::conditional(sc.utilities["entropic"].clone()),
        DynamicFamily::conditional(sc.utilities["cvar"].clone()),
        DynamicFamily::composed(sc.utilities["cvar"].clone(), space.horizon())?,
    ];
    let (mut constructions, mut violations) = (0, 0);
    for family in &families {
        for (t, s, full) in [(0, 1, 10_000), (0, 2, 2_000), (1, 1, 2_000)] {
            let trials = cfg.trials(full);
            let r = acceptance_sets(space, order, family, t, s, trials, &mut rng, 1e-6)?;
            constructions += trials;
            violations += r.violations();
        }
    }
    Ok((violations == 0, format!("{constructions} constructions over 3 families, {violations} violations")))
}

fn cli_determinism(_cfg: &BatteryConfig) -> Result<(bool, String)> {
    let mut mismatched = Vec::new();
    for (name, text) in FIXTURES {
        let (doc, _) = parse_document(text, true)?;
        let scenario = doc.validate()?;
        let (again, _) = parse_document(&doc.to_toml()?, true)?;
        if again != doc || again.validate()? != scenario {
            mismatched.push(name.to_string());
        }
    }
    let runs: [(Command, Flags); 4] = [
        (Command::Consistency, Flags::for_scenario("four_leaf").utility("cvar").level(0).step(1).trials(500).seed(7)),
        (Command::DualCheck, Flags::for_scenario("two_point").utility("entropic").payoff("f")),
        (Command::Conditional, Flags::for_scenario("four_leaf").utility("entropic").payoff("f").level(1)),
        (Command::Norm, Flags::for_scenario("two_point").payoff("g")),
    ];
    let mut nondeterministic = Vec::new();
    for (command, flags) in runs {
        let flags = Flags { format: Format::Structured, ..flags };
        let first = run(command, &flags).0.render(Format::Structured);
        let second = run(command, &flags).0.render(Format::Structured);
        if first != second {
            nondeterministic.push(command.name());
        }
    }
    let passed = mismatched.is_empty() && nondeterministic.is_empty();
    Ok((
        passed,
        format!(
            "{} fixtures round-tripped ({} mismatched), 4 seeded commands ({} nondeterministic)",
            FIXTURES.len(),
            mismatched.len(),
            nondeterministic.len()
        ),
    ))
}
