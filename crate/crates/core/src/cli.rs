//! Command dispatch for the `varisk` binary.
//!
//! [`run`] executes one command against a scenario and returns the report
//! together with the exit status: `0` on success, `1` when a numerical
//! contract is violated (a duality gap above tolerance, a failed
//! decomposition, a failed self-test), `2` on input errors.

use std::time::Instant;

use rand::rngs::StdRng;
use rand::SeedableRng;

use crate::battery::{run_battery, BatteryConfig, DEFAULT_SEED};
use crate::dual::{dual_value, penalty_minimal, DualFeasibleElement, DualSearch, PenaltyStrategy};
use crate::dynamic::{
    conditional_dual_check, conditional_pairing, conditional_penalty_min, consistency_audit, decompose_acceptance,
    rho_t, DynamicFamily,
};
use crate::error::{Error, Result};
use crate::oce::{certainty_equivalent, oce, Core, Utility};
use crate::report::{number, rows, Format, ReportDocument};
use crate::scenario::{parse_scenario, resolve_scenario, Scenario};
use crate::varexp::{luxemburg_norm, modular};

const ASCENT_ITERATIONS: usize = 5000;
const PENALTY_BOX: f64 = 10.0;
const PENALTY_ITERATIONS: usize = 2000;
const REFERENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Luxemburg norm and modular of a payoff.
    Norm,
    /// Optimized certainty equivalent of a payoff.
    Oce,
    /// Risk of a payoff, the negative certainty equivalent.
    Risk,
    /// Primal risk against the supremum over dual densities.
    DualCheck,
    /// Conditional risk at a level, with its atomwise dual check.
    Conditional,
    /// Randomized time-consistency audit between two levels.
    Consistency,
    /// Split an accepted payoff into stepped and tail parts.
    Decompose,
    /// Minimal penalty of a density.
    Penalty,
    /// Run the acceptance battery on the built-in fixtures.
    Selftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Norm => "norm",
            Command::Oce => "oce",
            Command::Risk => "risk",
            Command::DualCheck => "dual-check",
            Command::Conditional => "conditional",
            Command::Consistency => "consistency",
            Command::Decompose => "decompose",
            Command::Penalty => "penalty",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, clap::Args)]
pub struct Flags {
    /// Scenario file, a name under $VARISK_SCENARIO_DIR, or a built-in fixture name.
    #[arg(long, global = true)]
    pub scenario: Option<String>,
    #[arg(long, global = true)]
    pub payoff: Option<String>,
    #[arg(long, global = true)]
    pub utility: Option<String>,
    #[arg(long, global = true)]
    pub density: Option<String>,
    #[arg(long, global = true)]
    pub level: Option<usize>,
    #[arg(long, global = true)]
    pub step: Option<usize>,
    /// Contract tolerance of the command (solver, gap or audit tolerance).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Reject unknown keys in the scenario.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Use the recursively composed family instead of the plain conditional one.
    #[arg(long, global = true)]
    pub composed: bool,
}

impl Flags {
    pub fn for_scenario(scenario: &str) -> Self {
        Self { scenario: Some(scenario.into()), ..Default::default() }
    }

    pub fn payoff(mut self, name: &str) -> Self {
        self.payoff = Some(name.into());
        self
    }

    pub fn utility(mut self, name: &str) -> Self {
        self.utility = Some(name.into());
        self
    }

    pub fn density(mut self, name: &str) -> Self {
        self.density = Some(name.into());
        self
    }

    pub fn level(mut self, t: usize) -> Self {
        self.level = Some(t);
        self
    }

    pub fn step(mut self, s: usize) -> Self {
        self.step = Some(s);
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = Some(tol);
        self
    }

    pub fn trials(mut self, n: usize) -> Self {
        self.trials = Some(n);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// Exit status for an error: `1` for contract violations, `2` otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::SearchBudget { .. } | Error::DecompositionFailed { .. } => 1,
        _ => 2,
    }
}

/// `Ok(Some(message))` reports a contract violation.
type Outcome = Result<Option<String>>;

pub fn run(command: Command, flags: &Flags) -> (ReportDocument, i32) {
    let start = Instant::now();
    let mut report = ReportDocument::new(command.name());
    match execute(command, flags, &mut report) {
        Ok(None) => {}
        Ok(Some(violation)) => {
            report.status = "contract-violation".into();
            report.message = Some(violation);
            report.exit_code = 1;
        }
        Err(e) => {
            report.exit_code = exit_code(&e);
            report.status = if report.exit_code == 1 { "contract-violation" } else { "input-error" }.into();
            report.message = Some(e.to_string());
        }
    }
    report.wall_clock = Some(start.elapsed());
    let code = report.exit_code;
    (report, code)
}

fn execute(command: Command, flags: &Flags, report: &mut ReportDocument) -> Outcome {
    if command == Command::Selftest {
        return selftest(flags, report);
    }
    let arg = flags
        .scenario
        .as_deref()
        .ok_or_else(|| Error::Invalid { location: "--scenario".into(), message: "a scenario is required".into() })?;
    let source = resolve_scenario(arg)?;
    report.config("scenario", &source.origin);
    let (_, sc) = parse_scenario(&source.text, flags.strict)?;
    match command {
        Command::Norm => norm(&sc, flags, report),
        Command::Oce | Command::Risk => certainty(&sc, flags, report, command == Command::Risk),
        Command::DualCheck => dual_check(&sc, flags, report),
        Command::Penalty => penalty(&sc, flags, report),
        Command::Conditional => conditional(&sc, flags, report),
        Command::Consistency => consistency(&sc, flags, report),
        Command::Decompose => decompose(&sc, flags, report),
        Command::Selftest => unreachable!(),
    }
}

fn solver_method(core: &Core) -> &'static str {
    match core {
        Core::Exponential { .. } => "golden-section",
        _ => "breakpoint-enumeration",
    }
}

fn norm(sc: &Scenario, flags: &Flags, report: &mut ReportDocument) -> Outcome {
    let (name, f) = sc.payoff(flags.payoff.as_deref())?;
    let p = sc
        .exponent
        .as_ref()
        .ok_or_else(|| Error::Invalid { location: "exponent".into(), message: "the scenario defines no exponent".into() })?;
    let tol = flags.tol.unwrap_or(sc.settings.norm_tol);
    report.config("payoff", name);
    report.config("tol", number(tol));
    report.result("norm", luxemburg_norm(&sc.space, f, p, tol)?, "bisection", tol);
    report.result("modular", modular(&sc.space, f, p)?, "closed-form", 0.0);
    report.result("p_minus", p.p_minus(), "closed-form", 0.0);
    report.result("p_plus", p.p_plus(), "closed-form", 0.0);
    Ok(None)
}

fn certainty(sc: &Scenario, flags: &Flags, report: &mut ReportDocument, as_risk: bool) -> Outcome {
    let (pname, f) = sc.payoff(flags.payoff.as_deref())?;
    let (uname, u) = sc.utility(flags.utility.as_deref())?;
    let tol = flags.tol.unwrap_or(sc.settings.tol);
    report.config("payoff", pname);
    report.config("utility", uname);
    report.config("family", u.core().family());
    report.config("tol", number(tol));
    let r = oce(&sc.space, f, u, tol)?;
    let method = solver_method(u.core());
    if as_risk {
        report.result("rho", -r.value, method, tol);
    } else {
        report.result("oce", r.value, method, tol);
        report.result("eta_star", r.eta_star, method, tol);
        if let Core::Exponential { .. } = u.core() {
            report.result("certainty_equivalent", certainty_equivalent(&sc.space, f, u)?, "closed-form", 0.0);
        }
    }
    Ok(None)
}

fn search(sc: &Scenario) -> DualSearch {
    DualSearch::Auto { resolution: sc.settings.grid_resolution, iterations: ASCENT_ITERATIONS }
}

fn dual_check(sc: &Scenario, flags: &Flags, report: &mut ReportDocument) -> Outcome {
    let (pname, f) = sc.payoff(flags.payoff.as_deref())?;
    let (uname, u) = sc.utility(flags.utility.as_deref())?;
    let gap_tol = flags.tol.unwrap_or(sc.settings.gap_tol);
    report.config("payoff", pname);
    report.config("utility", uname);
    report.config("tol", number(gap_tol));
    let primal = -oce(&sc.space, f, u, REFERENCE_TOL)?.value;
    let dual = dual_value(&sc.space, f, u, search(sc))?;
    let gap = (primal - dual.value).abs();
    report.result("primal", primal, solver_method(u.core()), REFERENCE_TOL);
    report.result("dual", dual.value, dual.method.clone(), gap_tol);
    report.result("gap", gap, "difference", gap_tol);
    report.witness("argmax_density", rows(&dual.density, 1));
    report.witness("weight", rows(u.weight(), u.weight().len()));
    Ok((gap > gap_tol).then(|| format!("duality gap {} exceeds {}", number(gap), number(gap_tol))))
}

fn penalty(sc: &Scenario, flags: &Flags, report: &mut ReportDocument) -> Outcome {
    let (dname, h) = sc.density(flags.density.as_deref())?;
    let (uname, u) = sc.utility(flags.utility.as_deref())?;
    let gap_tol = flags.tol.unwrap_or(sc.settings.gap_tol);
    report.config("density", dname);
    report.config("utility", uname);
    report.config("tol", number(gap_tol));
    let g = DualFeasibleElement::new(&sc.space, &sc.order, h.clone())?;
    let closed = penalty_minimal(&sc.space, &sc.order, &g, u, PenaltyStrategy::ClosedForm)?;
    let bound = PenaltyStrategy::AcceptanceSet { bound: PENALTY_BOX, iterations: PENALTY_ITERATIONS };
    let lower = penalty_minimal(&sc.space, &sc.order, &g, u, bound)?;
    report.result("penalty", closed.value, closed.method.tag(), 0.0);
    report.result("penalty_lower_bound", lower.value, lower.method.tag(), gap_tol);
    if let Some(t) = flags.level {
        report.config("level", t);
        let c = conditional_penalty_min(&sc.space, &sc.order, h, u, t, PenaltyStrategy::ClosedForm)?;
        for (label, v) in sc.atom_labels(t)?.iter().zip(c.value.atom_values()) {
            report.result(format!("conditional_penalty.{label}"), *v, c.method.tag(), 0.0);
        }
    }
    Ok((lower.value > closed.value + gap_tol)
        .then(|| format!("numerical penalty {} exceeds the closed form {}", number(lower.value), number(closed.value))))
}

fn family(sc: &Scenario, u: &Utility, flags: &Flags, report: &mut ReportDocument) -> Result<DynamicFamily> {
    let fam = if flags.composed {
        DynamicFamily::composed(u.clone(), sc.space.horizon())?
    } else {
        DynamicFamily::conditional(u.clone())
    };
    report.config("family", fam.tag());
    Ok(fam)
}

fn conditional(sc: &Scenario, flags: &Flags, report: &mut ReportDocument) -> Outcome {
    let (pname, f) = sc.payoff(flags.payoff.as_deref())?;
    let (uname, u) = sc.utility(flags.utility.as_deref())?;
    let t = flags.level.unwrap_or(0);
    let gap_tol = flags.tol.unwrap_or(sc.settings.gap_tol);
    report.config("payoff", pname);
    report.config("utility", uname);
    report.config("level", t);
    report.config("tol", number(gap_tol));
    let fam = family(sc, u, flags, report)?;
    let labels = sc.atom_labels(t)?;
    let risk = rho_t(&sc.space, f, &fam, t, REFERENCE_TOL)?;
    for (label, v) in labels.iter().zip(risk.atom_values()) {
        report.result(format!("rho.{label}"), *v, solver_method(u.core()), REFERENCE_TOL);
    }
    if let Some(dname) = flags.density.as_deref() {
        let (_, h) = sc.density(Some(dname))?;
        report.config("density", dname);
        let pairing = conditional_pairing(&sc.space, h, f, t)?;
        let pen = conditional_penalty_min(&sc.space, &sc.order, h, u, t, PenaltyStrategy::ClosedForm)?;
        for ((label, p), a) in labels.iter().zip(pairing.atom_values()).zip(pen.value.atom_values()) {
            report.result(format!("pairing.{label}"), *p, "atom-average", 0.0);
            report.result(format!("penalty.{label}"), *a, pen.method.tag(), 0.0);
        }
    }
    if flags.composed {
        return Ok(None);
    }
    let check = conditional_dual_check(&sc.space, f, u, t, search(sc), REFERENCE_TOL)?;
    for (label, v) in labels.iter().zip(check.dual.atom_values()) {
        report.result(format!("dual.{label}"), *v, check.method.clone(), gap_tol);
    }
    report.result("max_gap", check.max_gap, "difference", gap_tol);
    Ok((check.max_gap > gap_tol)
        .then(|| format!("atomwise duality gap {} exceeds {}", number(check.max_gap), number(gap_tol))))
}

fn consistency(sc: &Scenario, flags: &Flags, report: &mut ReportDocument) -> Outcome {
    let (uname, u) = sc.utility(flags.utility.as_deref())?;
    let t = flags.level.unwrap_or(0);
    let s = flags.step.unwrap_or(1);
    let trials = flags.trials.unwrap_or(sc.settings.trials);
    let seed = flags.seed.unwrap_or(sc.settings.seed);
    let tol = flags.tol.unwrap_or(sc.settings.audit_tol);
    report.config("utility", uname);
    report.config("level", t);
    report.config("step", s);
    report.config("trials", trials);
    report.config("seed", seed);
    report.config("tol", number(tol));
    let fam = family(sc, u, flags, report)?;
    let mut rng = StdRng::seed_from_u64(seed);
    let audit = consistency_audit(&sc.space, &sc.order, &fam, t, s, trials, tol, &mut rng)?;
    let method = format!("randomized-search(trials={trials}, seed={seed})");
    report.result("max_residual", audit.max_residual, method.clone(), tol);
    report.result("implication_violations", audit.implication_violations as f64, method, 0.0);
    report.finding("verdict", audit.verdict());
    if let Some(w) = &audit.witness {
        report.witness("payoff", rows(w.values(), w.dimension()));
    }
    if let Some((a, b)) = &audit.implication_witness {
        report.witness("ordered_pair", format!("{} ; {}", rows(a.values(), a.dimension()), rows(b.values(), b.dimension())));
    }
    Ok(None)
}

fn decompose(sc: &Scenario, flags: &Flags, report: &mut ReportDocument) -> Outcome {
    let (pname, f) = sc.payoff(flags.payoff.as_deref())?;
    let (uname, u) = sc.utility(flags.utility.as_deref())?;
    let t = flags.level.unwrap_or(0);
    let s = flags.step.unwrap_or(1);
    let tol = flags.tol.unwrap_or(sc.settings.audit_tol);
    report.config("payoff", pname);
    report.config("utility", uname);
    report.config("level", t);
    report.config("step", s);
    report.config("tol", number(tol));
    let fam = family(sc, u, flags, report)?;
    let d = decompose_acceptance(&sc.space, &sc.order, f, &fam, t, s, tol)?;
    report.result("stepped_risk", d.stepped_risk, solver_method(u.core()), tol);
    report.result("tail_risk", d.tail_risk, solver_method(u.core()), tol);
    report.result("sum_residual", d.sum_residual, "difference", crate::dynamic::DECOMPOSITION_SUM_TOL);
    report.finding("f1", rows(d.f1.values(), d.f1.dimension()));
    report.finding("f2", rows(d.f2.values(), d.f2.dimension()));
    Ok(None)
}

fn selftest(flags: &Flags, report: &mut ReportDocument) -> Outcome {
    let cfg = BatteryConfig { trial_cap: flags.trials, seed: flags.seed.unwrap_or(DEFAULT_SEED) };
    report.config("trials", cfg.trial_cap.map_or("full".to_string(), |c| c.to_string()));
    report.config("seed", cfg.seed);
    let outcomes = run_battery(&cfg);
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    for o in &outcomes {
        report.finding(format!("criterion.{}", o.id), format!("{} {}", if o.passed { "pass" } else { "fail" }, o.name));
    }
    Ok((failed > 0).then(|| format!("{failed} of {} criteria failed", outcomes.len())))
}
