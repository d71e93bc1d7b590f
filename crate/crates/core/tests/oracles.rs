//! Library results against oracles computed independently in the test.

use varisk::dual::{dual_value, penalty_minimal, DualFeasibleElement, DualSearch, PenaltyStrategy};
use varisk::dynamic::{conditional_penalty_min, decompose_acceptance, rho_t, DynamicFamily};
use varisk::oce::{rho, Core, Utility};
use varisk::ordered::RandomVector;
use varisk::scenario::{parse_scenario, Scenario, FIXTURES};
use varisk::varexp::luxemburg_norm;

fn fixture(name: &str) -> Scenario {
    let text = FIXTURES.iter().find(|(n, _)| *n == name).unwrap().1;
    parse_scenario(text, true).unwrap().1
}

fn entropic(weights: &[f64], f: &[f64], gamma: f64) -> f64 {
    weights.iter().zip(f).map(|(w, x)| w * (-gamma * x).exp()).sum::<f64>().ln() / gamma
}

/// Max of `-Σ w_i q_i f_i` over `lo <= q <= hi`, `Σ w_i q_i = 1`, by
/// enumerating vertices: every coordinate at a bound except at most one.
fn box_lp(w: &[f64], f: &[f64], lo: f64, hi: f64) -> f64 {
    let n = w.len();
    let mut best = f64::NEG_INFINITY;
    for free in 0..n {
        for mask in 0..(1u32 << n) {
            let mut q: Vec<f64> = (0..n).map(|i| if mask >> i & 1 == 1 { hi } else { lo }).collect();
            let rest: f64 = (0..n).filter(|&i| i != free).map(|i| w[i] * q[i]).sum();
            q[free] = (1.0 - rest) / w[free];
            if q[free] < lo - 1e-12 || q[free] > hi + 1e-12 {
                continue;
            }
            best = best.max(-(0..n).map(|i| w[i] * q[i] * f[i]).sum::<f64>());
        }
    }
    best
}

#[test]
fn entropic_matches_log_sum_exp() {
    let s = fixture("two_point");
    let (_, u) = s.utility(Some("entropic")).unwrap();
    for f in [[0.0, 1.0], [2.0, 1.0], [-3.0, 0.5], [4.0, 4.0]] {
        let r = rho(&s.space, &RandomVector::scalar(&f).unwrap(), u, 1e-12).unwrap();
        assert!((r - entropic(&[0.5, 0.5], &f, 1.0)).abs() < 1e-9);
    }
    // ρ(f) for f = (0, 1): ln((1 + e^{-1}) / 2)
    let r = rho(&s.space, s.payoff(Some("f")).unwrap().1, u, 1e-12).unwrap();
    assert!((r - (-0.379_885_493)).abs() < 1e-8);
}

#[test]
fn entropic_tree_values() {
    let s = fixture("four_leaf");
    let fam = DynamicFamily::conditional(s.utility(Some("entropic")).unwrap().1.clone());
    let (_, f) = s.payoff(Some("f")).unwrap();
    let r1 = rho_t(&s.space, f, &fam, 1, 1e-12).unwrap();
    let oracle = [entropic(&[0.5, 0.5], &[0.0, 1.0], 1.0), entropic(&[0.5, 0.5], &[2.0, 3.0], 1.0)];
    for (a, b) in r1.atom_values().iter().zip(oracle) {
        assert!((a - b).abs() < 1e-9);
    }
    assert!((oracle[0] + 0.379_89).abs() < 1e-5 && (oracle[1] + 2.379_89).abs() < 1e-5);
    let r0 = rho_t(&s.space, f, &fam, 0, 1e-12).unwrap().atom_values()[0];
    assert!((r0 - entropic(&[0.25; 4], &[0.0, 1.0, 2.0, 3.0], 1.0)).abs() < 1e-9);
}

#[test]
fn two_point_duality_against_density_grid() {
    let s = fixture("two_point");
    for name in ["entropic", "cvar", "piecewise"] {
        let (_, u) = s.utility(Some(name)).unwrap();
        for f in [[0.0, 1.0], [2.0, 1.0], [-1.0, 3.0]] {
            // q = (x, 2 - x) for x ∈ [0, 2], penalty from the core's conjugate
            let mut best = f64::NEG_INFINITY;
            let steps = 200_000;
            for k in 0..=steps {
                let x = 2.0 * k as f64 / steps as f64;
                let q = [x, 2.0 - x];
                let alpha = match *u.core() {
                    Core::Exponential { rate } => {
                        0.5 * q.iter().map(|v| if *v > 0.0 { v * v.ln() } else { 0.0 }).sum::<f64>() / rate
                    }
                    _ => {
                        let (a, b) = u.core().slopes().unwrap();
                        if q.iter().all(|v| *v >= b && *v <= a) { 0.0 } else { f64::INFINITY }
                    }
                };
                best = best.max(-0.5 * (q[0] * f[0] + q[1] * f[1]) - alpha);
            }
            let f = RandomVector::scalar(&f).unwrap();
            let primal = rho(&s.space, &f, u, 1e-12).unwrap();
            let dual = dual_value(&s.space, &f, u, DualSearch::default()).unwrap().value;
            assert!((best - primal).abs() < 1e-6, "{name}: grid {best} vs primal {primal}");
            assert!((dual - primal).abs() < 1e-6, "{name}: dual {dual} vs primal {primal}");
        }
    }
}

#[test]
fn cvar_matches_vertex_enumeration() {
    let weights = [0.1, 0.25, 0.05, 0.3, 0.3];
    let space = varisk::space::FiniteMeasureSpace::one_period(weights.to_vec()).unwrap();
    let payoffs = [[1.0, -2.0, 0.5, 3.0, 0.0], [0.0; 5], [-1.0, -1.0, 2.0, 2.0, 4.0]];
    for level in [0.1, 0.5, 0.9] {
        let u = Utility::scalar(Core::Cvar { level }).unwrap();
        for f in payoffs {
            let r = rho(&space, &RandomVector::scalar(&f).unwrap(), &u, 1e-12).unwrap();
            let lp = box_lp(&weights, &f, 0.0, 1.0 / (1.0 - level));
            assert!((r - lp).abs() < 1e-9, "level {level}: {r} vs {lp}");
        }
    }
    let u = Utility::scalar(Core::PiecewiseLinear { loss_slope: 3.0, gain_slope: 0.4 }).unwrap();
    for f in payoffs {
        let r = rho(&space, &RandomVector::scalar(&f).unwrap(), &u, 1e-12).unwrap();
        assert!((r - box_lp(&weights, &f, 0.4, 3.0)).abs() < 1e-9);
    }
}

#[test]
fn entropic_penalty_is_relative_entropy() {
    let s = fixture("two_point");
    let (_, u) = s.utility(Some("entropic")).unwrap();
    let (_, h) = s.density(Some("q")).unwrap();
    let g = DualFeasibleElement::new(&s.space, &s.order, h.clone()).unwrap();
    let alpha = penalty_minimal(&s.space, &s.order, &g, u, PenaltyStrategy::ClosedForm).unwrap().value;
    let oracle = 0.5 * (1.6 * 1.6f64.ln() + 0.4 * 0.4f64.ln());
    assert!((alpha - oracle).abs() < 1e-12);
    assert!((alpha - 0.192_74).abs() < 1e-5);
}

#[test]
fn conditional_penalty_against_boundary_grid() {
    // On an atom {x, y} with equal weights, the acceptance boundary of the
    // entropic family is e^{-f_x} + e^{-f_y} = 2; parametrize by f_x.
    let s = fixture("four_leaf");
    let (_, u) = s.utility(Some("entropic")).unwrap();
    let (_, h) = s.density(Some("q")).unwrap();
    let cp = conditional_penalty_min(&s.space, &s.order, h, u, 1, PenaltyStrategy::ClosedForm).unwrap();
    let q = h.values();
    for (atom, (i, j)) in [(0, 1), (2, 3)].into_iter().enumerate() {
        let mut best = f64::NEG_INFINITY;
        let steps = 400_000;
        for k in 1..steps {
            let fx = -(2.0f64.ln()) + 40.0 * k as f64 / steps as f64;
            let rest = 2.0 - (-fx).exp();
            let fy = -rest.ln();
            best = best.max(-0.5 * (q[i] * fx + q[j] * fy));
        }
        let value = cp.value.atom_values()[atom];
        assert!((value - best).abs() < 1e-6, "atom {atom}: {value} vs {best}");
    }
    // κ E_A[(q/κ) ln(q/κ)] with κ = 1 on both atoms here
    assert!((cp.value.atom_values()[0] - 0.192_744_757).abs() < 1e-8);
    assert!((cp.value.atom_values()[1] - 0.020_135_514).abs() < 1e-8);
}

#[test]
fn two_point_norm() {
    let s = fixture("two_point");
    let p = s.exponent.as_ref().unwrap();
    let f = RandomVector::scalar(&[1.0, 2.0]).unwrap();
    let n = luxemburg_norm(&s.space, &f, p, 1e-12).unwrap();
    // 0.5 x + 8 x^2 = 1 with x = λ^{-2}
    let x = (-0.5 + (0.25f64 + 32.0).sqrt()) / 16.0;
    let oracle = 1.0 / x.sqrt();
    assert!((n - oracle).abs() < 1e-10, "{n} vs {oracle}");
    let g = RandomVector::scalar(&[0.0, 2.0]).unwrap();
    let n = luxemburg_norm(&s.space, &g, p, 1e-12).unwrap();
    // 0.5 (2/λ)^4 = 1  =>  λ = 2 / 2^{1/4}
    assert!((n - 2.0 / 2.0f64.powf(0.25)).abs() < 1e-10);
}

#[test]
fn decomposition_examples() {
    let s = fixture("four_leaf");
    let fam = DynamicFamily::conditional(s.utility(Some("entropic")).unwrap().1.clone());
    let (_, g) = s.payoff(Some("g")).unwrap();
    let d = decompose_acceptance(&s.space, &s.order, g, &fam, 0, 1, 1e-9).unwrap();
    let r1 = [entropic(&[0.5, 0.5], &[1.0, 2.0], 1.0), entropic(&[0.5, 0.5], &[3.0, 4.0], 1.0)];
    let expected_f1 = [-r1[0], -r1[0], -r1[1], -r1[1]];
    for (a, b) in d.f1.values().iter().zip(expected_f1) {
        assert!((a - b).abs() < 1e-9);
    }
    for (i, (a, b)) in d.f2.values().iter().zip(g.values()).enumerate() {
        assert!((a - (b - expected_f1[i])).abs() < 1e-9);
    }
    assert!(d.sum_residual <= 1e-12 * 4.0);
    assert!(d.tail_risk <= 1e-9);
    // ρ_0(f1) = entropic risk of the atom values
    assert!((d.stepped_risk - entropic(&[0.5, 0.5], &[-r1[0], -r1[1]], 1.0)).abs() < 1e-9);

    let cvar = DynamicFamily::conditional(s.utility(Some("cvar")).unwrap().1.clone());
    let (_, h) = s.payoff(Some("h")).unwrap();
    assert!(matches!(
        decompose_acceptance(&s.space, &s.order, h, &cvar, 0, 1, 1e-9),
        Err(varisk::Error::DecompositionFailed { .. })
    ));
    let bad = RandomVector::scalar(&[-1.0, -1.0, -1.0, -1.0]).unwrap();
    assert!(matches!(
        decompose_acceptance(&s.space, &s.order, &bad, &fam, 0, 1, 1e-9),
        Err(varisk::Error::NotAccepted { .. })
    ));
}

#[test]
fn conditional_penalty_feasible_densities_sit_in_dual_hull() {
    // sanity for the grid oracle's sign convention: ρ_1(f) >= <q, -f>_1 - α_1(q) atomwise
    let s = fixture("four_leaf");
    let (_, u) = s.utility(Some("entropic")).unwrap();
    let (_, h) = s.density(Some("q")).unwrap();
    let fam = DynamicFamily::conditional(u.clone());
    let cp = conditional_penalty_min(&s.space, &s.order, h, u, 1, PenaltyStrategy::ClosedForm).unwrap();
    for f in [[0.0, 1.0, 2.0, 3.0], [3.0, -1.0, 0.0, 0.0]] {
        let f = RandomVector::scalar(&f).unwrap();
        let r = rho_t(&s.space, &f, &fam, 1, 1e-12).unwrap();
        let p = varisk::dynamic::conditional_pairing(&s.space, h, &f, 1).unwrap();
        for k in 0..2 {
            assert!(r.atom_values()[k] >= p.atom_values()[k] - cp.value.atom_values()[k] - 1e-9);
        }
    }
}
