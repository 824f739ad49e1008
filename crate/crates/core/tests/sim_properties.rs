mod common;

use markov_disorder::sim::{
    dominance_sweep, evaluate_exact, evaluate_mc, CompetitorFamily, Verdict,
};
use markov_disorder::stopping::{solve_rstar, value_at_start};
use markov_disorder::{DisorderModel, Policy};

#[test]
fn all_stop_succeeds_only_on_an_immediate_switch() {
    let m = common::reference(0.5, 0);
    let r = evaluate_exact(&m, &Policy::all_stop(&m).unwrap(), 12).unwrap();
    assert!((r.estimate - 0.5).abs() < 1e-15);
}

#[test]
fn fixed_time_is_a_geometric_point_mass() {
    let m = common::reference(0.7, 0);
    for t in 1..=8 {
        let r = evaluate_exact(&m, &Policy::fixed_time(t), 12).unwrap();
        let want = 0.7f64.powi(t as i32 - 1) * 0.3;
        assert!((r.estimate - want).abs() < 1e-14, "t={t}");
    }
}

#[test]
fn monte_carlo_agrees_with_enumeration() {
    let m = common::reference(0.5, 0);
    let policy = Policy::optimal(solve_rstar(&m, 1e-12, 100_000).unwrap().table);
    let exact = evaluate_exact(&m, &policy, 20).unwrap();
    let mc = evaluate_mc(&m, &policy, 100_000, 20, 17).unwrap();
    assert!((mc.estimate - exact.estimate).abs() <= 3.0 * mc.ci_halfwidth);
}

#[test]
fn best_fixed_time_with_identical_kernels() {
    let rows = vec![vec![0.5, 0.5], vec![0.1, 0.9]];
    let m = DisorderModel::from_rows(&rows, &rows, 0.6, 0, 0).unwrap();
    let best = (1..=6)
        .map(|t| evaluate_mc(&m, &Policy::fixed_time(t), 100_000, 20, 5).unwrap().estimate)
        .fold(0.0, f64::max);
    assert!((best - 0.4).abs() < 0.01, "{best}");
}

#[test]
fn optimal_rule_dominates_standard_competitors() {
    let m = common::reference(0.8, 0);
    let rstar = solve_rstar(&m, 1e-12, 100_000).unwrap().table;
    let family = CompetitorFamily {
        threshold_scales: vec![],
        ..CompetitorFamily::standard()
    };
    let report = dominance_sweep(&m, &rstar, &family, 18).unwrap();
    assert_eq!(report.verdict, Verdict::Dominant);
    assert!(report.violations().is_empty());
}

#[test]
fn optimal_rule_dominates_perturbed_thresholds() {
    let m = common::reference(0.8, 1);
    let rstar = solve_rstar(&m, 1e-12, 100_000).unwrap().table;
    let family = CompetitorFamily {
        posterior_levels: vec![],
        fixed_times: vec![],
        threshold_scales: vec![0.8, 0.95, 1.05, 1.2],
    };
    let report = dominance_sweep(&m, &rstar, &family, 18).unwrap();
    assert_eq!(report.verdict, Verdict::Dominant);
    let v = value_at_start(&m, &rstar).unwrap();
    assert!(report.optimal.estimate <= v + 1e-12);
}

#[test]
fn optimal_rule_dominates_at_long_horizon_for_large_p() {
    use markov_disorder::sim::evaluate_window_recursion;
    for d in 0..2 {
        let m = common::reference(0.96, d);
        let rstar = solve_rstar(&m, 1e-13, 1_000_000).unwrap().table;
        let horizon = 2000;
        let optimal = evaluate_window_recursion(&m, &Policy::optimal(rstar.clone()), horizon).unwrap();
        assert!(optimal.truncation_bound < 1e-30);
        let family = CompetitorFamily {
            posterior_levels: vec![],
            ..CompetitorFamily::standard()
        };
        for policy in family.policies(&rstar) {
            let c = evaluate_window_recursion(&m, &policy, horizon).unwrap();
            assert!(optimal.estimate >= c.estimate - 1e-12, "d={d} {}: {} > {}", c.policy_id, c.estimate, optimal.estimate);
        }
    }
}
