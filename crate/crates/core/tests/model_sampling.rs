mod common;

use markov_disorder::model::{sample_trajectory_with, GeometricPrior};
use markov_disorder::DisorderModel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const DRAWS: usize = 1_000_000;

fn chi_square_p_value(stat: f64, df: f64) -> f64 {
    1.0 - ChiSquared::new(df).unwrap().cdf(stat)
}

#[test]
fn geometric_mean_matches_one_over_q() {
    let prior = GeometricPrior::new(0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mean = (0..DRAWS).map(|_| prior.sample(&mut rng) as f64).sum::<f64>() / DRAWS as f64;
    assert!((mean - 2.0).abs() < 0.01, "mean {mean}");
}

#[test]
fn geometric_tail_matches_power() {
    let prior = GeometricPrior::new(0.9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let above = (0..DRAWS).filter(|_| prior.sample(&mut rng) > 10).count();
    let freq = above as f64 / DRAWS as f64;
    assert!((freq - 0.9f64.powi(10)).abs() < 0.002, "tail {freq}");
    assert!((prior.tail(10) - 0.3486784401).abs() < 1e-10);
}

#[test]
fn vanishing_p_switches_immediately() {
    let prior = GeometricPrior::new(1e-12).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    assert!((0..10_000).all(|_| prior.sample(&mut rng) == 1));
}

#[test]
fn first_transition_is_the_one_step_mixture() {
    let m = common::reference(0.5, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let zeros = (0..DRAWS)
        .filter(|_| sample_trajectory_with(&m, 1, &mut rng).states[1] == 0)
        .count();
    let freq = zeros as f64 / DRAWS as f64;
    assert!((freq - 0.40).abs() < 0.002, "freq {freq}");
}

#[test]
fn paths_without_a_switch_follow_the_pre_change_chain() {
    let m = common::reference(0.9, 0);
    let horizon = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut counts = [[0u64; 2]; 2];
    for _ in 0..200_000 {
        let t = sample_trajectory_with(&m, horizon, &mut rng);
        if t.theta > horizon {
            for w in t.states.windows(2) {
                counts[w[0]][w[1]] += 1;
            }
        }
    }
    let mut stat = 0.0;
    for (i, row) in counts.iter().enumerate() {
        let total: u64 = row.iter().sum();
        for (j, &c) in row.iter().enumerate() {
            let expected = total as f64 * common::PRE[i][j];
            stat += (c as f64 - expected).powi(2) / expected;
        }
    }
    let pv = chi_square_p_value(stat, 2.0);
    assert!(pv > 1e-3, "chi-square {stat}, p-value {pv}");
}

#[test]
fn identical_kernels_make_paths_independent_of_theta() {
    let rows = vec![vec![0.3, 0.7], vec![0.6, 0.4]];
    let m = DisorderModel::from_rows(&rows, &rows, 0.6, 0, 0).unwrap();
    let horizon = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    // visits to state 1 among x_1..x_6, split by early or late switch
    let mut table = [[0u64; 7]; 2];
    for _ in 0..200_000 {
        let t = sample_trajectory_with(&m, horizon, &mut rng);
        let ones = t.states[1..].iter().filter(|&&x| x == 1).count();
        table[usize::from(t.theta > 2)][ones] += 1;
    }
    let cols: Vec<usize> = (0..7).filter(|&c| table[0][c] + table[1][c] >= 50).collect();
    let row_totals: Vec<f64> = table
        .iter()
        .map(|r| cols.iter().map(|&c| r[c] as f64).sum())
        .collect();
    let grand: f64 = row_totals.iter().sum();
    let mut stat = 0.0;
    for &c in &cols {
        let col_total = (table[0][c] + table[1][c]) as f64;
        for (r, row) in table.iter().enumerate() {
            let expected = row_totals[r] * col_total / grand;
            stat += (row[c] as f64 - expected).powi(2) / expected;
        }
    }
    let pv = chi_square_p_value(stat, (cols.len() - 1) as f64);
    assert!(pv > 1e-3, "chi-square {stat}, p-value {pv}");
}

#[test]
fn trajectories_reproduce_from_the_seed() {
    let m = common::reference(0.7, 1);
    let a = markov_disorder::model::sample_trajectory(&m, 50, 99).unwrap();
    let b = markov_disorder::model::sample_trajectory(&m, 50, 99).unwrap();
    assert_eq!(a, b);
    assert!(markov_disorder::model::sample_trajectory(&m, 0, 99).is_err());
}
