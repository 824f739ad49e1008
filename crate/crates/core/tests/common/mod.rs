#![allow(dead_code)]

use markov_disorder::DisorderModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PRE: [[f64; 2]; 2] = [[0.1, 0.9], [0.8, 0.2]];
pub const POST: [[f64; 2]; 2] = [[0.7, 0.3], [0.4, 0.6]];

pub fn reference(p: f64, d: usize) -> DisorderModel {
    let rows = |m: [[f64; 2]; 2]| m.iter().map(|r| r.to_vec()).collect::<Vec<_>>();
    DisorderModel::from_rows(&rows(PRE), &rows(POST), p, d, 0).unwrap()
}

/// Every path `x0, x_1..x_n` over `k` states.
pub fn all_paths(k: usize, x0: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![x0]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..k).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

pub fn random_row(rng: &mut ChaCha8Rng, k: usize, zero_prob: f64) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..k)
            .map(|_| {
                if rng.random::<f64>() < zero_prob {
                    0.0
                } else {
                    rng.random::<f64>() + 0.05
                }
            })
            .collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            let mut row: Vec<f64> = raw.iter().map(|v| v / total).collect();
            // make the row sum exactly one
            let last = row.len() - 1;
            row[last] = 1.0 - row[..last].iter().sum::<f64>();
            if row[last] >= 0.0 {
                return row;
            }
        }
    }
}

/// A random valid model whose kernels may contain zeros.
pub fn random_model(seed: u64, k: usize, d: usize, p: f64, zero_prob: f64) -> DisorderModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pre: Vec<Vec<f64>> = (0..k).map(|_| random_row(&mut rng, k, zero_prob)).collect();
    let post: Vec<Vec<f64>> = (0..k).map(|_| random_row(&mut rng, k, zero_prob)).collect();
    DisorderModel::from_rows(&pre, &post, p, d, 0).unwrap()
}
