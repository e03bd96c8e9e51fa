//! Seeded instance generators: small random binary programs for exhaustive checks and a
//! toy benchmark corpus of knapsack and covering problems.

use rand::seq::index;
use rand::Rng;

use super::{MiniMip, ObjSense, RowSense};
use crate::rng::trial_rng;

/// A pure binary program with `n` variables and 1 to 5 integer-coefficient rows.
///
/// Equality rows are built through a random 0/1 point so they are never trivially
/// infeasible; the other rows may or may not admit a solution.
pub fn random_binary_mip(seed: u64, n: usize) -> MiniMip {
    let mut rng = trial_rng(seed, n as u64);
    let objective: Vec<f64> = (0..n).map(|_| rng.random_range(-10..=10) as f64).collect();
    let mut mip = MiniMip::new(format!("bin{n}_{seed}"), ObjSense::Minimize, objective);
    for j in 0..n {
        mip.set_binary(j);
    }
    let point: Vec<f64> = (0..n).map(|_| rng.random_range(0..=1) as f64).collect();
    for _ in 0..rng.random_range(1..=5) {
        let coeffs: Vec<f64> = (0..n).map(|_| rng.random_range(-3..=9) as f64).collect();
        let positive: f64 = coeffs.iter().filter(|&&a| a > 0.0).sum();
        let roll = rng.random::<f64>();
        let (sense, rhs) = if roll < 0.6 {
            (RowSense::Le, (positive * rng.random_range(0.2..0.7)).floor())
        } else if roll < 0.9 {
            (RowSense::Ge, (positive * rng.random_range(0.1..0.5)).floor())
        } else {
            let at_point: f64 = coeffs.iter().zip(&point).map(|(a, x)| a * x).sum();
            (RowSense::Eq, at_point)
        };
        mip.add_row(coeffs, sense, rhs);
    }
    mip
}

/// Multi-dimensional knapsack with weights correlated to profits (maximisation).
pub fn knapsack(seed: u64, items: usize, dims: usize) -> MiniMip {
    let mut rng = trial_rng(seed, 0x6b6e_6170);
    let weights: Vec<Vec<f64>> = (0..dims)
        .map(|_| (0..items).map(|_| rng.random_range(10..=60) as f64).collect())
        .collect();
    let profits: Vec<f64> = (0..items)
        .map(|j| {
            let mean = weights.iter().map(|w| w[j]).sum::<f64>() / dims as f64;
            (mean + rng.random_range(0..=15) as f64).round()
        })
        .collect();
    let mut mip = MiniMip::new(format!("mkp_{seed}"), ObjSense::Maximize, profits);
    for j in 0..items {
        mip.set_binary(j);
        mip.var_names[j] = format!("item{j}");
    }
    for w in weights {
        let cap = (w.iter().sum::<f64>() * rng.random_range(0.35..0.55)).floor();
        mip.add_row(w, RowSense::Le, cap);
    }
    mip
}

/// Weighted set covering in which every element lies in `per_element` distinct random sets.
pub fn set_cover(seed: u64, sets: usize, elements: usize, per_element: usize) -> MiniMip {
    let mut rng = trial_rng(seed, 0x636f_7672);
    let costs: Vec<f64> = (0..sets).map(|_| rng.random_range(1..=4) as f64).collect();
    let mut mip = MiniMip::new(format!("cover_{seed}"), ObjSense::Minimize, costs);
    for j in 0..sets {
        mip.set_binary(j);
        mip.var_names[j] = format!("set{j}");
    }
    for _ in 0..elements {
        let mut row = vec![0.0; sets];
        for j in index::sample(&mut rng, sets, per_element.min(sets)) {
            row[j] = 1.0;
        }
        mip.add_row(row, RowSense::Ge, 1.0);
    }
    mip
}

/// The toy benchmark corpus: alternating knapsack and covering instances.
pub fn toy_corpus(seed: u64, count: usize) -> Vec<MiniMip> {
    (0..count)
        .map(|i| {
            let s = seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
            let mut mip = if i % 2 == 0 {
                knapsack(s, 30, 5)
            } else {
                set_cover(s, 50, 50, 6)
            };
            mip.name = format!("toy{i:03}");
            mip
        })
        .collect()
}
