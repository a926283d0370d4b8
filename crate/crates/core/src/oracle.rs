//! Brute-force references for the chart engine.
//!
//! Everything here scores trees by explicit enumeration and never touches
//! the dynamic programs in [`crate::chart`], so the two paths can be checked
//! against each other (`selfcheck` does exactly that, as do the test
//! suites). Keep it that way.

use crate::chart::{enumerate_projective, ChartError, HeadArray};
use crate::mat::Mat;

fn score_tree(scores: &Mat, heads: &[usize]) -> f64 {
    (1..heads.len()).map(|m| scores[(heads[m], m)]).sum()
}

/// log Σ_trees exp(score) by explicit enumeration.
pub fn log_partition(scores: &Mat, trees: &[HeadArray]) -> f64 {
    let tree_scores: Vec<f64> = trees.iter().map(|t| score_tree(scores, t)).collect();
    let hi = tree_scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    hi + tree_scores.iter().map(|&x| (x - hi).exp()).sum::<f64>().ln()
}

/// Posterior arc probabilities by explicit enumeration.
pub fn arc_marginals(scores: &Mat, trees: &[HeadArray]) -> Mat {
    let len = scores.rows();
    let log_z = log_partition(scores, trees);
    let mut p = Mat::zeros(len, len);
    for heads in trees {
        let weight = (score_tree(scores, heads) - log_z).exp();
        for m in 1..len {
            p[(heads[m], m)] += weight;
        }
    }
    p
}

/// Expectation of Σ_{(h,m) in tree} f(h, m) under the tree posterior.
pub fn expected_arc_sum(scores: &Mat, trees: &[HeadArray], f: impl Fn(usize, usize) -> f64) -> f64 {
    let log_z = log_partition(scores, trees);
    let mut acc = 0.0;
    for heads in trees {
        let weight = (score_tree(scores, heads) - log_z).exp();
        let sum: f64 = (1..heads.len()).map(|m| f(heads[m], m)).sum();
        acc += weight * sum;
    }
    acc
}

/// Highest-scoring tree by enumeration. With continuous random scores the
/// argmax is unique; on exact ties the first tree in enumeration order wins.
pub fn argmax_tree(scores: &Mat, trees: &[HeadArray]) -> (HeadArray, f64) {
    let mut best = f64::NEG_INFINITY;
    let mut best_tree = trees[0].clone();
    for heads in trees {
        let s = score_tree(scores, heads);
        if s > best {
            best = s;
            best_tree = heads.clone();
        }
    }
    (best_tree, best)
}

/// Enumerated trees for a given length, or an error past the guard.
pub fn trees_for_len(len: usize) -> Result<Vec<HeadArray>, ChartError> {
    enumerate_projective(len)
}
