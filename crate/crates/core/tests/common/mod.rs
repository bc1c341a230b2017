//! Brute-force references shared by the integration and acceptance tests.
#![allow(dead_code)]

use seltag::hmm::{HmmModel, TagId};

/// Joint probability of a tag path and the words under `model`.
pub fn path_probability(model: &HmmModel, words: &[&str], path: &[TagId]) -> f64 {
    let mut p = model.initial(path[0]) * model.emission(words[0], path[0]);
    for k in 1..words.len() {
        p *= model.transition(path[k - 1], path[k]) * model.emission(words[k], path[k]);
    }
    p
}

/// Every tag path drawn from each word's hypotheses, with its joint probability.
pub fn enumerate_paths(model: &HmmModel, words: &[&str]) -> Vec<(Vec<TagId>, f64)> {
    let options: Vec<Vec<TagId>> = words
        .iter()
        .map(|w| model.hypotheses(w).iter().map(|&(t, _)| t).collect())
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; words.len()];
    loop {
        let path: Vec<TagId> = idx.iter().zip(&options).map(|(&i, o)| o[i]).collect();
        let p = path_probability(model, words, &path);
        out.push((path, p));
        let mut k = 0;
        loop {
            if k == idx.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < options[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Marginal posterior of each tag at each position, indexed `[position][tag]`.
pub fn enumerated_marginals(model: &HmmModel, words: &[&str]) -> (Vec<Vec<f64>>, f64) {
    let paths = enumerate_paths(model, words);
    let total: f64 = paths.iter().map(|(_, p)| p).sum();
    let mut marg = vec![vec![0.0; model.n_tags()]; words.len()];
    for (path, p) in &paths {
        for (k, t) in path.iter().enumerate() {
            marg[k][t.0] += p / total;
        }
    }
    (marg, total)
}

pub fn enumerated_max(model: &HmmModel, words: &[&str]) -> f64 {
    enumerate_paths(model, words)
        .into_iter()
        .map(|(_, p)| p)
        .fold(0.0, f64::max)
}
