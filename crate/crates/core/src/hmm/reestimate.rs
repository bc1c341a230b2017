use super::decode::lattice;
use super::{HmmModel, Lexicon, TagId};
use crate::error::{Error, Result};

/// Result of [`baum_welch`].
#[derive(Debug, Clone)]
pub struct Reestimation {
    pub model: HmmModel,
    /// Total corpus log-likelihood of the starting model followed by the
    /// value after each iteration.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    /// Stopped because the improvement dropped below the tolerance.
    pub converged: bool,
}

/// Expected counts gathered from one E-step.
struct Expectations {
    initial: Vec<f64>,
    transitions: Vec<f64>,
    /// Parallel to the lexicon entries.
    emissions: Vec<Vec<f64>>,
    /// Per-tag posterior mass on lexicon-word tokens only.
    known_mass: Vec<f64>,
    sentences: usize,
    log_likelihood: f64,
}

fn expectations<S: AsRef<str>>(model: &HmmModel, corpus: &[Vec<S>]) -> Result<Expectations> {
    let n = model.n_tags();
    let mut acc = Expectations {
        initial: vec![0.0; n],
        transitions: vec![0.0; n * n],
        emissions: model.lexicon.entries.iter().map(|e| vec![0.0; e.len()]).collect(),
        known_mass: vec![0.0; n],
        sentences: corpus.len(),
        log_likelihood: 0.0,
    };
    for (s, sentence) in corpus.iter().enumerate() {
        let lat = lattice(model, sentence).map_err(|e| match e {
            Error::DeadEnd { .. } => Error::ZeroLikelihood { sentence: s },
            other => other.in_sentence(s),
        })?;
        acc.log_likelihood += lat.log_likelihood();
        for (k, word) in sentence.iter().enumerate() {
            let gamma: Vec<f64> = lat.alpha[k].iter().zip(&lat.beta[k]).map(|(a, b)| a * b).collect();
            let norm: f64 = gamma.iter().sum();
            let word_idx = model.lexicon.index.get(word.as_ref()).copied();
            for (j, &(t, _)) in lat.hyps[k].iter().enumerate() {
                let g = gamma[j] / norm;
                if k == 0 {
                    acc.initial[t.0] += g;
                }
                if let Some(w) = word_idx {
                    acc.emissions[w][j] += g;
                    acc.known_mass[t.0] += g;
                }
            }
            if k + 1 < sentence.len() {
                let next = lat.hyps[k + 1];
                let xi_scale = lat.scale[k + 1];
                for (i, &(from, _)) in lat.hyps[k].iter().enumerate() {
                    let a = lat.alpha[k][i];
                    if a == 0.0 {
                        continue;
                    }
                    let row = model.transition_row(from);
                    for (j, &(to, e)) in next.iter().enumerate() {
                        acc.transitions[from.0 * n + to.0] += a * row[to.0] * e * lat.beta[k + 1][j] / xi_scale;
                    }
                }
            }
        }
    }
    Ok(acc)
}

fn maximize(model: &HmmModel, acc: &Expectations) -> HmmModel {
    let n = model.n_tags();
    let initial: Vec<f64> = acc.initial.iter().map(|&g| g / acc.sentences as f64).collect();

    let mut transitions = model.transitions.clone();
    for from in 0..n {
        let row = &acc.transitions[from * n..(from + 1) * n];
        let total: f64 = row.iter().sum();
        // A tag never seen before another token keeps its old row.
        if total > 0.0 {
            for (dst, &x) in transitions[from * n..(from + 1) * n].iter_mut().zip(row) {
                *dst = x / total;
            }
        }
    }

    let mut words = Vec::with_capacity(model.lexicon.words.len());
    let mut entries = Vec::with_capacity(model.lexicon.words.len());
    for (w, old) in model.lexicon.entries.iter().enumerate() {
        let list: Vec<(TagId, f64)> = old
            .iter()
            .zip(&acc.emissions[w])
            .map(|(&(t, p), &g)| {
                let mass = acc.known_mass[t.0];
                (t, if mass > 0.0 { g / mass } else { p })
            })
            .filter(|&(_, p)| p > 0.0)
            .collect();
        if !list.is_empty() {
            words.push(model.lexicon.words[w].clone());
            entries.push(list);
        }
    }
    let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    let lexicon = Lexicon { words, index, entries };
    HmmModel::from_parts(model.tagset.clone(), initial, transitions, lexicon)
}

/// EM re-estimation of initial, transition and emission probabilities from
/// untagged sentences.
///
/// Emission distributions are re-estimated over lexicon words only; unseen
/// words keep their constant open-class emission and contribute to the
/// initial and transition statistics. Entries whose probability falls to
/// exactly zero are dropped from the lexicon.
pub fn baum_welch<S: AsRef<str>>(
    model: &HmmModel,
    corpus: &[Vec<S>],
    max_iters: usize,
    tol: f64,
) -> Result<Reestimation> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if let Some(s) = corpus.iter().position(|s| s.is_empty()) {
        return Err(Error::EmptyInput.in_sentence(s));
    }
    let mut current = model.clone();
    let mut acc = expectations(&current, corpus)?;
    let mut trace = vec![acc.log_likelihood];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        let next = maximize(&current, &acc);
        let next_acc = expectations(&next, corpus)?;
        let improvement = next_acc.log_likelihood - acc.log_likelihood;
        trace.push(next_acc.log_likelihood);
        current = next;
        acc = next_acc;
        iterations += 1;
        if improvement < tol {
            converged = true;
            break;
        }
    }
    Ok(Reestimation {
        model: current,
        log_likelihood: trace,
        iterations,
        converged,
    })
}
