use super::{argmax, HmmModel, TagId, TokenPosterior};
use crate::error::{Error, Result};

/// Scaled forward/backward lattice over the sparse hypothesis sets of one
/// sentence. `alpha[k]` sums to 1 at every position; `scale[k]` is the factor
/// removed there, so the sentence likelihood is the product of the scales.
pub(super) struct Lattice<'m> {
    pub hyps: Vec<&'m [(TagId, f64)]>,
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
    pub scale: Vec<f64>,
}

impl Lattice<'_> {
    pub fn log_likelihood(&self) -> f64 {
        self.scale.iter().map(|c| c.ln()).sum()
    }
}

fn hypothesis_lists<'m, S: AsRef<str>>(model: &'m HmmModel, sentence: &[S]) -> Result<Vec<&'m [(TagId, f64)]>> {
    if sentence.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(sentence.iter().map(|w| model.hypotheses(w.as_ref())).collect())
}

fn dead_end<S: AsRef<str>>(sentence: &[S], position: usize) -> Error {
    Error::DeadEnd {
        position,
        word: sentence[position].as_ref().to_string(),
    }
}

/// Hypothesis lists, scaled forward columns and per-position scale factors.
type ForwardPass<'m> = (Vec<&'m [(TagId, f64)]>, Vec<Vec<f64>>, Vec<f64>);

fn forward<'m, S: AsRef<str>>(model: &'m HmmModel, sentence: &[S]) -> Result<ForwardPass<'m>> {
    let hyps = hypothesis_lists(model, sentence)?;
    let mut alpha: Vec<Vec<f64>> = Vec::with_capacity(hyps.len());
    let mut scale = Vec::with_capacity(hyps.len());
    for (k, here) in hyps.iter().enumerate() {
        let mut column: Vec<f64> = if k == 0 {
            here.iter().map(|&(t, e)| model.initial(t) * e).collect()
        } else {
            let prev_hyps = hyps[k - 1];
            let prev = &alpha[k - 1];
            here.iter()
                .map(|&(to, e)| {
                    let inflow: f64 = prev_hyps
                        .iter()
                        .zip(prev)
                        .map(|(&(from, _), &a)| a * model.transition(from, to))
                        .sum();
                    inflow * e
                })
                .collect()
        };
        let total: f64 = column.iter().sum();
        if total <= 0.0 || total.is_nan() {
            return Err(dead_end(sentence, k));
        }
        column.iter_mut().for_each(|a| *a /= total);
        alpha.push(column);
        scale.push(total);
    }
    Ok((hyps, alpha, scale))
}

pub(super) fn lattice<'m, S: AsRef<str>>(model: &'m HmmModel, sentence: &[S]) -> Result<Lattice<'m>> {
    let (hyps, alpha, scale) = forward(model, sentence)?;
    let len = hyps.len();
    let mut beta: Vec<Vec<f64>> = vec![Vec::new(); len];
    beta[len - 1] = vec![1.0; hyps[len - 1].len()];
    for k in (0..len - 1).rev() {
        let next_hyps = hyps[k + 1];
        let (head, tail) = beta.split_at_mut(k + 1);
        let next_beta = &tail[0];
        head[k] = hyps[k]
            .iter()
            .map(|&(from, _)| {
                let row = model.transition_row(from);
                let out: f64 = next_hyps
                    .iter()
                    .zip(next_beta)
                    .map(|(&(to, e), &b)| row[to.0] * e * b)
                    .sum();
                out / scale[k + 1]
            })
            .collect();
    }
    Ok(Lattice {
        hyps,
        alpha,
        beta,
        scale,
    })
}

/// Per-token posterior distribution over hypothesised tags.
pub fn forward_backward<S: AsRef<str>>(model: &HmmModel, sentence: &[S]) -> Result<Vec<TokenPosterior>> {
    let lat = lattice(model, sentence)?;
    sentence
        .iter()
        .enumerate()
        .map(|(k, word)| {
            let scores = lat.hyps[k]
                .iter()
                .zip(lat.alpha[k].iter().zip(&lat.beta[k]))
                .map(|(&(t, _), (&a, &b))| (t, a * b))
                .collect();
            TokenPosterior::from_scores(word.as_ref(), scores).map_err(|_| dead_end(sentence, k))
        })
        .collect()
}

/// Natural log of the total probability of `sentence` over all tag paths.
pub fn sequence_likelihood<S: AsRef<str>>(model: &HmmModel, sentence: &[S]) -> Result<f64> {
    let (_, _, scale) = forward(model, sentence)?;
    Ok(scale.iter().map(|c| c.ln()).sum())
}

/// Most probable tag path, computed in log space.
pub fn viterbi<S: AsRef<str>>(model: &HmmModel, sentence: &[S]) -> Result<Vec<TagId>> {
    let hyps = hypothesis_lists(model, sentence)?;
    let mut score: Vec<f64> = hyps[0].iter().map(|&(t, e)| model.initial(t).ln() + e.ln()).collect();
    if score.iter().all(|s| *s == f64::NEG_INFINITY) {
        return Err(dead_end(sentence, 0));
    }
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(hyps.len());
    back.push(Vec::new());
    for k in 1..hyps.len() {
        let prev_hyps = hyps[k - 1];
        let mut next = Vec::with_capacity(hyps[k].len());
        let mut pointers = Vec::with_capacity(hyps[k].len());
        for &(to, e) in hyps[k] {
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (i, (&(from, _), &s)) in prev_hyps.iter().zip(&score).enumerate() {
                let cand = s + model.transition(from, to).ln();
                if cand > best_score {
                    best = i;
                    best_score = cand;
                }
            }
            next.push(best_score + e.ln());
            pointers.push(best);
        }
        if next.iter().all(|s| *s == f64::NEG_INFINITY) {
            return Err(dead_end(sentence, k));
        }
        score = next;
        back.push(pointers);
    }
    let mut idx = argmax(score.iter().copied());
    let mut path = vec![TagId(0); hyps.len()];
    for k in (0..hyps.len()).rev() {
        path[k] = hyps[k][idx].0;
        if k > 0 {
            idx = back[k][idx];
        }
    }
    Ok(path)
}

/// Output of [`forward_backward_lenient`].
#[derive(Debug, Clone, PartialEq)]
pub struct LenientDecoding {
    pub posteriors: Vec<TokenPosterior>,
    /// Positions where decoding had to restart because no path reached them.
    pub restarts: Vec<usize>,
    /// Positions that could not be scored at all and were given a uniform
    /// distribution over their hypotheses.
    pub uniform: Vec<usize>,
}

/// Like [`forward_backward`], but a dead end splits the sentence instead of
/// failing: decoding restarts at the dead-end token as if it began a new
/// sentence. A token that is a dead end even at a sentence start gets a
/// uniform posterior over its hypotheses.
pub fn forward_backward_lenient<S: AsRef<str>>(model: &HmmModel, sentence: &[S]) -> Result<LenientDecoding> {
    if sentence.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut out = LenientDecoding {
        posteriors: Vec::with_capacity(sentence.len()),
        restarts: Vec::new(),
        uniform: Vec::new(),
    };
    let mut start = 0;
    while start < sentence.len() {
        let rest = &sentence[start..];
        match forward_backward(model, rest) {
            Ok(posteriors) => {
                out.posteriors.extend(posteriors);
                break;
            }
            Err(Error::DeadEnd { position: 0, .. }) => {
                let word = rest[0].as_ref();
                let hyps = model.hypotheses(word);
                let uniform = hyps.iter().map(|&(t, _)| (t, 1.0)).collect();
                out.posteriors.push(TokenPosterior::from_scores(word, uniform)?);
                out.uniform.push(start);
                start += 1;
                if start < sentence.len() {
                    out.restarts.push(start);
                }
            }
            Err(Error::DeadEnd { position, .. }) => {
                let head = forward_backward(model, &rest[..position])?;
                out.posteriors.extend(head);
                start += position;
                out.restarts.push(start);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
