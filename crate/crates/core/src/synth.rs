//! Random HMMs and corpora sampled from them, for tests and experiments
//! where the generating model is known.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;

use crate::corpus::{TaggedCorpus, TaggedToken};
use crate::hmm::{HmmModel, Tag, TagId, Tagset};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorConfig {
    pub tags: usize,
    pub vocabulary: usize,
    /// Each word is given between 1 and this many tags.
    pub max_tags_per_word: usize,
    /// Weights are drawn as `u^skew` for uniform `u`; larger values make
    /// distributions more peaked.
    pub skew: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            tags: 4,
            vocabulary: 8,
            max_tags_per_word: 3,
            skew: 1.0,
        }
    }
}

fn weights<R: Rng + ?Sized>(rng: &mut R, n: usize, skew: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| (1.0 - rng.gen::<f64>()).powf(skew) + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// A random fully-connected model whose emission rows each sum to one over the
/// vocabulary `w0, w1, ...`. Every tag is open-class and emits at least one
/// word.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, config: &GeneratorConfig) -> HmmModel {
    let n = config.tags.max(1);
    let vocab = config.vocabulary.max(n);
    let tagset = Tagset::new((0..n).map(|t| Tag::new(format!("T{t}"), true)).collect()).expect("distinct names");

    let mut word_tags: Vec<Vec<usize>> = (0..vocab)
        .map(|_| {
            let k = rng.gen_range(1..=config.max_tags_per_word.clamp(1, n));
            sample(rng, n, k).into_vec()
        })
        .collect();
    for (t, tags) in word_tags.iter_mut().enumerate().take(n) {
        if !tags.contains(&t) {
            tags.push(t);
        }
    }
    let mut by_tag: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (w, tags) in word_tags.iter().enumerate() {
        for &t in tags {
            by_tag[t].push(w);
        }
    }
    let mut emissions: BTreeMap<String, Vec<(TagId, f64)>> = BTreeMap::new();
    for (t, words) in by_tag.iter().enumerate() {
        for (&w, p) in words.iter().zip(weights(rng, words.len(), config.skew)) {
            emissions.entry(format!("w{w}")).or_default().push((TagId(t), p));
        }
    }
    let initial = weights(rng, n, config.skew);
    let transitions = (0..n).map(|_| weights(rng, n, config.skew)).collect();
    HmmModel::new(tagset, initial, transitions, emissions).expect("generated model is valid")
}

/// Per-tag cumulative emission tables for sampling.
struct Sampler<'m> {
    model: &'m HmmModel,
    words: Vec<Vec<(&'m str, f64)>>,
}

impl<'m> Sampler<'m> {
    fn new(model: &'m HmmModel) -> Self {
        let mut words: Vec<Vec<(&str, f64)>> = vec![Vec::new(); model.n_tags()];
        for w in model.words() {
            for &(t, p) in model.lexicon_entries(w).unwrap_or(&[]) {
                if p > 0.0 {
                    words[t.0].push((w, p));
                }
            }
        }
        Sampler { model, words }
    }

    fn pick<R: Rng + ?Sized>(rng: &mut R, probs: impl Iterator<Item = f64> + Clone) -> usize {
        let total: f64 = probs.clone().sum();
        let mut u = rng.gen::<f64>() * total;
        let mut last = 0;
        for (i, p) in probs.enumerate() {
            if p > 0.0 {
                last = i;
                if u < p {
                    return i;
                }
                u -= p;
            }
        }
        last
    }

    fn sentence<R: Rng + ?Sized>(&self, rng: &mut R, len: usize) -> Vec<TaggedToken> {
        let n = self.model.n_tags();
        let mut out = Vec::with_capacity(len);
        let mut tag = TagId(Self::pick(rng, (0..n).map(|t| self.model.initial(TagId(t)))));
        for k in 0..len {
            if k > 0 {
                let from = tag;
                tag = TagId(Self::pick(rng, (0..n).map(|t| self.model.transition(from, TagId(t)))));
            }
            let table = &self.words[tag.0];
            let w = Self::pick(rng, table.iter().map(|&(_, p)| p));
            out.push(TaggedToken::new(table[w].0, self.model.tagset().name(tag)));
        }
        out
    }
}

/// Samples `sentences` tagged sentences with lengths uniform in `lengths`.
///
/// # Panics
///
/// If some tag reachable from the model emits no lexicon word.
pub fn sample_corpus<R: Rng + ?Sized>(
    rng: &mut R,
    model: &HmmModel,
    sentences: usize,
    lengths: std::ops::RangeInclusive<usize>,
) -> TaggedCorpus {
    let sampler = Sampler::new(model);
    let (lo, hi) = (*lengths.start().max(&1), *lengths.end());
    let out = (0..sentences)
        .map(|_| {
            let len = rng.gen_range(lo..=hi.max(lo));
            sampler.sentence(rng, len)
        })
        .collect();
    TaggedCorpus::new(out).expect("sampled sentences are non-empty")
}

/// Random word sequence over the model's lexicon, ignoring the model's
/// dynamics.
pub fn random_sentence<R: Rng + ?Sized>(rng: &mut R, model: &HmmModel, len: usize) -> Vec<String> {
    let words: Vec<&str> = model.words().collect();
    (0..len)
        .map(|_| words[rng.gen_range(0..words.len())].to_string())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_emissions_are_distributions() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_model(&mut rng, &GeneratorConfig::default());
        for t in 0..m.n_tags() {
            let total: f64 = m.words().map(|w| m.emission(w, TagId(t))).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let model = random_model(&mut ChaCha8Rng::seed_from_u64(1), &GeneratorConfig::default());
        let a = sample_corpus(&mut ChaCha8Rng::seed_from_u64(2), &model, 20, 1..=6);
        let b = sample_corpus(&mut ChaCha8Rng::seed_from_u64(2), &model, 20, 1..=6);
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
        for tok in a.sentences().iter().flatten() {
            let t = model.tagset().id(&tok.tag).unwrap();
            assert!(model.emission(&tok.word, t) > 0.0);
        }
    }
}
