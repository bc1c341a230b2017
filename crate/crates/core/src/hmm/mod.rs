//! First-order HMM over a tagset, with Forward-Backward posterior decoding,
//! Viterbi decoding and Baum-Welch re-estimation.
//!
//! Each sentence is decoded on its own; the initial distribution stands in for
//! a virtual boundary tag preceding the first word. Tags attached to a word
//! in the lexicon are the only hypotheses considered for that word. A word
//! missing from the lexicon is hypothesised with every open-class tag, each
//! emitting it with probability [`UNKNOWN_EMISSION`].

mod decode;
mod json;
mod reestimate;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use decode::{forward_backward, forward_backward_lenient, sequence_likelihood, viterbi, LenientDecoding};
pub use json::MODEL_FORMAT_VERSION;
pub use reestimate::{baum_welch, Reestimation};

/// Emission weight given to an unseen word by every open-class tag.
pub const UNKNOWN_EMISSION: f64 = 1.0;

/// Tolerance on the sum-to-one checks for initial and transition rows.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Index of a tag within its [`Tagset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TagId(pub usize);

impl TagId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for TagId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tag {
    pub name: String,
    pub open_class: bool,
}

impl Tag {
    pub fn new(name: impl Into<String>, open_class: bool) -> Self {
        Tag {
            name: name.into(),
            open_class,
        }
    }
}

/// Ordered tag inventory. Tag order is significant: it fixes matrix layout
/// and breaks ties in decoding (lowest index wins).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tagset {
    tags: Vec<Tag>,
    index: HashMap<String, TagId>,
}

impl Tagset {
    pub fn new(tags: Vec<Tag>) -> Result<Self> {
        let mut index = HashMap::with_capacity(tags.len());
        for (i, tag) in tags.iter().enumerate() {
            if tag.name.is_empty() {
                return Err(Error::InvalidModel(format!("tag {i} has an empty name")));
            }
            if index.insert(tag.name.clone(), TagId(i)).is_some() {
                return Err(Error::InvalidModel(format!("duplicate tag {:?}", tag.name)));
            }
        }
        if !tags.iter().any(|t| t.open_class) {
            return Err(Error::InvalidModel("tagset has no open-class tag".into()));
        }
        Ok(Tagset { tags, index })
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn get(&self, id: TagId) -> &Tag {
        &self.tags[id.0]
    }

    pub fn name(&self, id: TagId) -> &str {
        &self.tags[id.0].name
    }

    pub fn id(&self, name: &str) -> Option<TagId> {
        self.index.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (TagId, &Tag)> {
        self.tags.iter().enumerate().map(|(i, t)| (TagId(i), t))
    }

    pub fn open_tags(&self) -> impl Iterator<Item = TagId> + '_ {
        self.iter().filter(|(_, t)| t.open_class).map(|(id, _)| id)
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }
}

/// Word list with per-word emission entries, sorted by word so that every
/// pass over it is deterministic.
#[derive(Debug, Clone, PartialEq)]
struct Lexicon {
    words: Vec<String>,
    index: HashMap<String, usize>,
    /// `entries[w]` holds `(tag, P(word | tag))`, sorted by tag.
    entries: Vec<Vec<(TagId, f64)>>,
}

impl Lexicon {
    fn from_map(map: BTreeMap<String, Vec<(TagId, f64)>>) -> Self {
        let mut words = Vec::with_capacity(map.len());
        let mut entries = Vec::with_capacity(map.len());
        let mut index = HashMap::with_capacity(map.len());
        for (i, (word, mut list)) in map.into_iter().enumerate() {
            list.sort_by_key(|&(t, _)| t);
            index.insert(word.clone(), i);
            words.push(word);
            entries.push(list);
        }
        Lexicon { words, index, entries }
    }

    fn get(&self, word: &str) -> Option<&[(TagId, f64)]> {
        self.index.get(word).map(|&i| self.entries[i].as_slice())
    }
}

/// A trained bigram tagger. Immutable once built; decoding functions take it
/// by shared reference.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    tagset: Tagset,
    initial: Vec<f64>,
    /// Row-major `n x n`: `transitions[from * n + to]`.
    transitions: Vec<f64>,
    lexicon: Lexicon,
    unknown: Vec<(TagId, f64)>,
}

fn check_probability(value: f64, what: impl Fn() -> String) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::InvalidModel(format!(
            "{} = {value} is not a probability",
            what()
        )));
    }
    Ok(())
}

impl HmmModel {
    /// Builds a model, checking every probability constraint.
    ///
    /// `emissions` maps each lexicon word to its `(tag, P(word | tag))`
    /// entries; entry order does not matter.
    pub fn new(
        tagset: Tagset,
        initial: Vec<f64>,
        transitions: Vec<Vec<f64>>,
        emissions: BTreeMap<String, Vec<(TagId, f64)>>,
    ) -> Result<Self> {
        let n = tagset.len();
        if initial.len() != n {
            return Err(Error::InvalidModel(format!(
                "initial has {} entries for {n} tags",
                initial.len()
            )));
        }
        for (t, &p) in initial.iter().enumerate() {
            check_probability(p, || format!("initial[{}]", tagset.name(TagId(t))))?;
        }
        let total: f64 = initial.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidModel(format!("initial sums to {total}")));
        }
        if transitions.len() != n {
            return Err(Error::InvalidModel(format!(
                "transitions has {} rows for {n} tags",
                transitions.len()
            )));
        }
        let mut flat = Vec::with_capacity(n * n);
        for (from, row) in transitions.iter().enumerate() {
            let from_name = tagset.name(TagId(from));
            if row.len() != n {
                return Err(Error::InvalidModel(format!(
                    "transition row {from_name} has {} entries for {n} tags",
                    row.len()
                )));
            }
            for (to, &p) in row.iter().enumerate() {
                check_probability(p, || format!("transition {from_name}->{}", tagset.name(TagId(to))))?;
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::InvalidModel(format!(
                    "transition row {from_name} sums to {total}"
                )));
            }
            flat.extend_from_slice(row);
        }
        for (word, list) in &emissions {
            if word.is_empty() {
                return Err(Error::InvalidModel("empty word in emissions".into()));
            }
            let mut seen = vec![false; n];
            for &(t, p) in list {
                if t.0 >= n {
                    return Err(Error::InvalidModel(format!("word {word:?} refers to tag index {t}")));
                }
                if std::mem::replace(&mut seen[t.0], true) {
                    return Err(Error::InvalidModel(format!(
                        "word {word:?} lists tag {} twice",
                        tagset.name(t)
                    )));
                }
                check_probability(p, || format!("emission {word:?}|{}", tagset.name(t)))?;
            }
            if !list.iter().any(|&(_, p)| p > 0.0) {
                return Err(Error::InvalidModel(format!(
                    "word {word:?} has no tag with positive emission probability"
                )));
            }
        }
        Ok(Self::from_parts(tagset, initial, flat, Lexicon::from_map(emissions)))
    }

    fn from_parts(tagset: Tagset, initial: Vec<f64>, transitions: Vec<f64>, lexicon: Lexicon) -> Self {
        let unknown = tagset.open_tags().map(|t| (t, UNKNOWN_EMISSION)).collect();
        HmmModel {
            tagset,
            initial,
            transitions,
            lexicon,
            unknown,
        }
    }

    pub fn tagset(&self) -> &Tagset {
        &self.tagset
    }

    pub fn n_tags(&self) -> usize {
        self.tagset.len()
    }

    pub fn initial(&self, tag: TagId) -> f64 {
        self.initial[tag.0]
    }

    pub fn transition(&self, from: TagId, to: TagId) -> f64 {
        self.transitions[from.0 * self.tagset.len() + to.0]
    }

    pub(crate) fn transition_row(&self, from: TagId) -> &[f64] {
        let n = self.tagset.len();
        &self.transitions[from.0 * n..(from.0 + 1) * n]
    }

    /// Lexicon entries for `word`, or `None` if the word is unseen.
    pub fn lexicon_entries(&self, word: &str) -> Option<&[(TagId, f64)]> {
        self.lexicon.get(word)
    }

    pub fn is_known(&self, word: &str) -> bool {
        self.lexicon.index.contains_key(word)
    }

    /// A word is ambiguous when it has more than one hypothesised tag. Unseen
    /// words are therefore ambiguous whenever the tagset has two or more
    /// open-class tags.
    pub fn is_ambiguous(&self, word: &str) -> bool {
        self.hypotheses(word).len() > 1
    }

    /// Hypothesised tags for `word` with their emission weights, in tag
    /// order.
    pub fn hypotheses(&self, word: &str) -> &[(TagId, f64)] {
        self.lexicon.get(word).unwrap_or(&self.unknown)
    }

    /// Emission weight of `word` under `tag` (0 where the tag is not
    /// hypothesised).
    pub fn emission(&self, word: &str, tag: TagId) -> f64 {
        self.hypotheses(word)
            .iter()
            .find(|&&(t, _)| t == tag)
            .map_or(0.0, |&(_, p)| p)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.lexicon.words.iter().map(String::as_str)
    }

    pub fn vocabulary_size(&self) -> usize {
        self.lexicon.words.len()
    }
}

/// Normalised Forward-Backward distribution over one token's hypotheses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenPosterior {
    pub word: String,
    /// `(tag, score)` in tag order.
    pub hypotheses: Vec<(TagId, f64)>,
    /// Index into `hypotheses` of the highest score; ties go to the lowest
    /// tag index.
    pub chosen: usize,
}

impl TokenPosterior {
    /// Normalises raw non-negative scores. Fails with [`Error::DeadEnd`] at
    /// position 0 if no score is positive.
    pub fn from_scores(word: impl Into<String>, mut hypotheses: Vec<(TagId, f64)>) -> Result<Self> {
        let word = word.into();
        hypotheses.sort_by_key(|&(t, _)| t);
        let total: f64 = hypotheses.iter().map(|&(_, s)| s).sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::DeadEnd { position: 0, word });
        }
        for h in &mut hypotheses {
            h.1 /= total;
        }
        let chosen = argmax(hypotheses.iter().map(|&(_, s)| s));
        Ok(TokenPosterior {
            word,
            hypotheses,
            chosen,
        })
    }

    pub fn chosen_tag(&self) -> TagId {
        self.hypotheses[self.chosen].0
    }

    pub fn chosen_probability(&self) -> f64 {
        self.hypotheses[self.chosen].1
    }

    /// Highest score among the hypotheses other than the chosen one.
    pub fn runner_up_probability(&self) -> Option<f64> {
        self.hypotheses
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != self.chosen)
            .map(|(_, &(_, s))| s)
            .reduce(f64::max)
    }

    pub fn probability_of(&self, tag: TagId) -> f64 {
        self.hypotheses
            .iter()
            .find(|&&(t, _)| t == tag)
            .map_or(0.0, |&(_, s)| s)
    }

    pub fn is_single(&self) -> bool {
        self.hypotheses.len() == 1
    }
}

/// First index of the maximum; NaN never wins.
pub(crate) fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}
