//! Accept/reject x correct/incorrect tallies and the accuracy and efficiency
//! formulas built on them.
//!
//! With `s` the proportion of ambiguous tokens tagged correctly, `c` the
//! proportion of those correct tags that were rejected and `i` the proportion
//! of incorrect tags that were rejected:
//!
//! * accuracy over non-rejected tokens: `s(1-c) / (1 - sc - (1-s)i)`
//! * accuracy when an oracle fixes every rejected token: `s + (1-s)i`
//! * efficiency (share of ambiguous tokens labelled): `s(1-c) + (1-s)(1-i)`

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::confidence::{apply_policy, Decision, ThresholdPolicy};
use crate::corpus::{gold_ids, TaggedCorpus};
use crate::error::{Error, Result};
use crate::hmm::{forward_backward, HmmModel, TagId, TokenPosterior};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub correct_accepted: u64,
    pub correct_rejected: u64,
    pub incorrect_accepted: u64,
    pub incorrect_rejected: u64,
    pub unambiguous_total: u64,
    pub unambiguous_correct: u64,
}

impl EvalCounts {
    pub fn ambiguous_total(&self) -> u64 {
        self.correct_accepted + self.correct_rejected + self.incorrect_accepted + self.incorrect_rejected
    }

    pub fn ambiguous_correct(&self) -> u64 {
        self.correct_accepted + self.correct_rejected
    }

    pub fn ambiguous_incorrect(&self) -> u64 {
        self.incorrect_accepted + self.incorrect_rejected
    }

    pub fn accepted(&self) -> u64 {
        self.correct_accepted + self.incorrect_accepted
    }

    pub fn rejected(&self) -> u64 {
        self.correct_rejected + self.incorrect_rejected
    }

    pub fn total(&self) -> u64 {
        self.ambiguous_total() + self.unambiguous_total
    }

    pub fn merge(&mut self, other: &EvalCounts) {
        self.correct_accepted += other.correct_accepted;
        self.correct_rejected += other.correct_rejected;
        self.incorrect_accepted += other.incorrect_accepted;
        self.incorrect_rejected += other.incorrect_rejected;
        self.unambiguous_total += other.unambiguous_total;
        self.unambiguous_correct += other.unambiguous_correct;
    }
}

/// Tallies decisions against gold tags. `gold[k]` is `None` when the gold tag
/// is outside the model's tagset (never matched).
pub fn tally(decisions: &[Decision], gold: &[Option<TagId>], ambiguous: &[bool]) -> Result<EvalCounts> {
    if gold.len() != decisions.len() {
        return Err(Error::LengthMismatch {
            what: "gold tags",
            expected: decisions.len(),
            found: gold.len(),
        });
    }
    if ambiguous.len() != decisions.len() {
        return Err(Error::LengthMismatch {
            what: "ambiguity flags",
            expected: decisions.len(),
            found: ambiguous.len(),
        });
    }
    let mut counts = EvalCounts::default();
    for ((d, g), &amb) in decisions.iter().zip(gold).zip(ambiguous) {
        let correct = *g == Some(d.tag);
        if !amb {
            counts.unambiguous_total += 1;
            counts.unambiguous_correct += u64::from(correct);
            continue;
        }
        match (correct, d.accepted) {
            (true, true) => counts.correct_accepted += 1,
            (true, false) => counts.correct_rejected += 1,
            (false, true) => counts.incorrect_accepted += 1,
            (false, false) => counts.incorrect_rejected += 1,
        }
    }
    Ok(counts)
}

/// Forward-Backward posteriors for every sentence of a gold corpus.
pub fn decode_corpus(model: &HmmModel, corpus: &TaggedCorpus) -> Result<Vec<Vec<TokenPosterior>>> {
    corpus
        .words()
        .iter()
        .enumerate()
        .map(|(s, words)| forward_backward(model, words).map_err(|e| e.in_sentence(s)))
        .collect()
}

/// Tallies `policy` over already-decoded sentences of `corpus`.
pub fn evaluate_decoded(
    model: &HmmModel,
    corpus: &TaggedCorpus,
    posteriors: &[Vec<TokenPosterior>],
    policy: &ThresholdPolicy,
) -> Result<EvalCounts> {
    if posteriors.len() != corpus.len() {
        return Err(Error::LengthMismatch {
            what: "decoded sentences",
            expected: corpus.len(),
            found: posteriors.len(),
        });
    }
    let mut counts = EvalCounts::default();
    for (s, (sentence, post)) in corpus.sentences().iter().zip(posteriors).enumerate() {
        let decisions = apply_policy(post, policy).map_err(|e| e.in_sentence(s))?;
        let gold = gold_ids(sentence, model.tagset());
        let ambiguous: Vec<bool> = sentence.iter().map(|t| model.is_ambiguous(&t.word)).collect();
        counts.merge(&tally(&decisions, &gold, &ambiguous)?);
    }
    Ok(counts)
}

/// Decodes `corpus` and tallies `policy` against its gold tags.
pub fn evaluate(model: &HmmModel, corpus: &TaggedCorpus, policy: &ThresholdPolicy) -> Result<EvalCounts> {
    let posteriors = decode_corpus(model, corpus)?;
    evaluate_decoded(model, corpus, &posteriors, policy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub s: f64,
    pub c: f64,
    pub i: f64,
    pub a: f64,
}

pub fn rates(counts: &EvalCounts) -> Result<Rates> {
    let ambiguous = counts.ambiguous_total();
    if ambiguous == 0 {
        return Err(Error::UndefinedRate("s"));
    }
    let correct = counts.ambiguous_correct();
    let incorrect = counts.ambiguous_incorrect();
    if correct == 0 {
        return Err(Error::UndefinedRate("c"));
    }
    if incorrect == 0 {
        return Err(Error::UndefinedRate("i"));
    }
    Ok(Rates {
        s: correct as f64 / ambiguous as f64,
        c: counts.correct_rejected as f64 / correct as f64,
        i: counts.incorrect_rejected as f64 / incorrect as f64,
        a: ambiguous as f64 / counts.total() as f64,
    })
}

pub fn accuracy_ignore(s: f64, c: f64, i: f64) -> Result<f64> {
    let retained = 1.0 - s * c - (1.0 - s) * i;
    if retained <= 1e-12 {
        return Err(Error::UndefinedRate("ignore accuracy"));
    }
    Ok(s * (1.0 - c) / retained)
}

pub fn accuracy_oracle(s: f64, i: f64) -> f64 {
    s + (1.0 - s) * i
}

pub fn efficiency(s: f64, c: f64, i: f64) -> f64 {
    s * (1.0 - c) + (1.0 - s) * (1.0 - i)
}

/// Whole-corpus accuracy from the ambiguous-token accuracy, counting every
/// unambiguous token as correct.
pub fn overall_accuracy(a: f64, ambiguous_accuracy: f64) -> f64 {
    (1.0 - a) + a * ambiguous_accuracy
}

/// `100 * value` rounded half-up to `decimals` places.
pub fn percent(value: f64, decimals: usize) -> String {
    let scale = 10f64.powi(decimals as i32);
    let rounded = (value * 100.0 * scale + 0.5).floor() / scale;
    format!("{rounded:.decimals$}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub measure: String,
    #[serde(with = "crate::confidence::threshold_serde")]
    pub threshold: f64,
    pub counts: EvalCounts,
    pub tokens: u64,
    pub ambiguous_tokens: u64,
    pub s: f64,
    pub c: f64,
    pub i: f64,
    pub a: f64,
    pub accuracy_oracle: f64,
    /// `None` when every ambiguous token was rejected.
    pub accuracy_ignore: Option<f64>,
    pub efficiency: f64,
    /// `overall_accuracy(a, accuracy_oracle)`.
    pub overall_accuracy: f64,
    /// Share of all tokens whose chosen tag matches gold, before rejection.
    pub tagger_accuracy_all: f64,
}

pub fn report(counts: &EvalCounts, policy: &ThresholdPolicy) -> Result<EvalReport> {
    let r = rates(counts)?;
    let accuracy_oracle = accuracy_oracle(r.s, r.i);
    Ok(EvalReport {
        measure: policy.measure().name().to_string(),
        threshold: policy.threshold(),
        counts: *counts,
        tokens: counts.total(),
        ambiguous_tokens: counts.ambiguous_total(),
        s: r.s,
        c: r.c,
        i: r.i,
        a: r.a,
        accuracy_oracle,
        accuracy_ignore: accuracy_ignore(r.s, r.c, r.i).ok(),
        efficiency: efficiency(r.s, r.c, r.i),
        overall_accuracy: overall_accuracy(r.a, accuracy_oracle),
        tagger_accuracy_all: (counts.ambiguous_correct() + counts.unambiguous_correct) as f64 / counts.total() as f64,
    })
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut rows: Vec<(&str, String)> = vec![
            ("measure", self.measure.clone()),
            ("threshold", self.threshold.to_string()),
            ("tokens", self.tokens.to_string()),
            ("ambiguous tokens", self.ambiguous_tokens.to_string()),
            ("accuracy oracle (%)", percent(self.accuracy_oracle, 2)),
            (
                "accuracy ignore (%)",
                self.accuracy_ignore
                    .map_or_else(|| "undefined".into(), |v| percent(v, 2)),
            ),
            ("efficiency (%)", percent(self.efficiency, 1)),
            ("overall accuracy (%)", percent(self.overall_accuracy, 1)),
            ("tagger all (%)", percent(self.tagger_accuracy_all, 2)),
            ("tagger ambig (%)", percent(self.s, 2)),
            ("ambiguity (%)", percent(self.a, 2)),
        ];
        rows.push(("s", self.s.to_string()));
        rows.push(("c", self.c.to_string()));
        rows.push(("i", self.i.to_string()));
        rows.push(("a", self.a.to_string()));
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<width$}  {v}");
        }
        out
    }
}
