//! Tagged-corpus I/O, relative-frequency training and ambiguity statistics.
//!
//! The on-disk format is one sentence per line of whitespace-separated
//! `word/TAG` tokens. A token splits at its last `/`; inside the word, `\/`
//! stands for `/` and `\\` for `\`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::{HmmModel, Tag, TagId, Tagset};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaggedToken {
    pub word: String,
    pub tag: String,
}

impl TaggedToken {
    pub fn new(word: impl Into<String>, tag: impl Into<String>) -> Self {
        TaggedToken {
            word: word.into(),
            tag: tag.into(),
        }
    }
}

pub type TaggedSentence = Vec<TaggedToken>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaggedCorpus {
    sentences: Vec<TaggedSentence>,
}

impl TaggedCorpus {
    pub fn new(sentences: Vec<TaggedSentence>) -> Result<Self> {
        for (s, sentence) in sentences.iter().enumerate() {
            if sentence.is_empty() {
                return Err(Error::EmptyInput.in_sentence(s));
            }
            for tok in sentence {
                if tok.word.is_empty() || tok.tag.is_empty() {
                    return Err(Error::InvalidArgument(format!("sentence {s} has an empty word or tag")));
                }
            }
        }
        Ok(TaggedCorpus { sentences })
    }

    pub fn sentences(&self) -> &[TaggedSentence] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    /// Sentences with gold tags stripped.
    pub fn words(&self) -> Vec<Vec<&str>> {
        self.sentences
            .iter()
            .map(|s| s.iter().map(|t| t.word.as_str()).collect())
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for sentence in &self.sentences {
            for (i, tok) in sentence.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                escape_word_into(&tok.word, &mut out);
                out.push('/');
                out.push_str(&tok.tag);
            }
            out.push('\n');
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_tagged(&text)
    }
}

fn escape_word_into(word: &str, out: &mut String) {
    for ch in word.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '/' => out.push_str("\\/"),
            c => out.push(c),
        }
    }
}

fn unescape_word(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars().peekable();
    while let Some(ch) = chars.next() {
        if ch == '\\' {
            if let Some(&next @ ('/' | '\\')) = chars.peek() {
                out.push(next);
                chars.next();
                continue;
            }
        }
        out.push(ch);
    }
    out
}

/// Splits `text` into whitespace-separated tokens, yielding each with its
/// 1-based character column.
fn tokens_with_columns(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut column = 0;
    let mut start: Option<(usize, usize)> = None;
    let mut out = Vec::new();
    for (byte, ch) in line.char_indices() {
        column += 1;
        if ch.is_whitespace() {
            if let Some((b, c)) = start.take() {
                out.push((c, &line[b..byte]));
            }
        } else if start.is_none() {
            start = Some((byte, column));
        }
    }
    if let Some((b, c)) = start {
        out.push((c, &line[b..]));
    }
    out.into_iter()
}

/// Parses the tagged corpus format. Blank lines are skipped.
pub fn parse_tagged(text: &str) -> Result<TaggedCorpus> {
    let mut sentences = Vec::new();
    for (l, line) in text.lines().enumerate() {
        let mut sentence = Vec::new();
        for (column, token) in tokens_with_columns(line) {
            let err = |message: &str| Error::Parse {
                line: l + 1,
                column,
                message: message.to_string(),
            };
            let split = token.rfind('/').ok_or_else(|| err("missing tag separator"))?;
            let word = unescape_word(&token[..split]);
            let tag = &token[split + 1..];
            if word.is_empty() {
                return Err(err("empty word"));
            }
            if tag.is_empty() {
                return Err(err("empty tag"));
            }
            sentence.push(TaggedToken {
                word,
                tag: tag.to_string(),
            });
        }
        if !sentence.is_empty() {
            sentences.push(sentence);
        }
    }
    Ok(TaggedCorpus { sentences })
}

/// Parses untagged text: one sentence per line, words separated by
/// whitespace. Blank lines are skipped.
pub fn parse_raw(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split_whitespace().map(str::to_string).collect::<Vec<_>>())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Reads a closed-class tag list: one tag name per line, blank lines ignored.
pub fn parse_closed_tags(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

/// Relative-frequency estimate from a tagged corpus.
///
/// Tags are ordered by name. Each transition row is normalised by the number
/// of bigrams leaving that tag; a tag never followed by another token gets a
/// uniform row. Tags in `closed_tags` are closed-class; the rest are open.
pub fn train_model(corpus: &TaggedCorpus, closed_tags: &BTreeSet<String>) -> Result<HmmModel> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let names: BTreeSet<&str> = corpus.sentences().iter().flatten().map(|t| t.tag.as_str()).collect();
    let tagset = Tagset::new(
        names
            .iter()
            .map(|&name| Tag::new(name, !closed_tags.contains(name)))
            .collect(),
    )?;
    let n = tagset.len();

    let mut initial_counts = vec![0u64; n];
    let mut bigram_counts = vec![0u64; n * n];
    let mut outgoing = vec![0u64; n];
    let mut tag_counts = vec![0u64; n];
    let mut pair_counts: BTreeMap<&str, BTreeMap<TagId, u64>> = BTreeMap::new();
    for sentence in corpus.sentences() {
        let ids: Vec<TagId> = sentence
            .iter()
            .map(|t| tagset.id(&t.tag).expect("tag collected above"))
            .collect();
        initial_counts[ids[0].0] += 1;
        for pair in ids.windows(2) {
            bigram_counts[pair[0].0 * n + pair[1].0] += 1;
            outgoing[pair[0].0] += 1;
        }
        for (tok, &id) in sentence.iter().zip(&ids) {
            tag_counts[id.0] += 1;
            *pair_counts.entry(tok.word.as_str()).or_default().entry(id).or_default() += 1;
        }
    }

    let sentences = corpus.len() as f64;
    let initial = initial_counts.iter().map(|&c| c as f64 / sentences).collect();
    let transitions = (0..n)
        .map(|from| {
            if outgoing[from] == 0 {
                vec![1.0 / n as f64; n]
            } else {
                let total = outgoing[from] as f64;
                bigram_counts[from * n..(from + 1) * n]
                    .iter()
                    .map(|&c| c as f64 / total)
                    .collect()
            }
        })
        .collect();
    let emissions = pair_counts
        .into_iter()
        .map(|(word, tags)| {
            let list = tags
                .into_iter()
                .map(|(t, c)| (t, c as f64 / tag_counts[t.0] as f64))
                .collect();
            (word.to_string(), list)
        })
        .collect();
    HmmModel::new(tagset, initial, transitions, emissions)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub token_count: usize,
    /// Proportion of tokens whose word is unseen or has more than one
    /// lexicon tag.
    pub ambiguous_fraction: f64,
    pub unknown_fraction: f64,
}

pub fn corpus_stats(corpus: &TaggedCorpus, model: &HmmModel) -> CorpusStats {
    let mut tokens = 0usize;
    let mut ambiguous = 0usize;
    let mut unknown = 0usize;
    for tok in corpus.sentences().iter().flatten() {
        tokens += 1;
        if !model.is_known(&tok.word) {
            unknown += 1;
        }
        if model.is_ambiguous(&tok.word) {
            ambiguous += 1;
        }
    }
    let frac = |c: usize| if tokens == 0 { 0.0 } else { c as f64 / tokens as f64 };
    CorpusStats {
        token_count: tokens,
        ambiguous_fraction: frac(ambiguous),
        unknown_fraction: frac(unknown),
    }
}

/// Gold tags mapped onto `tagset`; a gold tag the tagset lacks becomes `None`
/// and can never be matched.
pub fn gold_ids(sentence: &[TaggedToken], tagset: &Tagset) -> Vec<Option<TagId>> {
    sentence.iter().map(|t| tagset.id(&t.tag)).collect()
}
