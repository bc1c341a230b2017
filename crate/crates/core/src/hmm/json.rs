use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HmmModel, Tag, TagId, Tagset};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    version: u32,
    tags: Vec<Tag>,
    initial: Vec<f64>,
    transitions: Vec<Vec<f64>>,
    emissions: BTreeMap<String, BTreeMap<String, f64>>,
}

impl HmmModel {
    pub fn to_json(&self) -> String {
        let n = self.n_tags();
        let doc = ModelDocument {
            version: MODEL_FORMAT_VERSION,
            tags: self.tagset.tags().to_vec(),
            initial: self.initial.clone(),
            transitions: self.transitions.chunks(n).map(<[f64]>::to_vec).collect(),
            emissions: self
                .lexicon
                .words
                .iter()
                .zip(&self.lexicon.entries)
                .map(|(w, entries)| {
                    let inner = entries
                        .iter()
                        .map(|&(t, p)| (self.tagset.name(t).to_string(), p))
                        .collect();
                    (w.clone(), inner)
                })
                .collect(),
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("model document serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidModel(format!(
                "unsupported model version {} (expected {MODEL_FORMAT_VERSION})",
                doc.version
            )));
        }
        let tagset = Tagset::new(doc.tags)?;
        let mut emissions = BTreeMap::new();
        for (word, inner) in doc.emissions {
            let mut list = Vec::with_capacity(inner.len());
            for (tag, p) in inner {
                let id: TagId = tagset
                    .id(&tag)
                    .ok_or_else(|| Error::InvalidModel(format!("word {word:?} uses undeclared tag {tag:?}")))?;
                list.push((id, p));
            }
            emissions.insert(word, list);
        }
        HmmModel::new(tagset, doc.initial, doc.transitions, emissions)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
