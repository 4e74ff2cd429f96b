use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label_space::LabelVector;

/// Default cap on sentence length in tokens.
pub const DEFAULT_MAX_LEN: usize = 120;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<usize>,
    pub head_pos: usize,
    pub tail_pos: usize,
}

impl Sentence {
    pub fn new(tokens: Vec<usize>, head_pos: usize, tail_pos: usize) -> Self {
        Sentence {
            tokens,
            head_pos,
            tail_pos,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn validate(&self, max_len: usize) -> std::result::Result<(), String> {
        let m = self.tokens.len();
        if m == 0 || m > max_len {
            return Err(format!("sentence length {m} outside 1..={max_len}"));
        }
        if self.head_pos >= m || self.tail_pos >= m {
            return Err(format!(
                "entity position out of range (head_pos {}, tail_pos {}, length {m})",
                self.head_pos, self.tail_pos
            ));
        }
        if self.head_pos == self.tail_pos {
            return Err(format!("head_pos and tail_pos both {}", self.head_pos));
        }
        Ok(())
    }
}

/// All sentences mentioning one entity pair, with the pair's observed labels
/// and, for synthetic data, its true labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Bag {
    pub id: String,
    pub head: String,
    pub tail: String,
    pub sentences: Vec<Sentence>,
    pub observed: LabelVector,
    pub truth: Option<LabelVector>,
}

impl Bag {
    pub fn validate(&self, n_relations: usize, max_len: usize) -> Result<()> {
        let fail = |msg: String| Error::Validation {
            bag: self.id.clone(),
            msg,
        };
        if self.sentences.is_empty() {
            return Err(fail("bag has no sentences".into()));
        }
        for (i, s) in self.sentences.iter().enumerate() {
            s.validate(max_len).map_err(|m| fail(format!("sentence {i}: {m}")))?;
        }
        if self.observed.len() != n_relations {
            return Err(fail(format!(
                "observed labels have length {}, catalog has {n_relations}",
                self.observed.len()
            )));
        }
        if let Some(y) = &self.truth {
            if y.len() != n_relations {
                return Err(fail(format!(
                    "true labels have length {}, catalog has {n_relations}",
                    y.len()
                )));
            }
        }
        Ok(())
    }
}
