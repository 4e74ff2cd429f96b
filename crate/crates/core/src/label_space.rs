//! The relation catalog and label vectors over it.
//!
//! Catalog order is the canonical index order for every vector, parameter row
//! and file in the crate. NA is an ordinary index with its own channel
//! parameters and classifier head.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "CatalogRepr", into = "CatalogRepr")]
pub struct RelationCatalog {
    names: Vec<String>,
    na_index: usize,
    index: HashMap<String, usize>,
}

/// On-disk form: `{"names": [...], "na": "<name of the NA relation>"}`.
#[derive(Serialize, Deserialize)]
struct CatalogRepr {
    names: Vec<String>,
    na: String,
}

impl TryFrom<CatalogRepr> for RelationCatalog {
    type Error = Error;

    fn try_from(r: CatalogRepr) -> Result<Self> {
        RelationCatalog::new(r.names, &r.na)
    }
}

impl From<RelationCatalog> for CatalogRepr {
    fn from(c: RelationCatalog) -> Self {
        CatalogRepr {
            na: c.names[c.na_index].clone(),
            names: c.names,
        }
    }
}

impl PartialEq for RelationCatalog {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names && self.na_index == other.na_index
    }
}

impl Eq for RelationCatalog {}

impl RelationCatalog {
    pub fn new(names: Vec<String>, na: &str) -> Result<Self> {
        if names.len() < 2 {
            return Err(Error::Catalog(format!(
                "need NA plus at least one relation, got {} names",
                names.len()
            )));
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() {
                return Err(Error::Catalog(format!("empty relation name at index {i}")));
            }
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::Catalog(format!("duplicate relation name {n:?}")));
            }
        }
        let na_index = *index
            .get(na)
            .ok_or_else(|| Error::Catalog(format!("NA relation {na:?} not among names")))?;
        Ok(RelationCatalog {
            names,
            na_index,
            index,
        })
    }

    /// `NA` followed by `R0 .. R{n-1}`.
    pub fn synthetic(n_relations: usize) -> Result<Self> {
        let names = std::iter::once("NA".to_string())
            .chain((0..n_relations).map(|i| format!("R{i}")))
            .collect();
        Self::new(names, "NA")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn na_index(&self) -> usize {
        self.na_index
    }

    pub fn name(&self, r: usize) -> &str {
        &self.names[r]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::Catalog(format!("unknown relation {name:?}")))
    }

    /// Relation indices other than NA, in catalog order.
    pub fn non_na(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&r| r != self.na_index)
    }

    /// Hex SHA-256 of the canonical JSON form. Stored in dataset headers and
    /// checkpoints so mismatched catalogs are caught at load time.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("catalog serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelVector {
    bits: Vec<bool>,
}

impl LabelVector {
    pub fn zeros(len: usize) -> Self {
        LabelVector {
            bits: vec![false; len],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        LabelVector { bits }
    }

    /// Bits set exactly at the named relations.
    pub fn from_names<S: AsRef<str>>(catalog: &RelationCatalog, present: &[S]) -> Result<Self> {
        let mut v = Self::zeros(catalog.len());
        for name in present {
            v.bits[catalog.index_of(name.as_ref())?] = true;
        }
        Ok(v)
    }

    pub fn from_indices(len: usize, indices: &[usize]) -> Result<Self> {
        let mut v = Self::zeros(len);
        for &i in indices {
            if i >= len {
                return Err(Error::Catalog(format!(
                    "relation index {i} out of range for catalog of {len}"
                )));
            }
            v.bits[i] = true;
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, r: usize) -> bool {
        self.bits[r]
    }

    pub fn set(&mut self, r: usize, value: bool) {
        self.bits[r] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn names<'c>(&self, catalog: &'c RelationCatalog) -> BTreeSet<&'c str> {
        self.indices().into_iter().map(|i| catalog.name(i)).collect()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> Self {
        LabelVector {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// Bits as probabilities `{0.0, 1.0}`.
    pub fn to_probs(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    pub fn hamming(&self, other: &LabelVector) -> Result<usize> {
        hamming(self, other)
    }
}

/// Number of positions where `a` and `b` differ.
pub fn hamming(a: &LabelVector, b: &LabelVector) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(a.bits.iter().zip(&b.bits).filter(|(x, y)| x != y).count())
}
