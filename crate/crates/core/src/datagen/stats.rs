use serde::Serialize;

use super::file::Dataset;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RelationStats {
    pub relation: String,
    /// Bags whose observed labels include the relation.
    pub observed_bags: usize,
    /// Bags whose true labels include the relation (annotated data only).
    pub true_bags: usize,
    /// Observed and true.
    pub correct: usize,
    /// Observed but not true.
    pub wrong: usize,
    /// True but not observed.
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub bags: usize,
    pub sentences: usize,
    pub annotated: bool,
    pub relations: Vec<RelationStats>,
    pub correct: usize,
    pub wrong: usize,
    pub missing: usize,
}

impl CorpusStats {
    /// Totals over every relation except NA.
    pub fn non_na_totals(&self, na_index: usize) -> (usize, usize, usize) {
        self.relations
            .iter()
            .enumerate()
            .filter(|(r, _)| *r != na_index)
            .fold((0, 0, 0), |(c, w, m), (_, s)| {
                (c + s.correct, w + s.wrong, m + s.missing)
            })
    }
}

pub fn corpus_stats(ds: &Dataset) -> CorpusStats {
    let mut relations: Vec<RelationStats> = ds
        .catalog
        .names()
        .iter()
        .map(|n| RelationStats {
            relation: n.clone(),
            ..RelationStats::default()
        })
        .collect();
    let mut sentences = 0;
    for b in &ds.bags {
        sentences += b.sentences.len();
        for (r, rs) in relations.iter_mut().enumerate() {
            let z = b.observed.get(r);
            rs.observed_bags += usize::from(z);
            if let Some(y) = &b.truth {
                let y = y.get(r);
                rs.true_bags += usize::from(y);
                rs.correct += usize::from(z && y);
                rs.wrong += usize::from(z && !y);
                rs.missing += usize::from(!z && y);
            }
        }
    }
    CorpusStats {
        bags: ds.len(),
        sentences,
        annotated: ds.annotated(),
        correct: relations.iter().map(|r| r.correct).sum(),
        wrong: relations.iter().map(|r| r.wrong).sum(),
        missing: relations.iter().map(|r| r.missing).sum(),
        relations,
    }
}
