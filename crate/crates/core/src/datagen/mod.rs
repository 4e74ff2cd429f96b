//! Synthetic distant-supervision corpora with known ground truth, the
//! JSON-lines dataset format, and corpus statistics.

mod file;
mod generate;
mod stats;

pub use file::{load, load_with_catalog, save, to_jsonl_bytes, Dataset, FORMAT_VERSION};
pub use generate::{
    corrupt_dataset, corrupt_labels, generate, generate_split, CorpusSpec, Corruption, Regime,
    SplitCorpus, Vocabulary,
};
pub use stats::{corpus_stats, CorpusStats, RelationStats};
