use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};

use crate::encoder::{Bag, Sentence};
use crate::error::{Error, Result};
use crate::label_space::{LabelVector, RelationCatalog};

pub const FORMAT_VERSION: u32 = 1;
const FORMAT_NAME: &str = "nem-dataset";

/// A catalog and its bags, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub catalog: RelationCatalog,
    pub bags: Vec<Bag>,
    /// Generator settings echoed into the header, when synthetic.
    pub spec: Option<serde_json::Value>,
}

impl Dataset {
    pub fn new(catalog: RelationCatalog, bags: Vec<Bag>) -> Self {
        Dataset {
            catalog,
            bags,
            spec: None,
        }
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    /// True when every bag carries ground-truth labels.
    pub fn annotated(&self) -> bool {
        !self.bags.is_empty() && self.bags.iter().all(|b| b.truth.is_some())
    }

    pub fn max_token(&self) -> Option<usize> {
        self.bags
            .iter()
            .flat_map(|b| b.sentences.iter().flat_map(|s| s.tokens.iter().copied()))
            .max()
    }

    pub fn max_sentence_len(&self) -> usize {
        self.bags
            .iter()
            .flat_map(|b| b.sentences.iter().map(Sentence::len))
            .max()
            .unwrap_or(0)
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    catalog: RelationCatalog,
    catalog_hash: String,
    annotated: bool,
    #[serde(default)]
    spec: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
struct BagRecord {
    id: String,
    head: String,
    tail: String,
    sentences: Vec<Sentence>,
    z: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y: Option<Vec<usize>>,
}

pub fn to_jsonl_bytes(ds: &Dataset) -> Result<Vec<u8>> {
    let annotated = ds.annotated();
    let mut out = Vec::new();
    let header = Header {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        catalog: ds.catalog.clone(),
        catalog_hash: ds.catalog.hash(),
        annotated,
        spec: ds.spec.clone(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.push(b'\n');
    for b in &ds.bags {
        let rec = BagRecord {
            id: b.id.clone(),
            head: b.head.clone(),
            tail: b.tail.clone(),
            sentences: b.sentences.clone(),
            z: b.observed.indices(),
            y: if annotated {
                b.truth.as_ref().map(LabelVector::indices)
            } else {
                None
            },
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.push(b'\n');
    }
    Ok(out)
}

fn is_gzip(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

/// Writes JSON lines, gzip-compressed when the path ends in `.gz`.
pub fn save(ds: &Dataset, path: &Path) -> Result<()> {
    let bytes = to_jsonl_bytes(ds)?;
    let io = |e| Error::io(path, e);
    if is_gzip(path) {
        let f = std::fs::File::create(path).map_err(io)?;
        let mut enc = GzEncoder::new(f, Compression::default());
        enc.write_all(&bytes).map_err(io)?;
        enc.finish().map_err(io)?;
        Ok(())
    } else {
        std::fs::write(path, bytes).map_err(io)
    }
}

pub fn load(path: &Path) -> Result<Dataset> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader: Box<dyn Read> = if is_gzip(path) {
        Box::new(GzDecoder::new(f))
    } else {
        Box::new(f)
    };
    parse(BufReader::new(reader), path)
}

/// Loads a dataset and checks it was written against `catalog`.
pub fn load_with_catalog(path: &Path, catalog: &RelationCatalog) -> Result<Dataset> {
    let ds = load(path)?;
    if ds.catalog.hash() != catalog.hash() {
        return Err(Error::CatalogMismatch {
            expected: catalog.hash(),
            found: ds.catalog.hash(),
        });
    }
    Ok(ds)
}

fn parse(reader: impl BufRead, path: &Path) -> Result<Dataset> {
    let fmt = |line: usize, msg: String| Error::Format {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = reader.lines().enumerate();
    let header: Header = match lines.next() {
        None => return Err(fmt(1, "empty file, expected header".into())),
        Some((_, l)) => {
            let l = l.map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&l).map_err(|e| fmt(1, format!("header: {e}")))?
        }
    };
    if header.format != FORMAT_NAME || header.version != FORMAT_VERSION {
        return Err(fmt(
            1,
            format!("unsupported format {} v{}", header.format, header.version),
        ));
    }
    if header.catalog.hash() != header.catalog_hash {
        return Err(Error::CatalogMismatch {
            expected: header.catalog.hash(),
            found: header.catalog_hash,
        });
    }
    let catalog = header.catalog;
    let n = catalog.len();
    let mut bags = Vec::new();
    for (i, l) in lines {
        let line_no = i + 1;
        let l = l.map_err(|e| Error::io(path, e))?;
        if l.trim().is_empty() {
            continue;
        }
        let rec: BagRecord =
            serde_json::from_str(&l).map_err(|e| fmt(line_no, e.to_string()))?;
        let to_labels = |idx: &[usize]| {
            LabelVector::from_indices(n, idx).map_err(|e| Error::Validation {
                bag: rec.id.clone(),
                msg: e.to_string(),
            })
        };
        let observed = to_labels(&rec.z)?;
        let truth = match (&rec.y, header.annotated) {
            (Some(y), true) => Some(to_labels(y)?),
            (None, false) => None,
            (Some(_), false) => {
                return Err(Error::Validation {
                    bag: rec.id,
                    msg: "true labels present in an unannotated file".into(),
                })
            }
            (None, true) => {
                return Err(Error::Validation {
                    bag: rec.id,
                    msg: "true labels missing from an annotated file".into(),
                })
            }
        };
        let bag = Bag {
            id: rec.id,
            head: rec.head,
            tail: rec.tail,
            sentences: rec.sentences,
            observed,
            truth,
        };
        bag.validate(n, usize::MAX)?;
        bags.push(bag);
    }
    Ok(Dataset {
        catalog,
        bags,
        spec: header.spec,
    })
}
