use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::file::Dataset;
use crate::encoder::{Bag, Sentence, DEFAULT_MAX_LEN};
use crate::error::{Error, Result};
use crate::label_space::{LabelVector, RelationCatalog};
use crate::noise_channel::{flip_noise, ChannelSpec};
use crate::seed;

/// Sentence-cleanness and label-cleanness regime of a corpus.
///
/// A noisy sentence supports none of its bag's labels; a noisy label is
/// supported by none of its bag's sentences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "CSCL")]
    CleanSentenceCleanLabel,
    #[serde(rename = "NSCL")]
    NoisySentenceCleanLabel,
    #[serde(rename = "CSNL")]
    CleanSentenceNoisyLabel,
    #[serde(rename = "NSNL")]
    NoisySentenceNoisyLabel,
}

impl Regime {
    pub fn noisy_sentences(self) -> bool {
        matches!(
            self,
            Regime::NoisySentenceCleanLabel | Regime::NoisySentenceNoisyLabel
        )
    }

    pub fn noisy_labels(self) -> bool {
        matches!(
            self,
            Regime::CleanSentenceNoisyLabel | Regime::NoisySentenceNoisyLabel
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Corruption {
    None,
    /// Independent flips of every non-NA bit.
    Flip { p_f: f64 },
    /// Forward sample of a noise channel on every non-NA bit.
    Channel { channel: ChannelSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSpec {
    pub catalog: RelationCatalog,
    pub vocab_size: usize,
    pub n_bags: usize,
    /// Bags generated for the held-out split by [`generate_split`].
    pub test_bags: usize,
    /// Inclusive range.
    pub sentences_per_bag: [usize; 2],
    /// Share of non-NA-bag sentences that carry a trigger. Forced to 1 under
    /// clean-sentence regimes.
    pub clean_sentence_fraction: f64,
    /// Probability that a non-NA bag has two labels instead of one.
    pub two_label_prob: f64,
    /// Share of bags whose only true label is NA.
    pub na_fraction: f64,
    /// Inclusive range of trigger lengths in tokens.
    pub trigger_length: [usize; 2],
    /// Inclusive range of filler tokens per gap (before, between, after).
    pub filler_length: [usize; 2],
    pub regime: Regime,
    pub corruption: Corruption,
    pub seed: u64,
    pub max_len: usize,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            catalog: RelationCatalog::synthetic(10).expect("valid"),
            vocab_size: 500,
            n_bags: 2000,
            test_bags: 500,
            sentences_per_bag: [1, 5],
            clean_sentence_fraction: 0.5,
            two_label_prob: 0.2,
            na_fraction: 0.3,
            trigger_length: [1, 3],
            filler_length: [0, 4],
            regime: Regime::NoisySentenceNoisyLabel,
            corruption: Corruption::None,
            seed: 0,
            max_len: DEFAULT_MAX_LEN,
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("corpus spec: {m}")));
        let r = self.catalog.len();
        let [tlo, thi] = self.trigger_length;
        if tlo == 0 || tlo > thi {
            return bad(format!("trigger_length {tlo}..={thi} must be a non-empty range of positive lengths"));
        }
        if self.vocab_size <= r * thi + 2 {
            return bad(format!(
                "vocab_size {} must exceed |relations| * max trigger length + 2 = {}",
                self.vocab_size,
                r * thi + 2
            ));
        }
        let [slo, shi] = self.sentences_per_bag;
        if slo == 0 || slo > shi {
            return bad(format!("sentences_per_bag {slo}..={shi} must be a non-empty range starting at 1 or more"));
        }
        let cf = self.clean_sentence_fraction;
        if !(cf > 0.0 && cf <= 1.0) {
            return bad(format!("clean_sentence_fraction {cf} outside (0, 1]"));
        }
        for (name, p) in [("two_label_prob", self.two_label_prob), ("na_fraction", self.na_fraction)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} {p} outside [0, 1]"));
            }
        }
        if self.two_label_prob > 0.0 && r < 3 {
            return bad("two-label bags need at least two non-NA relations".into());
        }
        let [flo, fhi] = self.filler_length;
        if flo > fhi {
            return bad(format!("filler_length {flo}..={fhi} is empty"));
        }
        if 3 * fhi + thi + 2 > self.max_len {
            return bad(format!(
                "longest possible sentence {} exceeds max_len {}",
                3 * fhi + thi + 2,
                self.max_len
            ));
        }
        match &self.corruption {
            Corruption::None => {}
            _ if !self.regime.noisy_labels() => {
                return bad("label corruption requires a noisy-label regime (CSNL or NSNL)".into())
            }
            Corruption::Flip { p_f } if !(0.0..=1.0).contains(p_f) => {
                return bad(format!("p_f {p_f} outside [0, 1]"))
            }
            Corruption::Flip { .. } => {}
            Corruption::Channel { channel } => {
                channel.resolve(&self.catalog)?;
            }
        }
        Ok(())
    }

    fn effective_clean_fraction(&self) -> f64 {
        if self.regime.noisy_sentences() {
            self.clean_sentence_fraction
        } else {
            1.0
        }
    }

    /// Probability that a sentence slot not reserved for supporting a label
    /// is noisy, chosen so that the corpus-wide share of noisy sentences in
    /// non-NA bags matches `1 - clean_sentence_fraction` in expectation.
    fn free_slot_noise_prob(&self) -> f64 {
        let cf = self.effective_clean_fraction();
        if cf >= 1.0 {
            return 0.0;
        }
        let [lo, hi] = self.sentences_per_bag;
        let span = (hi - lo + 1) as f64;
        let (mut total, mut free) = (0.0, 0.0);
        for (labels, p) in [(1usize, 1.0 - self.two_label_prob), (2, self.two_label_prob)] {
            for n in lo..=hi {
                let n = n.max(labels) as f64;
                total += p * n / span;
                free += p * (n - labels as f64) / span;
            }
        }
        if free == 0.0 {
            return 0.0;
        }
        ((1.0 - cf) * total / free).min(1.0)
    }
}

/// Token layout of a synthetic corpus: two entity markers, one trigger
/// sequence per non-NA relation, then filler.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    pub head_marker: usize,
    pub tail_marker: usize,
    /// Indexed by relation; empty for NA.
    pub triggers: Vec<Vec<usize>>,
    pub filler_start: usize,
    pub vocab_size: usize,
}

impl Vocabulary {
    pub fn build(spec: &CorpusSpec) -> Self {
        let mut rng = seed::rng(seed::derive(spec.seed, "triggers"));
        let [lo, hi] = spec.trigger_length;
        let mut next = 2;
        let triggers = (0..spec.catalog.len())
            .map(|r| {
                if r == spec.catalog.na_index() {
                    return Vec::new();
                }
                let len = rng.gen_range(lo..=hi);
                let t: Vec<usize> = (next..next + len).collect();
                next += len;
                t
            })
            .collect();
        Vocabulary {
            head_marker: 0,
            tail_marker: 1,
            triggers,
            filler_start: next,
            vocab_size: spec.vocab_size,
        }
    }

    /// Relations whose full trigger appears contiguously in `tokens`.
    pub fn triggered(&self, tokens: &[usize]) -> Vec<usize> {
        self.triggers
            .iter()
            .enumerate()
            .filter(|(_, t)| !t.is_empty() && tokens.windows(t.len()).any(|w| w == t.as_slice()))
            .map(|(r, _)| r)
            .collect()
    }

    fn filler(&self, rng: &mut impl Rng) -> usize {
        rng.gen_range(self.filler_start..self.vocab_size)
    }
}

fn push_filler(out: &mut Vec<usize>, vocab: &Vocabulary, range: [usize; 2], rng: &mut impl Rng) {
    let n = rng.gen_range(range[0]..=range[1]);
    out.extend((0..n).map(|_| vocab.filler(rng)));
}

/// `[filler] E1 [filler] trigger [filler] E2 [filler]`, without the trigger
/// for a noisy sentence. Head and tail take either order.
fn make_sentence(
    spec: &CorpusSpec,
    vocab: &Vocabulary,
    support: Option<usize>,
    rng: &mut impl Rng,
) -> Sentence {
    let mut toks = Vec::new();
    push_filler(&mut toks, vocab, spec.filler_length, rng);
    let first = toks.len();
    toks.push(0);
    push_filler(&mut toks, vocab, spec.filler_length, rng);
    if let Some(r) = support {
        toks.extend_from_slice(&vocab.triggers[r]);
        push_filler(&mut toks, vocab, spec.filler_length, rng);
    }
    let second = toks.len();
    toks.push(0);
    push_filler(&mut toks, vocab, spec.filler_length, rng);
    let (head_pos, tail_pos) = if rng.gen_bool(0.5) {
        (first, second)
    } else {
        (second, first)
    };
    toks[head_pos] = vocab.head_marker;
    toks[tail_pos] = vocab.tail_marker;
    Sentence::new(toks, head_pos, tail_pos)
}

fn make_bag(spec: &CorpusSpec, vocab: &Vocabulary, index: usize, noise_slot: f64) -> Bag {
    let mut rng = seed::rng(seed::child(seed::derive(spec.seed, "bag"), index as u64));
    let cat = &spec.catalog;
    let non_na: Vec<usize> = cat.non_na().collect();
    let mut y = LabelVector::zeros(cat.len());
    let [lo, hi] = spec.sentences_per_bag;
    let mut n = rng.gen_range(lo..=hi);
    let mut sentences = Vec::new();
    if rng.gen::<f64>() < spec.na_fraction {
        y.set(cat.na_index(), true);
        for _ in 0..n {
            sentences.push(make_sentence(spec, vocab, None, &mut rng));
        }
    } else {
        let k = if rng.gen::<f64>() < spec.two_label_prob { 2 } else { 1 };
        let labels: Vec<usize> = non_na.choose_multiple(&mut rng, k).copied().collect();
        for &r in &labels {
            y.set(r, true);
        }
        n = n.max(labels.len());
        for slot in 0..n {
            let support = if slot < labels.len() {
                Some(labels[slot])
            } else if rng.gen::<f64>() < noise_slot {
                None
            } else {
                Some(*labels.choose(&mut rng).expect("non-empty"))
            };
            sentences.push(make_sentence(spec, vocab, support, &mut rng));
        }
        sentences.shuffle(&mut rng);
    }
    Bag {
        id: format!("b{index:06}"),
        head: format!("e{}", 2 * index),
        tail: format!("e{}", 2 * index + 1),
        sentences,
        observed: y.clone(),
        truth: Some(y),
    }
}

/// Observed labels for true labels `y`: non-NA bits go through the
/// corruption, then NA is set exactly when no other bit survives.
pub fn corrupt_labels(
    y: &LabelVector,
    corruption: &Corruption,
    catalog: &RelationCatalog,
    rng_seed: u64,
) -> Result<LabelVector> {
    let mut z = match corruption {
        Corruption::None => return Ok(y.clone()),
        Corruption::Flip { p_f } => flip_noise(y, *p_f, rng_seed)?,
        Corruption::Channel { channel } => channel.resolve(catalog)?.sample(y, rng_seed)?,
    };
    let na = catalog.na_index();
    let any = catalog.non_na().any(|r| z.get(r));
    z.set(na, !any);
    Ok(z)
}

/// Re-derives every bag's observed labels from its true labels.
pub fn corrupt_dataset(ds: &Dataset, corruption: &Corruption, rng_seed: u64) -> Result<Dataset> {
    let base = seed::derive(rng_seed, "corrupt");
    let mut out = ds.clone();
    for (i, bag) in out.bags.iter_mut().enumerate() {
        let y = bag.truth.as_ref().ok_or_else(|| Error::Validation {
            bag: bag.id.clone(),
            msg: "corruption needs true labels".into(),
        })?;
        bag.observed = corrupt_labels(y, corruption, &ds.catalog, seed::child(base, i as u64))?;
    }
    Ok(out)
}

fn generate_range(spec: &CorpusSpec, range: std::ops::Range<usize>) -> Result<Dataset> {
    spec.validate()?;
    let vocab = Vocabulary::build(spec);
    let noise_slot = spec.free_slot_noise_prob();
    let bags: Vec<Bag> = range.map(|i| make_bag(spec, &vocab, i, noise_slot)).collect();
    let clean = Dataset {
        catalog: spec.catalog.clone(),
        bags,
        spec: Some(serde_json::to_value(spec)?),
    };
    if spec.regime.noisy_labels() {
        corrupt_dataset(&clean, &spec.corruption, spec.seed)
    } else {
        Ok(clean)
    }
}

/// `n_bags` bags. Pure function of the spec.
pub fn generate(spec: &CorpusSpec) -> Result<Dataset> {
    generate_range(spec, 0..spec.n_bags)
}

#[derive(Debug, Clone)]
pub struct SplitCorpus {
    pub train: Dataset,
    pub test: Dataset,
}

/// `n_bags` training bags plus `test_bags` held-out bags drawn from the same
/// generator (disjoint bag indices).
pub fn generate_split(spec: &CorpusSpec) -> Result<SplitCorpus> {
    Ok(SplitCorpus {
        train: generate_range(spec, 0..spec.n_bags)?,
        test: generate_range(spec, spec.n_bags..spec.n_bags + spec.test_bags)?,
    })
}
