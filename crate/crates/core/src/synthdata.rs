//! Synthetic entity-pair datasets with relation-extraction-like statistics:
//! a few percent of pairs carry any relation, relation frequencies follow a
//! Zipf law over rank, a configurable share of pairs sit close to the
//! decision boundary, and false negatives can be injected afterwards.
//!
//! Labels come from a hidden teacher: `|R|` orthonormal directions in
//! feature space. A pair's teacher score for relation `r` is the projection
//! of its features on direction `r`, and the label is the sign of that
//! score. Easy pairs have `|score| >= teacher_margin`, hard pairs
//! `|score| < teacher_margin / 2`.

use std::collections::BTreeSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{
    Corruption, Dataset, Difficulty, LabelSet, Manifest, PairExample, RelationSchema, Split,
};

/// Zipf exponent giving a head share above 23% and a tail share below 0.5%
/// at 20 relations (expected shares 0.531 and 0.0033).
pub const DEFAULT_ZIPF_EXPONENT: f64 = 1.7;

/// Positive-pair rate of the noisy-annotation preset.
pub const DOCRED_POSITIVE_RATE: f64 = 0.0318;
/// Positive-pair rate of the re-annotated preset.
pub const REDOCRED_POSITIVE_RATE: f64 = 0.0709;

const MAX_RESAMPLES: usize = 10_000;
const TEACHER_STREAM: u64 = 0;
const CORRUPTION_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub n_documents: usize,
    pub pairs_per_document: usize,
    pub relation_count: usize,
    pub feature_dim: usize,
    /// Fraction of pairs holding at least one relation.
    pub positive_rate: f64,
    pub zipf_exponent: f64,
    pub hard_fraction: f64,
    pub teacher_margin: f64,
    /// Probability a positive pair carries a second relation.
    pub multi_label_rate: f64,
    /// Per-fact probability of demotion to negative in the training split.
    pub false_negative_rate: f64,
    pub seen_in_train_rate: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self::docred_mixed()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    DocredMixed,
    ReDocred,
}

impl Preset {
    pub fn config(self) -> GenConfig {
        match self {
            Preset::DocredMixed => GenConfig::docred_mixed(),
            Preset::ReDocred => GenConfig::re_docred(),
        }
    }
}

impl GenConfig {
    /// Sparse positives with noisy (false-negative) training labels.
    pub fn docred_mixed() -> Self {
        Self {
            n_documents: 3000,
            pairs_per_document: 150,
            relation_count: 20,
            feature_dim: 64,
            positive_rate: DOCRED_POSITIVE_RATE,
            zipf_exponent: DEFAULT_ZIPF_EXPONENT,
            hard_fraction: 0.3,
            teacher_margin: 1.0,
            multi_label_rate: 0.1,
            false_negative_rate: 0.3,
            seen_in_train_rate: 0.25,
            seed: 0,
        }
    }

    /// Denser, cleanly annotated positives.
    pub fn re_docred() -> Self {
        Self {
            positive_rate: REDOCRED_POSITIVE_RATE,
            false_negative_rate: 0.0,
            ..Self::docred_mixed()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |field: &str, v: f64, hi_open: bool| -> Result<()> {
            let ok = v.is_finite() && v >= 0.0 && if hi_open { v < 1.0 } else { v <= 1.0 };
            if ok {
                Ok(())
            } else {
                Err(Error::config(field, format!("out of range: {v}")))
            }
        };
        if self.n_documents == 0 {
            return Err(Error::config("n_documents", "must be at least 1"));
        }
        if self.pairs_per_document == 0 {
            return Err(Error::config("pairs_per_document", "must be at least 1"));
        }
        if self.relation_count == 0 {
            return Err(Error::config("relation_count", "must be at least 1"));
        }
        if self.feature_dim < self.relation_count {
            return Err(Error::config(
                "feature_dim",
                format!(
                    "teacher needs feature_dim >= relation_count ({} < {})",
                    self.feature_dim, self.relation_count
                ),
            ));
        }
        if !(self.positive_rate > 0.0 && self.positive_rate < 1.0) {
            return Err(Error::config("positive_rate", "must lie in (0, 1)"));
        }
        if !(self.zipf_exponent > 0.0 && self.zipf_exponent.is_finite()) {
            return Err(Error::config("zipf_exponent", "must be positive"));
        }
        if !(self.teacher_margin > 0.0 && self.teacher_margin.is_finite()) {
            return Err(Error::config("teacher_margin", "must be positive"));
        }
        prob("hard_fraction", self.hard_fraction, false)?;
        prob("multi_label_rate", self.multi_label_rate, false)?;
        prob("false_negative_rate", self.false_negative_rate, true)?;
        prob("seen_in_train_rate", self.seen_in_train_rate, false)?;
        Ok(())
    }

    /// Expected share of each relation among positive facts, by rank.
    pub fn zipf_shares(&self) -> Vec<f64> {
        let w: Vec<f64> = (1..=self.relation_count)
            .map(|k| (k as f64).powf(-self.zipf_exponent))
            .collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    }
}

/// Orthonormal teacher directions, one row per relation.
#[derive(Debug, Clone, PartialEq)]
pub struct Teacher {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

impl Teacher {
    pub fn draw(cfg: &GenConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(TEACHER_STREAM);
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(cfg.relation_count);
        while rows.len() < cfg.relation_count {
            let mut v: Vec<f64> = (0..cfg.feature_dim).map(|_| rng.sample(StandardNormal)).collect();
            for u in &rows {
                let p = dot(&v, u);
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
            }
            let norm = dot(&v, &v).sqrt();
            if norm > 1e-6 {
                v.iter_mut().for_each(|a| *a /= norm);
                rows.push(v);
            }
        }
        Ok(Self {
            dim: cfg.feature_dim,
            rows,
        })
    }

    /// Teacher score of `features` for relation `r` (1-based).
    pub fn score(&self, features: &[f64], r: usize) -> f64 {
        dot(features, &self.rows[r - 1])
    }

    /// Features whose teacher scores equal `scores` exactly, plus isotropic
    /// noise orthogonal to every teacher direction.
    fn features(&self, scores: &[f64], noise: &mut [f64]) -> Vec<f64> {
        for u in &self.rows {
            let p = dot(noise, u);
            noise.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
        }
        let mut x = noise.to_vec();
        for (u, &s) in self.rows.iter().zip(scores) {
            x.iter_mut().zip(u).for_each(|(a, b)| *a += s * b);
        }
        debug_assert_eq!(x.len(), self.dim);
        x
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Score magnitude from a standard normal conditioned on the difficulty band.
fn score_magnitude<R: Rng>(rng: &mut R, difficulty: Difficulty, margin: f64) -> Result<f64> {
    for _ in 0..MAX_RESAMPLES {
        let z: f64 = rng.sample::<f64, _>(StandardNormal).abs();
        let accept = match difficulty {
            Difficulty::Easy => z >= margin,
            Difficulty::Hard => z < margin / 2.0,
        };
        if accept {
            return Ok(z);
        }
    }
    Err(Error::Generation(format!(
        "teacher_margin {margin}: no {} score found after {MAX_RESAMPLES} resamples",
        match difficulty {
            Difficulty::Easy => "easy (|score| >= margin)",
            Difficulty::Hard => "hard (|score| < margin/2)",
        }
    )))
}

fn generate_document(
    cfg: &GenConfig,
    teacher: &Teacher,
    zipf: &WeightedIndex<f64>,
    doc_id: usize,
) -> Result<Vec<PairExample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(doc_id as u64 + 1);
    let mut pairs = Vec::with_capacity(cfg.pairs_per_document);
    for p in 0..cfg.pairs_per_document {
        let difficulty = if rng.random_bool(cfg.hard_fraction) {
            Difficulty::Hard
        } else {
            Difficulty::Easy
        };
        let mut positives = BTreeSet::new();
        if rng.random_bool(cfg.positive_rate) {
            positives.insert(zipf.sample(&mut rng) + 1);
            if rng.random_bool(cfg.multi_label_rate) {
                positives.insert(zipf.sample(&mut rng) + 1);
            }
        }
        let scores = (1..=cfg.relation_count)
            .map(|r| {
                let mag = score_magnitude(&mut rng, difficulty, cfg.teacher_margin)?;
                Ok(if positives.contains(&r) { mag } else { -mag })
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut noise: Vec<f64> = (0..cfg.feature_dim).map(|_| rng.sample(StandardNormal)).collect();
        let features = teacher.features(&scores, &mut noise);
        let seen_in_train = positives
            .iter()
            .copied()
            .filter(|_| rng.random_bool(cfg.seen_in_train_rate))
            .collect();
        let labels = LabelSet::new(positives, cfg.relation_count)?;
        pairs.push(PairExample {
            pair_id: format!("d{doc_id}-p{p}"),
            doc_id,
            features,
            true_labels: labels.clone(),
            labels,
            seen_in_train,
            difficulty,
            corrupted: false,
        });
    }
    Ok(pairs)
}

/// Generates documents `offset..offset + count` of the stream defined by
/// `cfg`. Labels are uncorrupted.
pub fn generate_documents(cfg: &GenConfig, offset: usize, count: usize, split: Split) -> Result<Dataset> {
    cfg.validate()?;
    let teacher = Teacher::draw(cfg)?;
    let zipf = WeightedIndex::new(cfg.zipf_shares())
        .map_err(|e| Error::Generation(format!("zipf weights: {e}")))?;
    let mut examples = Vec::with_capacity(count * cfg.pairs_per_document);
    for doc in offset..offset + count {
        examples.extend(generate_document(cfg, &teacher, &zipf, doc)?);
    }
    let manifest = Manifest {
        generator: Some(cfg.clone()),
        split,
        document_offset: offset,
        documents: count,
        corruption: None,
    };
    Ok(Dataset::new(RelationSchema::numbered(cfg.relation_count)?, examples, manifest))
}

/// The `cfg.n_documents` training documents, uncorrupted.
pub fn generate(cfg: &GenConfig) -> Result<Dataset> {
    generate_documents(cfg, 0, cfg.n_documents, Split::Train)
}

/// Seed used for false-negative injection in [`generate_split`].
pub fn corruption_seed(cfg: &GenConfig) -> u64 {
    cfg.seed ^ CORRUPTION_SALT
}

/// Training split with `cfg.false_negative_rate` injected, and a clean dev
/// split of `dev_documents` documents drawn after it from the same teacher.
pub fn generate_split(cfg: &GenConfig, dev_documents: usize) -> Result<(Dataset, Dataset)> {
    let clean = generate(cfg)?;
    let train = inject_false_negatives(&clean, cfg.false_negative_rate, corruption_seed(cfg))?;
    let dev = generate_documents(cfg, cfg.n_documents, dev_documents, Split::Dev)?;
    Ok((train, dev))
}

/// Demotes each positive fact of `labels` independently with probability
/// `rate`. `true_labels` is left as it was.
pub fn inject_false_negatives(dataset: &Dataset, rate: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::config("false_negative_rate", format!("must lie in [0, 1), got {rate}")));
    }
    if let Some(ex) = dataset.examples.iter().find(|e| e.labels != e.true_labels || e.corrupted) {
        return Err(Error::Schema(format!("pair {} is already corrupted", ex.pair_id)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = dataset.clone();
    for ex in &mut out.examples {
        let kept: Vec<usize> = ex
            .labels
            .positives()
            .iter()
            .copied()
            .filter(|_| !rng.random_bool(rate))
            .collect();
        if kept.len() < ex.labels.positives().len() {
            ex.labels = LabelSet::new(kept, ex.labels.relation_count())?;
            ex.corrupted = true;
        }
    }
    out.manifest.corruption = Some(Corruption { rate, seed });
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationShare {
    pub relation: usize,
    pub count: usize,
    pub share: f64,
}

/// Label statistics. Shares and the positive fraction describe the ground
/// truth (`true_labels`); `label_positive_pair_fraction` describes the
/// possibly corrupted training labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub pairs: usize,
    pub documents: usize,
    pub positive_pairs: usize,
    pub positive_pair_fraction: f64,
    pub label_positive_pair_fraction: f64,
    pub positive_facts: usize,
    /// Sorted by share, descending; ties by relation index.
    pub relation_shares: Vec<RelationShare>,
    pub head_share: f64,
    pub tail_share: f64,
    pub easy_pairs: usize,
    pub hard_pairs: usize,
    pub corrupted_pairs: usize,
    pub demoted_facts: usize,
}

pub fn distribution_report(dataset: &Dataset) -> DistributionReport {
    let relation_count = dataset.schema.relation_count();
    let mut counts = vec![0usize; relation_count + 1];
    let mut positive_pairs = 0;
    let mut label_positive_pairs = 0;
    let mut easy = 0;
    let mut corrupted = 0;
    let mut demoted = 0;
    for ex in &dataset.examples {
        let truth = ex.true_labels.positives();
        if !truth.is_empty() {
            positive_pairs += 1;
        }
        if !ex.labels.positives().is_empty() {
            label_positive_pairs += 1;
        }
        for &r in truth {
            counts[r] += 1;
        }
        if ex.difficulty == Difficulty::Easy {
            easy += 1;
        }
        if ex.corrupted {
            corrupted += 1;
        }
        demoted += truth.difference(ex.labels.positives()).count();
    }
    let facts: usize = counts.iter().sum();
    let share = |c: usize| if facts == 0 { 0.0 } else { c as f64 / facts as f64 };
    let mut relation_shares: Vec<RelationShare> = (1..=relation_count)
        .map(|r| RelationShare {
            relation: r,
            count: counts[r],
            share: share(counts[r]),
        })
        .collect();
    relation_shares.sort_by(|a, b| b.count.cmp(&a.count).then(a.relation.cmp(&b.relation)));
    let n = dataset.examples.len();
    let frac = |c: usize| if n == 0 { 0.0 } else { c as f64 / n as f64 };
    DistributionReport {
        pairs: n,
        documents: dataset.documents.len(),
        positive_pairs,
        positive_pair_fraction: frac(positive_pairs),
        label_positive_pair_fraction: frac(label_positive_pairs),
        positive_facts: facts,
        head_share: relation_shares.first().map_or(0.0, |s| s.share),
        tail_share: relation_shares.last().map_or(0.0, |s| s.share),
        relation_shares,
        easy_pairs: easy,
        hard_pairs: n - easy,
        corrupted_pairs: corrupted,
        demoted_facts: demoted,
    }
}
