//! Core domain types: the relation vocabulary, label sets, logit rows and
//! datasets of entity-pair examples, plus the JSONL dataset format.
//!
//! Relation indices are 1-based. Index 0 of every [`LogitRow`] is the
//! threshold (TH) logit, so a relation index addresses its logit directly.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthdata::GenConfig;

/// Index of the threshold class inside a [`LogitRow`].
pub const TH_INDEX: usize = 0;

/// Format tag written into the JSONL header line.
pub const DATASET_FORMAT: &str = "cmm-dataset/v1";

/// The relation vocabulary `1..=relation_count`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema", into = "RawSchema")]
pub struct RelationSchema {
    relation_names: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RawSchema {
    relation_count: usize,
    relation_names: Vec<String>,
    th_index: usize,
}

impl TryFrom<RawSchema> for RelationSchema {
    type Error = Error;

    fn try_from(raw: RawSchema) -> Result<Self> {
        if raw.th_index != TH_INDEX {
            return Err(Error::Schema(format!(
                "th_index must be {TH_INDEX}, got {}",
                raw.th_index
            )));
        }
        if raw.relation_count != raw.relation_names.len() {
            return Err(Error::Schema(format!(
                "relation_count {} does not match {} relation names",
                raw.relation_count,
                raw.relation_names.len()
            )));
        }
        RelationSchema::new(raw.relation_names)
    }
}

impl From<RelationSchema> for RawSchema {
    fn from(schema: RelationSchema) -> Self {
        RawSchema {
            relation_count: schema.relation_count(),
            relation_names: schema.relation_names,
            th_index: TH_INDEX,
        }
    }
}

impl RelationSchema {
    pub fn new(relation_names: Vec<String>) -> Result<Self> {
        if relation_names.is_empty() {
            return Err(Error::Schema("a schema needs at least one relation".into()));
        }
        let mut seen = HashSet::new();
        for name in &relation_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate relation name {name:?}")));
            }
        }
        Ok(Self { relation_names })
    }

    /// Schema with names `P1..Pn`.
    pub fn numbered(relation_count: usize) -> Result<Self> {
        Self::new((1..=relation_count).map(|r| format!("P{r}")).collect())
    }

    pub fn relation_count(&self) -> usize {
        self.relation_names.len()
    }

    /// Length of a logit row for this schema (relations plus TH).
    pub fn logit_len(&self) -> usize {
        self.relation_names.len() + 1
    }

    /// Name of relation `r` (1-based). `None` for the TH index or out of range.
    pub fn relation_name(&self, r: usize) -> Option<&str> {
        if r == TH_INDEX {
            return None;
        }
        self.relation_names.get(r - 1).map(String::as_str)
    }

    pub fn relation_names(&self) -> &[String] {
        &self.relation_names
    }

    pub fn relations(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.relation_count()
    }
}

/// Positive relations of one pair and their complement.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelSet {
    relation_count: usize,
    positives: BTreeSet<usize>,
    negatives: BTreeSet<usize>,
}

impl LabelSet {
    /// Builds a label set from its positives; negatives are the complement.
    pub fn new(positives: impl IntoIterator<Item = usize>, relation_count: usize) -> Result<Self> {
        let positives: BTreeSet<usize> = positives.into_iter().collect();
        if let Some(&bad) = positives.iter().find(|&&r| r == TH_INDEX || r > relation_count) {
            return Err(Error::Schema(format!(
                "relation index {bad} outside 1..={relation_count}"
            )));
        }
        let negatives = (1..=relation_count)
            .filter(|r| !positives.contains(r))
            .collect();
        Ok(Self {
            relation_count,
            positives,
            negatives,
        })
    }

    /// Label set with no positives (the NA case).
    pub fn empty(relation_count: usize) -> Self {
        Self {
            relation_count,
            positives: BTreeSet::new(),
            negatives: (1..=relation_count).collect(),
        }
    }

    /// Builds a label set from explicit parts without checking that they
    /// partition the relation range. [`validate_dataset`] reports sets built
    /// this way that break the partition.
    pub fn from_parts(
        positives: BTreeSet<usize>,
        negatives: BTreeSet<usize>,
        relation_count: usize,
    ) -> Self {
        Self {
            relation_count,
            positives,
            negatives,
        }
    }

    pub fn relation_count(&self) -> usize {
        self.relation_count
    }

    pub fn positives(&self) -> &BTreeSet<usize> {
        &self.positives
    }

    pub fn negatives(&self) -> &BTreeSet<usize> {
        &self.negatives
    }

    pub fn is_positive(&self, r: usize) -> bool {
        self.positives.contains(&r)
    }

    /// Problems with the partition invariant, empty when the set is sound.
    pub fn partition_errors(&self) -> Vec<String> {
        let mut errors = Vec::new();
        let overlap: Vec<_> = self.positives.intersection(&self.negatives).collect();
        if !overlap.is_empty() {
            errors.push(format!("positives and negatives overlap at {overlap:?}"));
        }
        let out_of_range: Vec<_> = self
            .positives
            .iter()
            .chain(&self.negatives)
            .filter(|&&r| r == TH_INDEX || r > self.relation_count)
            .collect();
        if !out_of_range.is_empty() {
            errors.push(format!(
                "indices {out_of_range:?} outside 1..={}",
                self.relation_count
            ));
        }
        let missing: Vec<_> = (1..=self.relation_count)
            .filter(|r| !self.positives.contains(r) && !self.negatives.contains(r))
            .collect();
        if !missing.is_empty() {
            errors.push(format!("relations {missing:?} are neither positive nor negative"));
        }
        errors
    }
}

/// One `(|R|+1)`-length logit vector; index 0 is the TH logit.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitRow(Vec<f64>);

impl LogitRow {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Schema(format!(
                "a logit row needs the TH logit and at least one relation, got length {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("logit {i} is {}", values[i])));
        }
        Ok(Self(values))
    }

    pub fn th(&self) -> f64 {
        self.0[TH_INDEX]
    }

    pub fn relation_count(&self) -> usize {
        self.0.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    /// Fails unless the row fits a label set over the same relations.
    pub fn check_labels(&self, labels: &LabelSet) -> Result<()> {
        if labels.relation_count() != self.relation_count() {
            return Err(Error::Schema(format!(
                "logit row has {} relations but label set has {}",
                self.relation_count(),
                labels.relation_count()
            )));
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for LogitRow {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Hard,
}

/// One entity pair at the feature level.
#[derive(Debug, Clone, PartialEq)]
pub struct PairExample {
    pub pair_id: String,
    pub doc_id: usize,
    pub features: Vec<f64>,
    /// Training labels, possibly with injected false negatives.
    pub labels: LabelSet,
    /// Generator ground truth.
    pub true_labels: LabelSet,
    /// Relations whose fact for this pair also appears in the training split.
    pub seen_in_train: BTreeSet<usize>,
    pub difficulty: Difficulty,
    pub corrupted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Custom,
}

/// False-negative injection applied to a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corruption {
    pub rate: f64,
    pub seed: u64,
}

/// Everything needed to regenerate a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub generator: Option<GenConfig>,
    pub split: Split,
    /// Index of the first generated document in the generator's stream.
    pub document_offset: usize,
    pub documents: usize,
    pub corruption: Option<Corruption>,
}

impl Manifest {
    pub fn custom() -> Self {
        Self {
            generator: None,
            split: Split::Custom,
            document_offset: 0,
            documents: 0,
            corruption: None,
        }
    }
}

/// Examples belonging to one document, as indices into `Dataset::examples`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentGroup {
    pub doc_id: usize,
    pub examples: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: RelationSchema,
    pub examples: Vec<PairExample>,
    pub documents: Vec<DocumentGroup>,
    pub manifest: Manifest,
}

impl Dataset {
    /// Groups examples by `doc_id`, in order of first appearance.
    pub fn new(schema: RelationSchema, examples: Vec<PairExample>, manifest: Manifest) -> Self {
        let mut order = Vec::new();
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for (i, ex) in examples.iter().enumerate() {
            groups
                .entry(ex.doc_id)
                .or_insert_with(|| {
                    order.push(ex.doc_id);
                    Vec::new()
                })
                .push(i);
        }
        let documents = order
            .into_iter()
            .map(|doc_id| DocumentGroup {
                doc_id,
                examples: groups.remove(&doc_id).unwrap_or_default(),
            })
            .collect();
        Self {
            schema,
            examples,
            documents,
            manifest,
        }
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.examples.first().map(|e| e.features.len())
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Writes the header line followed by one line per example.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        let header = Header {
            format: DATASET_FORMAT.to_string(),
            schema: self.schema.clone(),
            manifest: self.manifest.clone(),
        };
        let io_err = |e| Error::io("<dataset writer>", e);
        serde_json::to_writer(&mut out, &header).map_err(|e| Error::json("dataset header", e))?;
        out.write_all(b"\n").map_err(io_err)?;
        for ex in &self.examples {
            let record = ExampleRecord {
                pair_id: ex.pair_id.clone(),
                doc_id: ex.doc_id,
                features: ex.features.clone(),
                positives: ex.labels.positives().iter().copied().collect(),
                true_positives: ex.true_labels.positives().iter().copied().collect(),
                seen_in_train: ex.seen_in_train.iter().copied().collect(),
                difficulty: ex.difficulty,
                corrupted: ex.corrupted,
            };
            serde_json::to_writer(&mut out, &record)
                .map_err(|e| Error::json(format!("example {}", ex.pair_id), e))?;
            out.write_all(b"\n").map_err(io_err)?;
        }
        Ok(())
    }

    pub fn to_jsonl_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)?;
        Ok(buf)
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let (_, header_line) = lines
            .next()
            .ok_or_else(|| Error::Schema("dataset file has no header line".into()))?;
        let header_line = header_line.map_err(|e| Error::io("<dataset reader>", e))?;
        let header: Header =
            serde_json::from_str(&header_line).map_err(|e| Error::json("dataset header", e))?;
        if header.format != DATASET_FORMAT {
            return Err(Error::Schema(format!(
                "unsupported dataset format {:?}, expected {DATASET_FORMAT:?}",
                header.format
            )));
        }
        let relation_count = header.schema.relation_count();
        let mut examples = Vec::new();
        for (lineno, line) in lines {
            let line = line.map_err(|e| Error::io("<dataset reader>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: ExampleRecord = serde_json::from_str(&line)
                .map_err(|e| Error::json(format!("line {}", lineno + 1), e))?;
            examples.push(PairExample {
                labels: LabelSet::new(rec.positives, relation_count)?,
                true_labels: LabelSet::new(rec.true_positives, relation_count)?,
                pair_id: rec.pair_id,
                doc_id: rec.doc_id,
                features: rec.features,
                seen_in_train: rec.seen_in_train.into_iter().collect(),
                difficulty: rec.difficulty,
                corrupted: rec.corrupted,
            });
        }
        Ok(Dataset::new(header.schema, examples, header.manifest))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_jsonl(std::io::BufReader::new(file))
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        self.write_jsonl(&mut out)?;
        out.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    schema: RelationSchema,
    manifest: Manifest,
}

// Field order is the on-disk key order.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExampleRecord {
    pair_id: String,
    doc_id: usize,
    features: Vec<f64>,
    positives: Vec<usize>,
    true_positives: Vec<usize>,
    seen_in_train: Vec<usize>,
    difficulty: Difficulty,
    corrupted: bool,
}

/// One broken invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Offending example, `None` for dataset-level problems.
    pub pair_id: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_pass(&self) -> bool {
        self.violations.is_empty()
    }

    /// Whether any violation names `pair_id`.
    pub fn names(&self, pair_id: &str) -> bool {
        self.violations
            .iter()
            .any(|v| v.pair_id.as_deref() == Some(pair_id))
    }
}

/// Checks every dataset invariant and reports each violation.
pub fn validate_dataset(dataset: &Dataset) -> ValidationReport {
    let mut violations = Vec::new();
    let mut push = |pair_id: Option<&str>, message: String| {
        violations.push(Violation {
            pair_id: pair_id.map(str::to_string),
            message,
        })
    };

    let relation_count = dataset.schema.relation_count();
    let dim = dataset.feature_dim();
    let mut ids = HashSet::new();

    for ex in &dataset.examples {
        let id = Some(ex.pair_id.as_str());
        if !ids.insert(ex.pair_id.as_str()) {
            push(id, "duplicate pair_id".into());
        }
        if Some(ex.features.len()) != dim {
            push(
                id,
                format!("feature dimension {} differs from {:?}", ex.features.len(), dim),
            );
        }
        if ex.features.iter().any(|v| !v.is_finite()) {
            push(id, "non-finite feature value".into());
        }
        for (which, labels) in [("labels", &ex.labels), ("true_labels", &ex.true_labels)] {
            if labels.relation_count() != relation_count {
                push(
                    id,
                    format!(
                        "{which} cover {} relations, schema has {relation_count}",
                        labels.relation_count()
                    ),
                );
            }
            for err in labels.partition_errors() {
                push(id, format!("{which}: {err}"));
            }
        }
        if ex.corrupted {
            let strict_superset = ex.true_labels.positives().is_superset(ex.labels.positives())
                && ex.true_labels.positives().len() > ex.labels.positives().len();
            if !strict_superset {
                push(
                    id,
                    "corrupted pair whose true positives are not a strict superset of its labels"
                        .into(),
                );
            }
        }
        if let Some(&r) = ex
            .seen_in_train
            .iter()
            .find(|&&r| r == TH_INDEX || r > relation_count)
        {
            push(id, format!("seen_in_train index {r} outside 1..={relation_count}"));
        }
    }

    let mut membership = vec![0usize; dataset.examples.len()];
    for group in &dataset.documents {
        for &i in &group.examples {
            match membership.get_mut(i) {
                Some(count) => *count += 1,
                None => push(
                    None,
                    format!("document {} references missing example {i}", group.doc_id),
                ),
            }
        }
    }
    for (i, &count) in membership.iter().enumerate() {
        if count != 1 {
            push(
                Some(&dataset.examples[i].pair_id),
                format!("example belongs to {count} document groups"),
            );
        }
    }

    ValidationReport { violations }
}
