//! Document-at-a-time training loop: per document, the configured loss is
//! summed over every pair and one AdamW step is taken.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{adamw_step, AdamWConfig, AdamWState, Architecture, EncoderParams};
use crate::error::{Error, Result};
use crate::eval::{self, GoldView, MetricsRecord, PredictionSet};
use crate::loss::{self, Aggregation, LossConfig, MarginLoss};
use crate::schema::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub seed: u64,
    pub loss: LossConfig,
    pub eval_every: usize,
    pub architecture: Architecture,
    /// Documents whose losses are combined into one optimizer step.
    pub docs_per_step: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let opt = AdamWConfig::default();
        Self {
            learning_rate: opt.learning_rate,
            beta1: opt.beta1,
            beta2: opt.beta2,
            epsilon: opt.epsilon,
            weight_decay: opt.weight_decay,
            epochs: 30,
            seed: 0,
            loss: LossConfig::default(),
            eval_every: 1,
            architecture: Architecture::Linear,
            docs_per_step: 1,
        }
    }
}

impl TrainConfig {
    pub fn optimizer(&self) -> AdamWConfig {
        AdamWConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            weight_decay: self.weight_decay,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.optimizer().validate()?;
        self.loss.validate()?;
        if self.eval_every == 0 {
            return Err(Error::config("eval_every", "must be at least 1"));
        }
        if self.docs_per_step == 0 {
            return Err(Error::config("docs_per_step", "must be at least 1"));
        }
        Ok(())
    }
}

/// Snapshot taken after an evaluated epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-pair training loss over the epoch.
    pub train_loss: f64,
    pub f1: f64,
    pub ign_f1: f64,
    /// Predicted positive (pair, relation) facts on the dev set.
    pub positives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub arm: String,
    pub records: Vec<EpochRecord>,
}

impl TrainTrace {
    pub const CSV_HEADER: &'static str = "epoch,train_loss,f1,ign_f1,positives";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!("{},{},{},{},{}\n", r.epoch, r.train_loss, r.f1, r.ign_f1, r.positives));
        }
        out
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: EncoderParams,
    pub optimizer: AdamWState,
    pub trace: TrainTrace,
}

/// Trains with the built-in loss named by `cfg.loss.kind`.
pub fn train(train: &Dataset, dev: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let loss = loss::builtin(cfg.loss.kind).ok_or_else(|| {
        Error::config("loss.kind", "plugin losses must be passed to train_with_loss")
    })?;
    train_with_loss(train, dev, cfg, loss)
}

pub fn train_with_loss(
    train: &Dataset,
    dev: &Dataset,
    cfg: &TrainConfig,
    loss: &dyn MarginLoss,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if train.schema != dev.schema {
        return Err(Error::Schema("train and dev datasets use different schemas".into()));
    }
    let dim = train.feature_dim().ok_or(Error::EmptyDataset)?;
    if dev.feature_dim().is_some_and(|d| d != dim) {
        return Err(Error::Schema("train and dev feature dimensions differ".into()));
    }

    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = EncoderParams::init(cfg.architecture, dim, train.schema.logit_len(), &mut init_rng)?;
    let mask = params.decay_mask();
    let opt = cfg.optimizer();
    let mut state = AdamWState::new(params.len());
    let mut grad = vec![0.0; params.len()];
    let mut trace = TrainTrace {
        arm: cfg.loss.label(),
        records: Vec::new(),
    };

    let mut order: Vec<usize> = (0..train.documents.len()).collect();
    for epoch in 1..=cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(epoch as u64);
        order.sort_unstable();
        order.shuffle(&mut rng);

        let mut epoch_loss = 0.0;
        let mut epoch_pairs = 0usize;
        for step_docs in order.chunks(cfg.docs_per_step) {
            grad.fill(0.0);
            let mut step_pairs = 0usize;
            for &d in step_docs {
                for &i in &train.documents[d].examples {
                    let ex = &train.examples[i];
                    epoch_loss += params.backward_into(&ex.features, &ex.labels, loss, &cfg.loss, &mut grad)?;
                    step_pairs += 1;
                }
            }
            if step_pairs == 0 {
                continue;
            }
            if cfg.loss.aggregation == Aggregation::GlobalMean {
                let scale = 1.0 / step_pairs as f64;
                grad.iter_mut().for_each(|g| *g *= scale);
            }
            epoch_pairs += step_pairs;
            adamw_step(params.values_mut(), &grad, &mask, &opt, &mut state)?;
        }

        if epoch % cfg.eval_every == 0 {
            let (metrics, positives) = evaluate_dev(&params, dev)?;
            trace.records.push(EpochRecord {
                epoch,
                train_loss: epoch_loss / epoch_pairs.max(1) as f64,
                f1: metrics.f1,
                ign_f1: metrics.ign_f1,
                positives,
            });
        }
    }

    Ok(TrainOutcome {
        params,
        optimizer: state,
        trace,
    })
}

/// Micro metrics against `true_labels` and the predicted positive count.
pub fn evaluate_dev(params: &EncoderParams, dev: &Dataset) -> Result<(MetricsRecord, usize)> {
    let predictions = PredictionSet::predict(params, dev)?;
    let metrics = eval::micro_f1(&predictions, dev, GoldView::TrueLabels)?;
    Ok((metrics, predictions.positive_count()))
}

/// Mean per-pair loss of `params` over a dataset's training labels.
pub fn dataset_loss(params: &EncoderParams, data: &Dataset, loss: &dyn MarginLoss, cfg: &LossConfig) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for ex in &data.examples {
        total += loss.value(&params.encode(&ex.features)?, &ex.labels, cfg)?;
    }
    Ok(total / data.len() as f64)
}
