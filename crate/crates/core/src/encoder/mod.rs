//! Trainable stand-in for the relational encoder: maps a pair's feature
//! vector to a `(|R|+1)`-logit row, with exact backpropagation of any
//! [`MarginLoss`] into the parameters.

mod adamw;
mod checkpoint;
mod train;

pub use adamw::{adamw_step, AdamWConfig, AdamWState};
pub use checkpoint::{Checkpoint, NamedArray, CHECKPOINT_FORMAT};
pub use train::{dataset_loss, evaluate_dev, train, train_with_loss, EpochRecord, TrainConfig, TrainOutcome, TrainTrace};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{LossConfig, MarginLoss};
use crate::schema::{LabelSet, LogitRow};

/// Hidden width used when a config asks for `one_hidden` without a size.
pub const DEFAULT_HIDDEN: usize = 64;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Architecture {
    /// `t = W x + b`
    #[default]
    Linear,
    /// `t = W2 tanh(W1 x + b1) + b2`
    OneHidden {
        #[serde(default = "default_hidden")]
        hidden: usize,
    },
}

fn default_hidden() -> usize {
    DEFAULT_HIDDEN
}

/// One named parameter block inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub name: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
    /// Biases are excluded from weight decay.
    pub decays: bool,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Encoder weights, stored as one flat vector in declared segment order.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    architecture: Architecture,
    input_dim: usize,
    output_dim: usize,
    values: Vec<f64>,
}

/// Per-pair forward values kept for the backward pass.
struct Forward {
    logits: Vec<f64>,
    hidden: Vec<f64>,
}

impl EncoderParams {
    /// All-zero parameters.
    pub fn zeros(architecture: Architecture, input_dim: usize, output_dim: usize) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::config("feature_dim", "must be at least 1"));
        }
        if output_dim < 2 {
            return Err(Error::config("relation_count", "output needs TH plus at least one relation"));
        }
        if let Architecture::OneHidden { hidden: 0 } = architecture {
            return Err(Error::config("architecture.hidden", "must be at least 1"));
        }
        let mut params = Self {
            architecture,
            input_dim,
            output_dim,
            values: Vec::new(),
        };
        let total: usize = params.segments().iter().map(Segment::len).sum();
        params.values = vec![0.0; total];
        Ok(params)
    }

    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn init<R: Rng>(
        architecture: Architecture,
        input_dim: usize,
        output_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut params = Self::zeros(architecture, input_dim, output_dim)?;
        for seg in params.segments() {
            if seg.decays {
                let bound = 1.0 / (seg.rows as f64).sqrt();
                for v in &mut params.values[seg.range()] {
                    *v = rng.random_range(-bound..=bound);
                }
            }
        }
        Ok(params)
    }

    /// Rebuilds parameters from a flat vector laid out as [`Self::segments`].
    pub fn from_values(
        architecture: Architecture,
        input_dim: usize,
        output_dim: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        let mut params = Self::zeros(architecture, input_dim, output_dim)?;
        if values.len() != params.values.len() {
            return Err(Error::Schema(format!(
                "expected {} parameters, got {}",
                params.values.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite parameter".into()));
        }
        params.values = values;
        Ok(params)
    }

    pub fn architecture(&self) -> Architecture {
        self.architecture
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn segments(&self) -> Vec<Segment> {
        let shapes: Vec<(&'static str, usize, usize, bool)> = match self.architecture {
            Architecture::Linear => vec![
                ("weight", self.input_dim, self.output_dim, true),
                ("bias", self.output_dim, 1, false),
            ],
            Architecture::OneHidden { hidden } => vec![
                ("hidden_weight", self.input_dim, hidden, true),
                ("hidden_bias", hidden, 1, false),
                ("output_weight", hidden, self.output_dim, true),
                ("output_bias", self.output_dim, 1, false),
            ],
        };
        let mut offset = 0;
        shapes
            .into_iter()
            .map(|(name, rows, cols, decays)| {
                let seg = Segment { name, rows, cols, offset, decays };
                offset += rows * cols;
                seg
            })
            .collect()
    }

    /// `true` for every parameter subject to weight decay.
    pub fn decay_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.values.len()];
        for seg in self.segments() {
            mask[seg.range()].fill(seg.decays);
        }
        mask
    }

    fn check_input(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.input_dim {
            return Err(Error::Schema(format!(
                "feature dimension {} does not match encoder input {}",
                features.len(),
                self.input_dim
            )));
        }
        Ok(())
    }

    /// Segment ranges in declared order, without allocating.
    fn ranges(&self) -> [std::ops::Range<usize>; 4] {
        let (i, o) = (self.input_dim, self.output_dim);
        let sizes = match self.architecture {
            Architecture::Linear => [o * i, o, 0, 0],
            Architecture::OneHidden { hidden: h } => [h * i, h, o * h, o],
        };
        let mut start = 0;
        sizes.map(|n| {
            let r = start..start + n;
            start += n;
            r
        })
    }

    fn forward(&self, x: &[f64]) -> Forward {
        let segs = self.ranges();
        let v = &self.values;
        match self.architecture {
            Architecture::Linear => Forward {
                logits: affine(&v[segs[0].clone()], &v[segs[1].clone()], x),
                hidden: Vec::new(),
            },
            Architecture::OneHidden { .. } => {
                let mut hidden = affine(&v[segs[0].clone()], &v[segs[1].clone()], x);
                hidden.iter_mut().for_each(|h| *h = h.tanh());
                Forward {
                    logits: affine(&v[segs[2].clone()], &v[segs[3].clone()], &hidden),
                    hidden,
                }
            }
        }
    }

    /// Logit row for one pair.
    pub fn encode(&self, features: &[f64]) -> Result<LogitRow> {
        self.check_input(features)?;
        LogitRow::new(self.forward(features).logits)
    }

    /// Adds the parameter gradient implied by logit gradient `upstream` at
    /// input `features` into `grad`.
    pub fn accumulate_grad(&self, features: &[f64], upstream: &[f64], grad: &mut [f64]) -> Result<()> {
        self.check_input(features)?;
        if upstream.len() != self.output_dim || grad.len() != self.values.len() {
            return Err(Error::Schema("gradient buffer shape mismatch".into()));
        }
        let fwd = self.forward(features);
        self.accumulate_from(&fwd, features, upstream, grad);
        Ok(())
    }

    fn accumulate_from(&self, fwd: &Forward, x: &[f64], upstream: &[f64], grad: &mut [f64]) {
        let segs = self.ranges();
        match self.architecture {
            Architecture::Linear => {
                outer_add(&mut grad[segs[0].clone()], x, upstream);
                add(&mut grad[segs[1].clone()], upstream);
            }
            Architecture::OneHidden { .. } => {
                outer_add(&mut grad[segs[2].clone()], &fwd.hidden, upstream);
                add(&mut grad[segs[3].clone()], upstream);
                let w2 = &self.values[segs[2].clone()];
                let dh: Vec<f64> = w2
                    .chunks_exact(self.output_dim)
                    .zip(&fwd.hidden)
                    .map(|(row, &h)| dot(row, upstream) * (1.0 - h * h))
                    .collect();
                outer_add(&mut grad[segs[0].clone()], x, &dh);
                add(&mut grad[segs[1].clone()], &dh);
            }
        }
    }

    /// Loss of one pair and its exact gradient over all parameters.
    pub fn backward(
        &self,
        features: &[f64],
        labels: &LabelSet,
        loss: &dyn MarginLoss,
        cfg: &LossConfig,
    ) -> Result<(f64, Vec<f64>)> {
        let mut grad = vec![0.0; self.values.len()];
        let value = self.backward_into(features, labels, loss, cfg, &mut grad)?;
        Ok((value, grad))
    }

    /// Like [`Self::backward`] but accumulates into `grad`.
    pub fn backward_into(
        &self,
        features: &[f64],
        labels: &LabelSet,
        loss: &dyn MarginLoss,
        cfg: &LossConfig,
        grad: &mut [f64],
    ) -> Result<f64> {
        self.check_input(features)?;
        let fwd = self.forward(features);
        let row = LogitRow::new(fwd.logits.clone())?;
        let (value, upstream) = loss.value_and_gradient(&row, labels, cfg)?;
        self.accumulate_from(&fwd, features, &upstream, grad);
        Ok(value)
    }
}

/// `b + xW` for `W` stored input-major, one row of outputs per input.
fn affine(weight: &[f64], bias: &[f64], x: &[f64]) -> Vec<f64> {
    let n = bias.len();
    let mut out = bias.to_vec();
    let mut j = 0;
    while j + 8 <= n {
        let mut acc = [0.0; 8];
        acc.copy_from_slice(&out[j..j + 8]);
        for (row, &xi) in weight.chunks_exact(n).zip(x) {
            let w = &row[j..j + 8];
            for k in 0..8 {
                acc[k] += xi * w[k];
            }
        }
        out[j..j + 8].copy_from_slice(&acc);
        j += 8;
    }
    for (row, &xi) in weight.chunks_exact(n).zip(x) {
        for (o, &w) in out[j..].iter_mut().zip(&row[j..]) {
            *o += xi * w;
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `out += rows ⊗ cols`, with `out` laid out like `rows.len()` rows of `cols.len()`.
fn outer_add(out: &mut [f64], rows: &[f64], cols: &[f64]) {
    if cols.iter().all(|&c| c == 0.0) {
        return;
    }
    let n = cols.len();
    for (block, &u) in out.chunks_exact_mut(n).zip(rows) {
        if u != 0.0 {
            for (o, &c) in block.iter_mut().zip(cols) {
                *o += u * c;
            }
        }
    }
}

fn add(out: &mut [f64], v: &[f64]) {
    out.iter_mut().zip(v).for_each(|(o, x)| *o += x);
}
