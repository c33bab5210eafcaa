//! Margin losses over a threshold-class logit row.
//!
//! Every loss here is a function of the signed distances between relation
//! logits and the TH logit:
//!
//! ```text
//! d+ = t_r  - t_TH   for positive relations
//! d- = t_TH - t_r    for negative relations
//! ```
//!
//! The concentrated margin loss rescales them with
//!
//! ```text
//! q+ = log σ(d+)
//! q- = log min(σ(d-) + m, 1)
//! L  = -( Σ (1 - q+)^γ q+  +  Σ q- )
//! ```
//!
//! Negatives with `d- >= log((1 - m) / m)` contribute neither loss nor
//! gradient.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{LabelSet, LogitRow, TH_INDEX};

/// γ values searched over by the comparison grid.
pub const GAMMA_GRID: [f64; 5] = [1.0, 1.2, 1.4, 1.6, 2.0];
/// m values searched over by the comparison grid.
pub const M_GRID: [f64; 4] = [0.1, 0.2, 0.3, 0.4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    PlainMargin,
    Cmm,
    AtlReference,
    /// A caller-supplied [`MarginLoss`] implementation.
    Plugin,
}

impl LossKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::PlainMargin => "plain_margin",
            LossKind::Cmm => "cmm",
            LossKind::AtlReference => "atl_reference",
            LossKind::Plugin => "plugin",
        }
    }
}

/// How per-pair losses are combined before an optimizer step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Sum over every pair in the step's documents.
    #[default]
    PerDocumentSum,
    /// Mean over every pair in the step's documents.
    GlobalMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    pub kind: LossKind,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_m")]
    pub m: f64,
    #[serde(default)]
    pub aggregation: Aggregation,
}

fn default_gamma() -> f64 {
    1.0
}

fn default_m() -> f64 {
    0.2
}

impl Default for LossConfig {
    fn default() -> Self {
        Self::cmm(default_gamma(), default_m())
    }
}

impl LossConfig {
    pub fn cmm(gamma: f64, m: f64) -> Self {
        Self {
            kind: LossKind::Cmm,
            gamma,
            m,
            aggregation: Aggregation::PerDocumentSum,
        }
    }

    pub fn of_kind(kind: LossKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(Error::config("loss.gamma", format!("must be finite and >= 0, got {}", self.gamma)));
        }
        if !self.m.is_finite() || self.m <= 0.0 || self.m >= 1.0 {
            return Err(Error::config("loss.m", format!("must lie strictly inside (0, 1), got {}", self.m)));
        }
        Ok(())
    }

    /// Short arm label, e.g. `cmm_g1.2_m0.2` or `plain_margin`.
    pub fn label(&self) -> String {
        match self.kind {
            LossKind::Cmm => format!("cmm_g{}_m{}", self.gamma, self.m),
            kind => kind.as_str().to_string(),
        }
    }

    fn expect_kind(&self, kind: LossKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::config(
                "loss.kind",
                format!("expected {}, got {}", kind.as_str(), self.kind.as_str()),
            ));
        }
        Ok(())
    }
}

/// Distances of each relation logit from the TH logit, keyed by relation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DistanceSet {
    pub d_pos: BTreeMap<usize, f64>,
    pub d_neg: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Positive,
    Negative,
}

pub fn margin_distances(logits: &LogitRow, labels: &LabelSet) -> Result<DistanceSet> {
    logits.check_labels(labels)?;
    let th = logits.th();
    Ok(DistanceSet {
        d_pos: labels.positives().iter().map(|&r| (r, logits[r] - th)).collect(),
        d_neg: labels.negatives().iter().map(|&r| (r, th - logits[r])).collect(),
    })
}

/// `Σ -d_r` over every relation. Unbounded below.
pub fn plain_margin_loss(logits: &LogitRow, labels: &LabelSet) -> Result<f64> {
    let d = margin_distances(logits, labels)?;
    Ok(-d.d_pos.values().chain(d.d_neg.values()).sum::<f64>())
}

pub fn plain_margin_grad(logits: &LogitRow, labels: &LabelSet) -> Result<Vec<f64>> {
    logits.check_labels(labels)?;
    let mut grad = vec![0.0; logits.values().len()];
    for &r in labels.positives() {
        grad[r] -= 1.0;
        grad[TH_INDEX] += 1.0;
    }
    for &r in labels.negatives() {
        grad[r] += 1.0;
        grad[TH_INDEX] -= 1.0;
    }
    Ok(grad)
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn log_sigmoid(x: f64) -> f64 {
    -softplus(-x)
}

/// Distance at and beyond which a negative relation is clamped to zero loss.
pub fn clamp_threshold(m: f64) -> f64 {
    ((1.0 - m) / m).ln()
}

/// Rescaled distance `q`. Positive side: `log σ(d)`. Negative side:
/// `log min(σ(d) + m, 1)`, exactly 0 once `d >= log((1-m)/m)`.
pub fn cmm_rescale(d: f64, side: Side, m: f64) -> f64 {
    match side {
        Side::Positive => log_sigmoid(d),
        Side::Negative => {
            if d >= clamp_threshold(m) {
                0.0
            } else {
                // log(m + σ(d)) = log m + log1p(σ(d)/m), accurate as d → -∞.
                (m.ln() + (sigmoid(d) / m).ln_1p()).min(0.0)
            }
        }
    }
}

/// Loss contribution `-(1 - q)^γ q` of one positive relation at distance `d`.
pub fn positive_term(d: f64, gamma: f64) -> f64 {
    let sp = softplus(-d); // -q
    (gamma * sp.ln_1p()).exp() * sp
}

/// Derivative of [`positive_term`] with respect to `d`.
pub fn positive_term_slope(d: f64, gamma: f64) -> f64 {
    let sp = softplus(-d);
    // d/dq [-(1-q)^γ q] = -(1-q)^(γ-1) (1 - (1+γ) q), dq/dd = σ(-d)
    let concentration = ((gamma - 1.0) * sp.ln_1p()).exp();
    -concentration * (1.0 + (1.0 + gamma) * sp) * sigmoid(-d)
}

/// Loss contribution `-q-` of one negative relation at distance `d`.
pub fn negative_term(d: f64, m: f64) -> f64 {
    if d >= clamp_threshold(m) {
        return 0.0;
    }
    -cmm_rescale(d, Side::Negative, m)
}

/// Derivative of [`negative_term`] with respect to `d`; zero when clamped.
pub fn negative_term_slope(d: f64, m: f64) -> f64 {
    if d >= clamp_threshold(m) {
        return 0.0;
    }
    let s = sigmoid(d);
    -s * sigmoid(-d) / (s + m)
}

pub fn cmm_loss(logits: &LogitRow, labels: &LabelSet, cfg: &LossConfig) -> Result<f64> {
    cfg.expect_kind(LossKind::Cmm)?;
    cfg.validate()?;
    cmm_value(logits, labels, cfg.gamma, cfg.m)
}

pub fn cmm_loss_grad(logits: &LogitRow, labels: &LabelSet, cfg: &LossConfig) -> Result<Vec<f64>> {
    cfg.expect_kind(LossKind::Cmm)?;
    cfg.validate()?;
    cmm_grad(logits, labels, cfg.gamma, cfg.m)
}

fn cmm_value(logits: &LogitRow, labels: &LabelSet, gamma: f64, m: f64) -> Result<f64> {
    logits.check_labels(labels)?;
    let th = logits.th();
    let pos: f64 = labels
        .positives()
        .iter()
        .map(|&r| positive_term(logits[r] - th, gamma))
        .sum();
    let neg: f64 = labels
        .negatives()
        .iter()
        .map(|&r| negative_term(th - logits[r], m))
        .sum();
    finite(pos + neg, "cmm loss")
}

fn cmm_grad(logits: &LogitRow, labels: &LabelSet, gamma: f64, m: f64) -> Result<Vec<f64>> {
    logits.check_labels(labels)?;
    let th = logits.th();
    let mut grad = vec![0.0; logits.values().len()];
    for &r in labels.positives() {
        let g = positive_term_slope(logits[r] - th, gamma);
        grad[r] += g;
        grad[TH_INDEX] -= g;
    }
    for &r in labels.negatives() {
        let g = negative_term_slope(th - logits[r], m);
        grad[TH_INDEX] += g;
        grad[r] -= g;
    }
    finite_vec(grad, "cmm gradient")
}

/// One pass sharing the transcendental work between value and slope.
fn cmm_value_and_grad(logits: &LogitRow, labels: &LabelSet, gamma: f64, m: f64) -> Result<(f64, Vec<f64>)> {
    logits.check_labels(labels)?;
    let th = logits.th();
    let clamp = clamp_threshold(m);
    let mut grad = vec![0.0; logits.values().len()];
    let mut value = 0.0;
    for &r in labels.positives() {
        let d = logits[r] - th;
        let sp = softplus(-d);
        let ln1mq = sp.ln_1p();
        value += (gamma * ln1mq).exp() * sp;
        let g = -((gamma - 1.0) * ln1mq).exp() * (1.0 + (1.0 + gamma) * sp) * sigmoid(-d);
        grad[r] += g;
        grad[TH_INDEX] -= g;
    }
    for &r in labels.negatives() {
        let d = th - logits[r];
        if d >= clamp {
            continue;
        }
        let s = sigmoid(d);
        value -= (m.ln() + (s / m).ln_1p()).min(0.0);
        let g = -s * sigmoid(-d) / (s + m);
        grad[TH_INDEX] += g;
        grad[r] -= g;
    }
    Ok((finite(value, "cmm loss")?, finite_vec(grad, "cmm gradient")?))
}

/// Adaptive-thresholding baseline: each positive competes with TH in a
/// two-way softmax, and TH competes with all negatives in one softmax.
pub fn atl_reference_loss(logits: &LogitRow, labels: &LabelSet) -> Result<f64> {
    logits.check_labels(labels)?;
    let th = logits.th();
    let pos: f64 = labels
        .positives()
        .iter()
        .map(|&r| softplus(th - logits[r]))
        .sum();
    let lse = log_sum_exp(std::iter::once(th).chain(labels.negatives().iter().map(|&r| logits[r])));
    finite(pos + lse - th, "atl loss")
}

pub fn atl_reference_grad(logits: &LogitRow, labels: &LabelSet) -> Result<Vec<f64>> {
    logits.check_labels(labels)?;
    let th = logits.th();
    let mut grad = vec![0.0; logits.values().len()];
    for &r in labels.positives() {
        let g = sigmoid(th - logits[r]);
        grad[r] -= g;
        grad[TH_INDEX] += g;
    }
    let lse = log_sum_exp(std::iter::once(th).chain(labels.negatives().iter().map(|&r| logits[r])));
    grad[TH_INDEX] += (th - lse).exp() - 1.0;
    for &r in labels.negatives() {
        grad[r] += (logits[r] - lse).exp();
    }
    finite_vec(grad, "atl gradient")
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numeric(format!("{what} is {v}")))
    }
}

fn finite_vec(v: Vec<f64>, what: &str) -> Result<Vec<f64>> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::Numeric(format!("{what} entry {i} is {}", v[i]))),
        None => Ok(v),
    }
}

/// A loss over one logit row: its value and its gradient with respect to
/// every logit, TH included.
pub trait MarginLoss: Send + Sync {
    fn value(&self, logits: &LogitRow, labels: &LabelSet, cfg: &LossConfig) -> Result<f64>;

    fn gradient(&self, logits: &LogitRow, labels: &LabelSet, cfg: &LossConfig) -> Result<Vec<f64>>;

    fn value_and_gradient(
        &self,
        logits: &LogitRow,
        labels: &LabelSet,
        cfg: &LossConfig,
    ) -> Result<(f64, Vec<f64>)> {
        Ok((self.value(logits, labels, cfg)?, self.gradient(logits, labels, cfg)?))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PlainMargin;

#[derive(Debug, Clone, Copy, Default)]
pub struct Cmm;

#[derive(Debug, Clone, Copy, Default)]
pub struct AtlReference;

impl MarginLoss for PlainMargin {
    fn value(&self, logits: &LogitRow, labels: &LabelSet, _: &LossConfig) -> Result<f64> {
        plain_margin_loss(logits, labels)
    }

    fn gradient(&self, logits: &LogitRow, labels: &LabelSet, _: &LossConfig) -> Result<Vec<f64>> {
        plain_margin_grad(logits, labels)
    }
}

impl MarginLoss for Cmm {
    fn value(&self, logits: &LogitRow, labels: &LabelSet, cfg: &LossConfig) -> Result<f64> {
        cmm_value(logits, labels, cfg.gamma, cfg.m)
    }

    fn gradient(&self, logits: &LogitRow, labels: &LabelSet, cfg: &LossConfig) -> Result<Vec<f64>> {
        cmm_grad(logits, labels, cfg.gamma, cfg.m)
    }

    fn value_and_gradient(
        &self,
        logits: &LogitRow,
        labels: &LabelSet,
        cfg: &LossConfig,
    ) -> Result<(f64, Vec<f64>)> {
        cmm_value_and_grad(logits, labels, cfg.gamma, cfg.m)
    }
}

impl MarginLoss for AtlReference {
    fn value(&self, logits: &LogitRow, labels: &LabelSet, _: &LossConfig) -> Result<f64> {
        atl_reference_loss(logits, labels)
    }

    fn gradient(&self, logits: &LogitRow, labels: &LabelSet, _: &LossConfig) -> Result<Vec<f64>> {
        atl_reference_grad(logits, labels)
    }
}

/// Built-in implementation for `kind`; `None` for [`LossKind::Plugin`].
pub fn builtin(kind: LossKind) -> Option<&'static dyn MarginLoss> {
    match kind {
        LossKind::PlainMargin => Some(&PlainMargin),
        LossKind::Cmm => Some(&Cmm),
        LossKind::AtlReference => Some(&AtlReference),
        LossKind::Plugin => None,
    }
}
