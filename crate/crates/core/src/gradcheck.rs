//! Central finite differences and a randomized harness that compares them
//! with the analytic loss gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{self, clamp_threshold, LossConfig, LossKind, GAMMA_GRID, M_GRID};
use crate::schema::{LabelSet, LogitRow};

pub const REPORT_FORMAT: &str = "cmm-gradcheck/v1";

/// Central-difference estimate of the gradient of `loss` at `logits`, one
/// coordinate at a time, TH included.
pub fn finite_difference<F>(
    loss: F,
    logits: &LogitRow,
    labels: &LabelSet,
    cfg: &LossConfig,
    step: f64,
) -> Result<Vec<f64>>
where
    F: Fn(&LogitRow, &LabelSet, &LossConfig) -> Result<f64>,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::config("step", format!("must be positive, got {step}")));
    }
    let base = logits.values();
    let mut grad = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let eval = |delta: f64| -> Result<f64> {
            let mut v = base.to_vec();
            v[i] += delta;
            let row = LogitRow::new(v)
                .map_err(|_| Error::Numeric(format!("coordinate {i}: perturbed logit is not finite")))?;
            let value = loss(&row, labels, cfg)
                .map_err(|e| Error::Numeric(format!("coordinate {i}: {e}")))?;
            if !value.is_finite() {
                return Err(Error::Numeric(format!("coordinate {i}: loss evaluated to {value}")));
            }
            Ok(value)
        };
        grad.push((eval(step)? - eval(-step)?) / (2.0 * step));
    }
    Ok(grad)
}

/// `|a - n| / max(1, |a|, |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1.0f64.max(analytic.abs()).max(numeric.abs())
}

/// Largest [`relative_error`] over paired vectors.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}

/// Sampling ranges for randomized trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradCheckRanges {
    pub logit_min: f64,
    pub logit_max: f64,
    pub min_relations: usize,
    pub max_relations: usize,
    /// Probability that a trial has no positive relations at all.
    pub empty_positive_rate: f64,
    /// Per-relation positive probability otherwise.
    pub positive_rate: f64,
    pub gammas: Vec<f64>,
    pub ms: Vec<f64>,
    pub kinds: Vec<LossKind>,
}

impl Default for GradCheckRanges {
    fn default() -> Self {
        Self {
            logit_min: -8.0,
            logit_max: 8.0,
            min_relations: 1,
            max_relations: 12,
            empty_positive_rate: 0.25,
            positive_rate: 0.3,
            gammas: GAMMA_GRID.to_vec(),
            ms: M_GRID.to_vec(),
            kinds: vec![LossKind::Cmm],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradCheckConfig {
    pub trials: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub step: f64,
    pub ranges: GradCheckRanges,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            trials: 1000,
            tolerance: 1e-5,
            seed: 0,
            step: 1e-5,
            ranges: GradCheckRanges::default(),
        }
    }
}

impl GradCheckConfig {
    pub fn validate(&self) -> Result<()> {
        let r = &self.ranges;
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::config("tolerance", "must be >= 0"));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::config("step", "must be positive"));
        }
        if !(r.logit_min < r.logit_max) || !r.logit_min.is_finite() || !r.logit_max.is_finite() {
            return Err(Error::config("ranges.logit_min", "need finite logit_min < logit_max"));
        }
        if r.min_relations == 0 || r.min_relations > r.max_relations {
            return Err(Error::config("ranges.min_relations", "need 1 <= min_relations <= max_relations"));
        }
        for (field, p) in [
            ("ranges.empty_positive_rate", r.empty_positive_rate),
            ("ranges.positive_rate", r.positive_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(field, "must lie in [0, 1]"));
            }
        }
        if r.gammas.is_empty() || r.ms.is_empty() || r.kinds.is_empty() {
            return Err(Error::config("ranges", "gammas, ms and kinds must be nonempty"));
        }
        for &kind in &r.kinds {
            if loss::builtin(kind).is_none() {
                return Err(Error::config("ranges.kinds", format!("{} has no built-in gradient", kind.as_str())));
            }
        }
        for &g in &r.gammas {
            LossConfig::cmm(g, r.ms[0]).validate()?;
        }
        for &m in &r.ms {
            LossConfig::cmm(r.gammas[0], m).validate()?;
        }
        Ok(())
    }
}

/// A trial whose analytic and numeric gradients disagree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckFailure {
    pub seed: u64,
    pub trial: usize,
    pub logits: Vec<f64>,
    pub positives: Vec<usize>,
    pub relation_count: usize,
    pub loss: LossConfig,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub format: String,
    pub trials: usize,
    /// Trials actually compared.
    pub compared: usize,
    /// Trials skipped because a negative sat within `10 * step` of its clamp point.
    pub excluded: usize,
    pub tolerance: f64,
    pub max_rel_error: f64,
    pub failures: Vec<GradCheckFailure>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// The random point evaluated by trial `trial` of a run seeded with `seed`.
pub fn sample_trial(
    ranges: &GradCheckRanges,
    seed: u64,
    trial: usize,
) -> Result<(LogitRow, LabelSet, LossConfig)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let relations = rng.random_range(ranges.min_relations..=ranges.max_relations);
    let logits: Vec<f64> = (0..=relations)
        .map(|_| rng.random_range(ranges.logit_min..=ranges.logit_max))
        .collect();
    let positives: Vec<usize> = if rng.random_bool(ranges.empty_positive_rate) {
        Vec::new()
    } else {
        (1..=relations)
            .filter(|_| rng.random_bool(ranges.positive_rate))
            .collect()
    };
    let kind = ranges.kinds[rng.random_range(0..ranges.kinds.len())];
    let gamma = ranges.gammas[rng.random_range(0..ranges.gammas.len())];
    let m = ranges.ms[rng.random_range(0..ranges.ms.len())];
    let cfg = LossConfig {
        kind,
        gamma,
        m,
        ..LossConfig::default()
    };
    Ok((LogitRow::new(logits)?, LabelSet::new(positives, relations)?, cfg))
}

fn near_clamp(logits: &LogitRow, labels: &LabelSet, cfg: &LossConfig, band: f64) -> bool {
    if cfg.kind != LossKind::Cmm {
        return false;
    }
    let boundary = clamp_threshold(cfg.m);
    labels
        .negatives()
        .iter()
        .any(|&r| ((logits.th() - logits[r]) - boundary).abs() <= band)
}

enum Outcome {
    Excluded,
    Compared(f64, Option<GradCheckFailure>),
}

/// Runs `cfg.trials` randomized comparisons. Deterministic in `cfg`.
pub fn check_gradients(cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    cfg.validate()?;
    let outcomes = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<Outcome> {
            let (logits, labels, loss_cfg) = sample_trial(&cfg.ranges, cfg.seed, trial)?;
            if near_clamp(&logits, &labels, &loss_cfg, 10.0 * cfg.step) {
                return Ok(Outcome::Excluded);
            }
            let loss = loss::builtin(loss_cfg.kind).expect("validated kind");
            let analytic = loss.gradient(&logits, &labels, &loss_cfg)?;
            let numeric = finite_difference(|t, l, c| loss.value(t, l, c), &logits, &labels, &loss_cfg, cfg.step)?;
            let err = max_relative_error(&analytic, &numeric);
            let failure = (err > cfg.tolerance).then(|| GradCheckFailure {
                seed: cfg.seed,
                trial,
                logits: logits.values().to_vec(),
                positives: labels.positives().iter().copied().collect(),
                relation_count: labels.relation_count(),
                loss: loss_cfg,
                analytic,
                numeric,
                rel_error: err,
            });
            Ok(Outcome::Compared(err, failure))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = GradCheckReport {
        format: REPORT_FORMAT.to_string(),
        trials: cfg.trials,
        compared: 0,
        excluded: 0,
        tolerance: cfg.tolerance,
        max_rel_error: 0.0,
        failures: Vec::new(),
    };
    for outcome in outcomes {
        match outcome {
            Outcome::Excluded => report.excluded += 1,
            Outcome::Compared(err, failure) => {
                report.compared += 1;
                report.max_rel_error = report.max_rel_error.max(err);
                report.failures.extend(failure);
            }
        }
    }
    Ok(report)
}
