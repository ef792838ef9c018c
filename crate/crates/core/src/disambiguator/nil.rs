//! NIL detection: a linear max-margin classifier deciding whether a
//! detected name refers to a place at all.

use std::io::Read;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::freq::FreqTable;
use super::knowledge::KnowledgeProvider;
use super::DisambiguationError;
use crate::gazetteer::Gazetteer;
use crate::recognizer::CandidateMention;
use crate::text::tokenize;

pub const NIL_DIM: usize = 8;
pub const NIL_LAMBDA: f64 = 1e-2;
pub const NIL_EPOCHS: usize = 200;
pub const DEFAULT_SEED: u64 = 42;

pub const FEATURE_NAMES: [&str; NIL_DIM] = [
    "log_freq",
    "log_candidates",
    "min_rank",
    "char_len",
    "token_count",
    "capitalized",
    "kb_page",
    "kb_ambiguous",
];

/// Unscaled NIL evidence for one mention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NilFeatureVector(pub [f64; NIL_DIM]);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NilLabel {
    Place,
    Nil,
}

impl NilLabel {
    fn sign(self) -> f64 {
        match self {
            NilLabel::Place => 1.0,
            NilLabel::Nil => -1.0,
        }
    }
}

pub fn nil_features(
    mention: &CandidateMention,
    gazetteer: &Gazetteer,
    freq: &FreqTable,
    kb: &dyn KnowledgeProvider,
) -> NilFeatureVector {
    let min_rank = mention
        .candidates
        .iter()
        .filter_map(|u| gazetteer.get(u))
        .map(|f| f.loc_type.rank())
        .min()
        .unwrap_or(0);
    let entry = kb.entry(&mention.matched_name);
    let capitalized = mention.surface.chars().next().is_some_and(char::is_uppercase);
    NilFeatureVector([
        (freq.get(&mention.matched_name) as f64).ln_1p(),
        (mention.candidates.len() as f64).ln_1p(),
        f64::from(min_rank),
        mention.surface.chars().count() as f64,
        tokenize(&mention.surface).len() as f64,
        f64::from(u8::from(capitalized)),
        f64::from(u8::from(entry.has_page)),
        f64::from(u8::from(entry.is_ambiguous)),
    ])
}

/// Train-set min/max rescaling to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: [f64; NIL_DIM],
    pub max: [f64; NIL_DIM],
}

impl MinMaxScaler {
    pub fn fit(xs: &[NilFeatureVector]) -> Self {
        let mut min = [f64::INFINITY; NIL_DIM];
        let mut max = [f64::NEG_INFINITY; NIL_DIM];
        for x in xs {
            for j in 0..NIL_DIM {
                min[j] = min[j].min(x.0[j]);
                max[j] = max[j].max(x.0[j]);
            }
        }
        MinMaxScaler { min, max }
    }

    /// Constant columns map to 0; values outside the training range clamp.
    pub fn transform(&self, x: &NilFeatureVector) -> [f64; NIL_DIM] {
        std::array::from_fn(|j| {
            let span = self.max[j] - self.min[j];
            if span > 0.0 {
                ((x.0[j] - self.min[j]) / span).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: [f64; NIL_DIM],
    pub bias: f64,
    pub scaler: MinMaxScaler,
}

impl LinearModel {
    pub fn margin(&self, x: &NilFeatureVector) -> f64 {
        let z = self.scaler.transform(x);
        self.bias + self.weights.iter().zip(z).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn score(&self, x: &NilFeatureVector) -> f64 {
        sigmoid(self.margin(x))
    }

    pub fn predict(&self, x: &NilFeatureVector) -> NilLabel {
        if self.margin(x) >= 0.0 {
            NilLabel::Place
        } else {
            NilLabel::Nil
        }
    }
}

pub fn sigmoid(m: f64) -> f64 {
    if m >= 0.0 {
        1.0 / (1.0 + (-m).exp())
    } else {
        let e = m.exp();
        e / (1.0 + e)
    }
}

/// Probability-like score that the mention refers to a gazetteer place.
pub fn nil_score(
    mention: &CandidateMention,
    model: &LinearModel,
    gazetteer: &Gazetteer,
    freq: &FreqTable,
    kb: &dyn KnowledgeProvider,
) -> f64 {
    model.score(&nil_features(mention, gazetteer, freq, kb))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NilTrainConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for NilTrainConfig {
    fn default() -> Self {
        NilTrainConfig {
            lambda: NIL_LAMBDA,
            epochs: NIL_EPOCHS,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NilTrainReport {
    pub model: LinearModel,
    /// Running mean of the per-step hinge losses, sampled after each epoch.
    pub epoch_losses: Vec<f64>,
}

fn hinge(w: &[f64; NIL_DIM + 1], x: &[f64; NIL_DIM + 1], y: f64) -> f64 {
    let m: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum();
    (1.0 - y * m).max(0.0)
}

/// Stochastic subgradient descent on the L2-regularized hinge loss with
/// step size `1/(lambda t)`. The bias is an extra constant feature and is
/// regularized along with the weights.
pub fn train_nil(
    examples: &[(NilFeatureVector, NilLabel)],
    config: &NilTrainConfig,
) -> Result<NilTrainReport, DisambiguationError> {
    let has = |l| examples.iter().any(|(_, y)| *y == l);
    if !has(NilLabel::Place) || !has(NilLabel::Nil) {
        return Err(DisambiguationError::DegenerateLabels);
    }
    let xs: Vec<NilFeatureVector> = examples.iter().map(|(x, _)| *x).collect();
    let scaler = MinMaxScaler::fit(&xs);
    let data: Vec<([f64; NIL_DIM + 1], f64)> = examples
        .iter()
        .map(|(x, y)| {
            let mut a = [1.0; NIL_DIM + 1];
            a[..NIL_DIM].copy_from_slice(&scaler.transform(x));
            (a, y.sign())
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut w = [0.0; NIL_DIM + 1];
    let mut t = 0usize;
    let mut loss_sum = 0.0;
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let (x, y) = &data[i];
            let l = hinge(&w, x, *y);
            loss_sum += l;
            let eta = 1.0 / (config.lambda * t as f64);
            let shrink = 1.0 - eta * config.lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if l > 0.0 {
                w.iter_mut().zip(x).for_each(|(v, xi)| *v += eta * y * xi);
            }
        }
        epoch_losses.push(loss_sum / t as f64);
    }
    let mut weights = [0.0; NIL_DIM];
    weights.copy_from_slice(&w[..NIL_DIM]);
    Ok(NilTrainReport {
        model: LinearModel {
            weights,
            bias: w[NIL_DIM],
            scaler,
        },
        epoch_losses,
    })
}

pub fn training_accuracy(model: &LinearModel, examples: &[(NilFeatureVector, NilLabel)]) -> f64 {
    let ok = examples.iter().filter(|(x, y)| model.predict(x) == *y).count();
    ok as f64 / examples.len().max(1) as f64
}

/// Reads the eight feature columns (in [`FEATURE_NAMES`] order) followed by
/// a `label` column of `place` or `nil`.
pub fn read_nil_csv<R: Read>(r: R) -> Result<Vec<(NilFeatureVector, NilLabel)>, DisambiguationError> {
    let mut reader = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let bad = |detail: String| DisambiguationError::Format {
            what: "NIL training CSV",
            line: i + 2,
            detail,
        };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != NIL_DIM + 1 {
            return Err(bad(format!("expected {} columns, found {}", NIL_DIM + 1, rec.len())));
        }
        let mut x = [0.0; NIL_DIM];
        for (j, v) in x.iter_mut().enumerate() {
            *v = rec[j]
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("column {} is not a finite number", FEATURE_NAMES[j])))?;
        }
        let label = match rec[NIL_DIM].trim() {
            "place" => NilLabel::Place,
            "nil" => NilLabel::Nil,
            other => return Err(bad(format!("unknown label {other:?}"))),
        };
        out.push((NilFeatureVector(x), label));
    }
    Ok(out)
}
