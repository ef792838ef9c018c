//! Location-type classifiers over context windows: multinomial Naive Bayes
//! and a maximum-entropy (multinomial logistic) model.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use super::window::Window;
use super::DisambiguationError;
use crate::geomodel::LocationType;

pub const NB_ALPHA: f64 = 1.0;
pub const MAXENT_LAMBDA: f64 = 1e-3;
pub const MAXENT_ITERS: usize = 500;
pub const MAXENT_RATE: f64 = 0.1;

/// A labelled training window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowExample {
    pub label: LocationType,
    pub window: Window,
}

/// Probability of each location type, indexed by rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeDistribution(pub [f64; 7]);

impl TypeDistribution {
    pub fn prob(&self, t: LocationType) -> f64 {
        self.0[t.rank() as usize]
    }

    /// Most probable type; ties go to the coarser type.
    pub fn argmax(&self) -> LocationType {
        let mut best = 0;
        for i in 1..7 {
            if self.0[i] > self.0[best] {
                best = i;
            }
        }
        LocationType::ALL[best]
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    fn from_log_scores(scores: [Option<f64>; 7]) -> Self {
        let max = scores.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut p = [0.0; 7];
        for (out, s) in p.iter_mut().zip(scores) {
            if let Some(s) = s {
                *out = (s - max).exp();
            }
        }
        let z: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= z);
        TypeDistribution(p)
    }
}

impl Serialize for TypeDistribution {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(7))?;
        for t in LocationType::ALL {
            m.serialize_entry(t.name(), &self.prob(t))?;
        }
        m.end()
    }
}

/// Which classifier family to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TypeVariant {
    NaiveBayes,
    MaxEnt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    pub alpha: f64,
    pub vocab: Vec<String>,
    /// Log prior per class, indexed by rank.
    pub log_priors: [f64; 7],
    /// `log_likelihoods[class][token]`, parallel to `vocab`.
    pub log_likelihoods: Vec<Vec<f64>>,
    /// Per-class log probability of a token never seen with that class.
    pub log_unseen: [f64; 7],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxEnt {
    pub vocab: Vec<String>,
    /// Classes present at training time, ascending rank.
    pub classes: Vec<LocationType>,
    /// `weights[k][v]` for class `classes[k]`.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum TypeModel {
    NaiveBayes(NaiveBayes),
    MaxEnt(MaxEnt),
}

/// Training-time options.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeTrainConfig {
    /// Classes that must each have at least one example.
    pub required: BTreeSet<LocationType>,
    pub alpha: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub rate: f64,
}

impl Default for TypeTrainConfig {
    fn default() -> Self {
        TypeTrainConfig {
            required: LocationType::ALL.into_iter().collect(),
            alpha: NB_ALPHA,
            lambda: MAXENT_LAMBDA,
            iterations: MAXENT_ITERS,
            rate: MAXENT_RATE,
        }
    }
}

fn vocabulary(examples: &[WindowExample]) -> Vec<String> {
    let set: BTreeSet<&str> = examples.iter().flat_map(|e| e.window.tokens()).collect();
    set.into_iter().map(str::to_string).collect()
}

fn check_classes(examples: &[WindowExample], required: &BTreeSet<LocationType>) -> Result<(), DisambiguationError> {
    let present: BTreeSet<LocationType> = examples.iter().map(|e| e.label).collect();
    let missing: Vec<LocationType> = required.difference(&present).copied().collect();
    if !missing.is_empty() || present.is_empty() {
        return Err(DisambiguationError::MissingClass(missing));
    }
    Ok(())
}

/// Sparse bag-of-words: sorted (vocab index, count).
fn featurize(vocab: &[String], window: &Window) -> Vec<(usize, f64)> {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for t in window.tokens() {
        if let Ok(i) = vocab.binary_search_by(|v| v.as_str().cmp(t)) {
            *counts.entry(i).or_default() += 1.0;
        }
    }
    counts.into_iter().collect()
}

pub fn train_type(
    examples: &[WindowExample],
    variant: TypeVariant,
    config: &TypeTrainConfig,
) -> Result<TypeModel, DisambiguationError> {
    check_classes(examples, &config.required)?;
    Ok(match variant {
        TypeVariant::NaiveBayes => TypeModel::NaiveBayes(train_nb(examples, config.alpha)),
        TypeVariant::MaxEnt => TypeModel::MaxEnt(train_maxent(examples, config)),
    })
}

fn train_nb(examples: &[WindowExample], alpha: f64) -> NaiveBayes {
    let vocab = vocabulary(examples);
    let v = vocab.len() as f64;
    let mut doc_counts = [0.0f64; 7];
    let mut token_counts = vec![vec![0.0f64; vocab.len()]; 7];
    for e in examples {
        let c = e.label.rank() as usize;
        doc_counts[c] += 1.0;
        for (i, n) in featurize(&vocab, &e.window) {
            token_counts[c][i] += n;
        }
    }
    let n = examples.len() as f64;
    let mut log_priors = [0.0; 7];
    let mut log_unseen = [0.0; 7];
    let mut log_likelihoods = Vec::with_capacity(7);
    for c in 0..7 {
        log_priors[c] = ((doc_counts[c] + alpha) / (n + 7.0 * alpha)).ln();
        let total: f64 = token_counts[c].iter().sum();
        let denom = total + alpha * v;
        log_unseen[c] = (alpha / denom).ln();
        log_likelihoods.push(token_counts[c].iter().map(|k| ((k + alpha) / denom).ln()).collect());
    }
    NaiveBayes {
        alpha,
        vocab,
        log_priors,
        log_likelihoods,
        log_unseen,
    }
}

impl NaiveBayes {
    pub fn likelihood(&self, class: LocationType, token: &str) -> Option<f64> {
        let i = self.vocab.binary_search_by(|v| v.as_str().cmp(token)).ok()?;
        Some(self.log_likelihoods[class.rank() as usize][i].exp())
    }

    pub fn classify(&self, window: &Window) -> TypeDistribution {
        let feats = featurize(&self.vocab, window);
        let mut scores = [None; 7];
        for (c, s) in scores.iter_mut().enumerate() {
            let ll: f64 = feats.iter().map(|&(i, n)| n * self.log_likelihoods[c][i]).sum();
            *s = Some(self.log_priors[c] + ll);
        }
        TypeDistribution::from_log_scores(scores)
    }
}

/// Regularized multinomial logistic loss over a fixed data set.
///
/// Parameters are flattened class-major: for class `k`, `dim` weights
/// followed by one bias. The L2 penalty `lambda/2 * |w|^2` skips biases.
#[derive(Debug, Clone)]
pub struct MaxEntObjective {
    pub dim: usize,
    pub classes: usize,
    pub lambda: f64,
    rows: Vec<(Vec<(usize, f64)>, usize)>,
}

impl MaxEntObjective {
    /// `rows` holds sparse features and a class index in `0..classes`.
    pub fn new(dim: usize, classes: usize, lambda: f64, rows: Vec<(Vec<(usize, f64)>, usize)>) -> Self {
        MaxEntObjective {
            dim,
            classes,
            lambda,
            rows,
        }
    }

    pub fn param_len(&self) -> usize {
        self.classes * (self.dim + 1)
    }

    fn logits(&self, params: &[f64], x: &[(usize, f64)]) -> Vec<f64> {
        let stride = self.dim + 1;
        (0..self.classes)
            .map(|k| {
                let w = &params[k * stride..(k + 1) * stride];
                w[self.dim] + x.iter().map(|&(i, v)| w[i] * v).sum::<f64>()
            })
            .collect()
    }

    fn softmax(z: &[f64]) -> Vec<f64> {
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|v| v / s).collect()
    }

    fn penalty(&self, params: &[f64]) -> f64 {
        let stride = self.dim + 1;
        params
            .iter()
            .enumerate()
            .filter(|(j, _)| j % stride != self.dim)
            .map(|(_, w)| w * w)
            .sum::<f64>()
            * self.lambda
            / 2.0
    }

    pub fn loss(&self, params: &[f64]) -> f64 {
        let n = self.rows.len().max(1) as f64;
        let nll: f64 = self
            .rows
            .iter()
            .map(|(x, y)| {
                let z = self.logits(params, x);
                let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
                lse - z[*y]
            })
            .sum();
        nll / n + self.penalty(params)
    }

    pub fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let stride = self.dim + 1;
        let n = self.rows.len().max(1) as f64;
        let mut g = vec![0.0; self.param_len()];
        for (x, y) in &self.rows {
            let p = Self::softmax(&self.logits(params, x));
            for k in 0..self.classes {
                let d = (p[k] - if k == *y { 1.0 } else { 0.0 }) / n;
                let gk = &mut g[k * stride..(k + 1) * stride];
                gk[self.dim] += d;
                for &(i, v) in x {
                    gk[i] += d * v;
                }
            }
        }
        for (j, gj) in g.iter_mut().enumerate() {
            if j % stride != self.dim {
                *gj += self.lambda * params[j];
            }
        }
        g
    }
}

/// Result of batch gradient descent, including the loss after each
/// accepted step.
#[derive(Debug, Clone)]
pub struct DescentTrace {
    pub params: Vec<f64>,
    pub losses: Vec<f64>,
}

/// Batch gradient descent. A step that would raise the loss is retried at
/// half the rate, so the recorded losses never increase.
pub fn gradient_descent(obj: &MaxEntObjective, iterations: usize, rate: f64) -> DescentTrace {
    let mut params = vec![0.0; obj.param_len()];
    let mut loss = obj.loss(&params);
    let mut losses = vec![loss];
    let mut rate = rate;
    for _ in 0..iterations {
        let g = obj.gradient(&params);
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = params.iter().zip(&g).map(|(p, gi)| p - rate * gi).collect();
            let l = obj.loss(&cand);
            if l <= loss {
                params = cand;
                loss = l;
                accepted = true;
                break;
            }
            rate /= 2.0;
        }
        if !accepted {
            break;
        }
        losses.push(loss);
    }
    DescentTrace { params, losses }
}

fn train_maxent(examples: &[WindowExample], config: &TypeTrainConfig) -> MaxEnt {
    let vocab = vocabulary(examples);
    let classes: Vec<LocationType> = examples
        .iter()
        .map(|e| e.label)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let rows = examples
        .iter()
        .map(|e| {
            let y = classes.binary_search(&e.label).expect("label collected above");
            (featurize(&vocab, &e.window), y)
        })
        .collect();
    let obj = MaxEntObjective::new(vocab.len(), classes.len(), config.lambda, rows);
    let trace = gradient_descent(&obj, config.iterations, config.rate);
    let stride = vocab.len() + 1;
    let (weights, bias) = trace
        .params
        .chunks(stride)
        .map(|c| (c[..vocab.len()].to_vec(), c[vocab.len()]))
        .unzip();
    MaxEnt {
        vocab,
        classes,
        weights,
        bias,
    }
}

impl MaxEnt {
    /// Classes unseen at training time get probability zero.
    pub fn classify(&self, window: &Window) -> TypeDistribution {
        let feats = featurize(&self.vocab, window);
        let mut scores = [None; 7];
        for (k, c) in self.classes.iter().enumerate() {
            let z = self.bias[k] + feats.iter().map(|&(i, v)| self.weights[k][i] * v).sum::<f64>();
            scores[c.rank() as usize] = Some(z);
        }
        TypeDistribution::from_log_scores(scores)
    }
}

impl TypeModel {
    pub fn classify(&self, window: &Window) -> TypeDistribution {
        match self {
            TypeModel::NaiveBayes(m) => m.classify(window),
            TypeModel::MaxEnt(m) => m.classify(window),
        }
    }

    pub fn variant(&self) -> TypeVariant {
        match self {
            TypeModel::NaiveBayes(_) => TypeVariant::NaiveBayes,
            TypeModel::MaxEnt(_) => TypeVariant::MaxEnt,
        }
    }
}

#[derive(Deserialize)]
struct TypeRow {
    label: String,
    before: String,
    after: String,
}

/// Reads `label,before,after` CSV; the window columns are space separated.
pub fn read_type_csv<R: Read>(r: R) -> Result<Vec<WindowExample>, DisambiguationError> {
    let mut out = Vec::new();
    for (i, row) in csv::Reader::from_reader(r).deserialize::<TypeRow>().enumerate() {
        let bad = |detail: String| DisambiguationError::Format {
            what: "type training CSV",
            line: i + 2,
            detail,
        };
        let row = row.map_err(|e| bad(e.to_string()))?;
        let label = row.label.parse().map_err(bad)?;
        let split = |s: &str| s.split_whitespace().map(str::to_string).collect();
        out.push(WindowExample {
            label,
            window: Window {
                before: split(&row.before),
                after: split(&row.after),
            },
        });
    }
    Ok(out)
}
