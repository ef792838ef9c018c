//! Toponym resolution: NIL filtering, location-type classification,
//! spatial ranking, and the final choice of one feature per mention.

pub mod freq;
pub mod knowledge;
pub mod nil;
pub mod spatial;
pub mod typeclass;
pub mod window;

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::docindex::Annotation;
use crate::gazetteer::Gazetteer;
use crate::geomodel::LocationType;
use crate::recognizer::{CandidateMention, Recognizer, RecognizerError};

pub use freq::{build_freq_table, FreqTable};
pub use knowledge::{KbEntry, KnowledgeProvider, NoKnowledge, TsvKnowledge};
pub use nil::{nil_features, nil_score, train_nil, LinearModel, NilFeatureVector, NilLabel, NilTrainConfig};
pub use spatial::{build_candidate_graph, random_walk_rank, spatial_scores, CandidateGraph, WalkResult};
pub use typeclass::{train_type, TypeDistribution, TypeModel, TypeTrainConfig, TypeVariant, WindowExample};
pub use window::{extract_window, Window};

#[derive(Debug, Error)]
pub enum DisambiguationError {
    #[error("training data holds only one label")]
    DegenerateLabels,
    #[error("no training examples for classes {0:?}")]
    MissingClass(Vec<LocationType>),
    #[error("{what}, line {line}: {detail}")]
    Format {
        what: &'static str,
        line: usize,
        detail: String,
    },
    #[error("model file {0} not found")]
    MissingModel(PathBuf),
    #[error(transparent)]
    Recognizer(#[from] RecognizerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub const NIL_MODEL_FILE: &str = "nil.json";
pub const FREQ_FILE: &str = "freq.tsv";
pub const KB_FILE: &str = "kb.tsv";
pub const TYPE_MODEL_FILE: &str = "type.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeoRefConfig {
    pub nil_threshold: f64,
    pub lexical_weight: f64,
    pub tau_km: f64,
    pub alpha: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for GeoRefConfig {
    fn default() -> Self {
        GeoRefConfig {
            nil_threshold: 0.5,
            lexical_weight: 0.5,
            tau_km: spatial::DEFAULT_TAU_KM,
            alpha: spatial::DEFAULT_ALPHA,
            tol: spatial::DEFAULT_TOL,
            max_iters: spatial::DEFAULT_MAX_ITERS,
        }
    }
}

/// Trained models plus the frequency table and knowledge provider.
pub struct Models {
    pub nil: LinearModel,
    pub types: TypeModel,
    pub freq: FreqTable,
    pub kb: Box<dyn KnowledgeProvider>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, DisambiguationError> {
    let f = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => DisambiguationError::MissingModel(path.to_path_buf()),
        _ => e.into(),
    })?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

impl Models {
    /// Loads `nil.json`, `type.json`, `freq.tsv` and, if present, `kb.tsv`
    /// from a models directory.
    pub fn load(dir: &Path) -> Result<Self, DisambiguationError> {
        let nil = read_json(&dir.join(NIL_MODEL_FILE))?;
        let types = read_json(&dir.join(TYPE_MODEL_FILE))?;
        let freq_path = dir.join(FREQ_FILE);
        if !freq_path.exists() {
            return Err(DisambiguationError::MissingModel(freq_path));
        }
        let freq = FreqTable::read_tsv(BufReader::new(File::open(freq_path)?))?;
        let kb_path = dir.join(KB_FILE);
        let kb: Box<dyn KnowledgeProvider> = if kb_path.exists() {
            Box::new(TsvKnowledge::read(BufReader::new(File::open(kb_path)?))?)
        } else {
            Box::new(NoKnowledge)
        };
        Ok(Models { nil, types, freq, kb })
    }
}

/// Scores of one candidate feature of a mention.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateScore {
    pub uri: String,
    pub loc_type: LocationType,
    pub lexical: f64,
    pub spatial: f64,
    pub combined: f64,
}

/// Everything computed for one detected mention.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MentionTrace {
    #[serde(flatten)]
    pub mention: CandidateMention,
    pub nil_score: f64,
    pub is_nil: bool,
    pub window: Option<Window>,
    pub type_probs: Option<TypeDistribution>,
    pub scores: Vec<CandidateScore>,
    pub chosen: Option<String>,
    pub confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkSummary {
    pub nodes: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Full stage-by-stage output of geo-referencing one text.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeoRefTrace {
    pub mentions: Vec<MentionTrace>,
    pub walk: Option<WalkSummary>,
    pub annotations: Vec<Annotation>,
}

/// Picks one candidate per non-NIL mention and fills `combined`, `chosen`
/// and `confidence`. Ties go to the lexicographically smaller URI.
pub fn resolve(mentions: &mut [MentionTrace], gazetteer: &Gazetteer, lexical_weight: f64) -> Vec<Annotation> {
    let mut out = Vec::new();
    for m in mentions.iter_mut() {
        for c in &mut m.scores {
            c.combined = lexical_weight * c.lexical + (1.0 - lexical_weight) * c.spatial;
        }
        if m.is_nil {
            continue;
        }
        let best = m.scores.iter().reduce(|a, b| {
            if b.combined > a.combined || (b.combined == a.combined && b.uri < a.uri) {
                b
            } else {
                a
            }
        });
        let Some(best) = best else { continue };
        let Some(feature) = gazetteer.get(&best.uri) else {
            continue;
        };
        let confidence = (m.nil_score * best.combined).clamp(0.0, 1.0);
        m.chosen = Some(best.uri.clone());
        m.confidence = Some(confidence);
        out.push(Annotation {
            feature_uri: best.uri.clone(),
            span: m.mention.span,
            confidence,
            bbox: feature.bbox,
        });
    }
    out
}

/// The assembled pipeline over one gazetteer and model set.
pub struct GeoReferencer {
    gazetteer: Arc<Gazetteer>,
    recognizer: Recognizer,
    models: Models,
    config: GeoRefConfig,
}

impl GeoReferencer {
    pub fn new(gazetteer: Arc<Gazetteer>, models: Models, config: GeoRefConfig) -> Result<Self, DisambiguationError> {
        let recognizer = Recognizer::new(&gazetteer)?;
        Ok(GeoReferencer {
            gazetteer,
            recognizer,
            models,
            config,
        })
    }

    pub fn gazetteer(&self) -> &Gazetteer {
        &self.gazetteer
    }

    pub fn config(&self) -> &GeoRefConfig {
        &self.config
    }

    pub fn georef(&self, text: &str) -> GeoRefTrace {
        let g = &*self.gazetteer;
        let detected = self.recognizer.detect(text, g);
        let mut traces: Vec<MentionTrace> = detected
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let score = nil_score(m, &self.models.nil, g, &self.models.freq, &*self.models.kb);
                let is_nil = score < self.config.nil_threshold;
                let window = (!is_nil).then(|| extract_window(text, &detected, i, g));
                let type_probs = window.as_ref().map(|w| self.models.types.classify(w));
                MentionTrace {
                    mention: m.clone(),
                    nil_score: score,
                    is_nil,
                    window,
                    type_probs,
                    scores: Vec::new(),
                    chosen: None,
                    confidence: None,
                }
            })
            .collect();

        let live: Vec<usize> = (0..traces.len()).filter(|&i| !traces[i].is_nil).collect();
        let walk = if live.is_empty() {
            None
        } else {
            let mentions: Vec<CandidateMention> = live.iter().map(|&i| detected[i].clone()).collect();
            let graph = build_candidate_graph(&mentions, g, self.config.tau_km);
            let result = random_walk_rank(&graph, self.config.alpha, self.config.tol, self.config.max_iters);
            let spatial = spatial_scores(&graph, &result);
            for ((local, uri), s) in graph.nodes.iter().zip(spatial) {
                let t = &mut traces[live[*local]];
                let loc_type = g
                    .get(uri)
                    .map(|f| f.loc_type)
                    .or_else(|| LocationType::from_uri(uri))
                    .unwrap_or(LocationType::Building);
                let lexical = t.type_probs.as_ref().map_or(0.0, |d| d.prob(loc_type));
                t.scores.push(CandidateScore {
                    uri: uri.clone(),
                    loc_type,
                    lexical,
                    spatial: s,
                    combined: 0.0,
                });
            }
            Some(WalkSummary {
                nodes: graph.len(),
                iterations: result.iterations,
                converged: result.converged,
            })
        };

        let annotations = resolve(&mut traces, g, self.config.lexical_weight);
        GeoRefTrace {
            mentions: traces,
            walk,
            annotations,
        }
    }
}
