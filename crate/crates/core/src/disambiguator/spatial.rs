//! Collective spatial ranking of candidates with a restarting random walk.

use serde::Serialize;

use crate::gazetteer::Gazetteer;
use crate::geomodel::haversine_km;
use crate::recognizer::CandidateMention;

pub const DEFAULT_TAU_KM: f64 = 50.0;
pub const DEFAULT_ALPHA: f64 = 0.15;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITERS: usize = 100;

/// One node per (mention, candidate) pair with a dense symmetric weight
/// matrix. Candidates of the same mention are never connected.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateGraph {
    pub nodes: Vec<(usize, String)>,
    pub weights: Vec<Vec<f64>>,
    pub restart: Vec<f64>,
}

impl CandidateGraph {
    /// Graph over explicit weights with a uniform restart distribution.
    pub fn from_weights(nodes: Vec<(usize, String)>, weights: Vec<Vec<f64>>) -> Self {
        let n = nodes.len();
        CandidateGraph {
            nodes,
            weights,
            restart: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Builds the graph with `w = exp(-d / tau)` over centroid distances in km.
/// Candidates missing from the gazetteer get no edges.
pub fn build_candidate_graph(mentions: &[CandidateMention], gazetteer: &Gazetteer, tau_km: f64) -> CandidateGraph {
    let nodes: Vec<(usize, String)> = mentions
        .iter()
        .enumerate()
        .flat_map(|(i, m)| m.candidates.iter().map(move |c| (i, c.clone())))
        .collect();
    let centroids: Vec<_> = nodes
        .iter()
        .map(|(_, u)| gazetteer.get(u).map(|f| f.centroid))
        .collect();
    let n = nodes.len();
    let mut weights = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if nodes[i].0 == nodes[j].0 {
                continue;
            }
            if let (Some(a), Some(b)) = (centroids[i], centroids[j]) {
                let w = (-haversine_km(a, b) / tau_km).exp();
                weights[i][j] = w;
                weights[j][i] = w;
            }
        }
    }
    CandidateGraph::from_weights(nodes, weights)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkResult {
    pub scores: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Row-stochastic transitions; rows without out-weight jump by `restart`.
pub fn transition_matrix(graph: &CandidateGraph) -> Vec<Vec<f64>> {
    graph
        .weights
        .iter()
        .map(|row| {
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                row.iter().map(|w| w / s).collect()
            } else {
                graph.restart.clone()
            }
        })
        .collect()
}

/// Power iteration of `p <- alpha r + (1 - alpha) P^T p` until the L1 change
/// drops below `tol`. Without convergence the last iterate is returned with
/// `converged == false`.
pub fn random_walk_rank(graph: &CandidateGraph, alpha: f64, tol: f64, max_iters: usize) -> WalkResult {
    let n = graph.len();
    let p_mat = transition_matrix(graph);
    let mut p = graph.restart.clone();
    for it in 1..=max_iters {
        let mut next: Vec<f64> = graph.restart.iter().map(|r| alpha * r).collect();
        for (i, row) in p_mat.iter().enumerate() {
            let mass = (1.0 - alpha) * p[i];
            for j in 0..n {
                next[j] += mass * row[j];
            }
        }
        let z: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= z);
        let delta: f64 = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
        p = next;
        if delta < tol {
            return WalkResult {
                scores: p,
                iterations: it,
                converged: true,
            };
        }
    }
    WalkResult {
        scores: p,
        iterations: max_iters,
        converged: false,
    }
}

/// Walk scores renormalized within each mention. Index `i` of the result
/// follows `graph.nodes[i]`.
pub fn spatial_scores(graph: &CandidateGraph, walk: &WalkResult) -> Vec<f64> {
    let mentions = graph.nodes.iter().map(|(m, _)| *m).max().map_or(0, |m| m + 1);
    let mut totals = vec![0.0; mentions];
    for ((m, _), s) in graph.nodes.iter().zip(&walk.scores) {
        totals[*m] += s;
    }
    graph
        .nodes
        .iter()
        .zip(&walk.scores)
        .map(|((m, _), s)| if totals[*m] > 0.0 { s / totals[*m] } else { 0.0 })
        .collect()
}
