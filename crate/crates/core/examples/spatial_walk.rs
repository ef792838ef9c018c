//! Rank ambiguous candidates by their spatial coherence with the other
//! places in the same text.

use geolinker::disambiguator::spatial::{DEFAULT_ALPHA, DEFAULT_MAX_ITERS, DEFAULT_TAU_KM, DEFAULT_TOL};
use geolinker::disambiguator::{build_candidate_graph, random_walk_rank, spatial_scores};
use geolinker::gazetteer::Gazetteer;
use geolinker::osm_ingest::{denormalize, parse_osm_file, RuleTable};
use geolinker::recognizer::Recognizer;

pub fn run_example() -> anyhow::Result<()> {
    let osm = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy/toy.osm");
    let g = Gazetteer::build(&denormalize(&parse_osm_file(&osm)?, &RuleTable::default()));
    let text = "The Kerkstraat near the Domtoren, in Utrecht.";
    let mentions = Recognizer::new(&g)?.detect(text, &g);

    let graph = build_candidate_graph(&mentions, &g, DEFAULT_TAU_KM);
    let walk = random_walk_rank(&graph, DEFAULT_ALPHA, DEFAULT_TOL, DEFAULT_MAX_ITERS);
    println!(
        "{} nodes, {} iterations, converged: {}",
        graph.len(),
        walk.iterations,
        walk.converged
    );
    let spatial = spatial_scores(&graph, &walk);
    for (((m, uri), p), s) in graph.nodes.iter().zip(&walk.scores).zip(spatial) {
        println!(
            "  {:<11} {:<31} walk {:.4}  spatial {:.4}",
            mentions[*m].surface, uri, p, s
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
