//! Find gazetteer names in free text with the Aho-Corasick recognizer.

use geolinker::gazetteer::Gazetteer;
use geolinker::osm_ingest::{denormalize, parse_osm_file, RuleTable};
use geolinker::recognizer::Recognizer;

pub fn run_example() -> anyhow::Result<()> {
    let osm = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy/toy.osm");
    let g = Gazetteer::build(&denormalize(&parse_osm_file(&osm)?, &RuleTable::default()));
    let recognizer = Recognizer::new(&g)?;
    println!("automaton over {} names", recognizer.automaton().patterns().len());

    let text = "Van 's-Gravenhage naar UTRECHT, langs de Vecht; the best route avoids Wijk C.";
    println!("{text}");
    for m in recognizer.detect(text, &g) {
        println!(
            "  [{:>2},{:>2}) {:<16} -> {:?}",
            m.span.start, m.span.end, m.surface, m.candidates
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
