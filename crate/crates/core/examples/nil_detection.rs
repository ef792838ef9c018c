//! Train the max-margin NIL filter and score detected mentions. A high
//! score means the mention looks like a real place reference.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use geolinker::disambiguator::nil::{read_nil_csv, training_accuracy, FEATURE_NAMES};
use geolinker::disambiguator::{build_freq_table, nil_features, train_nil, NilTrainConfig, TsvKnowledge};
use geolinker::gazetteer::Gazetteer;
use geolinker::osm_ingest::{denormalize, parse_osm_file, RuleTable};
use geolinker::recognizer::Recognizer;

pub fn run_example() -> anyhow::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy");
    let g = Gazetteer::build(&denormalize(
        &parse_osm_file(&dir.join("toy.osm"))?,
        &RuleTable::default(),
    ));
    let recognizer = Recognizer::new(&g)?;
    let freq = build_freq_table(
        BufReader::new(File::open(dir.join("reference.txt"))?),
        recognizer.automaton(),
    )?;
    let kb = TsvKnowledge::read(BufReader::new(File::open(dir.join("kb.tsv"))?))?;

    let examples = read_nil_csv(File::open(dir.join("nil_train.csv"))?)?;
    let report = train_nil(&examples, &NilTrainConfig::default())?;
    println!(
        "trained on {} rows: accuracy {:.2}, final mean hinge {:.4}",
        examples.len(),
        training_accuracy(&report.model, &examples),
        report.epoch_losses.last().copied().unwrap_or_default()
    );
    for (name, w) in FEATURE_NAMES.iter().zip(report.model.weights) {
        println!("  w[{name:<14}] = {w:+.3}");
    }

    let text = "We wish you the best in Best and in Utrecht.";
    for m in recognizer.detect(text, &g) {
        let x = nil_features(&m, &g, &freq, &kb);
        println!(
            "{:<8} score {:.3}  features {:?}",
            m.surface,
            report.model.score(&x),
            x.0
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
