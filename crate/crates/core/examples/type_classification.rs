//! Predict a mention's location type from its surrounding words with Naive
//! Bayes and with MaxEnt.

use std::fs::File;
use std::path::Path;

use geolinker::disambiguator::typeclass::read_type_csv;
use geolinker::disambiguator::{train_type, TypeTrainConfig, TypeVariant, Window};
use geolinker::geomodel::LocationType;

fn window(before: &str, after: &str) -> Window {
    Window {
        before: before.split_whitespace().map(String::from).collect(),
        after: after.split_whitespace().map(String::from).collect(),
    }
}

pub fn run_example() -> anyhow::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy/type_train.csv");
    let examples = read_type_csv(File::open(data)?)?;
    let config = TypeTrainConfig::default();
    let nb = train_type(&examples, TypeVariant::NaiveBayes, &config)?;
    let me = train_type(&examples, TypeVariant::MaxEnt, &config)?;

    let probes = [
        window("the residents of the", "in <LOC:Municipality> protested"),
        window("a boat on the", "near the bridge"),
        window("the province of", "voted"),
    ];
    for w in &probes {
        println!("{:?} _ {:?}", w.before, w.after);
        for (label, model) in [("naive bayes", &nb), ("maxent", &me)] {
            let d = model.classify(w);
            let top = d.argmax();
            println!("  {label:<11} -> {:<13} p={:.3}", top.name(), d.prob(top));
        }
    }
    let d = nb.classify(&probes[0]);
    let row: Vec<String> = LocationType::ALL
        .iter()
        .map(|t| format!("{}={:.3}", t.slug(), d.prob(*t)))
        .collect();
    println!("full NB distribution: {}", row.join(" "));
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
