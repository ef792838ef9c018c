//! Context windows around a mention for type classification.

use serde::{Deserialize, Serialize};

use crate::gazetteer::Gazetteer;
use crate::recognizer::CandidateMention;
use crate::text::{normalize, tokenize};

pub const WINDOW_SIZE: usize = 5;
pub const NUM_TOKEN: &str = "<NUM>";

/// Up to five context units on each side of a mention.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub before: Vec<String>,
    pub after: Vec<String>,
}

impl Window {
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.before.iter().chain(&self.after).map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.before.is_empty() && self.after.is_empty()
    }
}

fn is_numeric(token: &str) -> bool {
    token.chars().any(|c| c.is_numeric()) && !token.chars().any(char::is_alphabetic)
}

/// Context tokens around `mentions[target]`.
///
/// Numbers become `<NUM>`. Another detected mention whose name resolves to
/// exactly one gazetteer feature collapses to a single `<LOC:Type>` unit;
/// ambiguous mentions contribute their ordinary tokens.
pub fn extract_window(text: &str, mentions: &[CandidateMention], target: usize, gazetteer: &Gazetteer) -> Window {
    let focus = mentions[target].span;
    let mut before = Vec::new();
    let mut after = Vec::new();
    let mut last_mention = None;

    for tok in tokenize(text) {
        if tok.start < focus.end && focus.start < tok.end {
            continue;
        }
        let side = if tok.end <= focus.start {
            &mut before
        } else {
            &mut after
        };
        let covering = mentions
            .iter()
            .position(|m| m.span.start <= tok.start && tok.end <= m.span.end);
        let unit = match covering.map(|i| (i, &mentions[i])) {
            Some((i, m)) if m.candidates.len() == 1 => {
                if last_mention == Some(i) {
                    continue;
                }
                last_mention = Some(i);
                match gazetteer.get(&m.candidates[0]) {
                    Some(f) => format!("<LOC:{}>", f.loc_type),
                    None => normalize(&tok.text),
                }
            }
            _ if is_numeric(&tok.text) => NUM_TOKEN.to_string(),
            _ => normalize(&tok.text),
        };
        side.push(unit);
    }

    let keep = before.len().saturating_sub(WINDOW_SIZE);
    before.drain(..keep);
    after.truncate(WINDOW_SIZE);
    Window { before, after }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomodel::{Geometry, LocationType};
    use crate::osm_ingest::{OsmId, OsmKind, RawFeature};
    use crate::recognizer::Recognizer;

    fn raw(id: i64, ty: LocationType, name: &str, lon: f64) -> RawFeature {
        RawFeature {
            source_ids: vec![OsmId {
                kind: OsmKind::Node,
                id,
            }],
            geometry: Geometry::point(lon, 52.0).unwrap(),
            loc_type: ty,
            primary_name: name.into(),
            alt_names: vec![],
            tags: Default::default(),
        }
    }

    fn gazetteer() -> Gazetteer {
        Gazetteer::build(&[
            raw(1, LocationType::Road, "Kerkstraat", 5.0),
            raw(2, LocationType::Road, "Kerkstraat", 4.0),
            raw(3, LocationType::Municipality, "Utrecht", 5.1),
            raw(4, LocationType::Municipality, "Best", 5.4),
            raw(5, LocationType::Building, "Best", 4.4),
            raw(6, LocationType::Municipality, "Den Haag", 4.3),
        ])
    }

    fn window(text: &str, target: &str) -> Window {
        let g = gazetteer();
        let mentions = Recognizer::new(&g).unwrap().detect(text, &g);
        let i = mentions.iter().position(|m| m.surface == target).unwrap();
        extract_window(text, &mentions, i, &g)
    }

    #[test]
    fn numbers_and_unambiguous_places_are_replaced() {
        let w = window("lives at 12 Kerkstraat in Utrecht", "Kerkstraat");
        assert_eq!(w.before, ["lives", "at", NUM_TOKEN]);
        assert_eq!(w.after, ["in", "<LOC:Municipality>"]);
    }

    #[test]
    fn mention_at_start_has_empty_before() {
        let w = window("Kerkstraat is long", "Kerkstraat");
        assert!(w.before.is_empty());
        assert_eq!(w.after, ["is", "long"]);
    }

    #[test]
    fn ambiguous_neighbour_keeps_surface_token() {
        let w = window("from Best to Utrecht", "Utrecht");
        assert_eq!(w.before, ["from", "best", "to"]);
    }

    #[test]
    fn multi_token_place_is_one_unit_and_window_is_capped() {
        let w = window("a b c d e f g Den Haag Utrecht 1 2 3 4 5 6 7", "Utrecht");
        assert_eq!(w.before, ["c", "d", "e", "f", "g", "<LOC:Municipality>"][1..]);
        assert_eq!(w.after, [NUM_TOKEN; 5]);
        assert!(!w.tokens().any(|t| t == "utrecht"));
    }
}
