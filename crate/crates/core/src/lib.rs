pub mod cli;
pub mod disambiguator;
pub mod docindex;
pub mod gazetteer;
pub mod geomodel;
pub mod osm_ingest;
pub mod recognizer;
pub mod server;
pub mod text;
