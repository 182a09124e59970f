//! Knowledge-graph assisted basketball news writing.

pub mod config;
pub mod enricher;
pub mod ingest;
pub mod kee;
pub mod kg;
pub mod kgc;
pub mod pipeline;
pub mod rng;
pub mod rouge;
pub mod templater;
