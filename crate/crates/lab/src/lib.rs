//! Corpus, experiment harness and output formats for the `lab` binary.

pub mod config;
pub mod corpus;
pub mod emit;
pub mod harness;

pub use config::LabConfig;
pub use corpus::CorpusEntry;
