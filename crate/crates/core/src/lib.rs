//! Concept-value extraction from echocardiogram reports, with a synthetic
//! multi-site corpus generator and an evaluation harness.

pub mod cli;
pub mod corpusgen;
pub mod docmodel;
pub mod evaluator;
pub mod extractor;
pub mod lexicon;
pub mod severity;
pub mod units;
