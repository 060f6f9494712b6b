//! Code comment quality classification toolkit.
//!
//! Pipeline: parse labeled code-comment pairs ([`corpus`]), embed them
//! ([`embedding`]), balance classes with SMOTE ([`balance`]), train classical
//! classifiers ([`models`]) and score them under repeated stratified k-fold
//! ([`evaluation`]). [`augmentation`] handles LLM-generated pairs and their
//! quality control.

pub mod augmentation;
pub mod cli;
pub mod balance;
pub mod corpus;
pub mod embedding;
pub mod evaluation;
pub mod models;
pub mod rng;
