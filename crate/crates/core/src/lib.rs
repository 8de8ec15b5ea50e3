//! Regex inference from positive and negative samples with a genetic
//! algorithm over possessive regex syntax trees.

pub mod ast;
pub mod bpe;
pub mod cli;
pub mod config;
pub mod datagen;
pub mod eval;
pub mod evolution;
pub mod fitness;
pub mod matcher;
pub mod parse;
pub mod trainer;
