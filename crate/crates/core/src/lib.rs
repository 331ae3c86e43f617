//! Arc-factored (first-order) graph-based dependency parsing with ensemble
//! consensus decoding and ensemble distillation.
//!
//! The crate is organised around the data flow of the toolkit:
//!
//! * [`treebank`] holds the sentence/tree data model and CoNLL/embedding I/O.
//! * [`decoders`] finds the best tree under an [`ArcScoreMatrix`], either
//!   projectively (Eisner) or as a maximum spanning arborescence (Chu-Liu-Edmonds).
//! * [`costs`] implements the Hamming cost and the vote-derived distillation cost.
//! * [`ensemble`] tallies votes, performs minimum Bayes risk consensus parsing and
//!   produces jackknifed vote tables for training data.
//! * [`scorers`] provides the linear and BiLSTM arc scorers, the arc labeler
//!   and the Adam optimizer.
//! * [`training`] trains a scorer with the structured hinge loss and
//!   cost-augmented decoding.
//! * [`eval`] computes UAS/LAS/UEM.
//! * [`cli`] wires everything into pipeline commands used by the binary.

pub mod cli;
pub mod costs;
pub mod decoders;
pub mod ensemble;
mod error;
pub mod eval;
pub mod scorers;
pub mod synth;
pub mod training;
pub mod treebank;

pub use costs::{distillation_cost, hamming_cost, per_arc_cost, CostKind, CostSpec};
pub use decoders::{cle_decode, eisner_decode, enumerate_trees, tree_score, ArcScoreMatrix, Decoder};
pub use ensemble::{jackknife_split, mbr_parse, tally_votes, JackknifePlan, VoteTable};
pub use error::{Error, Result};
pub use eval::{evaluate, EvalReport, Punctuation};
pub use scorers::{ScorerConfig, ScorerModel, ScorerVariant};
pub use training::{cost_augmented_decode, hinge_loss, train, TrainConfig};
pub use treebank::{read_conll, read_embeddings, write_conll, ConllFormat, EmbeddingTable, ParseTree, Sentence, Token};
