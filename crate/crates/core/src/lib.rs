//! Treebank toolkit for parser ensembles and enhanced dependencies.
//!
//! * [`conllu`]: CoNLL-U reading, writing and tree validation;
//! * [`graph`]: vote graphs and maximum spanning arborescences;
//! * [`blend`]: consensus trees from several parsers' outputs;
//! * [`search`]: exhaustive search for the best blending setup;
//! * [`enhance`]: rule-based enhanced dependencies for conjuncts;
//! * [`eval`]: tagging, LAS, MLAS, BLEX, ELAS and SLAS scores.
//!
//! Work over sentences and search combinations runs on rayon when the
//! `parallel` feature is enabled (the default). Results do not depend on
//! the number of threads.

pub mod blend;
pub mod conllu;
pub mod enhance;
pub mod eval;
pub mod graph;
pub mod par;
pub mod search;

pub use blend::{blend_sentence, blend_treebank, fix_roots, BlendError, BlendOptions};
pub use conllu::{
    parse_conllu, serialize_conllu, split_folds, validate_tree, ConlluError, ConlluOptions,
    EnhancedDep, Sentence, Token, Treebank, Violation,
};
pub use enhance::{enhance_sentence, enhance_treebank, Enhancer, FilterRegistry, RuleConfig};
pub use eval::{evaluate, evaluate_all, EvalError, EvalOptions, EvalReport, Metric};
pub use graph::{brute_force_arborescence, cle_decode, Arborescence, WeightedArcGraph};
pub use search::{search_best, BlendCombination, ParserGroup, SearchError, SearchOutcome};
