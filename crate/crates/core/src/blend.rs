//! Reparsing: combine the trees of several parsers into one consensus tree.
//!
//! Every predicted arc is a vote. The vote graph is decoded with
//! [`cle_decode`], each selected arc takes its most frequent label, and
//! surplus root dependents are chained onto each other.

use std::cmp::Reverse;

use thiserror::Error;

use crate::conllu::{Sentence, Treebank};
use crate::graph::{cle_decode, Arborescence, GraphError, WeightedArcGraph};
use crate::par;

pub const ROOT_LABEL: &str = "root";

/// Default label for root dependents that are re-attached by [`fix_roots`].
pub const DEFAULT_ROOT_FALLBACK: &str = "parataxis";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BlendError {
    #[error("no predictions to blend")]
    NoPredictions,

    #[error("sentence '{sent_id}': input {input} has {found} tokens, expected {expected}")]
    LengthMismatch {
        sent_id: String,
        input: usize,
        expected: usize,
        found: usize,
    },

    #[error("sentence '{sent_id}': input {input} has form '{found}' at token {token}, expected '{expected}'")]
    FormMismatch {
        sent_id: String,
        input: usize,
        token: usize,
        expected: String,
        found: String,
    },

    #[error("input {input} has {found} sentences, expected {expected}")]
    SentenceCountMismatch {
        input: usize,
        expected: usize,
        found: usize,
    },

    #[error("donor input {donor} does not exist ({inputs} inputs)")]
    NoSuchDonor { donor: usize, inputs: usize },

    #[error("sentence '{0}' has no root dependent")]
    NoRoot(String),

    #[error("arc {head} -> {dep} is not in the vote graph")]
    MissingArc { head: usize, dep: usize },

    #[error("sentence '{sent_id}': {source}")]
    Graph {
        sent_id: String,
        #[source]
        source: GraphError,
    },

    #[error("sentence {index}: {source}")]
    AtSentence {
        /// 0-based sentence index in the treebanks.
        index: usize,
        #[source]
        source: Box<BlendError>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlendOptions {
    /// Label given to re-attached root dependents.
    pub root_fallback: String,
    /// Input whose non-syntactic columns are copied to the output.
    pub donor: usize,
}

impl Default for BlendOptions {
    fn default() -> Self {
        BlendOptions {
            root_fallback: DEFAULT_ROOT_FALLBACK.to_owned(),
            donor: 0,
        }
    }
}

fn check_alignment(predictions: &[&Sentence]) -> Result<(), BlendError> {
    let first = predictions.first().ok_or(BlendError::NoPredictions)?;
    for (input, other) in predictions.iter().enumerate().skip(1) {
        if other.len() != first.len() {
            return Err(BlendError::LengthMismatch {
                sent_id: first.sent_id.clone(),
                input,
                expected: first.len(),
                found: other.len(),
            });
        }
        if let Some((a, b)) = first
            .tokens
            .iter()
            .zip(&other.tokens)
            .find(|(a, b)| a.form != b.form)
        {
            return Err(BlendError::FormMismatch {
                sent_id: first.sent_id.clone(),
                input,
                token: a.id,
                expected: a.form.clone(),
                found: b.form.clone(),
            });
        }
    }
    Ok(())
}

/// Build the vote graph: `weight(h, d)` is the number of predictions that
/// attach `d` to `h`, and the arc's label multiset holds their deprels.
pub fn build_vote_graph(predictions: &[&Sentence]) -> Result<WeightedArcGraph, BlendError> {
    check_alignment(predictions)?;
    let mut g = WeightedArcGraph::new(predictions[0].len());
    for prediction in predictions {
        for token in &prediction.tokens {
            g.add_vote(token.head, token.id, &token.deprel)
                .map_err(|source| BlendError::Graph {
                    sent_id: prediction.sent_id.clone(),
                    source,
                })?;
        }
    }
    Ok(g)
}

/// Most frequent label of every tree arc; ties go to the smallest label.
pub fn vote_labels(g: &WeightedArcGraph, tree: &Arborescence) -> Result<Vec<String>, BlendError> {
    tree.arcs()
        .map(|(dep, head)| {
            g.labels(head, dep)
                .and_then(|votes| {
                    votes
                        .iter()
                        .max_by_key(|(label, count)| (**count, Reverse(label.as_str())))
                })
                .map(|(label, _)| label.clone())
                .ok_or(BlendError::MissingArc { head, dep })
        })
        .collect()
}

/// Keep the first root dependent and attach every later one to the
/// previous root dependent. Re-attached tokens labelled `root` get
/// `fallback`; any other token with a non-root head loses a `root` label
/// the same way, and the remaining root dependent is labelled `root`.
pub fn fix_roots(s: &Sentence, fallback: &str) -> Result<Sentence, BlendError> {
    let roots: Vec<usize> = s
        .tokens
        .iter()
        .filter(|t| t.head == 0)
        .map(|t| t.id)
        .collect();
    if roots.is_empty() {
        return Err(BlendError::NoRoot(s.sent_id.clone()));
    }

    let mut fixed = s.clone();
    for pair in roots.windows(2) {
        fixed.tokens[pair[1] - 1].head = pair[0];
    }
    for token in &mut fixed.tokens {
        if token.head == 0 {
            token.deprel = ROOT_LABEL.to_owned();
        } else if token.deprel == ROOT_LABEL {
            token.deprel = fallback.to_owned();
        }
    }
    Ok(fixed)
}

/// Blend predictions of one sentence into a consensus tree.
///
/// Non-syntactic columns come from the donor input and the enhanced
/// graph is cleared.
pub fn blend_sentence(
    predictions: &[&Sentence],
    options: &BlendOptions,
) -> Result<Sentence, BlendError> {
    let donor = predictions
        .get(options.donor)
        .ok_or(BlendError::NoSuchDonor {
            donor: options.donor,
            inputs: predictions.len(),
        })?;
    let g = build_vote_graph(predictions)?;
    let tree = cle_decode(&g).map_err(|source| BlendError::Graph {
        sent_id: donor.sent_id.clone(),
        source,
    })?;
    let labels = vote_labels(&g, &tree)?;

    let mut blended = (*donor).clone();
    for ((token, (_, head)), label) in blended.tokens.iter_mut().zip(tree.arcs()).zip(labels) {
        token.head = head;
        token.deprel = label;
        token.enhanced.clear();
    }
    fix_roots(&blended, &options.root_fallback)
}

/// Sentence-wise [`blend_sentence`] over aligned treebanks.
pub fn blend_treebank(
    inputs: &[&Treebank],
    options: &BlendOptions,
) -> Result<Treebank, BlendError> {
    let first = inputs.first().ok_or(BlendError::NoPredictions)?;
    if options.donor >= inputs.len() {
        return Err(BlendError::NoSuchDonor {
            donor: options.donor,
            inputs: inputs.len(),
        });
    }
    for (input, tb) in inputs.iter().enumerate().skip(1) {
        if tb.len() != first.len() {
            return Err(BlendError::SentenceCountMismatch {
                input,
                expected: first.len(),
                found: tb.len(),
            });
        }
    }

    let sentences = par::try_map_range(first.len(), |index| {
        let predictions: Vec<&Sentence> = inputs.iter().map(|tb| &tb.sentences[index]).collect();
        blend_sentence(&predictions, options).map_err(|source| BlendError::AtSentence {
            index,
            source: Box::new(source),
        })
    })?;
    Ok(Treebank::new(sentences))
}
