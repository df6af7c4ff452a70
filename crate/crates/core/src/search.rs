//! Exhaustive search over blending setups.
//!
//! Parser outputs are grouped (e.g. one group per parser family and
//! direction). A combination picks how many instances of each group to
//! blend; the first `count` instances of a group are used. Every non-empty
//! combination is blended and scored by LAS against a development
//! treebank.

use std::cmp::{Ordering, Reverse};
use std::fmt;

use thiserror::Error;

use crate::blend::{blend_treebank, BlendError, BlendOptions};
use crate::conllu::Treebank;
use crate::eval::{self, EvalError, EvalOptions, Metric};
use crate::par;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("no parser groups given")]
    NoGroups,

    #[error("group '{0}' has no instances")]
    EmptyGroup(String),

    #[error("combination selects no instances")]
    EmptyCombination,

    #[error("combination has {found} counts for {expected} groups")]
    Arity { expected: usize, found: usize },

    #[error("group '{group}' has {size} instances, {requested} requested")]
    CountTooLarge {
        group: String,
        size: usize,
        requested: usize,
    },

    #[error("group '{group}', instance {instance}: {source}")]
    Misaligned {
        group: String,
        instance: usize,
        #[source]
        source: EvalError,
    },

    #[error("blending {combination}: {source}")]
    Blend {
        combination: String,
        #[source]
        source: BlendError,
    },

    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Outputs of the trained instances of one parser variant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParserGroup {
    pub name: String,
    pub outputs: Vec<Treebank>,
}

impl ParserGroup {
    pub fn new(name: impl Into<String>, outputs: Vec<Treebank>) -> Self {
        ParserGroup {
            name: name.into(),
            outputs,
        }
    }

    pub fn size(&self) -> usize {
        self.outputs.len()
    }
}

/// Instance counts per group, in group order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlendCombination {
    pub counts: Vec<usize>,
}

impl BlendCombination {
    pub fn new(counts: Vec<usize>) -> Self {
        BlendCombination { counts }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// `name=count` pairs joined by commas.
    pub fn describe(&self, groups: &[ParserGroup]) -> String {
        groups
            .iter()
            .zip(&self.counts)
            .map(|(group, count)| format!("{}={}", group.name, count))
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for BlendCombination {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        let counts: Vec<String> = self.counts.iter().map(ToString::to_string).collect();
        write!(f, "({})", counts.join(","))
    }
}

/// All non-empty count vectors for groups of the given sizes, in
/// lexicographic order.
#[derive(Clone, Debug)]
pub struct Combinations {
    sizes: Vec<usize>,
    current: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(sizes: Vec<usize>) -> Self {
        let current = vec![0; sizes.len()];
        let mut combinations = Combinations {
            sizes,
            current,
            done: false,
        };
        // Skip the all-zero vector.
        combinations.advance();
        combinations
    }

    fn advance(&mut self) {
        for pos in (0..self.sizes.len()).rev() {
            if self.current[pos] < self.sizes[pos] {
                self.current[pos] += 1;
                return;
            }
            self.current[pos] = 0;
        }
        self.done = true;
    }
}

impl Iterator for Combinations {
    type Item = BlendCombination;

    fn next(&mut self) -> Option<BlendCombination> {
        if self.done {
            return None;
        }
        let item = BlendCombination::new(self.current.clone());
        self.advance();
        Some(item)
    }
}

/// Number of non-empty combinations: the product of `size + 1` minus one.
pub fn combination_count(sizes: &[usize]) -> usize {
    sizes.iter().map(|size| size + 1).product::<usize>() - 1
}

pub fn enumerate_combinations(groups: &[ParserGroup]) -> Combinations {
    Combinations::new(groups.iter().map(ParserGroup::size).collect())
}

/// The first `count` instances of every group, group by group.
pub fn realize<'a>(
    combination: &BlendCombination,
    groups: &'a [ParserGroup],
) -> Result<Vec<&'a Treebank>, SearchError> {
    if combination.counts.len() != groups.len() {
        return Err(SearchError::Arity {
            expected: groups.len(),
            found: combination.counts.len(),
        });
    }
    if combination.total() == 0 {
        return Err(SearchError::EmptyCombination);
    }
    let mut treebanks = Vec::with_capacity(combination.total());
    for (group, &count) in groups.iter().zip(&combination.counts) {
        if count > group.size() {
            return Err(SearchError::CountTooLarge {
                group: group.name.clone(),
                size: group.size(),
                requested: count,
            });
        }
        treebanks.extend(&group.outputs[..count]);
    }
    Ok(treebanks)
}

/// A scored combination.
#[derive(Clone, Debug, PartialEq)]
pub struct RankedCombination {
    pub combination: BlendCombination,
    /// LAS F1 in percent.
    pub las: f64,
    /// Correctly attached and labelled tokens.
    pub matched: usize,
    /// 1-based rank.
    pub rank: usize,
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub best: RankedCombination,
    /// Every evaluated combination, best first.
    pub ranking: Vec<RankedCombination>,
}

impl SearchOutcome {
    pub fn evaluated(&self) -> usize {
        self.ranking.len()
    }
}

/// Ranking order: more matched tokens, then fewer instances, then
/// lexicographically smaller counts.
fn rank_order(a: &RankedCombination, b: &RankedCombination) -> Ordering {
    (
        Reverse(a.matched),
        a.combination.total(),
        &a.combination.counts,
    )
        .cmp(&(
            Reverse(b.matched),
            b.combination.total(),
            &b.combination.counts,
        ))
}

/// Blend and score one combination.
pub fn score_combination(
    combination: &BlendCombination,
    groups: &[ParserGroup],
    dev_gold: &Treebank,
    blend_options: &BlendOptions,
    eval_options: &EvalOptions,
) -> Result<RankedCombination, SearchError> {
    let inputs = realize(combination, groups)?;
    let blended = blend_treebank(&inputs, blend_options).map_err(|source| SearchError::Blend {
        combination: combination.describe(groups),
        source,
    })?;
    let report = eval::evaluate(dev_gold, &blended, Metric::Las, eval_options)?;
    Ok(RankedCombination {
        combination: combination.clone(),
        las: report.f1,
        matched: report.matched,
        rank: 0,
    })
}

/// Evaluate every non-empty combination and rank them by development LAS.
pub fn search_best(
    groups: &[ParserGroup],
    dev_gold: &Treebank,
    blend_options: &BlendOptions,
    eval_options: &EvalOptions,
) -> Result<SearchOutcome, SearchError> {
    if groups.is_empty() {
        return Err(SearchError::NoGroups);
    }
    for group in groups {
        if group.outputs.is_empty() {
            return Err(SearchError::EmptyGroup(group.name.clone()));
        }
        for (instance, output) in group.outputs.iter().enumerate() {
            eval::check_alignment(dev_gold, output).map_err(|source| SearchError::Misaligned {
                group: group.name.clone(),
                instance,
                source,
            })?;
        }
    }

    let combinations: Vec<BlendCombination> = enumerate_combinations(groups).collect();
    let mut ranking = par::map(&combinations, |combination| {
        score_combination(combination, groups, dev_gold, blend_options, eval_options)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    ranking.sort_by(rank_order);
    for (idx, entry) in ranking.iter_mut().enumerate() {
        entry.rank = idx + 1;
    }
    let best = ranking[0].clone();
    Ok(SearchOutcome { best, ranking })
}
