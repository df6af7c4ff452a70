//! Shared-task evaluation metrics over token-aligned treebanks.
//!
//! Gold tokenization is assumed: system and gold must agree on sentence
//! count, token count and word forms. Content/functional relation sets,
//! the universal feature whitelist and the MLAS/BLEX match conditions
//! follow the CoNLL 2018 shared-task scorer.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::conllu::{Sentence, Token, Treebank};
use crate::par;

/// Relations whose dependents are content words.
pub const CONTENT_DEPRELS: &[&str] = &[
    "nsubj",
    "obj",
    "iobj",
    "csubj",
    "ccomp",
    "xcomp",
    "obl",
    "vocative",
    "expl",
    "dislocated",
    "advcl",
    "advmod",
    "discourse",
    "nmod",
    "appos",
    "nummod",
    "acl",
    "amod",
    "conj",
    "fixed",
    "flat",
    "compound",
    "list",
    "parataxis",
    "orphan",
    "goeswith",
    "reparandum",
    "root",
    "dep",
];

/// Relations of function words checked as attached satellites in MLAS.
pub const FUNCTIONAL_DEPRELS: &[&str] = &["aux", "cop", "mark", "det", "clf", "case", "cc"];

/// Features taken into account by UFeats and MLAS.
pub const UNIVERSAL_FEATURES: &[&str] = &[
    "PronType", "NumType", "Poss", "Reflex", "Foreign", "Abbr", "Gender", "Animacy", "Number",
    "Case", "Definite", "Degree", "VerbForm", "Mood", "Tense", "Aspect", "Voice", "Evident",
    "Polarity", "Person", "Polite",
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("system has {system} sentences, gold has {gold}")]
    SentenceCount { gold: usize, system: usize },

    #[error("sentence {index} ('{sent_id}'): system has {system} tokens, gold has {gold}")]
    TokenCount {
        index: usize,
        sent_id: String,
        gold: usize,
        system: usize,
    },

    #[error("sentence {index} ('{sent_id}'), token {token}: system form '{system}' differs from gold '{gold}'")]
    Form {
        index: usize,
        sent_id: String,
        token: usize,
        gold: String,
        system: String,
    },

    #[error("unknown metric '{0}'")]
    UnknownMetric(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Lemma,
    Upos,
    Xpos,
    UFeats,
    Las,
    Mlas,
    Blex,
    Elas,
    Slas,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::Lemma,
        Metric::Upos,
        Metric::Xpos,
        Metric::UFeats,
        Metric::Las,
        Metric::Mlas,
        Metric::Blex,
        Metric::Elas,
        Metric::Slas,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Lemma => "lemma",
            Metric::Upos => "upos",
            Metric::Xpos => "xpos",
            Metric::UFeats => "ufeats",
            Metric::Las => "las",
            Metric::Mlas => "mlas",
            Metric::Blex => "blex",
            Metric::Elas => "elas",
            Metric::Slas => "slas",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == lower)
            .ok_or_else(|| EvalError::UnknownMetric(s.to_owned()))
    }
}

/// Raw match counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub matched: usize,
    pub system: usize,
    pub gold: usize,
}

impl Add for Counts {
    type Output = Counts;

    fn add(self, rhs: Counts) -> Counts {
        Counts {
            matched: self.matched + rhs.matched,
            system: self.system + rhs.system,
            gold: self.gold + rhs.gold,
        }
    }
}

/// Precision, recall and F1 in percent.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub metric: Metric,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
    pub system_total: usize,
    pub gold_total: usize,
}

impl EvalReport {
    pub fn from_counts(metric: Metric, counts: Counts) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                100.0 * num as f64 / den as f64
            }
        };
        EvalReport {
            metric,
            precision: ratio(counts.matched, counts.system),
            recall: ratio(counts.matched, counts.gold),
            f1: ratio(2 * counts.matched, counts.system + counts.gold),
            matched: counts.matched,
            system_total: counts.system,
            gold_total: counts.gold,
        }
    }

    pub fn counts(&self) -> Counts {
        Counts {
            matched: self.matched,
            system: self.system_total,
            gold: self.gold_total,
        }
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(
            f,
            "{}: P {:.2} R {:.2} F1 {:.2}",
            self.metric, self.precision, self.recall, self.f1
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalOptions {
    /// Compare basic relations by their universal part only (`obl:arg`
    /// counts as `obl`). Enhanced labels are always compared in full.
    pub strip_subtypes: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            strip_subtypes: true,
        }
    }
}

/// Check that `system` is token-aligned with `gold`.
pub fn check_alignment(gold: &Treebank, system: &Treebank) -> Result<(), EvalError> {
    if gold.len() != system.len() {
        return Err(EvalError::SentenceCount {
            gold: gold.len(),
            system: system.len(),
        });
    }
    for (index, (g, s)) in gold.sentences.iter().zip(&system.sentences).enumerate() {
        if g.len() != s.len() {
            return Err(EvalError::TokenCount {
                index,
                sent_id: g.sent_id.clone(),
                gold: g.len(),
                system: s.len(),
            });
        }
        if let Some((gt, st)) = g
            .tokens
            .iter()
            .zip(&s.tokens)
            .find(|(a, b)| a.form != b.form)
        {
            return Err(EvalError::Form {
                index,
                sent_id: g.sent_id.clone(),
                token: gt.id,
                gold: gt.form.clone(),
                system: st.form.clone(),
            });
        }
    }
    Ok(())
}

/// Evaluate one metric.
pub fn evaluate(
    gold: &Treebank,
    system: &Treebank,
    metric: Metric,
    options: &EvalOptions,
) -> Result<EvalReport, EvalError> {
    check_alignment(gold, system)?;
    Ok(EvalReport::from_counts(
        metric,
        count_aligned(gold, system, metric, options),
    ))
}

/// Evaluate several metrics, reports in the requested order.
pub fn evaluate_all(
    gold: &Treebank,
    system: &Treebank,
    metrics: &[Metric],
    options: &EvalOptions,
) -> Result<Vec<EvalReport>, EvalError> {
    check_alignment(gold, system)?;
    Ok(metrics
        .iter()
        .map(|&metric| {
            EvalReport::from_counts(metric, count_aligned(gold, system, metric, options))
        })
        .collect())
}

fn count_aligned(
    gold: &Treebank,
    system: &Treebank,
    metric: Metric,
    options: &EvalOptions,
) -> Counts {
    par::map_range(gold.len(), |idx| {
        let scorer = SentenceScorer {
            gold: &gold.sentences[idx],
            system: &system.sentences[idx],
            options,
        };
        scorer.count(metric)
    })
    .into_iter()
    .fold(Counts::default(), Add::add)
}

pub fn eval_tagging(
    gold: &Treebank,
    system: &Treebank,
    metric: Metric,
) -> Result<EvalReport, EvalError> {
    evaluate(gold, system, metric, &EvalOptions::default())
}

pub fn eval_las(gold: &Treebank, system: &Treebank) -> Result<EvalReport, EvalError> {
    evaluate(gold, system, Metric::Las, &EvalOptions::default())
}

pub fn eval_mlas(gold: &Treebank, system: &Treebank) -> Result<EvalReport, EvalError> {
    evaluate(gold, system, Metric::Mlas, &EvalOptions::default())
}

pub fn eval_blex(gold: &Treebank, system: &Treebank) -> Result<EvalReport, EvalError> {
    evaluate(gold, system, Metric::Blex, &EvalOptions::default())
}

pub fn eval_elas(gold: &Treebank, system: &Treebank) -> Result<EvalReport, EvalError> {
    evaluate(gold, system, Metric::Elas, &EvalOptions::default())
}

pub fn eval_slas(gold: &Treebank, system: &Treebank) -> Result<EvalReport, EvalError> {
    evaluate(gold, system, Metric::Slas, &EvalOptions::default())
}

/// Sorted universal features joined by `|`; empty when there are none.
pub fn universal_feats(token: &Token) -> String {
    let mut feats: Vec<&str> = token
        .feats
        .iter()
        .map(String::as_str)
        .filter(|item| {
            let name = item.split_once('=').map_or(*item, |(name, _)| name);
            UNIVERSAL_FEATURES.contains(&name)
        })
        .collect();
    feats.sort_unstable();
    feats.join("|")
}

struct SentenceScorer<'a> {
    gold: &'a Sentence,
    system: &'a Sentence,
    options: &'a EvalOptions,
}

impl SentenceScorer<'_> {
    fn deprel<'t>(&self, token: &'t Token) -> &'t str {
        if self.options.strip_subtypes {
            token.deprel.split(':').next().unwrap_or("")
        } else {
            &token.deprel
        }
    }

    fn is_content(&self, token: &Token) -> bool {
        CONTENT_DEPRELS.contains(&self.deprel(token))
    }

    fn is_functional(&self, token: &Token) -> bool {
        FUNCTIONAL_DEPRELS.contains(&self.deprel(token))
    }

    fn attachment_matches(&self, g: &Token, s: &Token) -> bool {
        g.head == s.head && self.deprel(g) == self.deprel(s)
    }

    /// Function-word satellites of `head`: (id, relation, UPOS, features).
    fn satellites<'t>(
        &self,
        sentence: &'t Sentence,
        head: usize,
    ) -> Vec<(usize, &'t str, &'t str, String)> {
        sentence
            .dependents(head)
            .filter(|t| self.is_functional(t))
            .map(|t| (t.id, self.deprel(t), t.upos.as_str(), universal_feats(t)))
            .collect()
    }

    fn count(&self, metric: Metric) -> Counts {
        match metric {
            Metric::Elas => return self.count_enhanced(),
            Metric::Mlas | Metric::Blex => return self.count_content(metric),
            _ => {}
        }

        let n = self.gold.len();
        let matched = self
            .gold
            .tokens
            .iter()
            .zip(&self.system.tokens)
            .filter(|(g, s)| match metric {
                Metric::Lemma => g.lemma == "_" || g.lemma == s.lemma,
                Metric::Upos => g.upos == s.upos,
                Metric::Xpos => g.xpos == s.xpos,
                Metric::UFeats => universal_feats(g) == universal_feats(s),
                Metric::Las => self.attachment_matches(g, s),
                Metric::Slas => self.attachment_matches(g, s) && g.sem_label == s.sem_label,
                Metric::Mlas | Metric::Blex | Metric::Elas => unreachable!(),
            })
            .count();
        Counts {
            matched,
            system: n,
            gold: n,
        }
    }

    fn count_content(&self, metric: Metric) -> Counts {
        let blex_lemma = |t: &Token| {
            if t.lemma == "_" {
                t.form.clone()
            } else {
                t.lemma.clone()
            }
        };

        let mut counts = Counts {
            matched: 0,
            system: self
                .system
                .tokens
                .iter()
                .filter(|t| self.is_content(t))
                .count(),
            gold: self
                .gold
                .tokens
                .iter()
                .filter(|t| self.is_content(t))
                .count(),
        };
        for (g, s) in self.gold.tokens.iter().zip(&self.system.tokens) {
            if !self.is_content(g) || !self.attachment_matches(g, s) {
                continue;
            }
            let ok = match metric {
                Metric::Mlas => {
                    g.upos == s.upos
                        && universal_feats(g) == universal_feats(s)
                        && self.satellites(self.gold, g.id) == self.satellites(self.system, s.id)
                }
                Metric::Blex => blex_lemma(g) == blex_lemma(s),
                _ => unreachable!(),
            };
            if ok {
                counts.matched += 1;
            }
        }
        counts
    }

    fn count_enhanced(&self) -> Counts {
        let mut counts = Counts::default();
        for (g, s) in self.gold.tokens.iter().zip(&self.system.tokens) {
            let gold_arcs: BTreeSet<_> = g.enhanced.iter().collect();
            counts.gold += g.enhanced.len();
            counts.system += s.enhanced.len();
            counts.matched += s
                .enhanced
                .iter()
                .filter(|arc| gold_arcs.contains(arc))
                .count();
        }
        counts
    }
}
