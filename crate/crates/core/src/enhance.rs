//! Rule-based enhancement of basic trees for conjuncts.
//!
//! Two rules generate arcs for every token `T` attached to its head `H`
//! with `conj`:
//!
//! * *head*: `T` also depends on the head of `H`, with the relation of `H`
//!   (`0:root` when `H` is the root dependent);
//! * *children*: every non-conj sibling `S` of `T` also depends on `T`,
//!   with the relation `S` has to `H`.
//!
//! The children rule over-generates, so its arcs pass through filters.
//! Filters never touch head-rule arcs. Three filters are built in
//! (`labels`, `advmod1`, `obj`); more can be registered on a
//! [`FilterRegistry`].

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::conllu::{validate_tree, EnhancedDep, Sentence, Treebank, Violation};
use crate::par;

pub const CONJ: &str = "conj";

/// Relations kept by the `labels` filter.
pub const DEFAULT_ALLOWED_LABELS: &[&str] = &[
    "case",
    "nsubj",
    "mark",
    "obl",
    "advmod",
    "amod",
    "cop",
    "obj",
    "discourse:comment",
    "advcl",
];

pub const FILTER_LABELS: &str = "labels";
pub const FILTER_ADVMOD1: &str = "advmod1";
pub const FILTER_OBJ: &str = "obj";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnhanceError {
    #[error("sentence '{sent_id}' is not a tree: {}", .violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidTree {
        sent_id: String,
        violations: Vec<Violation>,
    },

    #[error("unknown filter '{0}'")]
    UnknownFilter(String),

    #[error("filter '{0}' is already registered")]
    DuplicateFilter(String),

    #[error("unknown rule '{0}'")]
    UnknownRule(String),

    #[error("sentence {index}: {source}")]
    AtSentence {
        index: usize,
        #[source]
        source: Box<EnhanceError>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArcOrigin {
    Basic,
    HeadRule,
    ChildrenRule,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EnhancedArc {
    pub dependent: usize,
    pub head: usize,
    pub label: String,
    pub origin: ArcOrigin,
}

impl fmt::Display for EnhancedArc {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "{} -{}-> {}", self.head, self.label, self.dependent)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleConfig {
    pub enable_head: bool,
    pub enable_children: bool,
    /// Filters to run; applied in registry order, not list order.
    pub enabled_filters: Vec<String>,
    pub allowed_labels: Vec<String>,
}

impl RuleConfig {
    /// Everything off: the enhanced graph is the basic tree.
    pub fn basic_only() -> Self {
        RuleConfig {
            enable_head: false,
            enable_children: false,
            enabled_filters: Vec::new(),
            allowed_labels: DEFAULT_ALLOWED_LABELS
                .iter()
                .map(|&l| l.to_owned())
                .collect(),
        }
    }

    /// Both rules and the three built-in filters.
    pub fn full() -> Self {
        RuleConfig {
            enable_head: true,
            enable_children: true,
            enabled_filters: vec![
                FILTER_LABELS.to_owned(),
                FILTER_ADVMOD1.to_owned(),
                FILTER_OBJ.to_owned(),
            ],
            ..Self::basic_only()
        }
    }

    /// Set the rules from names (`head`, `children`).
    pub fn with_rules<S: AsRef<str>>(mut self, rules: &[S]) -> Result<Self, EnhanceError> {
        self.enable_head = false;
        self.enable_children = false;
        for rule in rules {
            match rule.as_ref() {
                "head" => self.enable_head = true,
                "children" => self.enable_children = true,
                other => return Err(EnhanceError::UnknownRule(other.to_owned())),
            }
        }
        Ok(self)
    }
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self::full()
    }
}

/// Decides whether a children-rule arc is removed.
pub type FilterFn = dyn Fn(&Sentence, &RuleConfig, &EnhancedArc) -> bool + Send + Sync;

/// Named filters in application order.
#[derive(Clone)]
pub struct FilterRegistry {
    filters: Vec<(String, Arc<FilterFn>)>,
}

impl fmt::Debug for FilterRegistry {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

impl Default for FilterRegistry {
    fn default() -> Self {
        let mut registry = FilterRegistry::empty();
        registry
            .register_filter(FILTER_LABELS, |_, cfg, arc| drops_label(cfg, arc))
            .and_then(|_| registry.register_filter(FILTER_ADVMOD1, drops_advmod1))
            .and_then(|_| registry.register_filter(FILTER_OBJ, |_, _, arc| drops_obj(arc)))
            .expect("built-in filter names are distinct");
        registry
    }
}

impl FilterRegistry {
    pub fn empty() -> Self {
        FilterRegistry {
            filters: Vec::new(),
        }
    }

    /// Add a filter after the existing ones. `drops` returns `true` for
    /// children-rule arcs that should be removed.
    pub fn register_filter<F>(&mut self, name: &str, drops: F) -> Result<(), EnhanceError>
    where
        F: Fn(&Sentence, &RuleConfig, &EnhancedArc) -> bool + Send + Sync + 'static,
    {
        if self.contains(name) {
            return Err(EnhanceError::DuplicateFilter(name.to_owned()));
        }
        self.filters.push((name.to_owned(), Arc::new(drops)));
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.filters.iter().any(|(n, _)| n == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> + '_ {
        self.filters.iter().map(|(name, _)| name.as_str())
    }

    /// Apply the filters enabled in `cfg`, in registry order.
    pub fn apply(
        &self,
        s: &Sentence,
        cfg: &RuleConfig,
        arcs: Vec<EnhancedArc>,
    ) -> Result<Vec<EnhancedArc>, EnhanceError> {
        if let Some(unknown) = cfg.enabled_filters.iter().find(|name| !self.contains(name)) {
            return Err(EnhanceError::UnknownFilter(unknown.clone()));
        }
        let mut arcs = arcs;
        for (name, drops) in &self.filters {
            if cfg.enabled_filters.contains(name) {
                arcs.retain(|arc| arc.origin != ArcOrigin::ChildrenRule || !drops(s, cfg, arc));
            }
        }
        Ok(arcs)
    }
}

fn drops_label(cfg: &RuleConfig, arc: &EnhancedArc) -> bool {
    !cfg.allowed_labels.contains(&arc.label)
}

/// The new head already has an `advmod` dependent of its own.
fn drops_advmod1(s: &Sentence, _: &RuleConfig, arc: &EnhancedArc) -> bool {
    arc.label == "advmod" && s.dependents(arc.head).any(|t| t.deprel == "advmod")
}

/// An `obj` sibling that precedes the conjunct.
fn drops_obj(arc: &EnhancedArc) -> bool {
    arc.label == "obj" && arc.dependent < arc.head
}

fn check_tree(s: &Sentence) -> Result<(), EnhanceError> {
    let violations = validate_tree(s);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(EnhanceError::InvalidTree {
            sent_id: s.sent_id.clone(),
            violations,
        })
    }
}

/// Arcs from each conjunct to its grandparent. The sentence must be a
/// valid tree.
pub fn apply_head_rule(s: &Sentence) -> Vec<EnhancedArc> {
    s.tokens
        .iter()
        .filter(|t| t.deprel == CONJ && t.head != 0)
        .filter_map(|t| {
            let parent = s.token(t.head)?;
            let (head, label) = if parent.head == 0 {
                (0, "root".to_owned())
            } else {
                (parent.head, parent.deprel.clone())
            };
            Some(EnhancedArc {
                dependent: t.id,
                head,
                label,
                origin: ArcOrigin::HeadRule,
            })
        })
        .collect()
}

/// Arcs from each conjunct to its non-conj siblings. The sentence must be
/// a valid tree.
pub fn apply_children_rule(s: &Sentence) -> Vec<EnhancedArc> {
    let mut arcs = Vec::new();
    for conjunct in s.tokens.iter().filter(|t| t.deprel == CONJ && t.head != 0) {
        for sibling in s.dependents(conjunct.head) {
            if sibling.id == conjunct.id || sibling.deprel == CONJ {
                continue;
            }
            arcs.push(EnhancedArc {
                dependent: sibling.id,
                head: conjunct.id,
                label: sibling.deprel.clone(),
                origin: ArcOrigin::ChildrenRule,
            });
        }
    }
    arcs
}

/// Remove children-rule arcs whose label is not allowed.
pub fn filter_labels(arcs: Vec<EnhancedArc>, cfg: &RuleConfig) -> Vec<EnhancedArc> {
    arcs.into_iter()
        .filter(|arc| arc.origin != ArcOrigin::ChildrenRule || !drops_label(cfg, arc))
        .collect()
}

/// Remove children-rule `advmod` arcs whose head has its own basic
/// `advmod` dependent.
pub fn filter_advmod1(s: &Sentence, arcs: Vec<EnhancedArc>) -> Vec<EnhancedArc> {
    let cfg = RuleConfig::basic_only();
    arcs.into_iter()
        .filter(|arc| arc.origin != ArcOrigin::ChildrenRule || !drops_advmod1(s, &cfg, arc))
        .collect()
}

/// Remove children-rule `obj` arcs whose dependent precedes the head.
pub fn filter_obj(_s: &Sentence, arcs: Vec<EnhancedArc>) -> Vec<EnhancedArc> {
    arcs.into_iter()
        .filter(|arc| arc.origin != ArcOrigin::ChildrenRule || !drops_obj(arc))
        .collect()
}

/// Applies the rules with a filter registry.
#[derive(Clone, Debug, Default)]
pub struct Enhancer {
    pub registry: FilterRegistry,
}

impl Enhancer {
    pub fn new(registry: FilterRegistry) -> Self {
        Enhancer { registry }
    }

    /// Enhanced arcs of a sentence, including one basic arc per token.
    pub fn arcs(&self, s: &Sentence, cfg: &RuleConfig) -> Result<Vec<EnhancedArc>, EnhanceError> {
        check_tree(s)?;

        let mut arcs: Vec<EnhancedArc> = s
            .tokens
            .iter()
            .map(|t| EnhancedArc {
                dependent: t.id,
                head: t.head,
                label: t.deprel.clone(),
                origin: ArcOrigin::Basic,
            })
            .collect();
        if cfg.enable_head {
            arcs.extend(apply_head_rule(s));
        }
        if cfg.enable_children {
            arcs.extend(apply_children_rule(s));
        }
        self.registry.apply(s, cfg, arcs)
    }

    /// Replace the enhanced graph of `s` with basic arcs plus rule output.
    pub fn enhance_sentence(
        &self,
        s: &Sentence,
        cfg: &RuleConfig,
    ) -> Result<Sentence, EnhanceError> {
        let arcs = self.arcs(s, cfg)?;
        let mut graphs = vec![BTreeSet::new(); s.len()];
        for arc in arcs {
            graphs[arc.dependent - 1].insert(EnhancedDep::new(arc.head, arc.label));
        }

        let mut enhanced = s.clone();
        for (token, graph) in enhanced.tokens.iter_mut().zip(graphs) {
            token.enhanced = graph;
        }
        Ok(enhanced)
    }

    pub fn enhance_treebank(
        &self,
        tb: &Treebank,
        cfg: &RuleConfig,
    ) -> Result<Treebank, EnhanceError> {
        let sentences = par::try_map_range(tb.len(), |index| {
            self.enhance_sentence(&tb.sentences[index], cfg)
                .map_err(|source| EnhanceError::AtSentence {
                    index,
                    source: Box::new(source),
                })
        })?;
        Ok(Treebank::new(sentences))
    }
}

/// [`Enhancer::enhance_sentence`] with the built-in filters.
pub fn enhance_sentence(s: &Sentence, cfg: &RuleConfig) -> Result<Sentence, EnhanceError> {
    Enhancer::default().enhance_sentence(s, cfg)
}

/// [`Enhancer::enhance_treebank`] with the built-in filters.
pub fn enhance_treebank(tb: &Treebank, cfg: &RuleConfig) -> Result<Treebank, EnhanceError> {
    Enhancer::default().enhance_treebank(tb, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::Token;

    fn sentence(arcs: &[(&str, usize, &str)]) -> Sentence {
        let tokens = arcs
            .iter()
            .enumerate()
            .map(|(idx, (form, head, rel))| Token::new(idx + 1, *form, *head, *rel))
            .collect();
        Sentence::new("s", tokens)
    }

    fn triples(arcs: &[EnhancedArc]) -> Vec<(usize, usize, &str)> {
        let mut out: Vec<_> = arcs
            .iter()
            .map(|a| (a.dependent, a.head, a.label.as_str()))
            .collect();
        out.sort();
        out
    }

    fn deps(s: &Sentence, id: usize) -> Vec<String> {
        s.tokens[id - 1]
            .enhanced
            .iter()
            .map(ToString::to_string)
            .collect()
    }

    #[test]
    fn head_rule_on_root_conjunct() {
        // Dzieci śpią i rodzice pracują
        let s = sentence(&[
            ("Dzieci", 2, "nsubj"),
            ("śpią", 0, "root"),
            ("i", 5, "cc"),
            ("rodzice", 5, "nsubj"),
            ("pracują", 2, "conj"),
        ]);
        assert_eq!(triples(&apply_head_rule(&s)), vec![(5, 0, "root")]);
    }

    #[test]
    fn head_rule_needs_conj() {
        let s = sentence(&[("a", 0, "root"), ("b", 1, "obj"), ("c", 2, "amod")]);
        assert!(apply_head_rule(&s).is_empty());
        assert!(apply_children_rule(&s).is_empty());
    }

    #[test]
    fn head_rule_on_conj_chain() {
        // 3 conj-> 2 conj-> 1 (root): token 3's grandparent is 1 and the
        // label is its parent's relation.
        let s = sentence(&[("a", 0, "root"), ("b", 1, "conj"), ("c", 2, "conj")]);
        assert_eq!(
            triples(&apply_head_rule(&s)),
            vec![(2, 0, "root"), (3, 1, "conj")]
        );
    }

    #[test]
    fn head_rule_uses_parent_relation() {
        let s = sentence(&[
            ("widzi", 0, "root"),
            ("psa", 1, "obj"),
            ("i", 4, "cc"),
            ("kota", 2, "conj"),
        ]);
        assert_eq!(triples(&apply_head_rule(&s)), vec![(4, 1, "obj")]);
    }

    #[test]
    fn children_rule_siblings() {
        let s = sentence(&[
            ("zawsze", 2, "advmod"),
            ("straszyły", 0, "root"),
            ("i", 4, "cc"),
            ("przerażały", 2, "conj"),
        ]);
        assert_eq!(triples(&apply_children_rule(&s)), vec![(1, 4, "advmod")]);
    }

    #[test]
    fn children_rule_without_siblings() {
        let s = sentence(&[("a", 0, "root"), ("b", 1, "conj")]);
        assert!(apply_children_rule(&s).is_empty());
    }

    #[test]
    fn conj_siblings_are_excluded() {
        let s = sentence(&[
            ("a", 0, "root"),
            ("b", 1, "conj"),
            ("c", 1, "conj"),
            ("d", 1, "obj"),
        ]);
        assert_eq!(
            triples(&apply_children_rule(&s)),
            vec![(4, 2, "obj"), (4, 3, "obj")]
        );
    }

    fn arc(dependent: usize, head: usize, label: &str, origin: ArcOrigin) -> EnhancedArc {
        EnhancedArc {
            dependent,
            head,
            label: label.to_owned(),
            origin,
        }
    }

    #[test]
    fn label_filter() {
        let cfg = RuleConfig::full();
        let arcs = vec![
            arc(1, 2, "nummod", ArcOrigin::ChildrenRule),
            arc(3, 2, "nsubj", ArcOrigin::ChildrenRule),
            arc(2, 0, "root", ArcOrigin::HeadRule),
            arc(4, 2, "punct", ArcOrigin::Basic),
        ];
        assert_eq!(
            triples(&filter_labels(arcs, &cfg)),
            vec![(2, 0, "root"), (3, 2, "nsubj"), (4, 2, "punct")]
        );
    }

    #[test]
    fn advmod1_filter() {
        // 1 obok -advmod-> 3; 2 znowu -advmod-> 5; 5 conj-> 3.
        let s = sentence(&[
            ("obok", 3, "advmod"),
            ("znowu", 5, "advmod"),
            ("siedział", 0, "root"),
            ("i", 5, "cc"),
            ("miauknął", 3, "conj"),
            ("głośno", 6, "dep"),
        ]);
        let arcs = apply_children_rule(&s);
        assert_eq!(triples(&arcs), vec![(1, 5, "advmod")]);
        assert!(filter_advmod1(&s, arcs).is_empty());

        let without_own = sentence(&[
            ("obok", 2, "advmod"),
            ("siedział", 0, "root"),
            ("i", 4, "cc"),
            ("miauknął", 2, "conj"),
        ]);
        let arcs = apply_children_rule(&without_own);
        assert_eq!(filter_advmod1(&without_own, arcs.clone()), arcs);

        let other_label = vec![arc(1, 5, "obl", ArcOrigin::ChildrenRule)];
        assert_eq!(filter_advmod1(&s, other_label.clone()), other_label);
    }

    #[test]
    fn obj_filter() {
        let before = vec![arc(2, 4, "obj", ArcOrigin::ChildrenRule)];
        assert!(filter_obj(&Sentence::default(), before).is_empty());
        let after = vec![arc(5, 3, "obj", ArcOrigin::ChildrenRule)];
        assert_eq!(filter_obj(&Sentence::default(), after.clone()), after);
        let advmod = vec![arc(2, 4, "advmod", ArcOrigin::ChildrenRule)];
        assert_eq!(filter_obj(&Sentence::default(), advmod.clone()), advmod);
    }

    fn coordination() -> Sentence {
        sentence(&[
            ("Wczoraj", 3, "advmod"),
            ("dzieci", 3, "nsubj"),
            ("czytały", 0, "root"),
            ("książki", 3, "obj"),
            ("i", 6, "cc"),
            ("pisały", 3, "conj"),
            ("listy", 6, "obj"),
            (".", 3, "punct"),
        ])
    }

    #[test]
    fn all_rules_off_gives_basic_arcs() {
        let s = coordination();
        let enhanced = enhance_sentence(&s, &RuleConfig::basic_only()).unwrap();
        for token in &enhanced.tokens {
            let expected = vec![EnhancedDep::new(token.head, token.deprel.clone())];
            assert_eq!(token.enhanced.iter().cloned().collect::<Vec<_>>(), expected);
        }
    }

    #[test]
    fn full_configuration() {
        let s = coordination();
        let enhanced = enhance_sentence(&s, &RuleConfig::full()).unwrap();
        assert_eq!(deps(&enhanced, 6), vec!["0:root", "3:conj"]);
        assert_eq!(deps(&enhanced, 1), vec!["3:advmod", "6:advmod"]);
        assert_eq!(deps(&enhanced, 2), vec!["3:nsubj", "6:nsubj"]);
        // obj precedes the conjunct; punct is not an allowed label.
        assert_eq!(deps(&enhanced, 4), vec!["3:obj"]);
        assert_eq!(deps(&enhanced, 8), vec!["3:punct"]);

        let again = enhance_sentence(&enhanced, &RuleConfig::full()).unwrap();
        assert_eq!(again, enhanced);

        let basic_columns = |s: &Sentence| -> Vec<(usize, String, String)> {
            s.tokens
                .iter()
                .map(|t| (t.head, t.deprel.clone(), t.form.clone()))
                .collect()
        };
        assert_eq!(basic_columns(&enhanced), basic_columns(&s));
    }

    #[test]
    fn invalid_tree_is_rejected() {
        let s = sentence(&[("a", 0, "root"), ("b", 0, "root")]);
        assert!(matches!(
            enhance_sentence(&s, &RuleConfig::full()),
            Err(EnhanceError::InvalidTree { .. })
        ));
    }

    #[test]
    fn registry() {
        let mut registry = FilterRegistry::default();
        assert_eq!(
            registry.names().collect::<Vec<_>>(),
            vec!["labels", "advmod1", "obj"]
        );
        assert_eq!(
            registry.register_filter("obj", |_, _, _| false),
            Err(EnhanceError::DuplicateFilter("obj".to_owned()))
        );
        registry.register_filter("noop", |_, _, _| false).unwrap();
        registry.register_filter("all", |_, _, _| true).unwrap();

        let s = coordination();
        let enhancer = Enhancer::new(registry);
        let mut cfg = RuleConfig::full();
        let reference = enhance_sentence(&s, &cfg).unwrap();
        cfg.enabled_filters.push("noop".to_owned());
        assert_eq!(enhancer.enhance_sentence(&s, &cfg).unwrap(), reference);

        cfg.enabled_filters.push("all".to_owned());
        let head_only = RuleConfig {
            enable_children: false,
            ..RuleConfig::full()
        };
        assert_eq!(
            enhancer.enhance_sentence(&s, &cfg).unwrap(),
            enhance_sentence(&s, &head_only).unwrap()
        );

        cfg.enabled_filters.push("missing".to_owned());
        assert_eq!(
            enhancer.enhance_sentence(&s, &cfg),
            Err(EnhanceError::UnknownFilter("missing".to_owned()))
        );
    }

    #[test]
    fn rule_names() {
        let cfg = RuleConfig::basic_only().with_rules(&["head"]).unwrap();
        assert!(cfg.enable_head && !cfg.enable_children);
        assert!(RuleConfig::full().with_rules(&["tail"]).is_err());
    }
}
