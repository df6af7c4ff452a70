#![allow(dead_code)]

pub mod reference_scorer;

use rand::seq::IndexedRandom;
use rand::Rng;
use udblend::conllu::{EnhancedDep, Sentence, Token, Treebank};
use udblend::enhance::{enhance_sentence, RuleConfig};

pub const CORPUS: &str = include_str!("../fixtures/corpus.conllu");

pub fn corpus() -> Treebank {
    CORPUS.parse().expect("fixture corpus parses")
}

const LABELS: [&str; 10] = [
    "nsubj", "obj", "obl", "amod", "advmod", "case", "det", "punct", "nmod", "conj",
];

/// Heads of a random tree over `n` words with exactly one root dependent.
pub fn random_tree<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (1..=n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut heads = vec![0; n];
    for (pos, &node) in order.iter().enumerate().skip(1) {
        heads[node - 1] = order[rng.random_range(0..pos)];
    }
    heads
}

pub fn sentence_from_heads<R: Rng>(rng: &mut R, sent_id: &str, heads: &[usize]) -> Sentence {
    let tokens = heads
        .iter()
        .enumerate()
        .map(|(idx, &head)| {
            let label = if head == 0 {
                "root"
            } else {
                *LABELS.choose(rng).unwrap()
            };
            let mut token = Token::new(idx + 1, format!("w{}", idx + 1), head, label);
            token.lemma = format!("l{}", idx + 1);
            token.upos = "X".to_owned();
            token
        })
        .collect();
    Sentence::new(sent_id, tokens)
}

/// Nodes in the subtree of `node`, including itself.
pub fn descendants(heads: &[usize], node: usize) -> Vec<bool> {
    let n = heads.len();
    let mut inside = vec![false; n + 1];
    inside[node] = true;
    let mut changed = true;
    while changed {
        changed = false;
        for dep in 1..=n {
            if !inside[dep] && inside[heads[dep - 1]] && heads[dep - 1] != 0 {
                inside[dep] = true;
                changed = true;
            }
        }
    }
    inside
}

/// A copy of `s` with about `rate` of the tokens re-attached to another
/// head that keeps the tree valid. The root dependent never moves.
pub fn perturb_heads<R: Rng>(rng: &mut R, s: &Sentence, rate: f64) -> Sentence {
    let mut out = s.clone();
    let n = s.len();
    for dep in 1..=n {
        if out.tokens[dep - 1].head == 0 || !rng.random_bool(rate) {
            continue;
        }
        let heads: Vec<usize> = out.tokens.iter().map(|t| t.head).collect();
        let inside = descendants(&heads, dep);
        let options: Vec<usize> = (1..=n).filter(|&h| !inside[h]).collect();
        if let Some(&head) = options.choose(rng) {
            out.tokens[dep - 1].head = head;
        }
    }
    out
}

/// A system-like copy of a gold sentence with errors in every column the
/// evaluator looks at.
pub fn noisy_system<R: Rng>(rng: &mut R, s: &Sentence) -> Sentence {
    let mut out = perturb_heads(rng, s, 0.15);
    for token in &mut out.tokens {
        if token.head != 0 && rng.random_bool(0.1) {
            token.deprel = (*LABELS.choose(rng).unwrap()).to_owned();
        }
        if token.head != 0 && rng.random_bool(0.05) {
            token.deprel = format!("{}:sub", token.deprel);
        }
        if rng.random_bool(0.1) {
            token.lemma = format!("{}x", token.lemma);
        }
        if rng.random_bool(0.05) {
            token.lemma = "_".to_owned();
        }
        if rng.random_bool(0.08) {
            token.upos = "X".to_owned();
        }
        if rng.random_bool(0.08) {
            token.xpos = "ign".to_owned();
        }
        if rng.random_bool(0.1) && !token.feats.is_empty() {
            let idx = rng.random_range(0..token.feats.len());
            token.feats[idx] = format!("{}x", token.feats[idx]);
        }
        if rng.random_bool(0.1) {
            token.feats.reverse();
        }
        if rng.random_bool(0.05) {
            token.feats.push("Variant=Short".to_owned());
        }
        if rng.random_bool(0.1) {
            token.sem_label = match token.sem_label {
                Some(_) => None,
                None => Some("Place".to_owned()),
            };
        }
        if rng.random_bool(0.15) {
            if let Some(first) = token.enhanced.iter().next().cloned() {
                token.enhanced.remove(&first);
            }
        }
        if rng.random_bool(0.1) && token.id > 1 {
            token.enhanced.insert(EnhancedDep::new(token.id - 1, "dep"));
        }
    }
    out
}

/// One synthetic sentence with clausal and nominal coordination.
///
/// Surface order is built slot by slot; heads refer to slot positions and
/// become token ids once the order is fixed.
pub fn coordination_sentence<R: Rng>(rng: &mut R, sent_id: &str) -> Sentence {
    struct Slot {
        form: &'static str,
        head: Option<usize>,
        rel: &'static str,
    }
    let mut slots: Vec<Slot> = Vec::new();
    let push = |slots: &mut Vec<Slot>, form, head, rel| {
        slots.push(Slot { form, head, rel });
        slots.len() - 1
    };

    // Pre-verbal material of the first verb; heads patched once it exists.
    let mut pending: Vec<usize> = Vec::new();
    if rng.random_bool(0.6) {
        pending.push(push(&mut slots, "zawsze", None, "advmod"));
    }
    if rng.random_bool(0.8) {
        let noun = push(&mut slots, "dzieci", None, "nsubj");
        pending.push(noun);
    }
    if rng.random_bool(0.3) {
        pending.push(push(&mut slots, "ręce", None, "obj"));
    }
    let verb = push(&mut slots, "czytały", None, "root");
    for idx in pending {
        slots[idx].head = Some(verb);
    }

    if rng.random_bool(0.5) {
        let case = push(&mut slots, "w", None, "case");
        let noun = push(&mut slots, "domu", Some(verb), "obl");
        slots[case].head = Some(noun);
    }

    let conjuncts = if rng.random_bool(0.3) { 2 } else { 1 };
    for _ in 0..conjuncts {
        push(&mut slots, ",", Some(verb), "punct");
        let cc = push(&mut slots, "i", None, "cc");
        let mut own = Vec::new();
        if rng.random_bool(0.3) {
            own.push(push(&mut slots, "znowu", None, "advmod"));
        }
        let second = push(&mut slots, "pisały", Some(verb), "conj");
        slots[cc].head = Some(second);
        for idx in own {
            slots[idx].head = Some(second);
        }
        if rng.random_bool(0.5) {
            push(&mut slots, "listy", Some(second), "obj");
        }
    }

    if rng.random_bool(0.6) {
        let obj = push(&mut slots, "książki", Some(verb), "obj");
        if rng.random_bool(0.5) {
            push(&mut slots, "stare", Some(obj), "amod");
        }
        if rng.random_bool(0.6) {
            let cc = push(&mut slots, "i", None, "cc");
            let second = push(&mut slots, "gazety", Some(obj), "conj");
            slots[cc].head = Some(second);
        }
    }
    push(&mut slots, ".", Some(verb), "punct");

    let tokens = slots
        .iter()
        .enumerate()
        .map(|(idx, slot)| {
            let head = slot.head.map_or(0, |h| h + 1);
            Token::new(idx + 1, slot.form, head, slot.rel)
        })
        .collect();
    Sentence::new(sent_id, tokens)
}

/// Gold enhanced graphs produced by the full rule set, with noise: some
/// children-rule arcs are dropped from gold, some arcs the filters remove
/// are kept in gold, and some arcs no rule predicts are added.
pub fn synthetic_enhanced_gold<R: Rng>(rng: &mut R, sentences: usize) -> Treebank {
    let full = RuleConfig::full();
    let unfiltered = RuleConfig {
        enabled_filters: Vec::new(),
        ..RuleConfig::full()
    };
    let out = (0..sentences)
        .map(|i| {
            let s = coordination_sentence(rng, &format!("syn-{}", i));
            let mut gold = enhance_sentence(&s, &full).unwrap();
            let generous = enhance_sentence(&s, &unfiltered).unwrap();
            for (g, all) in gold.tokens.iter_mut().zip(&generous.tokens) {
                let basic = EnhancedDep::new(g.head, g.deprel.clone());
                let extra: Vec<EnhancedDep> = g
                    .enhanced
                    .iter()
                    .filter(|d| **d != basic && d.head != 0 && g.deprel != "conj")
                    .cloned()
                    .collect();
                for dep in extra {
                    if rng.random_bool(0.1) {
                        g.enhanced.remove(&dep);
                    }
                }
                for dep in all.enhanced.difference(&g.enhanced.clone()) {
                    if dep.label != "punct" && rng.random_bool(0.1) {
                        g.enhanced.insert(dep.clone());
                    }
                }
                if rng.random_bool(0.03) && g.id > 1 && g.head != g.id - 1 {
                    g.enhanced.insert(EnhancedDep::new(g.id - 1, "dep"));
                }
            }
            gold
        })
        .collect();
    Treebank::new(out)
}
