//! Independent scorer used as an oracle for the evaluator.
//!
//! Reads CoNLL-U text on its own and mirrors the structure of the CoNLL
//! 2018 shared-task script: a flat word list with parent links, functional
//! children collected per word, and per-metric keys compared word by word.
//! Tokenization is assumed identical, so word `i` of the system aligns
//! with word `i` of the gold file.

use std::collections::BTreeMap;

const CONTENT: [&str; 29] = [
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
const FUNCTIONAL: [&str; 7] = ["aux", "cop", "mark", "det", "clf", "case", "cc"];
const UNIVERSAL: [&str; 21] = [
    "PronType", "NumType", "Poss", "Reflex", "Foreign", "Abbr", "Gender", "Animacy", "Number",
    "Case", "Definite", "Degree", "VerbForm", "Mood", "Tense", "Aspect", "Voice", "Evident",
    "Polarity", "Person", "Polite",
];

#[derive(Debug, Clone)]
pub struct Word {
    form: String,
    lemma: String,
    upos: String,
    xpos: String,
    feats: String,
    deprel: String,
    /// Global index of the parent word; `None` for the root.
    parent: Option<usize>,
    /// Enhanced arcs as (global parent index or None, full label).
    deps: Vec<(Option<usize>, String)>,
    sem: Option<String>,
    content: bool,
    functional: bool,
    functional_children: Vec<usize>,
}

pub fn load(text: &str) -> Vec<Word> {
    let mut words: Vec<Word> = Vec::new();
    let mut sentence_start = 0;
    let mut raw_heads: Vec<usize> = Vec::new();
    let mut raw_deps: Vec<Vec<(usize, String)>> = Vec::new();

    let flush = |words: &mut Vec<Word>,
                 start: &mut usize,
                 heads: &mut Vec<usize>,
                 deps: &mut Vec<Vec<(usize, String)>>| {
        for (offset, head) in heads.iter().enumerate() {
            let idx = *start + offset;
            words[idx].parent = if *head == 0 {
                None
            } else {
                Some(*start + head - 1)
            };
            words[idx].deps = deps[offset]
                .iter()
                .map(|(h, l)| (if *h == 0 { None } else { Some(*start + h - 1) }, l.clone()))
                .collect();
        }
        for idx in *start..words.len() {
            if let Some(parent) = words[idx].parent {
                if words[idx].functional {
                    words[parent].functional_children.push(idx);
                }
            }
        }
        *start = words.len();
        heads.clear();
        deps.clear();
    };

    for line in text.lines() {
        if line.trim().is_empty() {
            if !raw_heads.is_empty() {
                flush(
                    &mut words,
                    &mut sentence_start,
                    &mut raw_heads,
                    &mut raw_deps,
                );
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        assert_eq!(cols.len(), 10, "bad line {:?}", line);
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }

        let deprel = cols[7].split(':').next().unwrap().to_string();
        let mut feats: Vec<&str> = cols[5]
            .split('|')
            .filter(|f| UNIVERSAL.contains(&f.split('=').next().unwrap()))
            .collect();
        feats.sort();
        let sem = cols[9]
            .split('|')
            .find_map(|item| item.strip_prefix("SemLabel="))
            .map(str::to_string);
        let deps = if cols[8] == "_" {
            Vec::new()
        } else {
            cols[8]
                .split('|')
                .map(|item| {
                    let (h, l) = item.split_once(':').unwrap();
                    (h.parse().unwrap(), l.to_string())
                })
                .collect()
        };

        words.push(Word {
            form: cols[1].to_string(),
            lemma: cols[2].to_string(),
            upos: cols[3].to_string(),
            xpos: cols[4].to_string(),
            feats: feats.join("|"),
            content: CONTENT.contains(&deprel.as_str()),
            functional: FUNCTIONAL.contains(&deprel.as_str()),
            deprel,
            parent: None,
            deps: Vec::new(),
            sem,
            functional_children: Vec::new(),
        });
        raw_heads.push(cols[6].parse().unwrap());
        raw_deps.push(deps);
    }
    if !raw_heads.is_empty() {
        flush(
            &mut words,
            &mut sentence_start,
            &mut raw_heads,
            &mut raw_deps,
        );
    }
    words
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub gold_total: usize,
    pub system_total: usize,
    pub correct: usize,
}

impl Score {
    pub fn precision(&self) -> f64 {
        if self.system_total == 0 {
            0.0
        } else {
            100.0 * self.correct as f64 / self.system_total as f64
        }
    }
    pub fn recall(&self) -> f64 {
        if self.gold_total == 0 {
            0.0
        } else {
            100.0 * self.correct as f64 / self.gold_total as f64
        }
    }
    pub fn f1(&self) -> f64 {
        let total = self.system_total + self.gold_total;
        if total == 0 {
            0.0
        } else {
            100.0 * 2.0 * self.correct as f64 / total as f64
        }
    }
}

fn alignment_score<K: PartialEq>(
    gold: &[Word],
    system: &[Word],
    key: impl Fn(&[Word], usize) -> K,
    filter: Option<fn(&Word) -> bool>,
) -> Score {
    let keep = |w: &Word| filter.is_none_or(|f| f(w));
    let gold_total = gold.iter().filter(|w| keep(w)).count();
    let system_total = system.iter().filter(|w| keep(w)).count();
    let correct = (0..gold.len())
        .filter(|&i| keep(&gold[i]) && key(gold, i) == key(system, i))
        .count();
    Score {
        gold_total,
        system_total,
        correct,
    }
}

pub fn score(gold_text: &str, system_text: &str) -> BTreeMap<&'static str, Score> {
    let gold = load(gold_text);
    let system = load(system_text);
    assert_eq!(gold.len(), system.len());
    for (g, s) in gold.iter().zip(&system) {
        assert_eq!(g.form, s.form);
    }

    let content: fn(&Word) -> bool = |w| w.content;
    let mut out = BTreeMap::new();
    out.insert(
        "UPOS",
        alignment_score(&gold, &system, |ws, i| ws[i].upos.clone(), None),
    );
    out.insert(
        "XPOS",
        alignment_score(&gold, &system, |ws, i| ws[i].xpos.clone(), None),
    );
    out.insert(
        "UFeats",
        alignment_score(&gold, &system, |ws, i| ws[i].feats.clone(), None),
    );
    out.insert(
        "Lemmas",
        alignment_score(
            &gold,
            &system,
            |ws, i| {
                if gold[i].lemma == "_" {
                    "_".to_string()
                } else {
                    ws[i].lemma.clone()
                }
            },
            None,
        ),
    );
    out.insert(
        "LAS",
        alignment_score(
            &gold,
            &system,
            |ws, i| (ws[i].parent, ws[i].deprel.clone()),
            None,
        ),
    );
    out.insert(
        "MLAS",
        alignment_score(
            &gold,
            &system,
            |ws, i| {
                let w = &ws[i];
                let children: Vec<_> = w
                    .functional_children
                    .iter()
                    .map(|&c| {
                        (
                            c,
                            ws[c].deprel.clone(),
                            ws[c].upos.clone(),
                            ws[c].feats.clone(),
                        )
                    })
                    .collect();
                (
                    w.parent,
                    w.deprel.clone(),
                    w.upos.clone(),
                    w.feats.clone(),
                    children,
                )
            },
            Some(content),
        ),
    );
    out.insert(
        "BLEX",
        alignment_score(
            &gold,
            &system,
            |ws, i| {
                let w = &ws[i];
                let lemma = if w.lemma != "_" {
                    w.lemma.clone()
                } else {
                    w.form.clone()
                };
                (w.parent, w.deprel.clone(), lemma)
            },
            Some(content),
        ),
    );
    out.insert(
        "SLAS",
        alignment_score(
            &gold,
            &system,
            |ws, i| (ws[i].parent, ws[i].deprel.clone(), ws[i].sem.clone()),
            None,
        ),
    );

    let mut elas = Score {
        gold_total: 0,
        system_total: 0,
        correct: 0,
    };
    for (g, s) in gold.iter().zip(&system) {
        elas.gold_total += g.deps.len();
        elas.system_total += s.deps.len();
        elas.correct += s.deps.iter().filter(|d| g.deps.contains(d)).count();
    }
    out.insert("ELAS", elas);
    out
}
