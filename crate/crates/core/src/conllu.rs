//! Reading, validating and writing CoNLL-U treebanks.
//!
//! Comment lines and multiword-token range lines are carried through
//! verbatim. The DEPS column is parsed into a set of `(head, label)` pairs
//! and written back sorted by head, then label.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

/// MISC key that carries the semantic label of a token unless configured
/// otherwise.
pub const DEFAULT_SEM_LABEL_KEY: &str = "SemLabel";

const EMPTY: &str = "_";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConlluError {
    #[error("sentence {sentence}, line {line}: {message}")]
    Parse {
        /// 1-based sentence number within the input.
        sentence: usize,
        /// 1-based line number within the input.
        line: usize,
        message: String,
    },

    #[error("sentence '{sent_id}' is not a well-formed tree: {}", join_violations(.violations))]
    InvalidTree {
        sent_id: String,
        violations: Vec<Violation>,
    },

    #[error("cannot split {sentences} sentences into {k} folds")]
    FoldCount { k: usize, sentences: usize },
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// One enhanced dependency: a head (0 for the artificial root) and a label.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EnhancedDep {
    pub head: usize,
    pub label: String,
}

impl EnhancedDep {
    pub fn new(head: usize, label: impl Into<String>) -> Self {
        EnhancedDep {
            head,
            label: label.into(),
        }
    }
}

impl fmt::Display for EnhancedDep {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "{}:{}", self.head, self.label)
    }
}

/// A syntactic word of a sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    /// Feature items (`Key=Value`) in file order; empty for `_`.
    pub feats: Vec<String>,
    pub head: usize,
    pub deprel: String,
    /// Ordering of the set is the DEPS serialization order.
    pub enhanced: BTreeSet<EnhancedDep>,
    pub misc: String,
    pub sem_label: Option<String>,
}

impl Token {
    /// A token with all non-syntactic columns set to `_`.
    pub fn new(id: usize, form: impl Into<String>, head: usize, deprel: impl Into<String>) -> Self {
        Token {
            id,
            form: form.into(),
            lemma: EMPTY.to_owned(),
            upos: EMPTY.to_owned(),
            xpos: EMPTY.to_owned(),
            feats: Vec::new(),
            head,
            deprel: deprel.into(),
            enhanced: BTreeSet::new(),
            misc: EMPTY.to_owned(),
            sem_label: None,
        }
    }

    /// Features as a canonical string: items sorted, joined by `|`, `_` when empty.
    pub fn canonical_feats(&self) -> String {
        if self.feats.is_empty() {
            return EMPTY.to_owned();
        }
        let mut feats = self.feats.clone();
        feats.sort();
        feats.join("|")
    }

    /// Value of a feature, if present.
    pub fn feature(&self, name: &str) -> Option<&str> {
        self.feats.iter().find_map(|item| {
            let (key, value) = item.split_once('=')?;
            (key == name).then_some(value)
        })
    }

    fn feats_column(&self) -> String {
        if self.feats.is_empty() {
            EMPTY.to_owned()
        } else {
            self.feats.join("|")
        }
    }

    fn deps_column(&self) -> String {
        if self.enhanced.is_empty() {
            return EMPTY.to_owned();
        }
        self.enhanced
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("|")
    }

    /// MISC column with the semantic label written under `key`. An unchanged
    /// label leaves the original column untouched.
    fn misc_column(&self, key: &str) -> String {
        if misc_value(&self.misc, key) == self.sem_label.as_deref() {
            return self.misc.clone();
        }

        let mut items: Vec<String> = if self.misc == EMPTY {
            Vec::new()
        } else {
            self.misc.split('|').map(ToOwned::to_owned).collect()
        };
        let position = items
            .iter()
            .position(|item| item.split_once('=').map(|(k, _)| k) == Some(key));
        match (&self.sem_label, position) {
            (Some(label), Some(idx)) => items[idx] = format!("{}={}", key, label),
            (Some(label), None) => items.push(format!("{}={}", key, label)),
            (None, Some(idx)) => {
                items.remove(idx);
            }
            (None, None) => {}
        }

        if items.is_empty() {
            EMPTY.to_owned()
        } else {
            items.join("|")
        }
    }
}

fn misc_value<'a>(misc: &'a str, key: &str) -> Option<&'a str> {
    if misc == EMPTY {
        return None;
    }
    misc.split('|').find_map(|item| {
        let (k, v) = item.split_once('=')?;
        (k == key).then_some(v)
    })
}

/// A multiword-token range line (`3-4\tdu\t...`), kept verbatim.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiwordLine {
    pub first: usize,
    pub last: usize,
    pub line: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Sentence {
    /// Value of the `# sent_id = ...` comment, empty when absent.
    pub sent_id: String,
    /// Comment lines including the leading `#`.
    pub comments: Vec<String>,
    pub tokens: Vec<Token>,
    pub mwt_lines: Vec<MultiwordLine>,
}

impl Sentence {
    pub fn new(sent_id: impl Into<String>, tokens: Vec<Token>) -> Self {
        Sentence {
            sent_id: sent_id.into(),
            comments: Vec::new(),
            tokens,
            mwt_lines: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token with the given 1-based id.
    pub fn token(&self, id: usize) -> Option<&Token> {
        id.checked_sub(1).and_then(|idx| self.tokens.get(idx))
    }

    /// Ids of the basic dependents of `head`, in sentence order.
    pub fn dependents(&self, head: usize) -> impl Iterator<Item = &Token> + '_ {
        self.tokens.iter().filter(move |t| t.head == head)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Treebank {
    pub sentences: Vec<Sentence>,
}

impl Treebank {
    pub fn new(sentences: Vec<Sentence>) -> Self {
        Treebank { sentences }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }
}

impl FromStr for Treebank {
    type Err = ConlluError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_conllu(s, &ConlluOptions::default())
    }
}

impl fmt::Display for Treebank {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(&serialize_conllu(self))
    }
}

/// Reader/writer settings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConlluOptions {
    /// Run [`validate_tree`] on every sentence and fail on violations.
    pub require_tree: bool,
    /// MISC key holding the semantic label.
    pub sem_label_key: String,
}

impl Default for ConlluOptions {
    fn default() -> Self {
        ConlluOptions {
            require_tree: false,
            sem_label_key: DEFAULT_SEM_LABEL_KEY.to_owned(),
        }
    }
}

/// Parse a CoNLL-U document.
pub fn parse_conllu(text: &str, options: &ConlluOptions) -> Result<Treebank, ConlluError> {
    let mut sentences = Vec::new();
    let mut builder = SentenceBuilder::default();

    for (idx, raw_line) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);

        if line.trim().is_empty() {
            if !builder.is_empty() {
                let sentence = builder.finish(sentences.len() + 1, line_no)?;
                sentences.push(sentence);
                builder = SentenceBuilder::default();
            }
            continue;
        }

        builder.push_line(line, sentences.len() + 1, line_no, options)?;
    }

    if !builder.is_empty() {
        let line_no = text.split('\n').count();
        sentences.push(builder.finish(sentences.len() + 1, line_no)?);
    }

    let mut seen = HashMap::new();
    for (idx, sentence) in sentences.iter().enumerate() {
        if sentence.sent_id.is_empty() {
            continue;
        }
        if let Some(first) = seen.insert(sentence.sent_id.as_str(), idx) {
            log::warn!(
                "duplicate sent_id '{}' (sentences {} and {})",
                sentence.sent_id,
                first + 1,
                idx + 1
            );
        }
    }

    if options.require_tree {
        for sentence in &sentences {
            let violations = validate_tree(sentence);
            if !violations.is_empty() {
                return Err(ConlluError::InvalidTree {
                    sent_id: sentence.sent_id.clone(),
                    violations,
                });
            }
        }
    }

    Ok(Treebank { sentences })
}

#[derive(Default)]
struct SentenceBuilder {
    sentence: Sentence,
    /// Line number of the first token line.
    first_line: Option<usize>,
    /// Declared heads, checked once the sentence length is known.
    heads: Vec<(usize, usize)>,
}

impl SentenceBuilder {
    fn is_empty(&self) -> bool {
        self.sentence.comments.is_empty()
            && self.sentence.tokens.is_empty()
            && self.sentence.mwt_lines.is_empty()
    }

    fn push_line(
        &mut self,
        line: &str,
        sentence_no: usize,
        line_no: usize,
        options: &ConlluOptions,
    ) -> Result<(), ConlluError> {
        let err = |message: String| ConlluError::Parse {
            sentence: sentence_no,
            line: line_no,
            message,
        };

        if line.starts_with('#') {
            if !self.sentence.tokens.is_empty() || !self.sentence.mwt_lines.is_empty() {
                return Err(err("comment line after token lines".to_owned()));
            }
            if let Some(id) = sent_id_from_comment(line) {
                self.sentence.sent_id = id.to_owned();
            }
            self.sentence.comments.push(line.to_owned());
            return Ok(());
        }

        let columns: Vec<&str> = line.split('\t').collect();
        if columns.len() != 10 {
            return Err(err(format!("expected 10 columns, found {}", columns.len())));
        }

        let id = columns[0];
        if id.contains('.') {
            return Err(err(format!("empty nodes are not supported (id '{}')", id)));
        }

        if let Some((first, last)) = id.split_once('-') {
            let first =
                parse_index(first).map_err(|_| err(format!("invalid range id '{}'", id)))?;
            let last = parse_index(last).map_err(|_| err(format!("invalid range id '{}'", id)))?;
            if first == 0 || last < first {
                return Err(err(format!("invalid range id '{}'", id)));
            }
            if first != self.sentence.tokens.len() + 1 {
                return Err(err(format!(
                    "range '{}' does not start at the next token",
                    id
                )));
            }
            self.sentence.mwt_lines.push(MultiwordLine {
                first,
                last,
                line: line.to_owned(),
            });
            return Ok(());
        }

        let id = parse_index(id).map_err(|_| err(format!("invalid token id '{}'", id)))?;
        let expected = self.sentence.tokens.len() + 1;
        if id != expected {
            let message = if id < expected {
                format!("duplicate or out-of-order token id {}", id)
            } else {
                format!("token id {} where {} was expected", id, expected)
            };
            return Err(err(message));
        }

        let head =
            parse_index(columns[6]).map_err(|_| err(format!("invalid head '{}'", columns[6])))?;
        if head == id {
            return Err(err(format!("token {} is its own head", id)));
        }

        let enhanced = parse_deps(columns[8]).map_err(err)?;
        if let Some(dep) = enhanced.iter().find(|dep| dep.head == id) {
            return Err(err(format!("enhanced self-loop '{}' on token {}", dep, id)));
        }

        let feats = if columns[5] == EMPTY {
            Vec::new()
        } else {
            columns[5].split('|').map(ToOwned::to_owned).collect()
        };

        let misc = columns[9].to_owned();
        let sem_label = misc_value(&misc, &options.sem_label_key).map(ToOwned::to_owned);

        self.first_line.get_or_insert(line_no);
        self.heads.push((line_no, head));
        for dep in &enhanced {
            self.heads.push((line_no, dep.head));
        }

        self.sentence.tokens.push(Token {
            id,
            form: columns[1].to_owned(),
            lemma: columns[2].to_owned(),
            upos: columns[3].to_owned(),
            xpos: columns[4].to_owned(),
            feats,
            head,
            deprel: columns[7].to_owned(),
            enhanced,
            misc,
            sem_label,
        });

        Ok(())
    }

    fn finish(self, sentence_no: usize, line_no: usize) -> Result<Sentence, ConlluError> {
        let n = self.sentence.tokens.len();
        if n == 0 {
            return Err(ConlluError::Parse {
                sentence: sentence_no,
                line: line_no,
                message: "sentence without tokens".to_owned(),
            });
        }

        if let Some(&(line, head)) = self.heads.iter().find(|&&(_, head)| head > n) {
            return Err(ConlluError::Parse {
                sentence: sentence_no,
                line,
                message: format!("head {} out of range (sentence has {} tokens)", head, n),
            });
        }

        if let Some(mwt) = self.sentence.mwt_lines.iter().find(|mwt| mwt.last > n) {
            return Err(ConlluError::Parse {
                sentence: sentence_no,
                line: self.first_line.unwrap_or(line_no),
                message: format!("range {}-{} exceeds sentence length", mwt.first, mwt.last),
            });
        }

        Ok(self.sentence)
    }
}

fn sent_id_from_comment(line: &str) -> Option<&str> {
    let rest = line.strip_prefix('#')?.trim_start();
    let rest = rest.strip_prefix("sent_id")?.trim_start();
    Some(rest.strip_prefix('=')?.trim())
}

fn parse_index(s: &str) -> Result<usize, std::num::ParseIntError> {
    s.parse::<usize>()
}

fn parse_deps(column: &str) -> Result<BTreeSet<EnhancedDep>, String> {
    let mut deps = BTreeSet::new();
    if column == EMPTY {
        return Ok(deps);
    }

    for item in column.split('|') {
        let (head, label) = item
            .split_once(':')
            .ok_or_else(|| format!("malformed DEPS item '{}'", item))?;
        let head = parse_index(head).map_err(|_| format!("invalid DEPS head in '{}'", item))?;
        if label.is_empty() {
            return Err(format!("empty DEPS label in '{}'", item));
        }
        if !deps.insert(EnhancedDep::new(head, label)) {
            return Err(format!("duplicate DEPS item '{}'", item));
        }
    }

    Ok(deps)
}

/// Serialize a treebank with the default options.
pub fn serialize_conllu(tb: &Treebank) -> String {
    serialize_conllu_with(tb, &ConlluOptions::default())
}

/// Serialize a treebank: one blank line after every sentence, DEPS sorted
/// by head and then label.
pub fn serialize_conllu_with(tb: &Treebank, options: &ConlluOptions) -> String {
    let mut out = String::new();
    for sentence in &tb.sentences {
        write_sentence(&mut out, sentence, options);
        out.push('\n');
    }
    out
}

fn write_sentence(out: &mut String, sentence: &Sentence, options: &ConlluOptions) {
    let has_id_comment = sentence
        .comments
        .iter()
        .any(|c| sent_id_from_comment(c).is_some());
    if !has_id_comment && !sentence.sent_id.is_empty() {
        out.push_str("# sent_id = ");
        out.push_str(&sentence.sent_id);
        out.push('\n');
    }
    for comment in &sentence.comments {
        out.push_str(comment);
        out.push('\n');
    }

    let mut mwts = sentence.mwt_lines.iter().peekable();
    for token in &sentence.tokens {
        while let Some(mwt) = mwts.next_if(|mwt| mwt.first <= token.id) {
            out.push_str(&mwt.line);
            out.push('\n');
        }

        let columns = [
            token.id.to_string(),
            token.form.clone(),
            token.lemma.clone(),
            token.upos.clone(),
            token.xpos.clone(),
            token.feats_column(),
            token.head.to_string(),
            token.deprel.clone(),
            token.deps_column(),
            token.misc_column(&options.sem_label_key),
        ];
        out.push_str(&columns.join("\t"));
        out.push('\n');
    }
}

/// A reason why the basic head function of a sentence is not a tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Violation {
    HeadOutOfRange {
        token: usize,
        head: usize,
    },
    /// Tokens on one cycle, smallest id first.
    Cycle {
        tokens: Vec<usize>,
    },
    MultipleRoots {
        tokens: Vec<usize>,
    },
    RootLabelOnNonRoot {
        token: usize,
    },
    Unreachable {
        token: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationKind {
    HeadOutOfRange,
    Cycle,
    MultipleRoots,
    RootLabelOnNonRoot,
    Unreachable,
}

impl Violation {
    pub fn kind(&self) -> ViolationKind {
        match self {
            Violation::HeadOutOfRange { .. } => ViolationKind::HeadOutOfRange,
            Violation::Cycle { .. } => ViolationKind::Cycle,
            Violation::MultipleRoots { .. } => ViolationKind::MultipleRoots,
            Violation::RootLabelOnNonRoot { .. } => ViolationKind::RootLabelOnNonRoot,
            Violation::Unreachable { .. } => ViolationKind::Unreachable,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        let join = |ids: &[usize]| {
            ids.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            Violation::HeadOutOfRange { token, head } => {
                write!(f, "head {} of token {} is out of range", head, token)
            }
            Violation::Cycle { tokens } => write!(f, "cycle through tokens {}", join(tokens)),
            Violation::MultipleRoots { tokens } => {
                write!(f, "multiple root dependents: {}", join(tokens))
            }
            Violation::RootLabelOnNonRoot { token } => {
                write!(f, "token {} has deprel 'root' but a non-root head", token)
            }
            Violation::Unreachable { token } => {
                write!(f, "token {} is not reachable from the root", token)
            }
        }
    }
}

/// Check that the basic heads form one tree rooted at 0 with a single root
/// dependent.
pub fn validate_tree(s: &Sentence) -> Vec<Violation> {
    let n = s.tokens.len();
    let mut violations = Vec::new();

    let heads: Vec<Option<usize>> = s
        .tokens
        .iter()
        .enumerate()
        .map(|(idx, token)| {
            let id = idx + 1;
            if token.head > n {
                violations.push(Violation::HeadOutOfRange {
                    token: id,
                    head: token.head,
                });
                None
            } else {
                Some(token.head)
            }
        })
        .collect();

    // Cycle detection over the functional graph dep -> head.
    // 0 = unvisited, 1 = on the current path, 2 = done.
    let mut state = vec![0u8; n + 1];
    for start in 1..=n {
        let mut path = Vec::new();
        let mut node = start;
        while node != 0 && state[node] == 0 {
            state[node] = 1;
            path.push(node);
            match heads[node - 1] {
                Some(head) => node = head,
                None => break,
            }
        }
        if node != 0 && state[node] == 1 {
            let pos = path.iter().position(|&p| p == node).unwrap();
            let mut cycle = path[pos..].to_vec();
            cycle.sort_unstable();
            violations.push(Violation::Cycle { tokens: cycle });
        }
        for p in path {
            state[p] = 2;
        }
    }

    let roots: Vec<usize> = s
        .tokens
        .iter()
        .filter(|t| t.head == 0)
        .map(|t| t.id)
        .collect();
    if roots.len() > 1 {
        violations.push(Violation::MultipleRoots { tokens: roots });
    }

    for (idx, token) in s.tokens.iter().enumerate() {
        if token.deprel == "root" && token.head != 0 {
            violations.push(Violation::RootLabelOnNonRoot { token: idx + 1 });
        }
    }

    let mut children = vec![Vec::new(); n + 1];
    for (idx, head) in heads.iter().enumerate() {
        if let Some(head) = head {
            children[*head].push(idx + 1);
        }
    }
    let mut reached = vec![false; n + 1];
    let mut stack = vec![0];
    reached[0] = true;
    while let Some(node) = stack.pop() {
        for &child in &children[node] {
            if !reached[child] {
                reached[child] = true;
                stack.push(child);
            }
        }
    }
    for (id, reached) in reached.iter().enumerate().skip(1) {
        if !reached {
            violations.push(Violation::Unreachable { token: id });
        }
    }

    violations
}

/// Split into `k` contiguous folds for jackknifing. Returns `(train,
/// heldout)` pairs; the first `len % k` folds get one extra sentence.
pub fn split_folds(tb: &Treebank, k: usize) -> Result<Vec<(Treebank, Treebank)>, ConlluError> {
    let n = tb.sentences.len();
    if k < 2 || k > n {
        return Err(ConlluError::FoldCount { k, sentences: n });
    }

    let base = n / k;
    let extra = n % k;
    let mut bounds = Vec::with_capacity(k);
    let mut start = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        bounds.push(start..start + size);
        start += size;
    }

    Ok(bounds
        .iter()
        .map(|range| {
            let heldout = tb.sentences[range.clone()].to_vec();
            let train = tb.sentences[..range.start]
                .iter()
                .chain(&tb.sentences[range.end..])
                .cloned()
                .collect();
            (Treebank::new(train), Treebank::new(heldout))
        })
        .collect())
}
