//! Vote graphs and maximum spanning arborescence decoding.
//!
//! Nodes are `0..=n`, node 0 being the artificial root. Arc weights are
//! vote counts. Among arborescences of equal weight the decoder returns the
//! one whose head vector `(head(1), head(2), ..., head(n))` is
//! lexicographically smallest, i.e. lower heads win and earlier dependents
//! are decided first. [`brute_force_arborescence`] uses the same ordering.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::ops::{Add, Sub};

use thiserror::Error;

/// Largest sentence length accepted by [`brute_force_arborescence`].
pub const BRUTE_FORCE_LIMIT: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("arc {head} -> {dep} is outside the graph with {n} words")]
    OutOfRange { head: usize, dep: usize, n: usize },

    #[error("self-loop on node {0}")]
    SelfLoop(usize),

    #[error("node {0} has no incoming arc reachable from the root")]
    Infeasible(usize),

    #[error("graph has {n} words, exhaustive search is limited to {limit}")]
    TooLarge { n: usize, limit: usize },
}

/// Votes for one arc, keyed by label.
pub type LabelVotes = BTreeMap<String, u32>;

/// Per-sentence digraph with vote-count weights and label multisets.
///
/// The weight of an arc is always the total count of its label multiset.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WeightedArcGraph {
    n: usize,
    arcs: BTreeMap<(usize, usize), LabelVotes>,
}

impl WeightedArcGraph {
    /// An empty graph over words `1..=n` plus the root.
    pub fn new(n: usize) -> Self {
        WeightedArcGraph {
            n,
            arcs: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Record one vote for `head -> dep` with the given label.
    pub fn add_vote(&mut self, head: usize, dep: usize, label: &str) -> Result<(), GraphError> {
        self.add_votes(head, dep, label, 1)
    }

    /// Record `count` votes for `head -> dep` with the given label.
    pub fn add_votes(
        &mut self,
        head: usize,
        dep: usize,
        label: &str,
        count: u32,
    ) -> Result<(), GraphError> {
        if dep == 0 || dep > self.n || head > self.n {
            return Err(GraphError::OutOfRange {
                head,
                dep,
                n: self.n,
            });
        }
        if head == dep {
            return Err(GraphError::SelfLoop(dep));
        }
        if count == 0 {
            return Ok(());
        }
        *self
            .arcs
            .entry((head, dep))
            .or_default()
            .entry(label.to_owned())
            .or_default() += count;
        Ok(())
    }

    /// Weight of `head -> dep`; 0 when the arc does not exist.
    pub fn weight(&self, head: usize, dep: usize) -> u32 {
        self.arcs
            .get(&(head, dep))
            .map(|votes| votes.values().sum())
            .unwrap_or(0)
    }

    pub fn labels(&self, head: usize, dep: usize) -> Option<&LabelVotes> {
        self.arcs.get(&(head, dep))
    }

    /// All arcs as `(head, dep, weight)`, ordered by head, then dependent.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.arcs
            .iter()
            .map(|(&(head, dep), votes)| (head, dep, votes.values().sum()))
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    /// Multiply every vote count by `factor`.
    pub fn scaled(&self, factor: u32) -> Self {
        let arcs = self
            .arcs
            .iter()
            .map(|(&arc, votes)| {
                let votes = votes
                    .iter()
                    .map(|(label, count)| (label.clone(), count * factor))
                    .collect();
                (arc, votes)
            })
            .collect();
        WeightedArcGraph { n: self.n, arcs }
    }
}

/// A head for every word `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Arborescence {
    heads: Vec<usize>,
}

impl Arborescence {
    /// Build from heads of words `1..=n` in order.
    pub fn from_heads(heads: Vec<usize>) -> Self {
        Arborescence { heads }
    }

    pub fn head(&self, dep: usize) -> usize {
        self.heads[dep - 1]
    }

    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    /// `(dep, head)` pairs in dependent order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.heads
            .iter()
            .enumerate()
            .map(|(idx, &head)| (idx + 1, head))
    }

    /// Sum of arc weights in `g`.
    pub fn weight(&self, g: &WeightedArcGraph) -> u64 {
        self.arcs()
            .map(|(dep, head)| u64::from(g.weight(head, dep)))
            .sum()
    }

    /// Every word reaches 0 without revisiting a node.
    pub fn is_tree(&self) -> bool {
        let n = self.heads.len();
        let mut state = vec![0u8; n + 1];
        state[0] = 2;
        for start in 1..=n {
            let mut path = Vec::new();
            let mut node = start;
            while state[node] == 0 {
                state[node] = 1;
                path.push(node);
                node = self.heads[node - 1];
                if node > n {
                    return false;
                }
            }
            if state[node] == 1 {
                return false;
            }
            for p in path {
                state[p] = 2;
            }
        }
        true
    }
}

/// Position-weighted tie-break component: an element of Z^n compared
/// lexicographically, lowest position first. Stored sparsely without zeros.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct LexKey(Vec<(usize, i64)>);

impl LexKey {
    fn unit(pos: usize, coeff: i64) -> Self {
        if coeff == 0 {
            LexKey(Vec::new())
        } else {
            LexKey(vec![(pos, coeff)])
        }
    }

    fn combine(&self, other: &LexKey, sign: i64) -> LexKey {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < other.0.len() {
            let a = self.0.get(i);
            let b = other.0.get(j);
            let (pos, coeff) = match (a, b) {
                (Some(&(pa, ca)), Some(&(pb, cb))) if pa == pb => {
                    i += 1;
                    j += 1;
                    (pa, ca + sign * cb)
                }
                (Some(&(pa, ca)), Some(&(pb, _))) if pa < pb => {
                    i += 1;
                    (pa, ca)
                }
                (Some(&(pa, ca)), None) => {
                    i += 1;
                    (pa, ca)
                }
                (_, Some(&(pb, cb))) => {
                    j += 1;
                    (pb, sign * cb)
                }
                (None, None) => unreachable!(),
            };
            if coeff != 0 {
                out.push((pos, coeff));
            }
        }
        LexKey(out)
    }
}

impl Ord for LexKey {
    fn cmp(&self, other: &Self) -> Ordering {
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.0.get(i), other.0.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(&(_, ca)), None) => return ca.cmp(&0),
                (None, Some(&(_, cb))) => return 0.cmp(&cb),
                (Some(&(pa, ca)), Some(&(pb, cb))) => match pa.cmp(&pb) {
                    Ordering::Less => return ca.cmp(&0),
                    Ordering::Greater => return 0.cmp(&cb),
                    Ordering::Equal => {
                        if ca != cb {
                            return ca.cmp(&cb);
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }
}

impl PartialOrd for LexKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Arc score in the ordered group Z x Z^n: votes first, then the tie-break.
/// An arc `h -> d` carries `-h` at position `d`, so maximizing the sum over
/// a tree minimizes its head vector lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Score {
    votes: i64,
    order: LexKey,
}

impl Score {
    fn arc(head: usize, dep: usize, votes: u32) -> Self {
        Score {
            votes: i64::from(votes),
            order: LexKey::unit(dep, -(head as i64)),
        }
    }
}

impl Add for &Score {
    type Output = Score;

    fn add(self, rhs: &Score) -> Score {
        Score {
            votes: self.votes + rhs.votes,
            order: self.order.combine(&rhs.order, 1),
        }
    }
}

impl Sub for &Score {
    type Output = Score;

    fn sub(self, rhs: &Score) -> Score {
        Score {
            votes: self.votes - rhs.votes,
            order: self.order.combine(&rhs.order, -1),
        }
    }
}

#[derive(Clone, Debug)]
struct Edge {
    from: usize,
    to: usize,
    score: Score,
    /// Index of the edge this one was derived from one level up.
    source: usize,
}

/// Maximum spanning arborescence rooted at 0 (Chu-Liu-Edmonds).
///
/// Multiple dependents of the root are allowed.
pub fn cle_decode(g: &WeightedArcGraph) -> Result<Arborescence, GraphError> {
    let n = g.n();
    let edges: Vec<Edge> = g
        .arcs()
        .enumerate()
        .map(|(idx, (head, dep, weight))| Edge {
            from: head,
            to: dep,
            score: Score::arc(head, dep, weight),
            source: idx,
        })
        .collect();

    let mut has_incoming = vec![false; n + 1];
    for edge in &edges {
        has_incoming[edge.to] = true;
    }
    if let Some(node) = (1..=n).find(|&node| !has_incoming[node]) {
        return Err(GraphError::Infeasible(node));
    }

    let chosen = contract_and_solve(n + 1, 0, &edges).map_err(GraphError::Infeasible)?;
    let mut heads = vec![0; n];
    for (node, &edge) in chosen.iter().enumerate().skip(1) {
        heads[node - 1] = edges[edge].from;
    }
    Ok(Arborescence { heads })
}

/// Returns, per node, the index of its selected incoming edge (unused for
/// the root). On failure returns a node without a feasible incoming edge.
fn contract_and_solve(node_count: usize, root: usize, edges: &[Edge]) -> Result<Vec<usize>, usize> {
    let mut best: Vec<Option<usize>> = vec![None; node_count];
    for (idx, edge) in edges.iter().enumerate() {
        if edge.to == root {
            continue;
        }
        let better = match best[edge.to] {
            None => true,
            Some(current) => edge.score > edges[current].score,
        };
        if better {
            best[edge.to] = Some(idx);
        }
    }

    let mut chosen = vec![usize::MAX; node_count];
    for node in 0..node_count {
        if node == root {
            continue;
        }
        match best[node] {
            Some(edge) => chosen[node] = edge,
            None => return Err(node),
        }
    }

    let cycle = match find_cycle(node_count, root, |node| edges[chosen[node]].from) {
        Some(cycle) => cycle,
        None => return Ok(chosen),
    };

    // Contract: cycle nodes collapse into one new node placed last.
    let mut in_cycle = vec![false; node_count];
    for &node in &cycle {
        in_cycle[node] = true;
    }
    let mut mapping = vec![0; node_count];
    let mut next = 0;
    for node in 0..node_count {
        if !in_cycle[node] {
            mapping[node] = next;
            next += 1;
        }
    }
    let contracted = next;
    for &node in &cycle {
        mapping[node] = contracted;
    }

    let mut sub_edges = Vec::with_capacity(edges.len());
    for (idx, edge) in edges.iter().enumerate() {
        let (from, to) = (mapping[edge.from], mapping[edge.to]);
        if from == to {
            continue;
        }
        let score = if in_cycle[edge.to] {
            &edge.score - &edges[chosen[edge.to]].score
        } else {
            edge.score.clone()
        };
        sub_edges.push(Edge {
            from,
            to,
            score,
            source: idx,
        });
    }

    let sub_chosen =
        contract_and_solve(contracted + 1, mapping[root], &sub_edges).map_err(|node| {
            if node == contracted {
                cycle[0]
            } else {
                (0..node_count)
                    .find(|&original| mapping[original] == node && !in_cycle[original])
                    .unwrap_or(node)
            }
        })?;

    let mut result = vec![usize::MAX; node_count];
    for node in 0..node_count {
        if node == root || in_cycle[node] {
            continue;
        }
        result[node] = sub_edges[sub_chosen[mapping[node]]].source;
    }
    let entering = sub_edges[sub_chosen[contracted]].source;
    let broken = edges[entering].to;
    for &node in &cycle {
        result[node] = if node == broken {
            entering
        } else {
            chosen[node]
        };
    }

    Ok(result)
}

/// A cycle in the parent function, as a list of nodes, smallest first.
fn find_cycle(
    node_count: usize,
    root: usize,
    parent: impl Fn(usize) -> usize,
) -> Option<Vec<usize>> {
    let mut state = vec![0u8; node_count];
    state[root] = 2;
    for start in 0..node_count {
        let mut path = Vec::new();
        let mut node = start;
        while state[node] == 0 {
            state[node] = 1;
            path.push(node);
            node = parent(node);
        }
        if state[node] == 1 {
            let pos = path.iter().position(|&p| p == node).unwrap();
            let mut cycle = path[pos..].to_vec();
            cycle.sort_unstable();
            return Some(cycle);
        }
        for p in path {
            state[p] = 2;
        }
    }
    None
}

/// Best arborescence by exhaustive enumeration of head assignments over the
/// graph's arcs. Intended as a test oracle for [`cle_decode`].
pub fn brute_force_arborescence(g: &WeightedArcGraph) -> Result<Arborescence, GraphError> {
    let n = g.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(GraphError::TooLarge {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }

    let mut candidates: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (head, dep, _) in g.arcs() {
        candidates[dep - 1].push(head);
    }
    for (idx, heads) in candidates.iter_mut().enumerate() {
        if heads.is_empty() {
            return Err(GraphError::Infeasible(idx + 1));
        }
        heads.sort_unstable();
    }

    // Odometer over candidate heads; the last dependent varies fastest, so
    // head vectors come out in lexicographic order and the first maximum
    // found is the lexicographically smallest one.
    let mut digits = vec![0usize; n];
    let mut best: Option<(u64, Arborescence)> = None;
    loop {
        let tree = Arborescence {
            heads: digits
                .iter()
                .enumerate()
                .map(|(dep, &digit)| candidates[dep][digit])
                .collect(),
        };
        if tree.is_tree() {
            let weight = tree.weight(g);
            if best.as_ref().is_none_or(|(w, _)| weight > *w) {
                best = Some((weight, tree));
            }
        }

        let mut pos = n;
        loop {
            if pos == 0 {
                return best.map(|(_, tree)| tree).ok_or(GraphError::Infeasible(1));
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < candidates[pos].len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}
