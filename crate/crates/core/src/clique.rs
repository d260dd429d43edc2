//! Maximum-clique workload: random problem instances, a resumable pivoted
//! Bron–Kerbosch enumerator, and an exhaustive oracle.

use alloc::vec::Vec;

use thiserror::Error;

use crate::bitset::VertexSet;
use crate::chain::CliqueSolution;
use crate::seed::{rng_from_seed, uniform01, uniform_index};

/// Largest graph accepted by [`brute_force_max_clique`].
pub const BRUTE_FORCE_MAX_VERTICES: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliqueError {
    #[error("invalid graph parameters: n = {n}, edge_prob = {edge_prob}")]
    InvalidParams { n: usize, edge_prob: f64 },
    #[error("solver cursor was built for a different graph")]
    CursorGraphMismatch,
    #[error("graph with {n} vertices is too large for exhaustive search (max {max})")]
    TooLarge { n: usize, max: usize },
    #[error("edge ({u}, {v}) is out of range for {n} vertices")]
    VertexOutOfRange { u: usize, v: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
}

/// Undirected simple graph with bitset adjacency.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n: usize,
    adjacency: Vec<VertexSet>,
    seed: u64,
    edge_prob: f64,
    edge_count: usize,
    fingerprint: u64,
}

impl Graph {
    /// Builds a graph from an explicit edge list. Duplicate edges are merged.
    ///
    /// `seed` and `edge_prob` are recorded as 0; such graphs are not claimed to
    /// be regenerable.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, CliqueError> {
        Self::with_origin(n, edges, 0, 0.0)
    }

    /// Builds a graph from an edge list, recording the generator parameters it
    /// claims to come from.
    pub fn with_origin(n: usize, edges: &[(usize, usize)], seed: u64, edge_prob: f64) -> Result<Self, CliqueError> {
        if n == 0 {
            return Err(CliqueError::InvalidParams { n, edge_prob });
        }
        let mut adjacency = alloc::vec![VertexSet::empty(n); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(CliqueError::VertexOutOfRange { u, v, n });
            }
            if u == v {
                return Err(CliqueError::SelfLoop(u));
            }
            adjacency[u].insert(v);
            adjacency[v].insert(u);
        }
        Ok(Self::from_adjacency(n, adjacency, seed, edge_prob))
    }

    fn from_adjacency(n: usize, adjacency: Vec<VertexSet>, seed: u64, edge_prob: f64) -> Self {
        let edge_count = adjacency.iter().map(VertexSet::len).sum::<usize>() / 2;
        // FNV-1a over the vertex count and adjacency words.
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |word: u64| {
            for byte in word.to_le_bytes() {
                hash ^= u64::from(byte);
                hash = hash.wrapping_mul(0x0100_0000_01b3);
            }
        };
        feed(n as u64);
        for row in &adjacency {
            for &w in row.words() {
                feed(w);
            }
        }
        Self {
            n,
            adjacency,
            seed,
            edge_prob,
            edge_count,
            fingerprint: hash,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn edge_prob(&self) -> f64 {
        self.edge_prob
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Hash of the adjacency structure; used to bind cursors to their graph.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.adjacency[u].contains(v)
    }

    pub fn neighbors(&self, v: usize) -> &VertexSet {
        &self.adjacency[v]
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| self.adjacency[u].iter().filter(move |&v| v > u).map(move |v| (u, v)))
    }

    /// True when the vertex list is strictly increasing, in range, and pairwise adjacent.
    pub fn is_clique(&self, vertices: &[usize]) -> bool {
        if vertices.windows(2).any(|w| w[0] >= w[1]) {
            return false;
        }
        if vertices.last().is_some_and(|&v| v >= self.n) {
            return false;
        }
        vertices
            .iter()
            .enumerate()
            .all(|(i, &u)| vertices[i + 1..].iter().all(|&v| self.adjacency[u].contains(v)))
    }
}

/// Draws G(n, p): each pair `u < v`, in lexicographic order, is an edge iff a
/// uniform draw from ChaCha8 seeded with `seed` falls below `edge_prob`.
pub fn gen_random_graph(n: usize, edge_prob: f64, seed: u64) -> Result<Graph, CliqueError> {
    if n == 0 || !(edge_prob > 0.0 && edge_prob < 1.0) {
        return Err(CliqueError::InvalidParams { n, edge_prob });
    }
    let mut rng = rng_from_seed(seed);
    let mut adjacency = alloc::vec![VertexSet::empty(n); n];
    for u in 0..n {
        for v in u + 1..n {
            if uniform01(&mut rng) < edge_prob {
                adjacency[u].insert(v);
                adjacency[v].insert(u);
            }
        }
    }
    Ok(Graph::from_adjacency(n, adjacency, seed, edge_prob))
}

/// The optimization problem currently posed to the network.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub graph: Graph,
    pub epoch: u64,
    /// Best published score (clique size); 0 before any solution.
    pub best_score: u32,
    /// Proven optimum, once some solver has exhausted the enumeration.
    pub optimum: Option<u32>,
}

impl ProblemInstance {
    pub fn new(graph: Graph, epoch: u64) -> Self {
        Self {
            graph,
            epoch,
            best_score: 0,
            optimum: None,
        }
    }

    /// Raises the published best. Scores never decrease.
    pub fn publish(&mut self, score: u32) {
        debug_assert!(score > self.best_score);
        debug_assert!(self.optimum.is_none_or(|opt| score <= opt));
        self.best_score = self.best_score.max(score);
    }
}

#[derive(Clone, Debug)]
struct Frame {
    candidates: VertexSet,
    excluded: VertexSet,
    /// Vertices still to branch on, fixed when the frame is expanded.
    branch: Vec<usize>,
    next: usize,
}

/// Resumable position in a Tomita-pivoted Bron–Kerbosch enumeration.
///
/// The enumeration runs over a private relabelling of the graph so that
/// different solvers can explore in different orders. One step is one frame
/// expansion: the root frame, and every child `(R + v, P ∩ N(v), X ∩ N(v))`.
#[derive(Clone, Debug)]
pub struct SolverCursor {
    fingerprint: u64,
    epoch: u64,
    /// Local index to original vertex.
    order: Vec<usize>,
    adjacency: Vec<VertexSet>,
    stack: Vec<Frame>,
    /// Current R in local indices; the frame at stack depth `i` owns `clique[..i]`.
    clique: Vec<usize>,
    started: bool,
    steps_consumed: u64,
    exhausted: bool,
    largest_seen: u32,
}

impl SolverCursor {
    /// Cursor enumerating in natural vertex order.
    pub fn new(graph: &Graph, epoch: u64) -> Self {
        Self::with_order(graph, epoch, (0..graph.n()).collect())
    }

    /// Cursor enumerating over a uniformly random vertex permutation.
    pub fn shuffled(graph: &Graph, epoch: u64, order_seed: u64) -> Self {
        let mut order: Vec<usize> = (0..graph.n()).collect();
        let mut rng = rng_from_seed(order_seed);
        for i in (1..order.len()).rev() {
            order.swap(i, uniform_index(&mut rng, i + 1));
        }
        Self::with_order(graph, epoch, order)
    }

    fn with_order(graph: &Graph, epoch: u64, order: Vec<usize>) -> Self {
        let n = graph.n();
        let mut rank = alloc::vec![0; n];
        for (local, &v) in order.iter().enumerate() {
            rank[v] = local;
        }
        let adjacency = order
            .iter()
            .map(|&v| {
                let mut row = VertexSet::empty(n);
                for u in graph.neighbors(v).iter() {
                    row.insert(rank[u]);
                }
                row
            })
            .collect();
        Self {
            fingerprint: graph.fingerprint(),
            epoch,
            order,
            adjacency,
            stack: Vec::new(),
            clique: Vec::new(),
            started: false,
            steps_consumed: 0,
            exhausted: false,
            largest_seen: 0,
        }
    }

    pub fn steps_consumed(&self) -> u64 {
        self.steps_consumed
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// Size of the largest R expanded so far; the maximum clique size once exhausted.
    pub fn largest_seen(&self) -> u32 {
        self.largest_seen
    }

    fn frame(&self, candidates: VertexSet, excluded: VertexSet) -> Frame {
        // Pivot maximizing |P ∩ N(u)| over P ∪ X, lowest local index on ties.
        let mut pivot = None;
        let mut best = 0;
        for u in candidates.union(&excluded).iter() {
            let score = candidates.intersection_len(&self.adjacency[u]);
            if pivot.is_none() || score > best {
                pivot = Some(u);
                best = score;
            }
        }
        let branch = match pivot {
            Some(u) => candidates.difference(&self.adjacency[u]).iter().collect(),
            None => Vec::new(),
        };
        Frame {
            candidates,
            excluded,
            branch,
            next: 0,
        }
    }

    fn solution(&self) -> CliqueSolution {
        CliqueSolution::new(self.epoch, self.clique.iter().map(|&l| self.order[l]).collect())
    }

    fn expanded(&mut self) {
        self.steps_consumed += 1;
        self.largest_seen = self.largest_seen.max(self.clique.len() as u32);
    }
}

/// Runs the enumeration for at most `step_budget` steps and returns the first
/// clique with more than `threshold` vertices, if one is reached.
///
/// Reported cliques need not be maximal. The cursor stays resumable after a
/// report; the reported clique's subtree is explored on the next call.
pub fn bk_advance(
    cursor: &mut SolverCursor,
    graph: &Graph,
    step_budget: u64,
    threshold: u32,
) -> Result<Option<CliqueSolution>, CliqueError> {
    if cursor.fingerprint != graph.fingerprint() || cursor.order.len() != graph.n() {
        return Err(CliqueError::CursorGraphMismatch);
    }
    let mut used = 0;
    loop {
        if cursor.exhausted {
            return Ok(None);
        }
        if !cursor.started {
            if used == step_budget {
                return Ok(None);
            }
            let n = cursor.order.len();
            let root = cursor.frame(VertexSet::full(n), VertexSet::empty(n));
            cursor.stack.push(root);
            cursor.started = true;
            used += 1;
            cursor.expanded();
            continue;
        }
        let depth = cursor.stack.len();
        let Some(top) = cursor.stack.last_mut() else {
            cursor.exhausted = true;
            continue;
        };
        if top.next == top.branch.len() {
            cursor.stack.pop();
            if cursor.stack.is_empty() {
                cursor.exhausted = true;
            }
            continue;
        }
        if used == step_budget {
            return Ok(None);
        }
        let v = top.branch[top.next];
        top.next += 1;
        let child_candidates = top.candidates.intersection(&cursor.adjacency[v]);
        let child_excluded = top.excluded.intersection(&cursor.adjacency[v]);
        top.candidates.remove(v);
        top.excluded.insert(v);

        cursor.clique.truncate(depth - 1);
        cursor.clique.push(v);
        used += 1;
        cursor.expanded();

        let found = (cursor.clique.len() > threshold as usize).then(|| cursor.solution());
        if !child_candidates.is_empty() {
            let child = cursor.frame(child_candidates, child_excluded);
            cursor.stack.push(child);
        }
        if found.is_some() {
            return Ok(found);
        }
    }
}

/// Exact maximum clique size by running a fresh enumeration to exhaustion.
pub fn max_clique_size(graph: &Graph) -> u32 {
    let mut cursor = SolverCursor::new(graph, 0);
    // Threshold n never reports; the cursor tracks the largest R it expands.
    bk_advance(&mut cursor, graph, u64::MAX, graph.n() as u32).expect("cursor built for this graph");
    cursor.largest_seen()
}

/// Some clique with exactly `size` vertices, if one exists.
pub fn find_clique_of_size(graph: &Graph, size: u32) -> Option<Vec<usize>> {
    if size == 0 {
        return Some(Vec::new());
    }
    let mut cursor = SolverCursor::new(graph, 0);
    bk_advance(&mut cursor, graph, u64::MAX, size - 1)
        .expect("cursor built for this graph")
        .map(|s| s.vertices)
}

/// Exhaustive subset scan. Test oracle, independent of the enumerator.
pub fn brute_force_max_clique(graph: &Graph) -> Result<u32, CliqueError> {
    let n = graph.n();
    if n > BRUTE_FORCE_MAX_VERTICES {
        return Err(CliqueError::TooLarge {
            n,
            max: BRUTE_FORCE_MAX_VERTICES,
        });
    }
    let masks: Vec<u32> = (0..n)
        .map(|u| (0..n).filter(|&v| graph.has_edge(u, v)).fold(0, |m, v| m | 1 << v))
        .collect();
    // is_clique[S] = is_clique[S - low] && low is adjacent to all of S - low.
    let mut is_clique = alloc::vec![false; 1 << n];
    is_clique[0] = true;
    let mut best = 0;
    for set in 1u32..(1 << n) {
        let low = set.trailing_zeros() as usize;
        let rest = set & (set - 1);
        if is_clique[rest as usize] && masks[low] & rest == rest {
            is_clique[set as usize] = true;
            best = best.max(set.count_ones());
        }
    }
    Ok(best)
}
