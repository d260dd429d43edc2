//! Enumerator against brute-force oracle on small random graphs.

use std::time::{Duration, Instant};

use dips_core::seed::derive_seed;
use dips_core::{bk_advance, brute_force_max_clique, gen_random_graph, CliqueError, Graph, SolverCursor};
use serde::Serialize;

pub const SELFTEST_GRAPHS: usize = 200;
pub const SELFTEST_MAX_VERTICES: usize = 12;
const EDGE_PROBS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleCase {
    pub n: usize,
    pub edge_prob: f64,
    pub seed: u64,
    pub brute_force: u32,
    pub enumerated: u32,
    /// Threshold `omega - 1` reports a clique.
    pub found_below: bool,
    /// Threshold `omega` exhausts without a report.
    pub silent_at: bool,
}

impl OracleCase {
    pub fn passed(&self) -> bool {
        self.brute_force == self.enumerated && self.found_below && self.silent_at
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestReport {
    pub cases: Vec<OracleCase>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl SelftestReport {
    pub fn failures(&self) -> impl Iterator<Item = &OracleCase> {
        self.cases.iter().filter(|c| !c.passed())
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }
}

fn exhaust(graph: &Graph, threshold: u32) -> Result<(Option<Vec<usize>>, u32), CliqueError> {
    let mut cursor = SolverCursor::new(graph, 0);
    let found = bk_advance(&mut cursor, graph, u64::MAX, threshold)?;
    if found.is_none() {
        debug_assert!(cursor.is_exhausted());
    }
    Ok((found.map(|s| s.vertices), cursor.largest_seen()))
}

pub fn check_graph(graph: &Graph) -> Result<OracleCase, CliqueError> {
    let brute_force = brute_force_max_clique(graph)?;
    let (_, enumerated) = exhaust(graph, graph.n() as u32)?;
    let (below, _) = exhaust(graph, brute_force.saturating_sub(1))?;
    let (at, _) = exhaust(graph, brute_force)?;
    Ok(OracleCase {
        n: graph.n(),
        edge_prob: graph.edge_prob(),
        seed: graph.seed(),
        brute_force,
        enumerated,
        found_below: brute_force == 0 || below.is_some_and(|c| graph.is_clique(&c) && c.len() == brute_force as usize),
        silent_at: at.is_none(),
    })
}

/// Runs `count` graphs with `n` cycling through 1..=12 and a spread of
/// edge probabilities.
pub fn run_selftest(count: usize, master_seed: u64) -> Result<SelftestReport, CliqueError> {
    let start = Instant::now();
    let cases = (0..count)
        .map(|i| {
            let n = 1 + i % SELFTEST_MAX_VERTICES;
            let p = EDGE_PROBS[i % EDGE_PROBS.len()];
            let graph = gen_random_graph(n, p, derive_seed(master_seed, &[i as u64]))?;
            check_graph(&graph)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SelftestReport {
        cases,
        elapsed: start.elapsed(),
    })
}
