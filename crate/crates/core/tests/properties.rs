use dips_core::difficulty::{DifficultyKind, UpdateCause};
use dips_core::seed::{rng_from_seed, uniform01};
use dips_core::{
    bk_advance, brute_force_max_clique, clamp_factor, gen_random_graph, run_simulation, verify_solution_block, Block,
    BlockKind, CliqueSolution, DifficultyState, Graph, MinerSpec, Policy, PolicyParamsV1, PolicyParamsV2,
    ProblemParams, SimConfig, SolverCursor,
};
use proptest::prelude::*;
use rand_core::RngCore;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n, 0.0..=1.0f64, any::<u64>()).prop_map(|(n, p, seed)| gen_random_graph(n, p, seed).unwrap())
}

/// Every report of a run driven by the given budgets, with the step count at
/// which it happened.
fn reports(graph: &Graph, threshold: u32, budgets: &[u64]) -> Vec<(Vec<usize>, u64)> {
    let mut cursor = SolverCursor::new(graph, 0);
    let mut out = Vec::new();
    let mut i = 0;
    while !cursor.is_exhausted() {
        let budget = budgets[i % budgets.len()];
        i += 1;
        let before = cursor.steps_consumed();
        let found = bk_advance(&mut cursor, graph, budget, threshold).unwrap();
        assert!(cursor.steps_consumed() - before <= budget);
        if let Some(s) = found {
            assert!(graph.is_clique(&s.vertices));
            assert!(s.score > threshold);
            out.push((s.vertices, cursor.steps_consumed()));
        }
    }
    out
}

fn pairwise_clique(graph: &Graph, vertices: &[usize]) -> bool {
    let edges: Vec<(usize, usize)> = graph.edges().collect();
    vertices.iter().enumerate().all(|(i, &u)| {
        vertices[i + 1..]
            .iter()
            .all(|&v| edges.contains(&(u.min(v), u.max(v))) && u != v)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn chunking_does_not_change_reports(
        graph in graph_strategy(14),
        threshold in 0u32..5,
        budgets in prop::collection::vec(1u64..7, 1..6),
    ) {
        prop_assert_eq!(reports(&graph, threshold, &budgets), reports(&graph, threshold, &[u64::MAX]));
    }

    #[test]
    fn exhaustion_matches_brute_force(graph in graph_strategy(12)) {
        let omega = brute_force_max_clique(&graph).unwrap();
        let below = reports(&graph, omega - 1, &[u64::MAX]);
        prop_assert!(below.iter().any(|(c, _)| c.len() == omega as usize));
        prop_assert!(reports(&graph, omega, &[u64::MAX]).is_empty());
    }

    #[test]
    fn verification_matches_pairwise_check(
        graph in graph_strategy(10),
        mask in any::<u16>(),
        best in 0u32..6,
    ) {
        let vertices: Vec<usize> = (0..graph.n()).filter(|v| mask & (1 << v) != 0).collect();
        let score = vertices.len() as u32;
        let block = Block {
            height: 0,
            kind: BlockKind::Solution,
            miner_id: 0,
            sim_time: 1.0,
            difficulty_used: 1.0,
            solution: Some(CliqueSolution::new(0, vertices.clone())),
            problem_epoch: 0,
        };
        let expected = pairwise_clique(&graph, &vertices) && score > best;
        prop_assert_eq!(verify_solution_block(&block, &graph, best), expected);
    }

    #[test]
    fn clamp_stays_in_band(raw in 1e-300f64..1e300, x in 1.0001f64..100.0) {
        let f = clamp_factor(raw, x).unwrap();
        prop_assert!(f >= 1.0 / x && f <= x);
        if raw >= 1.0 / x && raw <= x {
            prop_assert_eq!(f, raw);
        }
    }

    #[test]
    fn random_block_streams_keep_difficulties_in_band(
        seed in any::<u64>(),
        policy_index in 0usize..3,
        x in 1.5f64..8.0,
    ) {
        let policy = match policy_index {
            0 => Policy::Bitcoin(dips_core::BitcoinParams { epoch_length: 5, target_block_time: 0.1, max_update_factor: x }),
            1 => Policy::V1(PolicyParamsV1 { eta: 0.01, epoch_length: 5, target_block_time: 0.1, max_update_factor: x }),
            _ => Policy::V2(PolicyParamsV2 {
                classical_epoch: 4,
                solution_epoch: 3,
                classical_target_time: 0.1,
                solution_target_time: 0.1,
                max_update_factor: x,
            }),
        };
        let mut rng = rng_from_seed(seed);
        let mut state = DifficultyState::new(100.0, 1.0);
        let mut time = 0.0;
        for height in 0..400 {
            let r = rng.next_u64();
            // Spacing spans four decades around the target, with some zero gaps.
            if !r.is_multiple_of(16) {
                time += 0.1 * 10f64.powf(uniform01(&mut rng) * 4.0 - 2.0);
            }
            let kind = if r >> 63 == 0 { BlockKind::Classical } else { BlockKind::Solution };
            let block = Block {
                height,
                kind,
                miner_id: 0,
                sim_time: time,
                difficulty_used: 1.0,
                solution: None,
                problem_epoch: 0,
            };
            policy.on_block(&mut state, &block);
            prop_assert!(state.d_b > 0.0 && state.d_r > 0.0);
        }
        for u in &state.updates {
            prop_assert!(!u.floored);
            {
                prop_assert!(u.new / u.old >= (1.0 / x) * (1.0 - 1e-12) && u.new / u.old <= x * (1.0 + 1e-12));
            }
            if u.cause == UpdateCause::Drought {
                prop_assert_eq!(u.kind, DifficultyKind::Reduced);
                prop_assert_eq!(u.new, u.old / x);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn simulated_scores_strictly_increase_per_epoch(seed in any::<u64>()) {
        let mut miners: Vec<MinerSpec> = (0..3).map(|i| MinerSpec::classical(i, 100.0)).collect();
        miners.extend((3..6).map(|i| MinerSpec::solver(i, 100.0, 60.0)));
        miners.push(MinerSpec::bubka(6, 100.0, 200.0, 2));
        let config = SimConfig {
            policy: Policy::V2(PolicyParamsV2 {
                classical_epoch: 10,
                solution_epoch: 5,
                classical_target_time: 0.1,
                solution_target_time: 0.1,
                max_update_factor: 4.0,
            }),
            miners,
            initial_d_b: 70.0,
            initial_d_r: 0.35,
            problem: ProblemParams { n: 24, edge_prob: 0.5 },
            max_blocks: 150,
            saturation_window: 20,
            replace_on_saturation: true,
            rng_seed: seed,
        };
        let out = run_simulation(config).unwrap();
        let mut last: Option<(u64, u32)> = None;
        for b in out.chain.blocks() {
            if let Some(s) = &b.solution {
                if let Some((epoch, score)) = last {
                    if epoch == b.problem_epoch {
                        prop_assert!(s.score > score);
                    }
                }
                last = Some((b.problem_epoch, s.score));
            }
        }
        for w in out.records.windows(2) {
            prop_assert!(w[1].sim_time > w[0].sim_time);
        }
        for r in &out.records {
            prop_assert_eq!(r.cumulative_classical + r.cumulative_solution, r.height + 1);
        }
    }
}
