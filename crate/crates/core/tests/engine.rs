use dips_core::metrics::{mean_block_time, win_fraction};
use dips_core::seed::rng_from_seed;
use dips_core::{
    run_simulation, sample_block_winner, BitcoinParams, BlockKind, Chain, DifficultyState, MinerSpec, MinerState,
    Policy, PolicyParamsV1, PolicyParamsV2, ProblemInstance, ProblemParams, SimConfig,
};

fn v2() -> PolicyParamsV2 {
    PolicyParamsV2 {
        classical_epoch: 10,
        solution_epoch: 5,
        classical_target_time: 0.1,
        solution_target_time: 0.1,
        max_update_factor: 4.0,
    }
}

fn config(policy: Policy, miners: Vec<MinerSpec>, blocks: u64, seed: u64) -> SimConfig {
    let total: f64 = miners.iter().map(|m| m.hashrate).sum();
    SimConfig {
        policy,
        miners,
        initial_d_b: total * 0.1,
        initial_d_r: total * 0.1 / 200.0,
        problem: ProblemParams::default(),
        max_blocks: blocks,
        saturation_window: 50,
        replace_on_saturation: true,
        rng_seed: seed,
    }
}

fn paper_miners() -> Vec<MinerSpec> {
    let mut miners: Vec<MinerSpec> = (0..10).map(|i| MinerSpec::classical(i, 1000.0)).collect();
    miners.extend((10..20).map(|i| MinerSpec::solver(i, 1000.0, 90.0)));
    miners
}

#[test]
fn single_miner_waits_difficulty_over_hashrate() {
    let miners = [MinerState::new(MinerSpec::classical(0, 10.0))];
    let mut rng = rng_from_seed(1);
    let n = 10_000;
    let total: f64 = (0..n)
        .map(|_| sample_block_winner(&miners, 100.0, 1.0, &mut rng).unwrap().dt)
        .sum();
    assert!((total / n as f64 - 10.0).abs() < 0.5);
}

#[test]
fn equal_miners_split_evenly() {
    let miners = [
        MinerState::new(MinerSpec::classical(0, 5.0)),
        MinerState::new(MinerSpec::classical(1, 5.0)),
    ];
    let mut rng = rng_from_seed(2);
    let n = 10_000;
    let first = (0..n)
        .filter(|_| sample_block_winner(&miners, 50.0, 1.0, &mut rng).unwrap().miner_id == 0)
        .count();
    // Binomial sd is 50 at n = 10^4.
    assert!((first as i64 - 5000).abs() < 200, "{first}");
}

#[test]
fn wins_follow_hashrate_shares() {
    let rates = [1.0, 2.0, 3.0, 4.0];
    let miners: Vec<MinerState> = rates
        .iter()
        .enumerate()
        .map(|(i, &h)| MinerState::new(MinerSpec::classical(i as u32, h)))
        .collect();
    let mut rng = rng_from_seed(3);
    let n = 10_000;
    let mut counts = [0usize; 4];
    for _ in 0..n {
        counts[sample_block_winner(&miners, 10.0, 1.0, &mut rng).unwrap().index] += 1;
    }
    let chi2: f64 = counts
        .iter()
        .zip(rates)
        .map(|(&c, h)| {
            let expected = n as f64 * h / 10.0;
            (c as f64 - expected).powi(2) / expected
        })
        .sum();
    // 0.1% critical value of chi-squared with 3 degrees of freedom.
    assert!(chi2 < 16.27, "chi2 = {chi2}");
}

#[test]
fn classical_only_bitcoin_run() {
    let bitcoin = BitcoinParams {
        epoch_length: 10,
        target_block_time: 0.1,
        max_update_factor: 4.0,
    };
    let miners = (0..4).map(|i| MinerSpec::classical(i, 50.0)).collect();
    let c = config(Policy::Bitcoin(bitcoin), miners, 100, 4);
    let out = run_simulation(c.clone()).unwrap();
    assert_eq!(out.records.len(), 100);
    assert!(out.records.iter().all(|r| r.kind == BlockKind::Classical));
    assert!(out.records.iter().all(|r| r.d_r == c.initial_d_r));
    assert!(out.replacement_heights.is_empty());
}

#[test]
fn same_seed_same_records() {
    let c = config(Policy::V2(v2()), paper_miners(), 300, 17);
    let a = run_simulation(c.clone()).unwrap();
    let b = run_simulation(c.clone()).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.chain, b.chain);
    let other = run_simulation(SimConfig { rng_seed: 18, ..c }).unwrap();
    assert_ne!(a.records, other.records);
}

#[test]
fn replaying_the_chain_reproduces_it() {
    let c = config(Policy::V2(v2()), paper_miners(), 400, 5);
    let out = run_simulation(c.clone()).unwrap();
    assert!(!out.replacement_heights.is_empty());
    let mut chain = Chain::new();
    let mut state = DifficultyState::new(c.initial_d_b, c.initial_d_r);
    let mut problem = ProblemInstance::new(out.graphs[0].clone(), 0);
    for block in out.chain.blocks() {
        if block.problem_epoch != problem.epoch {
            problem = ProblemInstance::new(out.graphs[block.problem_epoch as usize].clone(), block.problem_epoch);
        }
        chain.append_block(block.clone(), &problem, &state).unwrap();
        if let Some(s) = &block.solution {
            problem.publish(s.score);
        }
        c.policy.on_block(&mut state, block);
    }
    assert_eq!(chain, out.chain);
    assert_eq!(state, out.difficulty);
}

#[test]
fn solution_blocks_reduce_classical_count() {
    let out = run_simulation(config(Policy::V2(v2()), paper_miners(), 600, 1)).unwrap();
    let first = out.records.iter().position(|r| r.kind == BlockKind::Solution).unwrap();
    for r in &out.records[first..] {
        assert!(r.cumulative_classical < r.height + 1);
    }
    assert!(out.replacement_heights.len() >= 2);
}

#[test]
fn zero_solver_v2_matches_bitcoin() {
    let miners: Vec<MinerSpec> = (0..10).map(|i| MinerSpec::classical(i, 1000.0)).collect();
    let bitcoin = BitcoinParams {
        epoch_length: 10,
        target_block_time: 0.1,
        max_update_factor: 4.0,
    };
    for seed in 0..5 {
        let a = run_simulation(config(Policy::V2(v2()), miners.clone(), 500, seed)).unwrap();
        let b = run_simulation(config(Policy::Bitcoin(bitcoin), miners.clone(), 500, seed)).unwrap();
        let db = |o: &dips_core::SimOutcome| o.records.iter().map(|r| r.d_b).collect::<Vec<_>>();
        assert_eq!(db(&a), db(&b));
        let spacing = mean_block_time(&a.records, 100);
        assert!((spacing - 0.1).abs() < 0.03, "{spacing}");
    }
}

#[test]
fn v1_tracks_ratio() {
    let eta = 1.0 / 200.0;
    let policy = Policy::V1(PolicyParamsV1 {
        eta,
        epoch_length: 10,
        target_block_time: 0.1,
        max_update_factor: 4.0,
    });
    let out = run_simulation(config(policy, paper_miners(), 1000, 3)).unwrap();
    let tail = &out.records[500..];
    let ratio = tail.iter().map(|r| r.d_r / r.d_b).sum::<f64>() / tail.len() as f64;
    assert!((ratio / eta - 1.0).abs() < 0.25, "{ratio}");
}

#[test]
fn zero_speed_attacker_is_a_classical_miner() {
    let mut miners: Vec<MinerSpec> = (0..3).map(|i| MinerSpec::classical(i, 100.0)).collect();
    miners.push(MinerSpec::bubka(3, 100.0, 0.0, 3));
    let shares: Vec<f64> = (0..20)
        .map(|seed| {
            win_fraction(
                &run_simulation(config(Policy::V2(v2()), miners.clone(), 500, seed))
                    .unwrap()
                    .records,
                3,
            )
        })
        .collect();
    let share = shares.iter().sum::<f64>() / shares.len() as f64;
    let se = (0.25f64 * 0.75 / 500.0 / 20.0).sqrt();
    assert!((share - 0.25).abs() < 4.0 * se, "{share}");
}
