//! Summary statistics over simulation output.

use alloc::vec::Vec;

use crate::chain::BlockKind;
use crate::engine::SimRecord;

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    libm::sqrt(ss / (values.len() - 1) as f64)
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / libm::sqrt(sxx * syy)
}

/// 1-based ranks, ties sharing their average rank.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson correlation of tie-averaged ranks).
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    pearson(&ranks(xs), &ranks(ys))
}

/// Fraction of records that are solution blocks.
pub fn solution_fraction(records: &[SimRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let solutions = records.iter().filter(|r| r.kind == BlockKind::Solution).count();
    solutions as f64 / records.len() as f64
}

/// Longest run of consecutive blocks won by `miner_id`.
pub fn longest_run(records: &[SimRecord], miner_id: u32) -> u64 {
    let mut best = 0;
    let mut run = 0;
    for r in records {
        if r.miner_id == miner_id {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

pub fn win_fraction(records: &[SimRecord], miner_id: u32) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().filter(|r| r.miner_id == miner_id).count() as f64 / records.len() as f64
}

/// Mean spacing between the last `window` blocks (fewer if the run is shorter).
pub fn mean_block_time(records: &[SimRecord], window: usize) -> f64 {
    if records.len() < 2 {
        return records.first().map_or(f64::NAN, |r| r.sim_time);
    }
    let start = records.len().saturating_sub(window + 1);
    let tail = &records[start..];
    (tail[tail.len() - 1].sim_time - tail[0].sim_time) / (tail.len() - 1) as f64
}
