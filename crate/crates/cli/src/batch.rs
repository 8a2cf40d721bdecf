//! Monte-Carlo batches over attacker seeds.
//!
//! Runs are independent and execute in parallel; the summary depends only on
//! the set of seeds, never on scheduling. Wall-clock timing is reported
//! separately so that two summaries of the same batch compare equal.

use std::time::{Duration, Instant};

use herding_core::sim::{run, Outcome, SimConfig};
use herding_core::SimError;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("seed {seed}: {source}")]
    Run {
        seed: u64,
        #[source]
        source: SimError,
    },
    #[error("empty seed list")]
    NoSeeds,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub outcome: Outcome,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        Some(Stats {
            count: values.len(),
            mean: values.iter().sum::<f64>() / values.len() as f64,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatchSummary {
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Minimum judgment over all escort steps of all runs.
    pub min_j: f64,
    pub max_occupancy: f64,
    /// Completion times of the successful runs.
    pub t_f2: Option<Stats>,
    /// Sorted by seed.
    pub outcomes: Vec<SeedOutcome>,
}

#[derive(Clone, Copy, Debug)]
pub struct BatchTiming {
    pub wall: Duration,
}

/// Runs `config` once per seed. A simulation error aborts the batch and
/// names the offending seed; non-`Done` outcomes are counted, not errors.
pub fn run_batch(config: &SimConfig, seeds: &[u64]) -> Result<(BatchSummary, BatchTiming), BatchError> {
    if seeds.is_empty() {
        return Err(BatchError::NoSeeds);
    }
    let start = Instant::now();
    let mut outcomes = seeds
        .par_iter()
        .map(|&seed| {
            let mut c = config.clone();
            c.attacker.seed = seed;
            run(&c)
                .map(|(_, outcome)| SeedOutcome { seed, outcome })
                .map_err(|source| BatchError::Run { seed, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let wall = start.elapsed();
    outcomes.sort_by_key(|o| o.seed);

    let successes = outcomes.iter().filter(|o| o.outcome.succeeded()).count();
    let t_f2: Vec<f64> = outcomes
        .iter()
        .filter(|o| o.outcome.succeeded())
        .filter_map(|o| o.outcome.t_f2)
        .collect();
    let summary = BatchSummary {
        runs: outcomes.len(),
        successes,
        success_rate: successes as f64 / outcomes.len() as f64,
        min_j: outcomes
            .iter()
            .map(|o| o.outcome.metrics.min_j)
            .fold(f64::INFINITY, f64::min),
        max_occupancy: outcomes
            .iter()
            .map(|o| o.outcome.metrics.max_occupancy)
            .fold(0.0, f64::max),
        t_f2: Stats::of(&t_f2),
        outcomes,
    };
    Ok((summary, BatchTiming { wall }))
}

/// Parses `a..b` (exclusive), `a..=b`, or a comma-separated list.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, String> {
    let num = |s: &str| s.trim().parse::<u64>().map_err(|e| format!("bad seed {s:?}: {e}"));
    let seeds: Vec<u64> = if let Some((a, b)) = text.split_once("..=") {
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = text.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else {
        text.split(',').map(num).collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(format!("seed range {text:?} is empty"));
    }
    Ok(seeds)
}
