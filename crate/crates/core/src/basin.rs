//! Monte Carlo statistics of the basin of 0.
//!
//! Each sample draws from its own ChaCha stream keyed by `(seed, index)`, so
//! the statistics do not depend on how many worker threads run them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::FullBranchMap;
use crate::orbit::classify;
use crate::rational;

#[derive(Clone, Debug, PartialEq)]
pub struct BasinConfig {
    pub samples: usize,
    pub seed: u64,
    /// Step counts `N` at which `x_N = f^N(x_0)` is recorded.
    pub checkpoints: Vec<usize>,
    pub deltas: Vec<f64>,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    /// Start every sample here instead of drawing uniformly on `(0, 1]`.
    pub forced_x0: Option<f64>,
}

impl BasinConfig {
    pub fn new(samples: usize, seed: u64, checkpoints: Vec<usize>, deltas: Vec<f64>) -> Self {
        Self {
            samples,
            seed,
            checkpoints,
            deltas,
            threads: None,
            forced_x0: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasinStats {
    pub sample_count: usize,
    pub seed: u64,
    pub checkpoints: Vec<usize>,
    pub deltas: Vec<f64>,
    /// `fraction_below[d][i]`: fraction of samples with `x_{N_i} < deltas[d]`.
    pub fraction_below: Vec<Vec<f64>>,
    pub median_x_n: Vec<f64>,
    /// Fraction of samples that fell below the float guard by each checkpoint.
    /// Those samples enter the statistics as `x_N = 0`.
    pub escaped_fraction: Vec<f64>,
    /// Mean over samples of the strictly increasing itinerary prefix length.
    pub mean_deepest_cn: f64,
    pub parameters: serde_json::Value,
}

struct SampleResult {
    values: Vec<f64>,
    escaped: Vec<bool>,
    deepest: usize,
}

/// Uniform start on `(0, 1]` for sample `index`.
pub fn sample_start(seed: u64, index: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    1.0 - rng.gen::<f64>()
}

fn run_sample(map: &FullBranchMap, x0: f64, checkpoints: &[usize]) -> Result<SampleResult> {
    let horizon = checkpoints.iter().copied().max().unwrap_or(0);
    let profile = map.profile();
    let mut values = vec![0.0; checkpoints.len()];
    let mut escaped = vec![false; checkpoints.len()];
    let mut itinerary = Vec::with_capacity(horizon + 1);
    let mut x = x0;
    let mut escape_step = None;
    for step in 0..=horizon {
        let k = match map.branch_index(x) {
            Ok(k) => k,
            Err(Error::Precision { .. }) => {
                escape_step = Some(step);
                break;
            }
            Err(e) => return Err(e),
        };
        itinerary.push(k);
        for (slot, &n) in checkpoints.iter().enumerate() {
            if n == step {
                values[slot] = x;
            }
        }
        if step < horizon {
            x = map.float_branch(k)?.eval(x, profile).min(1.0);
        }
    }
    if let Some(m) = escape_step {
        for (slot, &n) in checkpoints.iter().enumerate() {
            if n >= m {
                values[slot] = 0.0;
                escaped[slot] = true;
            }
        }
    }
    Ok(SampleResult {
        values,
        escaped,
        deepest: classify(&itinerary).0,
    })
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn basin_sample(map: &FullBranchMap, config: &BasinConfig) -> Result<BasinStats> {
    if config.samples == 0 {
        return Err(Error::Domain("sample count must be at least 1".into()));
    }
    if config.checkpoints.is_empty() {
        return Err(Error::Domain("at least one checkpoint is required".into()));
    }
    if let Some(x0) = config.forced_x0 {
        map.branch_index(x0)?;
    }
    let checkpoints = &config.checkpoints;
    let work = |i: usize| {
        let x0 = config
            .forced_x0
            .unwrap_or_else(|| sample_start(config.seed, i as u64));
        run_sample(map, x0, checkpoints)
    };
    let results: Vec<SampleResult> = match config.threads {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build()
                .map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
            pool.install(|| (0..config.samples).into_par_iter().map(work).collect::<Result<_>>())?
        }
        None => (0..config.samples).into_par_iter().map(work).collect::<Result<_>>()?,
    };

    let count = results.len() as f64;
    let column = |slot: usize| results.iter().map(|r| r.values[slot]).collect::<Vec<_>>();
    let fraction_below = config
        .deltas
        .iter()
        .map(|&delta| {
            (0..checkpoints.len())
                .map(|slot| results.iter().filter(|r| r.values[slot] < delta).count() as f64 / count)
                .collect()
        })
        .collect();
    let median_x_n = (0..checkpoints.len()).map(|slot| median(column(slot))).collect();
    let escaped_fraction = (0..checkpoints.len())
        .map(|slot| results.iter().filter(|r| r.escaped[slot]).count() as f64 / count)
        .collect();
    let mean_deepest_cn = results.iter().map(|r| r.deepest as f64).sum::<f64>() / count;

    Ok(BasinStats {
        sample_count: config.samples,
        seed: config.seed,
        checkpoints: checkpoints.clone(),
        deltas: config.deltas.clone(),
        fraction_below,
        median_x_n,
        escaped_fraction,
        mean_deepest_cn,
        parameters: serde_json::json!({
            "c": rational::to_string(map.c()),
            "lambda": rational::to_string(map.lambda()),
            "schedule": map.schedule().describe(),
            "strict": map.config().strict_mode,
            "quad_tol": map.quad_tol(),
            "max_float_branch": map.max_float_branch(),
            "forced_x0": config.forced_x0,
            "sampling": "uniform on (0, 1], ChaCha8 stream per sample index",
        }),
    })
}
