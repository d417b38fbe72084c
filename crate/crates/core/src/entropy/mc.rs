use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::entropy::one_step_entropy;
use crate::error::{Error, Result};
use crate::filter::step_outcomes;
use crate::model::{FilterModel, Partition, ProbVector};
use crate::stability::{condition_b1_detect, B1Policy, DEFAULT_TOL};

/// Batches used for the batch-means standard error.
pub const MC_BATCHES: usize = 20;

/// Word length and product budget of the stability probe attached to estimates.
const PROBE_LEN: usize = 8;
const PROBE_BUDGET: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    /// Mean of `Σ_w h(||Z_t M(w)||)` over the retained steps, in bits.
    pub estimate: f64,
    /// Batch-means standard error.
    pub stderr: f64,
    pub samples: usize,
    /// Whether a bounded rank-1 search found the filter stable. Without it
    /// the time average need not approach the entropy rate.
    pub stable: bool,
}

/// Runs the filter from `π` with a seeded ChaCha8 stream, discards `burn_in`
/// steps and averages the one-step outcome entropy over `samples` steps.
pub fn entropy_rate_mc(model: &FilterModel, burn_in: usize, samples: usize, seed: u64) -> Result<McEstimate> {
    if samples < MC_BATCHES {
        return Err(Error::InvalidParams(format!("need at least {MC_BATCHES} samples, got {samples}")));
    }
    let m = model.partition();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = model.stationary().clone();
    let batch = samples / MC_BATCHES;
    let mut sums = [0.0; MC_BATCHES];
    let mut total = 0.0;
    for t in 0..burn_in + samples {
        let mut outcomes = step_outcomes(&x, m, 0.0).outcomes;
        let k = crate::filter::simulate::sample_index(outcomes.iter().map(|o| o.prob), &mut rng);
        x = outcomes.swap_remove(k).next;
        if t >= burn_in {
            let v = one_step_entropy(x.as_slice(), m);
            total += v;
            let b = ((t - burn_in) / batch).min(MC_BATCHES - 1);
            sums[b] += v;
        }
    }
    let sizes: Vec<usize> = (0..MC_BATCHES).map(|b| if b + 1 < MC_BATCHES { batch } else { samples - batch * (MC_BATCHES - 1) }).collect();
    let means: Vec<f64> = sums.iter().zip(&sizes).map(|(s, &c)| s / c as f64).collect();
    let estimate = total / samples as f64;
    let var = means.iter().map(|mu| (mu - estimate).powi(2)).sum::<f64>() / (MC_BATCHES - 1) as f64;
    let stable = !condition_b1_detect(m, &B1Policy::auto(PROBE_LEN), DEFAULT_TOL, PROBE_BUDGET).is_undecided();
    Ok(McEstimate { estimate, stderr: (var / MC_BATCHES as f64).sqrt(), samples, stable })
}

/// `max_x Σ_w −||xM(w)|| ln ||xM(w)||` over the vertices of the simplex and
/// `sample_count` seeded uniform points, in nats. A sampled lower estimate of the supremum.
pub fn check_entropy_condition(m: &Partition, sample_count: usize, seed: u64) -> f64 {
    let n = m.num_states();
    let nats = |x: &ProbVector| -> f64 {
        m.members()
            .iter()
            .map(|mw| {
                let p: f64 = mw.left_mul(x.as_slice()).iter().sum();
                if p > 0.0 { -p * p.ln() } else { 0.0 }
            })
            .sum()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vertices = (0..n).map(|i| ProbVector::vertex(n, i));
    let random = (0..sample_count).map(|_| {
        let draws: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        ProbVector::from_mass(draws).expect("positive draws")
    });
    vertices.chain(random.collect::<Vec<_>>()).map(|x| nats(&x)).fold(0.0, f64::max)
}
