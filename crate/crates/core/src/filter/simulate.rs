use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::filter::kernel::step_outcomes;
use crate::model::partition::Partition;
use crate::model::vector::ProbVector;

/// One observed step of the filtering process. Step 0 carries the start and no label.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub label: Option<usize>,
    pub state: ProbVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterTrace {
    pub seed: u64,
    pub steps: Vec<TraceStep>,
}

impl FilterTrace {
    /// The sequence of observed labels, excluding the unlabeled start.
    pub fn labels(&self) -> Vec<usize> {
        self.steps.iter().filter_map(|s| s.label).collect()
    }

    pub fn final_state(&self) -> &ProbVector {
        &self.steps.last().expect("trace has a start state").state
    }
}

/// Samples an index by inverse CDF over `probs` in order.
pub(crate) fn sample_index(probs: impl Iterator<Item = f64> + Clone, rng: &mut impl Rng) -> usize {
    let total: f64 = probs.clone().sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (k, p) in probs.enumerate() {
        acc += p;
        last = k;
        if target < acc {
            return k;
        }
    }
    last
}

/// Runs the filtering process from `x0` for `steps` transitions using a seeded ChaCha8 stream.
pub fn simulate_filter(x0: &ProbVector, m: &Partition, steps: usize, seed: u64) -> Result<FilterTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_with_rng(x0, m, steps, &mut rng).map(|steps| FilterTrace { seed, steps })
}

pub(crate) fn simulate_with_rng(
    x0: &ProbVector,
    m: &Partition,
    steps: usize,
    rng: &mut impl Rng,
) -> Result<Vec<TraceStep>> {
    if steps == 0 {
        return Err(Error::InvalidParams("simulation needs at least one step".into()));
    }
    if x0.len() != m.num_states() {
        return Err(Error::DimensionMismatch(format!(
            "start has {} coordinates for {} states",
            x0.len(),
            m.num_states()
        )));
    }
    let mut out = Vec::with_capacity(steps + 1);
    out.push(TraceStep { label: None, state: x0.clone() });
    let mut x = x0.clone();
    for _ in 0..steps {
        let mut outcomes = step_outcomes(&x, m, 0.0).outcomes;
        let k = sample_index(outcomes.iter().map(|o| o.prob), rng);
        let o = outcomes.swap_remove(k);
        x = o.next;
        out.push(TraceStep { label: Some(o.label), state: x.clone() });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::kernel::evolve;
    use crate::model::matrix::TransitionMatrix;
    use crate::model::partition::partition_from_lumping;

    fn model() -> Partition {
        let p = TransitionMatrix::from_dense(&[
            vec![0.7, 0.3, 0.0],
            vec![0.2, 0.5, 0.3],
            vec![0.4, 0.1, 0.5],
        ])
        .unwrap();
        partition_from_lumping(&p, &["a", "b", "b"]).unwrap()
    }

    #[test]
    fn trivial_partition_trace_is_deterministic() {
        let m = model();
        let triv = Partition::trivial(m.base());
        let x0 = ProbVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        let trace = simulate_filter(&x0, &triv, 5, 3).unwrap();
        let mut x = x0.as_slice().to_vec();
        for step in &trace.steps[1..] {
            x = m.base().left_mul(&x);
            assert!(step.state.l1_distance(&ProbVector::new(x.clone()).unwrap()) < 1e-14);
        }
    }

    #[test]
    fn same_seed_same_trace() {
        let m = model();
        let x0 = ProbVector::uniform(3);
        assert_eq!(simulate_filter(&x0, &m, 50, 11).unwrap(), simulate_filter(&x0, &m, 50, 11).unwrap());
        assert_ne!(simulate_filter(&x0, &m, 50, 11).unwrap(), simulate_filter(&x0, &m, 50, 12).unwrap());
    }

    #[test]
    fn empirical_frequencies_match_evolve() {
        let p = TransitionMatrix::from_dense(&[vec![0.9, 0.1], vec![0.3, 0.7]]).unwrap();
        let m = partition_from_lumping(&p, &["a", "b"]).unwrap();
        let x0 = ProbVector::new(vec![0.4, 0.6]).unwrap();
        let exact = evolve(&x0, &m, 3, 0.0, 1e-10).unwrap().measure;
        let runs = 100_000;
        let mut counts = vec![0usize; exact.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..runs {
            let trace = simulate_with_rng(&x0, &m, 3, &mut rng).unwrap();
            let end = &trace.last().unwrap().state;
            let k = exact
                .atoms()
                .iter()
                .position(|(_, y)| y.l1_distance(end) <= 1e-10)
                .expect("simulated state is an atom of the exact law");
            counts[k] += 1;
        }
        for ((w, _), c) in exact.atoms().iter().zip(counts) {
            let freq = c as f64 / runs as f64;
            let sigma = (w * (1.0 - w) / runs as f64).sqrt();
            assert!((freq - w).abs() <= 3.0 * sigma + 1e-12, "freq {freq} vs {w}");
        }
    }
}
