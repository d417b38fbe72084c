use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filter::measure::{merge_atoms, DiscreteMeasure};
use crate::filter::test_fn::TestFunction;
use crate::model::partition::Partition;
use crate::model::vector::ProbVector;

/// Default threshold below which outcome masses are pruned.
pub const DEFAULT_PRUNE: f64 = 1e-12;

/// Atom count above which pushforward fans out over threads.
const PARALLEL_ATOMS: usize = 64;

/// One transition of the filter: label `w` is observed with probability
/// `prob = ||xM(w)||₁` and the state moves to `xM(w)/prob`.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub label: usize,
    pub prob: f64,
    pub next: ProbVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcomes {
    pub outcomes: Vec<Outcome>,
    /// Total probability of outcomes at or below the threshold.
    pub dropped_mass: f64,
}

/// A measure produced by the kernel together with the mass discarded by pruning.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolved {
    pub measure: DiscreteMeasure,
    pub pruned_mass: f64,
}

/// Outcomes of one filter step from `x`, in label order.
pub fn step_outcomes(x: &ProbVector, m: &Partition, threshold: f64) -> StepOutcomes {
    let mut outcomes = Vec::with_capacity(m.num_labels());
    let mut dropped_mass = 0.0;
    for (w, mw) in m.members().iter().enumerate() {
        let y = mw.left_mul(x.as_slice());
        let prob: f64 = y.iter().sum();
        if prob > threshold {
            let next = y.into_iter().map(|v| v / prob).collect();
            outcomes.push(Outcome { label: w, prob, next: ProbVector::from_raw(next) });
        } else {
            dropped_mass += prob;
        }
    }
    StepOutcomes { outcomes, dropped_mass }
}

/// Unnormalized one-step image of weighted atoms; atoms with mass `<= prune` are dropped.
fn push_atoms(atoms: &[(f64, ProbVector)], m: &Partition, prune: f64) -> (Vec<(f64, ProbVector)>, f64) {
    let image = |(weight, x): &(f64, ProbVector)| {
        let step = step_outcomes(x, m, 0.0);
        let mut kept = Vec::with_capacity(step.outcomes.len());
        let mut pruned = weight * step.dropped_mass;
        for o in step.outcomes {
            let mass = weight * o.prob;
            if mass > prune {
                kept.push((mass, o.next));
            } else {
                pruned += mass;
            }
        }
        (kept, pruned)
    };
    let parts: Vec<(Vec<(f64, ProbVector)>, f64)> = if atoms.len() > PARALLEL_ATOMS {
        atoms.par_iter().map(image).collect()
    } else {
        atoms.iter().map(image).collect()
    };
    let mut out = Vec::new();
    let mut pruned = 0.0;
    for (kept, p) in parts {
        out.extend(kept);
        pruned += p;
    }
    (out, pruned)
}

fn normalized(atoms: Vec<(f64, ProbVector)>) -> Result<DiscreteMeasure> {
    if atoms.is_empty() {
        return Err(Error::InvalidMeasure("all mass was pruned".into()));
    }
    DiscreteMeasure::from_mass(atoms)
}

/// `P̆_M μ`: every atom is split by the one-step outcomes, then atoms within
/// `merge_eps` are merged and the result renormalized.
pub fn pushforward(mu: &DiscreteMeasure, m: &Partition, prune: f64, merge_eps: f64) -> Result<Evolved> {
    let (atoms, pruned_mass) = push_atoms(mu.atoms(), m, prune);
    let measure = normalized(merge_atoms(atoms, merge_eps))?;
    Ok(Evolved { measure, pruned_mass })
}

/// `P^n_M(x, ·)` as a discrete measure; `pruned_mass` is the absolute mass lost over all steps.
pub fn evolve(x: &ProbVector, m: &Partition, n: usize, prune: f64, merge_eps: f64) -> Result<Evolved> {
    evolve_measure(&DiscreteMeasure::dirac(x.clone()), m, n, prune, merge_eps)
}

/// `P̆^n_M μ`.
pub fn evolve_measure(mu: &DiscreteMeasure, m: &Partition, n: usize, prune: f64, merge_eps: f64) -> Result<Evolved> {
    if n == 0 {
        return Err(Error::InvalidParams("evolve needs n >= 1".into()));
    }
    let mut atoms = mu.atoms().to_vec();
    let mut pruned_mass = 0.0;
    for _ in 0..n {
        let (next, pruned) = push_atoms(&atoms, m, prune);
        pruned_mass += pruned;
        atoms = merge_atoms(next, merge_eps);
    }
    Ok(Evolved { measure: normalized(atoms)?, pruned_mass })
}

/// `T_M u(x) = Σ_w ||xM(w)|| u(xM(w)/||xM(w)||)`.
pub fn transition_operator(u: &TestFunction, m: &Partition, x: &ProbVector) -> f64 {
    step_outcomes(x, m, 0.0)
        .outcomes
        .iter()
        .map(|o| o.prob * u.eval(o.next.as_slice()))
        .sum()
}

/// `T^n_M u(x) = ⟨u, P^n_M(x, ·)⟩`, evaluated without pruning or merging.
pub fn transition_operator_n(u: &TestFunction, m: &Partition, x: &ProbVector, n: usize) -> f64 {
    if n == 0 {
        return u.eval(x.as_slice());
    }
    let mut atoms = vec![(1.0, x.clone())];
    for _ in 0..n {
        atoms = push_atoms(&atoms, m, 0.0).0;
    }
    atoms.iter().map(|(w, y)| w * u.eval(y.as_slice())).sum()
}
