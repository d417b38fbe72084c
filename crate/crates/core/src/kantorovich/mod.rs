//! Exact Kantorovich distance between finitely supported measures on the
//! simplex (l1 ground cost), barycenter bounds and fiber witnesses.

pub mod retarget;
pub mod transport;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::measure::DiscreteMeasure;
use crate::filter::test_fn::TestFunction;
use crate::model::vector::{l1_distance, ProbVector};

pub use retarget::{distance_to_fiber_witness, retarget_barycenter, Retargeted};
pub use transport::{solve_transport, TransportSolution};

/// Atom-pair count above which the cost matrix is assembled in parallel.
const PARALLEL_COST_CELLS: usize = 4096;

/// An optimal coupling: `(source atom, target atom, mass)` with its cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub entries: Vec<(usize, usize, f64)>,
    pub cost: f64,
}

impl TransportPlan {
    /// Largest deviation of the plan's marginals from the given weights.
    pub fn marginal_error(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        let mut rows = mu.weights();
        let mut cols = nu.weights();
        for &(i, j, f) in &self.entries {
            rows[i] -= f;
            cols[j] -= f;
        }
        rows.iter().chain(&cols).fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Pairwise l1 distances between the atoms of `mu` and `nu`.
pub fn cost_matrix(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Vec<Vec<f64>> {
    let row = |(_, x): &(f64, ProbVector)| -> Vec<f64> {
        nu.atoms().iter().map(|(_, y)| l1_distance(x.as_slice(), y.as_slice())).collect()
    };
    if mu.len() * nu.len() > PARALLEL_COST_CELLS {
        mu.atoms().par_iter().map(row).collect()
    } else {
        mu.atoms().iter().map(row).collect()
    }
}

/// `d_K(μ, ν)`: the exact minimum transport cost with l1 ground cost, and a plan attaining it.
pub fn kantorovich_distance(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(f64, TransportPlan)> {
    if mu.is_empty() || nu.is_empty() {
        return Err(Error::InvalidMeasure("empty support".into()));
    }
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch(format!(
            "measures on {} and {} states",
            mu.dim(),
            nu.dim()
        )));
    }
    let cost = cost_matrix(mu, nu);
    let sol = solve_transport(&mu.weights(), &nu.weights(), &cost)?;
    let plan = TransportPlan { entries: sol.flows, cost: sol.cost };
    Ok((plan.cost, plan))
}

/// `⟨u, μ⟩ − ⟨u, ν⟩`, a lower bound on `d_K(μ, ν)` whenever `γ(u) ≤ 1`.
pub fn dual_lower_bound(mu: &DiscreteMeasure, nu: &DiscreteMeasure, u: &TestFunction) -> f64 {
    mu.integrate(u) - nu.integrate(u)
}

/// `v(x) = Σ ε_i x_i` with `ε_i` the sign of `(b̄(μ) − b̄(ν))_i` (ties positive).
/// Its dual value equals the barycenter gap.
pub fn sign_function(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> TestFunction {
    let (a, b) = (mu.barycenter(), nu.barycenter());
    let signs: Vec<f64> = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| if x >= y { 1.0 } else { -1.0 })
        .collect();
    TestFunction::sign_combination(&signs)
}

/// `||b̄(μ) − b̄(ν)||₁`, never larger than `d_K(μ, ν)`.
pub fn barycenter_gap(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    mu.barycenter().l1_distance(&nu.barycenter())
}

/// Distance from `μ` to the set of measures with barycenter `q`, which equals `||b̄(μ) − q||₁`.
pub fn distance_to_fiber(mu: &DiscreteMeasure, q: &ProbVector) -> f64 {
    mu.barycenter().l1_distance(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberMass {
    pub mass: f64,
    pub pass: bool,
}

/// Mass of `{x : x_i ≥ q_i/2}` for `μ` with barycenter `q`; it is at least `q_i/2`.
pub fn fiber_mass_check(mu: &DiscreteMeasure, i: usize) -> Result<FiberMass> {
    let q = mu.barycenter();
    let qi = q[i];
    if qi <= 0.0 {
        return Err(Error::InvalidParams(format!("barycenter coordinate {i} is zero")));
    }
    let mass = mu
        .atoms()
        .iter()
        .filter(|(_, x)| x[i] >= qi / 2.0)
        .map(|(w, _)| w)
        .sum::<f64>();
    Ok(FiberMass { mass, pass: mass >= qi / 2.0 - 1e-12 })
}
