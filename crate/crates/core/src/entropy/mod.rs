//! Entropy of the observation process in bits: finite-horizon path
//! entropies `Hⁿ(Y;x)`, their increments, monotone brackets for the entropy
//! rate, and a Monte Carlo estimate along the filter.

pub mod mc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filter::evolve;
use crate::model::{FilterModel, Partition, ProbVector};

pub use mc::{check_entropy_condition, entropy_rate_mc, McEstimate};

/// States with stationary mass at or below this are left out of the lower bracket.
pub const PI_FLOOR: f64 = 1e-12;

/// `h(t) = −t log₂ t` with `h(0) = 0`.
pub fn h(t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfUnitInterval(t));
    }
    Ok(h_bits(t))
}

/// `h` without the domain check; masses come from sums that may overshoot 1 by rounding.
pub(crate) fn h_bits(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        -t * t.log2()
    }
}

/// Compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// `Hⁿ(Y;x)` together with what pruning left out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathEntropy {
    pub n: usize,
    pub value: f64,
    /// Total mass of words cut off at or below the pruning threshold.
    pub pruned_mass: f64,
    /// Upper bound on the entropy the cut words would have added.
    pub budget: f64,
}

#[derive(Debug, Clone, Default)]
struct Levels {
    h: Vec<Kahan>,
    /// Per level: pruned mass, pruned count, Σ mass × unexplored depth.
    mass: Vec<Kahan>,
    count: Vec<usize>,
    deep: Vec<Kahan>,
}

impl Levels {
    fn new(n: usize) -> Self {
        Self {
            h: vec![Kahan::default(); n],
            mass: vec![Kahan::default(); n],
            count: vec![0; n],
            deep: vec![Kahan::default(); n],
        }
    }

    fn merge(&mut self, other: &Levels) {
        for k in 0..self.h.len() {
            self.h[k].add(other.h[k].sum);
            self.mass[k].add(other.mass[k].sum);
            self.count[k] += other.count[k];
            self.deep[k].add(other.deep[k].sum);
        }
    }
}

/// Accounts for the word ending in the unnormalized vector `next` at `depth` (0-based), then its children.
fn visit(m: &Partition, next: &[f64], depth: usize, prune: f64, levels: &mut Levels) {
    let n = levels.h.len();
    let p: f64 = next.iter().sum();
    if p <= 0.0 {
        return;
    }
    if p <= prune {
        // every level at or below this word loses its subtree
        for k in depth..n {
            levels.mass[k].add(p);
            levels.count[k] += 1;
            levels.deep[k].add(p * (k - depth) as f64);
        }
        return;
    }
    levels.h[depth].add(h_bits(p));
    if depth + 1 < n {
        for member in m.members() {
            visit(m, &member.left_mul(next), depth + 1, prune, levels);
        }
    }
}

/// `H¹(Y;x), …, Hⁿ(Y;x)` from a single depth-first pass over the word tree,
/// reusing prefix products. Words of mass at most `prune` are cut with their
/// subtrees. A cut word of mass `m` at depth `d` can add at most
/// `h(m) + m (k − d) log₂|𝒲|` to `Hᵏ`, and by concavity the `h` terms sum to
/// at most `c h(M/c)` for `c` cut words of total mass `M`.
pub fn entropy_profile(x: &ProbVector, m: &Partition, n: usize, prune: f64) -> Result<Vec<PathEntropy>> {
    if n == 0 {
        return Err(Error::InvalidParams("horizon must be at least 1".into()));
    }
    if x.len() != m.num_states() {
        return Err(Error::DimensionMismatch(format!("start has {} coordinates for {} states", x.len(), m.num_states())));
    }
    // first letters in parallel, combined in label order
    let branches: Vec<Levels> = (0..m.num_labels())
        .into_par_iter()
        .map(|w| {
            let mut levels = Levels::new(n);
            visit(m, &m.member(w).left_mul(x.as_slice()), 0, prune, &mut levels);
            levels
        })
        .collect();
    let mut total = Levels::new(n);
    for b in &branches {
        total.merge(b);
    }
    let log_labels = (m.num_labels() as f64).log2();
    Ok((0..n)
        .map(|k| {
            let (mass, count) = (total.mass[k].sum, total.count[k]);
            let cut = if count > 0 { count as f64 * h_bits((mass / count as f64).min(1.0)) } else { 0.0 };
            PathEntropy { n: k + 1, value: total.h[k].sum, pruned_mass: mass, budget: cut + total.deep[k].sum * log_labels }
        })
        .collect())
}

/// `Hⁿ(Y;x) = Σ_{|w|=n} h(||x M(w)||)`.
pub fn entropy_h(x: &ProbVector, m: &Partition, n: usize, prune: f64) -> Result<PathEntropy> {
    Ok(*entropy_profile(x, m, n, prune)?.last().expect("n >= 1"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IncrementMethod {
    /// `H^{n+1} − Hⁿ`.
    Difference,
    /// `Σ_w ∫ h(||y M(w)||) Pⁿ(x, dy)`.
    Integral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Increment {
    pub value: f64,
    /// Bound on the error introduced by pruning.
    pub budget: f64,
}

/// One-step outcome entropy `Σ_w h(||y M(w)||)`.
pub(crate) fn one_step_entropy(y: &[f64], m: &Partition) -> f64 {
    m.members().iter().map(|mw| h_bits(mw.left_mul(y).iter().sum())).sum()
}

/// `H_Rⁿ(Y;x) = H^{n+1}(Y;x) − Hⁿ(Y;x)`, by either side of the identity.
/// For `n = 0` both sides reduce to `H¹(Y;x)`.
pub fn entropy_rate_increment(x: &ProbVector, m: &Partition, n: usize, prune: f64, method: IncrementMethod) -> Result<Increment> {
    match method {
        IncrementMethod::Difference => {
            let p = entropy_profile(x, m, n + 1, prune)?;
            let (hi, lo) = (p[n], if n > 0 { Some(p[n - 1]) } else { None });
            Ok(Increment {
                value: hi.value - lo.map_or(0.0, |l| l.value),
                budget: hi.budget + lo.map_or(0.0, |l| l.budget),
            })
        }
        IncrementMethod::Integral => {
            if n == 0 {
                return Ok(Increment { value: one_step_entropy(x.as_slice(), m), budget: 0.0 });
            }
            // merging only exact duplicates keeps the integral exact
            let ev = evolve(x, m, n, prune, 0.0)?;
            let kept = (1.0 - ev.pruned_mass).max(0.0);
            let mut acc = Kahan::default();
            for (beta, y) in ev.measure.atoms() {
                acc.add(beta * one_step_entropy(y.as_slice(), m));
            }
            let log_labels = (m.num_labels() as f64).log2();
            Ok(Increment { value: kept * acc.sum, budget: ev.pruned_mass * log_labels })
        }
    }
}

/// Lower and upper bracket sequences for `n = 1..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bracket {
    /// `L_n = Σ_i π_i H_Rⁿ(Y;eⁱ)`, nondecreasing in `n`.
    pub lower: Vec<f64>,
    /// `U_n = H_Rⁿ(Y;π)`, nonincreasing in `n`.
    pub upper: Vec<f64>,
    /// Pruning bound plus stationary mass left out of `lower`.
    pub budget: f64,
}

impl Bracket {
    /// Whether `L` is nondecreasing, `U` nonincreasing and `L ≤ U`, each up to `slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        let lower = self.lower.windows(2).all(|w| w[0] <= w[1] + slack);
        let upper = self.upper.windows(2).all(|w| w[1] <= w[0] + slack);
        let ordered = self.lower.iter().zip(&self.upper).all(|(l, u)| l <= &(u + slack));
        lower && upper && ordered
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    pub horizon: usize,
    /// `Hⁿ(Y;π)`.
    pub h_n: f64,
    /// `H_Rⁿ(Y;π)`.
    pub h_r_n: f64,
    pub pruned_mass: f64,
    pub budget: f64,
    pub bracket: Option<Bracket>,
}

/// Profiles `H¹..H^{n+1}` of each start: increments `H_R¹..H_Rⁿ`.
fn increments(profile: &[PathEntropy]) -> Vec<f64> {
    profile.windows(2).map(|w| w[1].value - w[0].value).collect()
}

/// Bracket for the entropy rate from the stationary vector `pi`.
pub fn entropy_bracket_with(m: &Partition, pi: &ProbVector, n_max: usize, prune: f64) -> Result<EntropyReport> {
    if n_max == 0 {
        return Err(Error::InvalidParams("horizon must be at least 1".into()));
    }
    let top = entropy_profile(pi, m, n_max + 1, prune)?;
    let upper = increments(&top);
    let states: Vec<usize> = (0..pi.len()).filter(|&i| pi[i] > PI_FLOOR).collect();
    let left_out: f64 = (0..pi.len()).filter(|&i| pi[i] <= PI_FLOOR).map(|i| pi[i]).sum();
    let per_state: Vec<(Vec<f64>, f64)> = states
        .par_iter()
        .map(|&i| {
            let p = entropy_profile(&ProbVector::vertex(pi.len(), i), m, n_max + 1, prune)?;
            let budget = p[n_max].budget + p[n_max - 1].budget;
            Ok((increments(&p), budget))
        })
        .collect::<Result<_>>()?;
    let mut lower = vec![Kahan::default(); n_max];
    let mut budget = Kahan::default();
    for (&i, (inc, b)) in states.iter().zip(&per_state) {
        for (acc, v) in lower.iter_mut().zip(inc) {
            acc.add(pi[i] * v);
        }
        budget.add(pi[i] * b);
    }
    let log_labels = (m.num_labels() as f64).log2();
    budget.add(left_out * log_labels + top[n_max].budget + top[n_max - 1].budget);
    let last = top[n_max - 1];
    Ok(EntropyReport {
        horizon: n_max,
        h_n: last.value,
        h_r_n: upper[n_max - 1],
        pruned_mass: top[n_max].pruned_mass,
        budget: budget.sum,
        bracket: Some(Bracket { lower: lower.iter().map(|k| k.sum).collect(), upper, budget: budget.sum }),
    })
}

pub fn entropy_bracket(model: &FilterModel, n_max: usize, prune: f64) -> Result<EntropyReport> {
    entropy_bracket_with(model.partition(), model.stationary(), n_max, prune)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{kesten_model, random_walk_model, RandomWalkParams};
    use crate::model::{partition_from_lumping, TransitionMatrix};
    use proptest::prelude::*;

    fn identity_lumped(dense: &[Vec<f64>]) -> FilterModel {
        let p = TransitionMatrix::from_dense(dense).unwrap();
        let g: Vec<String> = (0..dense.len()).map(|i| format!("s{i}")).collect();
        FilterModel::new(partition_from_lumping(&p, &g).unwrap(), crate::model::Provenance::new("test")).unwrap()
    }

    /// Path entropy by enumerating state paths; under identity lumping the
    /// observed word is the state path after the start.
    fn path_entropy_oracle(p: &[Vec<f64>], x: &[f64], n: usize) -> f64 {
        let k = p.len();
        let mut paths: Vec<(Vec<usize>, f64)> =
            (0..k).map(|t| (vec![t], (0..k).map(|s| x[s] * p[s][t]).sum::<f64>())).collect();
        for _ in 1..n {
            paths = paths
                .into_iter()
                .flat_map(|(w, q)| {
                    let last = *w.last().unwrap();
                    (0..k).map(move |t| ([&w[..], &[t]].concat(), q * p[last][t]))
                })
                .collect();
        }
        paths.iter().filter(|(_, q)| *q > 0.0).map(|(_, q)| -q * q.log2()).sum()
    }

    #[test]
    fn h_values() {
        assert_eq!(h(0.0).unwrap(), 0.0);
        assert_eq!(h(1.0).unwrap(), 0.0);
        assert_eq!(h(0.5).unwrap(), 0.5);
        assert!(matches!(h(1.5), Err(Error::OutOfUnitInterval(_))));
        assert!(h(-0.1).is_err());
        let peak = h(1.0 / std::f64::consts::E).unwrap();
        assert!((peak - 1.0 / (std::f64::consts::E * std::f64::consts::LN_2)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn h_is_concave_and_bounded(a in 0.0f64..=1.0, b in 0.0f64..=1.0, l in 0.0f64..=1.0) {
            let mid = l * a + (1.0 - l) * b;
            prop_assert!(h(mid).unwrap() + 1e-15 >= l * h(a).unwrap() + (1.0 - l) * h(b).unwrap());
            prop_assert!(h(a).unwrap() <= 1.0 / (std::f64::consts::E * std::f64::consts::LN_2) + 1e-15);
        }
    }

    #[test]
    fn trivial_partition_has_no_entropy() {
        let p = TransitionMatrix::from_dense(&[vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let m = Partition::trivial(&p);
        let x = ProbVector::uniform(2);
        for e in entropy_profile(&x, &m, 5, 1e-12).unwrap() {
            assert!(e.value.abs() < 1e-15);
        }
        for method in [IncrementMethod::Difference, IncrementMethod::Integral] {
            assert!(entropy_rate_increment(&x, &m, 3, 1e-12, method).unwrap().value.abs() < 1e-15);
        }
    }

    #[test]
    fn lumping_example_one_bit() {
        let p = TransitionMatrix::from_dense(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let m = partition_from_lumping(&p, &["a", "b"]).unwrap();
        let e = entropy_h(&ProbVector::vertex(2, 0), &m, 1, 0.0).unwrap();
        assert_eq!(e.value, 1.0);
    }

    #[test]
    fn identity_lumping_matches_path_enumeration() {
        let dense = vec![vec![0.2, 0.5, 0.3], vec![0.0, 0.6, 0.4], vec![0.7, 0.1, 0.2]];
        let model = identity_lumped(&dense);
        let x = [0.25, 0.25, 0.5];
        let prof = entropy_profile(&ProbVector::new(x.to_vec()).unwrap(), model.partition(), 6, 0.0).unwrap();
        for (k, e) in prof.iter().enumerate() {
            assert!((e.value - path_entropy_oracle(&dense, &x, k + 1)).abs() < 1e-12, "n = {}", k + 1);
            assert_eq!(e.pruned_mass, 0.0);
        }
    }

    #[test]
    fn increment_methods_agree() {
        let kesten = kesten_model();
        let rw = random_walk_model(&RandomWalkParams::case_a(12)).unwrap();
        let p = TransitionMatrix::from_dense(&[vec![0.1, 0.6, 0.3], vec![0.5, 0.2, 0.3], vec![0.3, 0.3, 0.4]]).unwrap();
        let lumped = FilterModel::new(partition_from_lumping(&p, &["u", "v", "u"]).unwrap(), crate::model::Provenance::new("t")).unwrap();
        for model in [&kesten, &rw, &lumped] {
            let x = model.stationary();
            for n in 0..=6 {
                for prune in [0.0, 1e-6] {
                    let d = entropy_rate_increment(x, model.partition(), n, prune, IncrementMethod::Difference).unwrap();
                    let i = entropy_rate_increment(x, model.partition(), n, prune, IncrementMethod::Integral).unwrap();
                    assert!((d.value - i.value).abs() <= d.budget + i.budget + 1e-9, "n = {n}: {d:?} vs {i:?}");
                }
            }
        }
    }

    #[test]
    fn pruning_budget_covers_the_loss() {
        let model = random_walk_model(&RandomWalkParams::case_a(10)).unwrap();
        let x = model.stationary();
        let exact = entropy_profile(x, model.partition(), 8, 0.0).unwrap();
        let cut = entropy_profile(x, model.partition(), 8, 1e-3).unwrap();
        for (e, c) in exact.iter().zip(&cut) {
            assert!(e.value - c.value <= c.budget + 1e-12, "{e:?} {c:?}");
            assert!(c.value <= e.value + 1e-12);
        }
        assert!(cut.last().unwrap().pruned_mass > 0.0);
    }

    #[test]
    fn identity_lumping_bracket_closes_at_one() {
        let model = identity_lumped(&[vec![0.9, 0.1], vec![0.2, 0.8]]);
        let r = entropy_bracket(&model, 4, 0.0).unwrap();
        let b = r.bracket.unwrap();
        // rate = (2/3) h₂(0.1) + (1/3) h₂(0.2)
        let h2 = |p: f64| h_bits(p) + h_bits(1.0 - p);
        let rate = 2.0 / 3.0 * h2(0.1) + 1.0 / 3.0 * h2(0.2);
        assert!((rate - 0.553_307).abs() < 1e-6);
        assert!((b.lower[0] - rate).abs() < 1e-9);
        assert!((b.upper[0] - rate).abs() < 1e-9);
        assert!(b.is_monotone(1e-9));
    }

    #[test]
    fn kesten_bracket_is_monotone() {
        let r = entropy_bracket(&kesten_model(), 10, 0.0).unwrap();
        let b = r.bracket.unwrap();
        assert_eq!(b.lower.len(), 10);
        assert!(b.is_monotone(1e-9), "{b:?}");
        // every observation from a Kesten state is a fair coin
        assert!(b.lower.iter().chain(&b.upper).all(|v| (v - 1.0).abs() < 1e-12));
    }
}
