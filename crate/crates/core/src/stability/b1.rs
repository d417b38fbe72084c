use serde::{Deserialize, Serialize};

use crate::model::{NonnegMatrix, Partition};
use crate::stability::conditions::{rank1_fit, Rank1Fit, POWER_BASE_LEN};
use crate::stability::words::{exhaustive_depth, is_primitive_word, shortlex_search, words_of_length};
use crate::stability::{Diagnostics, StabilityVerdict, VerdictKind};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_POWER: usize = 10_000;

/// Powers inspected between stagnation checks when scanning many base words.
const STAGNATION_WINDOW: usize = 64;

/// How candidate word sequences `w_j^{n_j}` are generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum B1Policy {
    /// Exhaustive, then repeated base words, then greedy.
    Auto { max_len: usize, max_power: usize },
    /// Single products of every word up to `max_len`, shortlex order.
    Exhaustive { max_len: usize },
    /// Powers of every primitive base word up to `base_len`. A base is
    /// abandoned once its residual stops shrinking.
    RepeatedWord { base_len: usize, max_power: usize },
    /// Extends by the letter maximizing the norm of the product, lowest label on ties.
    Greedy { max_len: usize },
    /// Powers of one word; the full residual curve is kept.
    Fixed { word: Vec<usize>, max_power: usize },
}

impl B1Policy {
    pub fn auto(max_len: usize) -> Self {
        B1Policy::Auto { max_len, max_power: DEFAULT_MAX_POWER }
    }

    pub fn fixed(word: Vec<usize>) -> Self {
        B1Policy::Fixed { word, max_power: DEFAULT_MAX_POWER }
    }

    fn name(&self) -> &'static str {
        match self {
            B1Policy::Auto { .. } => "auto",
            B1Policy::Exhaustive { .. } => "exhaustive",
            B1Policy::RepeatedWord { .. } => "repeated_word",
            B1Policy::Greedy { .. } => "greedy",
            B1Policy::Fixed { .. } => "fixed",
        }
    }
}

struct Hit {
    word: Vec<usize>,
    power: usize,
    policy: &'static str,
    fit: Rank1Fit,
}

struct Run<'a> {
    m: &'a Partition,
    tol: f64,
    budget: usize,
    spent: usize,
    curve: Vec<f64>,
}

impl Run<'_> {
    fn fit(&self, g: &NonnegMatrix) -> Option<Rank1Fit> {
        rank1_fit(g, self.tol).ok()
    }

    fn left(&self) -> usize {
        self.budget.saturating_sub(self.spent)
    }

    fn exhaustive(&mut self, max_len: usize) -> Option<Hit> {
        let tol = self.tol;
        let r = shortlex_search(self.m, max_len, self.left(), |_, g| {
            rank1_fit(g, tol).is_ok_and(|f| f.residual <= tol)
        });
        self.spent += r.examined;
        let word = r.word?;
        let g = self.m.word_product(&word).ok()?;
        Some(Hit { fit: self.fit(&g)?, word, power: 1, policy: "exhaustive" })
    }

    /// Linear powers `G^n/||G^n||` of the word's product.
    fn powers(&mut self, base: &[usize], max_power: usize, stop_on_stagnation: bool) -> Option<Hit> {
        let g = self.m.word_product(base).ok()?.normalized();
        self.spent += base.len();
        let mut acc = g.clone();
        let mut curve = Vec::new();
        for power in 1..=max_power {
            if power > 1 {
                if self.spent >= self.budget {
                    break;
                }
                acc = acc.mul(&g).ok()?.normalized();
                self.spent += 1;
            }
            let fit = self.fit(&acc)?;
            curve.push(fit.residual);
            if fit.residual <= self.tol {
                self.curve = curve;
                return Some(Hit { word: base.to_vec(), power, policy: "repeated_word", fit });
            }
            if stop_on_stagnation && power > STAGNATION_WINDOW && fit.residual > 0.99 * curve[power - 1 - STAGNATION_WINDOW] {
                break;
            }
        }
        if !stop_on_stagnation {
            self.curve = curve;
        }
        None
    }

    fn repeated(&mut self, base_len: usize, max_power: usize) -> Option<Hit> {
        for len in 1..=base_len {
            for base in words_of_length(self.m.num_labels(), len).filter(|w| is_primitive_word(w)) {
                if self.spent >= self.budget {
                    return None;
                }
                if let Some(hit) = self.powers(&base, max_power, true) {
                    return Some(hit);
                }
            }
        }
        None
    }

    fn greedy(&mut self, max_len: usize) -> Option<Hit> {
        let mut acc = NonnegMatrix::identity(self.m.num_states());
        let mut word = Vec::new();
        let mut curve = Vec::new();
        for _ in 0..max_len {
            if self.spent >= self.budget {
                break;
            }
            let mut best: Option<(f64, usize, NonnegMatrix)> = None;
            for w in 0..self.m.num_labels() {
                let next = acc.mul(self.m.member(w)).ok()?;
                self.spent += 1;
                let norm = next.operator_norm();
                if norm > 0.0 && best.as_ref().is_none_or(|b| norm > b.0) {
                    best = Some((norm, w, next));
                }
            }
            let (_, w, next) = best?;
            word.push(w);
            acc = next.normalized();
            let fit = self.fit(&acc)?;
            curve.push(fit.residual);
            if fit.residual <= self.tol {
                self.curve = curve;
                return Some(Hit { word, power: 1, policy: "greedy", fit });
            }
        }
        self.curve = curve;
        None
    }
}

/// Searches for a word sequence whose normalized products `M(wⁿ)/||M(wⁿ)||`
/// come within `tol` of a rank-1 matrix `W` of norm 1, row by row:
/// `max_i ||eⁱ M(wⁿ)/||M(wⁿ)|| − eⁱ W||₁ ≤ tol`. Rows whose normalized sum is
/// at most `tol` are treated as vanishing. The verdict is `B1Converged` on
/// success and `Undecided` otherwise; `budget` counts matrix products.
pub fn condition_b1_detect(m: &Partition, policy: &B1Policy, tol: f64, budget: usize) -> StabilityVerdict {
    let mut run = Run { m, tol, budget, spent: 0, curve: Vec::new() };
    let hit = match policy {
        B1Policy::Exhaustive { max_len } => run.exhaustive(*max_len),
        B1Policy::RepeatedWord { base_len, max_power } => run.repeated(*base_len, *max_power),
        B1Policy::Greedy { max_len } => run.greedy(*max_len),
        B1Policy::Fixed { word, max_power } => {
            if word.is_empty() || word.iter().any(|&w| w >= m.num_labels()) {
                None
            } else {
                run.powers(word, *max_power, false).map(|h| Hit { policy: "fixed", ..h })
            }
        }
        B1Policy::Auto { max_len, max_power } => run
            .exhaustive(exhaustive_depth(m.num_labels(), *max_len))
            .or_else(|| run.repeated(POWER_BASE_LEN.min(*max_len), *max_power))
            .or_else(|| run.greedy(*max_len)),
    };
    let diagnostics = Diagnostics { curve: run.curve, words_examined: run.spent, notes: vec![format!("policy {}", policy.name())] };
    let kind = match hit {
        Some(h) => VerdictKind::B1Converged {
            word: m.word_labels(&h.word),
            power: h.power,
            policy: h.policy.to_string(),
            residual: h.fit.residual,
            w: h.fit.w,
        },
        None => VerdictKind::Undecided { budget_spent: run.spent },
    };
    StabilityVerdict { kind, diagnostics }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{case_b_limit, kesten_model, random_walk_model, RandomWalkParams};
    use crate::model::{partition_from_lumping, stationary_vector, TransitionMatrix};
    use crate::stability::conditions::rank1_proximity;
    use crate::stability::words::DEFAULT_BUDGET;

    fn converged(v: &StabilityVerdict) -> (&[String], usize, &NonnegMatrix, f64) {
        match &v.kind {
            VerdictKind::B1Converged { word, power, w, residual, .. } => (word, *power, w, *residual),
            other => panic!("not converged: {other:?}"),
        }
    }

    #[test]
    fn kesten_is_undecided_at_depth_twelve() {
        let m = kesten_model();
        let v = condition_b1_detect(m.partition(), &B1Policy::Exhaustive { max_len: 12 }, DEFAULT_TOL, DEFAULT_BUDGET);
        assert!(matches!(v.kind, VerdictKind::Undecided { .. }));
        // no product vanishes: depth d costs 2(2^d − 1) products
        assert_eq!(v.diagnostics.words_examined, (1..=12).map(|d| 2 * ((1usize << d) - 1)).sum::<usize>());
        let v = condition_b1_detect(m.partition(), &B1Policy::auto(12), DEFAULT_TOL, DEFAULT_BUDGET);
        assert!(matches!(v.kind, VerdictKind::Undecided { .. }));
    }

    #[test]
    fn identity_lumped_single_letter_is_rank_one() {
        let p = TransitionMatrix::from_dense(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let m = partition_from_lumping(&p, &["x", "y"]).unwrap();
        let v = condition_b1_detect(&m, &B1Policy::auto(4), DEFAULT_TOL, DEFAULT_BUDGET);
        let (word, power, w, _) = converged(&v);
        assert_eq!((word, power), (&["x".to_string()][..], 1));
        assert_eq!(w.get(0, 0), 1.0);
        assert!((w.get(1, 0) - 0.2 / 0.9).abs() < 1e-15);
        assert_eq!(w.nonzero_cols(), vec![0]);
    }

    #[test]
    fn random_walk_case_a_alternating_word() {
        let n = 64;
        let model = random_walk_model(&RandomWalkParams::case_a(n)).unwrap();
        let m = model.partition();
        let v = condition_b1_detect(m, &B1Policy::fixed(vec![0, 1]), DEFAULT_TOL, DEFAULT_BUDGET);
        let (word, _, w, residual) = converged(&v);
        assert_eq!(word, &["1".to_string(), "2".to_string()][..]);
        assert!(residual <= DEFAULT_TOL);
        assert!((w.operator_norm() - 1.0).abs() < 1e-12);
        assert!(rank1_proximity(w, 0.0).unwrap() < 1e-12);
        // oracle: the left Perron vector of G restricted to even states, by plain power iteration
        let g = m.word_product(&[0, 1]).unwrap();
        let evens: Vec<usize> = (0..n).step_by(2).collect();
        let sub: Vec<Vec<f64>> = evens.iter().map(|&i| evens.iter().map(|&j| g.get(i, j)).collect()).collect();
        let alpha2: f64 = 4.0 / 9.0;
        let a = sub.iter().map(|r| r.iter().map(|x| x / alpha2).collect::<Vec<_>>()).collect::<Vec<_>>();
        let mut q = vec![1.0 / evens.len() as f64; evens.len()];
        for _ in 0..5000 {
            let mut next = vec![0.0; q.len()];
            for (i, qi) in q.iter().enumerate() {
                for (j, nj) in next.iter_mut().enumerate() {
                    *nj += qi * a[i][j];
                }
            }
            let s: f64 = next.iter().sum();
            q = next.into_iter().map(|x| x / s).collect();
        }
        // the reflecting top perturbs row weights by a factor decaying like 3^{-distance}
        for i in 0..n / 2 {
            let scale = if i % 2 == 0 { 1.0 } else { 0.5 };
            for (k, &j) in evens.iter().enumerate() {
                assert!((w.get(i, j) - scale * q[k]).abs() < 1e-10, "W[{i}][{j}]");
                assert_eq!(w.get(i, j + 1), 0.0);
            }
        }
        assert!(v.diagnostics.curve.last().unwrap() <= &DEFAULT_TOL);
    }

    #[test]
    fn random_walk_case_b_single_letter() {
        let n = 64;
        let params = RandomWalkParams::case_b(n, 3);
        let model = random_walk_model(&params).unwrap();
        let v = condition_b1_detect(model.partition(), &B1Policy::fixed(vec![0]), DEFAULT_TOL, DEFAULT_BUDGET);
        let (_, _, w, _) = converged(&v);
        let expect = case_b_limit(&params, 3);
        assert!(w.max_abs_diff(&expect) < 1e-8, "{}", w.max_abs_diff(&expect));
    }

    #[test]
    fn primitive_trivial_partition_converges_to_stationary_rows() {
        let p = TransitionMatrix::from_dense(&[vec![0.5, 0.5, 0.0], vec![0.1, 0.6, 0.3], vec![0.4, 0.0, 0.6]]).unwrap();
        let v = condition_b1_detect(&crate::model::Partition::trivial(&p), &B1Policy::auto(6), DEFAULT_TOL, DEFAULT_BUDGET);
        let (_, _, w, _) = converged(&v);
        let pi = stationary_vector(&p, 1e-15, 100_000).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((w.get(i, j) - pi[j]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn greedy_and_budget() {
        let p = TransitionMatrix::from_dense(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let m = crate::model::Partition::trivial(&p);
        let v = condition_b1_detect(&m, &B1Policy::Greedy { max_len: 3 }, DEFAULT_TOL, DEFAULT_BUDGET);
        assert_eq!(converged(&v).1, 1);
        let v = condition_b1_detect(kesten_model().partition(), &B1Policy::auto(12), DEFAULT_TOL, 50);
        match v.kind {
            VerdictKind::Undecided { budget_spent } => assert!(budget_spent <= 60),
            other => panic!("{other:?}"),
        }
    }
}
