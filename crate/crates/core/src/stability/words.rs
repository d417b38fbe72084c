use rayon::prelude::*;

use crate::model::{NonnegMatrix, Partition};

/// Budget used when a caller does not supply one: products evaluated.
pub const DEFAULT_BUDGET: usize = 1_000_000;

/// Result of a bounded search over words of label indices.
#[derive(Debug, Clone, PartialEq)]
pub struct WordSearch {
    pub word: Option<Vec<usize>>,
    /// Matrix products evaluated, interior nodes included.
    pub examined: usize,
    /// False when the budget ran out before the search space was covered.
    pub complete: bool,
}

/// Depth reached by exhaustive enumeration: `min(8, ⌊log_L 10⁶⌋, max_len)`.
pub fn exhaustive_depth(num_labels: usize, max_len: usize) -> usize {
    let mut depth = 0;
    let mut count: usize = 1;
    while depth < 8 && depth < max_len {
        count = count.saturating_mul(num_labels);
        if count > 1_000_000 {
            break;
        }
        depth += 1;
    }
    depth
}

/// Whether `w` is not a proper power of a shorter word.
pub fn is_primitive_word(w: &[usize]) -> bool {
    let n = w.len();
    (1..n).filter(|p| n.is_multiple_of(*p)).all(|p| (p..n).any(|i| w[i] != w[i - p]))
}

/// All words of length `len` in lexicographic order.
pub fn words_of_length(num_labels: usize, len: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = num_labels.checked_pow(len as u32).unwrap_or(usize::MAX);
    (0..total).map(move |mut k| {
        let mut w = vec![0; len];
        for slot in w.iter_mut().rev() {
            *slot = k % num_labels;
            k /= num_labels;
        }
        w
    })
}

struct Dfs<'a, F> {
    m: &'a Partition,
    pred: &'a F,
    budget: usize,
    examined: usize,
}

impl<F: Fn(&[usize], &NonnegMatrix) -> bool> Dfs<'_, F> {
    /// First word in lex order of total length `prefix.len() + remaining` that
    /// satisfies the predicate. Products are renormalized at every step, so
    /// only support and direction are meaningful to the predicate.
    fn run(&mut self, prefix: &mut Vec<usize>, acc: &NonnegMatrix, remaining: usize) -> Option<Vec<usize>> {
        for w in 0..self.m.num_labels() {
            if self.examined >= self.budget {
                return None;
            }
            self.examined += 1;
            let next = acc.mul(self.m.member(w)).expect("square members").normalized();
            if next.is_zero() {
                continue;
            }
            prefix.push(w);
            let hit = if remaining == 1 {
                (self.pred)(prefix, &next).then(|| prefix.clone())
            } else {
                self.run(prefix, &next, remaining - 1)
            };
            prefix.pop();
            if hit.is_some() {
                return hit;
            }
        }
        None
    }
}

/// Iterative deepening in shortlex order over words of length `1..=max_len`.
/// Words whose product vanishes are pruned with all their extensions. Each
/// depth is split over first letters and searched in parallel; the budget
/// left at that depth is shared equally, so the result does not depend on
/// scheduling.
pub fn shortlex_search<F>(m: &Partition, max_len: usize, budget: usize, pred: F) -> WordSearch
where
    F: Fn(&[usize], &NonnegMatrix) -> bool + Sync,
{
    let labels = m.num_labels();
    let mut examined = 0;
    for depth in 1..=max_len {
        let share = (budget - examined).div_ceil(labels);
        if share == 0 {
            return WordSearch { word: None, examined, complete: false };
        }
        let branches: Vec<(Option<Vec<usize>>, usize)> = (0..labels)
            .into_par_iter()
            .map(|w0| {
                let first = m.member(w0).normalized();
                if first.is_zero() {
                    return (None, 1);
                }
                if depth == 1 {
                    return (pred(&[w0], &first).then(|| vec![w0]), 1);
                }
                let mut dfs = Dfs { m, pred: &pred, budget: share.saturating_sub(1), examined: 0 };
                let hit = dfs.run(&mut vec![w0], &first, depth - 1);
                (hit, dfs.examined + 1)
            })
            .collect();
        let spent: usize = branches.iter().map(|b| b.1).sum();
        examined += spent;
        if let Some(word) = branches.into_iter().find_map(|b| b.0) {
            return WordSearch { word: Some(word), examined, complete: true };
        }
        if examined >= budget {
            return WordSearch { word: None, examined, complete: false };
        }
    }
    WordSearch { word: None, examined, complete: true }
}

/// Powers `vᵏ` of primitive base words `v` with `|v| ≤ base_len`, in shortlex
/// order of `v` and then increasing `k`, for `k|v| ≤ max_len`.
pub fn power_search<F>(m: &Partition, base_len: usize, max_len: usize, budget: usize, pred: F) -> WordSearch
where
    F: Fn(&[usize], &NonnegMatrix) -> bool,
{
    let mut examined = 0;
    for len in 1..=base_len.min(max_len) {
        for base in words_of_length(m.num_labels(), len).filter(|w| is_primitive_word(w)) {
            let g = m.word_product(&base).expect("labels in range").normalized();
            examined += len;
            if g.is_zero() {
                continue;
            }
            let mut acc = g.clone();
            for k in 1..=max_len / len {
                if k > 1 {
                    acc = acc.mul(&g).expect("square").normalized();
                    examined += 1;
                    if acc.is_zero() {
                        break;
                    }
                }
                let word = base.repeat(k);
                if pred(&word, &acc) {
                    return WordSearch { word: Some(word), examined, complete: true };
                }
                if examined >= budget {
                    return WordSearch { word: None, examined, complete: false };
                }
            }
        }
    }
    WordSearch { word: None, examined, complete: true }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{partition_from_lumping, TransitionMatrix};

    fn two_label_model() -> Partition {
        let p = TransitionMatrix::from_dense(&[vec![0.5, 0.5], vec![0.25, 0.75]]).unwrap();
        partition_from_lumping(&p, &["x", "y"]).unwrap()
    }

    #[test]
    fn words_enumerate_lexicographically() {
        let w: Vec<Vec<usize>> = words_of_length(2, 2).collect();
        assert_eq!(w, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(words_of_length(3, 0).collect::<Vec<_>>(), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn primitive_words() {
        assert!(is_primitive_word(&[0, 1]));
        assert!(is_primitive_word(&[0, 0, 1]));
        assert!(!is_primitive_word(&[0, 1, 0, 1]));
        assert!(!is_primitive_word(&[1, 1]));
    }

    #[test]
    fn exhaustive_depth_caps() {
        assert_eq!(exhaustive_depth(2, 20), 8);
        assert_eq!(exhaustive_depth(100, 20), 3);
        assert_eq!(exhaustive_depth(2, 5), 5);
        assert_eq!(exhaustive_depth(1, 20), 8);
    }

    #[test]
    fn shortlex_returns_first_hit() {
        let m = two_label_model();
        let r = shortlex_search(&m, 4, DEFAULT_BUDGET, |w, _| w.len() == 3 && w[2] == 1);
        assert_eq!(r.word, Some(vec![0, 0, 1]));
        // depth 1: 2, depth 2: 2·3, depth 3: both branches stop at their second leaf
        assert_eq!(r.examined, 2 + 6 + 4 + 4);
        let r = shortlex_search(&m, 3, DEFAULT_BUDGET, |_, _| false);
        assert_eq!(r.word, None);
        assert!(r.complete);
    }

    #[test]
    fn budget_stops_search() {
        let m = two_label_model();
        let r = shortlex_search(&m, 10, 20, |_, _| false);
        assert!(!r.complete);
        assert!(r.examined <= 22);
    }

    #[test]
    fn powers_visit_primitive_bases() {
        let m = two_label_model();
        let mut seen = vec![];
        let cell = std::cell::RefCell::new(&mut seen);
        power_search(&m, 2, 4, DEFAULT_BUDGET, |_, g| {
            cell.borrow_mut().push(g.nonzero_cols());
            false
        });
        // bases x, y with four powers each, then xy and yx with two each
        assert_eq!(seen.len(), 4 + 4 + 2 + 2);
    }
}
