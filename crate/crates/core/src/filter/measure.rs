use crate::error::{Error, Result};
use crate::filter::test_fn::TestFunction;
use crate::model::vector::{l1_distance, ProbVector, SUM_TOLERANCE};

/// Default l1 radius within which atoms are merged.
pub const DEFAULT_MERGE_EPS: f64 = 1e-10;

/// Finitely supported probability measure on the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<(f64, ProbVector)>,
}

impl DiscreteMeasure {
    /// Validates weights and dimensions, renormalizes, and merges exact duplicates.
    pub fn new(atoms: Vec<(f64, ProbVector)>) -> Result<Self> {
        let total = validate_atoms(&atoms)?;
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        Ok(Self::from_unnormalized(atoms, total).merged(0.0))
    }

    /// Normalizes arbitrary positive weights.
    pub fn from_mass(atoms: Vec<(f64, ProbVector)>) -> Result<Self> {
        let total = validate_atoms(&atoms)?;
        Ok(Self::from_unnormalized(atoms, total).merged(0.0))
    }

    fn from_unnormalized(mut atoms: Vec<(f64, ProbVector)>, total: f64) -> Self {
        if total != 1.0 {
            atoms.iter_mut().for_each(|(w, _)| *w /= total);
        }
        Self { atoms }
    }

    pub(crate) fn from_raw(atoms: Vec<(f64, ProbVector)>) -> Self {
        Self { atoms }
    }

    pub fn dirac(x: ProbVector) -> Self {
        Self { atoms: vec![(1.0, x)] }
    }

    pub fn atoms(&self) -> &[(f64, ProbVector)] {
        &self.atoms
    }

    pub fn into_atoms(self) -> Vec<(f64, ProbVector)> {
        self.atoms
    }

    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|(w, _)| *w).collect()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Number of states of the underlying simplex.
    pub fn dim(&self) -> usize {
        self.atoms[0].1.len()
    }

    pub fn barycenter(&self) -> ProbVector {
        let mut b = vec![0.0; self.dim()];
        for (w, x) in &self.atoms {
            for (bi, xi) in b.iter_mut().zip(x.as_slice()) {
                *bi += w * xi;
            }
        }
        ProbVector::from_mass(b).expect("barycenter of a probability measure has unit mass")
    }

    /// `⟨u, μ⟩`.
    pub fn integrate(&self, u: &TestFunction) -> f64 {
        self.atoms.iter().map(|(w, x)| w * u.eval(x.as_slice())).sum()
    }

    /// Merges atoms within l1 distance `eps` (exact duplicates when `eps = 0`).
    ///
    /// Each atom joins the earliest earlier representative within `eps`; a
    /// cluster keeps the coordinates of its heaviest member (first seen on ties)
    /// and the clusters keep first-seen order.
    pub fn merged(self, eps: f64) -> Self {
        Self { atoms: merge_atoms(self.atoms, eps) }
    }
}

fn validate_atoms(atoms: &[(f64, ProbVector)]) -> Result<f64> {
    let first = atoms
        .first()
        .ok_or_else(|| Error::InvalidMeasure("no atoms".into()))?;
    let n = first.1.len();
    let mut total = 0.0;
    for (k, (w, x)) in atoms.iter().enumerate() {
        if !(w.is_finite() && *w > 0.0) {
            return Err(Error::InvalidMeasure(format!("atom {k} has weight {w}")));
        }
        if x.len() != n {
            return Err(Error::InvalidMeasure(format!(
                "atom {k} has {} coordinates, expected {n}",
                x.len()
            )));
        }
        total += w;
    }
    Ok(total)
}

/// Projection used to bucket atoms; `|key(x) - key(y)| <= ||x - y||₁`.
fn merge_key(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, v)| v * (i as f64 + 1.0) / n)
        .sum()
}

pub(crate) fn merge_atoms(atoms: Vec<(f64, ProbVector)>, eps: f64) -> Vec<(f64, ProbVector)> {
    let n = atoms.len();
    if n <= 1 {
        return atoms;
    }
    let keys: Vec<f64> = atoms.iter().map(|(_, x)| merge_key(x.as_slice())).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    let mut rank = vec![0usize; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    // cluster[i] = index of the representative of atom i
    let mut cluster: Vec<usize> = (0..n).collect();
    let mut is_rep = vec![false; n];
    for i in 0..n {
        let xi = atoms[i].1.as_slice();
        let mut best: Option<usize> = None;
        let r = rank[i];
        let mut scan = |range: &mut dyn Iterator<Item = usize>| {
            for s in range {
                let j = order[s];
                if keys[i] - keys[j] > eps || keys[j] - keys[i] > eps {
                    break;
                }
                if j < i && is_rep[j] && best.is_none_or(|b| j < b) && l1_distance(xi, atoms[j].1.as_slice()) <= eps {
                    best = Some(j);
                }
            }
        };
        scan(&mut (0..r).rev());
        scan(&mut (r + 1..n));
        match best {
            Some(j) => cluster[i] = j,
            None => is_rep[i] = true,
        }
    }
    let mut slot = vec![usize::MAX; n];
    let mut out: Vec<(f64, usize, f64)> = Vec::new(); // (weight, heaviest member, its weight)
    for i in 0..n {
        let c = cluster[i];
        let w = atoms[i].0;
        if slot[c] == usize::MAX {
            slot[c] = out.len();
            out.push((w, i, w));
        } else {
            let e = &mut out[slot[c]];
            e.0 += w;
            if w > e.2 {
                e.1 = i;
                e.2 = w;
            }
        }
    }
    let mut atoms: Vec<Option<(f64, ProbVector)>> = atoms.into_iter().map(Some).collect();
    out.into_iter()
        .map(|(w, i, _)| (w, atoms[i].take().unwrap().1))
        .collect()
}

/// `ψ_q`: the measure with mass `q_i` at the vertex `e^i`.
pub fn vertex_measure(q: &ProbVector) -> DiscreteMeasure {
    let n = q.len();
    DiscreteMeasure::from_raw(
        q.as_slice()
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.0)
            .map(|(i, v)| (*v, ProbVector::vertex(n, i)))
            .collect(),
    )
}

pub fn barycenter(mu: &DiscreteMeasure) -> ProbVector {
    mu.barycenter()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn barycenter_examples() {
        let x = pv(&[0.2, 0.8]);
        assert_eq!(DiscreteMeasure::dirac(x.clone()).barycenter(), x);
        let mu = DiscreteMeasure::new(vec![(0.5, pv(&[1.0, 0.0])), (0.5, pv(&[0.0, 1.0]))]).unwrap();
        assert_eq!(mu.barycenter().as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn vertex_measure_examples() {
        let e1 = ProbVector::vertex(3, 1);
        let psi = vertex_measure(&e1);
        assert_eq!(psi, DiscreteMeasure::dirac(e1));
        let q = pv(&[0.5, 0.5]);
        let psi = vertex_measure(&q);
        assert_eq!(psi.len(), 2);
        assert_eq!(psi.barycenter(), q);
        let q = pv(&[0.1, 0.0, 0.6, 0.3]);
        assert_eq!(vertex_measure(&q).barycenter(), q);
    }

    #[test]
    fn merge_keeps_heavier_coordinates_and_first_seen_order() {
        let a = pv(&[0.5, 0.5]);
        let b = pv(&[0.5 + 1e-12, 0.5 - 1e-12]);
        let c = pv(&[0.1, 0.9]);
        let mu = DiscreteMeasure::new(vec![(0.2, a), (0.3, c.clone()), (0.5, b.clone())])
            .unwrap()
            .merged(1e-10);
        assert_eq!(mu.len(), 2);
        assert!((mu.atoms()[0].0 - 0.7).abs() < 1e-15);
        assert_eq!(mu.atoms()[0].1, b);
        assert_eq!(mu.atoms()[1].1, c);
    }

    #[test]
    fn exact_duplicates_merge_on_construction() {
        let a = pv(&[0.3, 0.7]);
        let mu = DiscreteMeasure::new(vec![(0.25, a.clone()), (0.75, a.clone())]).unwrap();
        assert_eq!(mu.atoms(), &[(1.0, a)]);
    }

    #[test]
    fn rejects_bad_weights() {
        let a = pv(&[0.3, 0.7]);
        assert!(DiscreteMeasure::new(vec![(0.0, a.clone()), (1.0, a.clone())]).is_err());
        assert!(DiscreteMeasure::new(vec![(0.6, a.clone())]).is_err());
        assert!(DiscreteMeasure::new(vec![]).is_err());
        assert!(DiscreteMeasure::new(vec![(0.5, a), (0.5, pv(&[1.0]))]).is_err());
    }
}
