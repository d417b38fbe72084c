use crate::error::{Error, Result};
use crate::filter::measure::DiscreteMeasure;
use crate::model::vector::{l1_distance, NonnegVector, ProbVector};

/// Output of [`retarget_barycenter`].
#[derive(Debug, Clone, PartialEq)]
pub struct Retargeted {
    /// `ζ_k`, one per input atom and in input order.
    pub zetas: Vec<ProbVector>,
    /// `Σ β_k δ_{ζ_k}`, normalized to a probability measure.
    pub psi: DiscreteMeasure,
    /// `Σ β_k ||ξ_k − ζ_k||₁`, which equals `||a − b||₁`.
    pub cost: f64,
}

/// Moves the atoms `ξ_k` of `φ = Σ β_k δ_{ξ_k}` to points `ζ_k` so that
/// `Σ β_k ζ_k = b` while the total displacement `Σ β_k ||ξ_k − ζ_k||` equals
/// `||a − b||` with `a = Σ β_k ξ_k`. Since the barycenter gap is a lower bound
/// on the transport distance, the coupling `ξ_k ↦ ζ_k` is optimal.
///
/// Atoms are processed from last to first. For the current residuals `a`, `b`,
/// mass is taken from coordinates where `a > b` and the atom has support,
/// at most `β ξ_i` and at most `a_i − b_i` per coordinate, and handed to the
/// coordinates where `a < b` in northwest-corner order. The first atom absorbs
/// whatever residual is left.
pub fn retarget_barycenter(phi: &[(f64, ProbVector)], b: &NonnegVector) -> Result<Retargeted> {
    let first = phi
        .first()
        .ok_or_else(|| Error::InvalidMeasure("no atoms".into()))?;
    let n = first.1.len();
    if b.len() != n {
        return Err(Error::DimensionMismatch(format!("target has {} coordinates, atoms have {n}", b.len())));
    }
    for (k, (beta, xi)) in phi.iter().enumerate() {
        if !(beta.is_finite() && *beta > 0.0) {
            return Err(Error::InvalidMeasure(format!("atom {k} has weight {beta}")));
        }
        if xi.len() != n {
            return Err(Error::DimensionMismatch(format!("atom {k} has {} coordinates", xi.len())));
        }
    }
    let mut a = vec![0.0; n];
    for (beta, xi) in phi {
        for (ai, xv) in a.iter_mut().zip(xi.as_slice()) {
            *ai += beta * xv;
        }
    }
    let mut bc = b.as_slice().to_vec();
    let (na, nb): (f64, f64) = (a.iter().sum(), bc.iter().sum());
    if (na - nb).abs() > 1e-9 {
        return Err(Error::NormMismatch { a: na, b: nb });
    }

    let mut zetas: Vec<Vec<f64>> = vec![Vec::new(); phi.len()];
    for k in (1..phi.len()).rev() {
        let (beta, xi) = (&phi[k].0, phi[k].1.as_slice());
        let mut zeta = xi.to_vec();
        let rows: Vec<usize> = (0..n).filter(|&i| a[i] > bc[i] && xi[i] > 0.0).collect();
        if !rows.is_empty() {
            let mut sinks: Vec<(usize, f64)> = (0..n).filter(|&j| a[j] < bc[j]).map(|j| (j, bc[j] - a[j])).collect();
            let mut s = 0;
            for &i in &rows {
                let mut amount = (beta * xi[i]).min(a[i] - bc[i]);
                while amount > 0.0 && s < sinks.len() {
                    let t = amount.min(sinks[s].1);
                    zeta[i] -= t / beta;
                    zeta[sinks[s].0] += t / beta;
                    amount -= t;
                    sinks[s].1 -= t;
                    if sinks[s].1 <= 0.0 {
                        s += 1;
                    }
                }
            }
            zeta.iter_mut().for_each(|z| *z = z.max(0.0));
        }
        for i in 0..n {
            a[i] -= beta * xi[i];
            bc[i] -= beta * zeta[i];
        }
        zetas[k] = zeta;
    }
    let beta0 = phi[0].0;
    zetas[0] = bc.iter().map(|v| (v / beta0).max(0.0)).collect();

    let zetas = zetas
        .into_iter()
        .map(ProbVector::from_mass)
        .collect::<Result<Vec<_>>>()?;
    let cost = phi
        .iter()
        .zip(&zetas)
        .map(|((beta, xi), z)| beta * l1_distance(xi.as_slice(), z.as_slice()))
        .sum();
    let psi = DiscreteMeasure::from_mass(phi.iter().map(|(beta, _)| *beta).zip(zetas.iter().cloned()).collect())?;
    Ok(Retargeted { zetas, psi, cost })
}

/// A measure with barycenter `q` at distance `||b̄(μ) − q||₁` from `μ`, together with that distance.
pub fn distance_to_fiber_witness(mu: &DiscreteMeasure, q: &ProbVector) -> Result<(f64, DiscreteMeasure)> {
    let target = NonnegVector::l1(q.as_slice().to_vec())?;
    let r = retarget_barycenter(mu.atoms(), &target)?;
    Ok((mu.barycenter().l1_distance(q), r.psi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kantorovich::kantorovich_distance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    fn random_point(rng: &mut ChaCha8Rng, n: usize, sparsity: f64) -> ProbVector {
        loop {
            let x: Vec<f64> = (0..n)
                .map(|_| if rng.random::<f64>() < sparsity { 0.0 } else { rng.random::<f64>() })
                .collect();
            if let Ok(p) = ProbVector::from_mass(x) {
                return p;
            }
        }
    }

    #[test]
    fn single_atom_takes_the_target() {
        let b = NonnegVector::l1(vec![0.2, 0.0, 0.8]).unwrap();
        let r = retarget_barycenter(&[(1.0, pv(&[0.5, 0.5, 0.0]))], &b).unwrap();
        assert_eq!(r.zetas, vec![pv(&[0.2, 0.0, 0.8])]);
        assert!((r.cost - 1.6).abs() < 1e-15);
    }

    #[test]
    fn equal_barycenter_keeps_atoms() {
        let phi = vec![(0.3, pv(&[1.0, 0.0])), (0.7, pv(&[0.2, 0.8]))];
        let b = NonnegVector::l1(vec![0.3 + 0.7 * 0.2, 0.7 * 0.8]).unwrap();
        let r = retarget_barycenter(&phi, &b).unwrap();
        for ((_, xi), z) in phi.iter().zip(&r.zetas) {
            assert!(xi.l1_distance(z) < 1e-15);
        }
    }

    #[test]
    fn two_vertex_atoms_to_skewed_target() {
        let phi = vec![(0.5, pv(&[1.0, 0.0, 0.0])), (0.5, pv(&[0.0, 1.0, 0.0]))];
        let b = NonnegVector::l1(vec![0.25, 0.25, 0.5]).unwrap();
        let r = retarget_barycenter(&phi, &b).unwrap();
        assert_eq!(r.zetas, vec![pv(&[0.5, 0.0, 0.5]), pv(&[0.0, 0.5, 0.5])]);
        assert_eq!(r.psi.barycenter().as_slice(), &[0.25, 0.25, 0.5]);
        assert!((r.cost - 1.0).abs() < 1e-15);
        let phi_m = DiscreteMeasure::new(phi).unwrap();
        let (d, _) = kantorovich_distance(&phi_m, &r.psi).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_norm_mismatch() {
        let b = NonnegVector::l1(vec![0.5, 0.2]).unwrap();
        assert!(matches!(
            retarget_barycenter(&[(1.0, pv(&[0.5, 0.5]))], &b),
            Err(Error::NormMismatch { .. })
        ));
    }

    #[test]
    fn random_instances_are_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let n = rng.random_range(2..=6);
            let k = rng.random_range(1..=6);
            let phi: Vec<(f64, ProbVector)> = (0..k)
                .map(|_| (rng.random::<f64>() + 0.1, random_point(&mut rng, n, 0.3)))
                .collect();
            let total: f64 = phi.iter().map(|(w, _)| w).sum();
            let phi: Vec<(f64, ProbVector)> = phi.into_iter().map(|(w, x)| (w / total, x)).collect();
            let q = random_point(&mut rng, n, 0.3);
            let mu = DiscreteMeasure::from_mass(phi.clone()).unwrap();
            let (gap, witness) = distance_to_fiber_witness(&mu, &q).unwrap();
            assert!(witness.barycenter().l1_distance(&q) < 1e-12);
            let (d, _) = kantorovich_distance(&mu, &witness).unwrap();
            assert!((d - gap).abs() < 1e-12, "{d} vs {gap}");
        }
    }
}
