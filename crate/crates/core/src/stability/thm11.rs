use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{l1_distance, Partition, ProbVector};

/// Points closer than this are the same orbit point.
pub const ORBIT_IDENTITY_EPS: f64 = 1e-12;
/// Smallest separation accepted as evidence of isolated orbit points.
pub const SEPARATION_FLOOR: f64 = 1e-9;
/// Slack on the distance-preservation identity.
pub const DISTANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub pass: bool,
    /// Why the hypothesis failed, naming the sample and word.
    pub witness: Option<String>,
}

impl HypothesisCheck {
    fn passed() -> Self {
        Self { pass: true, witness: None }
    }

    fn fail(&mut self, why: impl FnOnce() -> String) {
        if self.pass {
            self.pass = false;
            self.witness = Some(why());
        }
    }
}

/// Outcome of checking the three non-stability hypotheses on `K_{S′}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thm11Report {
    /// 0-based states spanning the face `K_{S′}`.
    pub subset: Vec<usize>,
    pub n_max: usize,
    pub samples: usize,
    /// Smallest pairwise distance between distinct orbit points over all samples.
    pub separation: Option<f64>,
    /// Orbit points are isolated: at least two of them, all `separation` apart.
    pub isolated_orbit: HypothesisCheck,
    /// `x` and `y` charge the same words.
    pub equal_active_words: HypothesisCheck,
    /// `||x̂ − ŷ||` after every charged word equals `||x − y||`.
    pub distance_preserved: HypothesisCheck,
    pub words_checked: usize,
}

impl Thm11Report {
    pub fn all_pass(&self) -> bool {
        self.isolated_orbit.pass && self.equal_active_words.pass && self.distance_preserved.pass
    }
}

/// Uniform point on the face spanned by `subset`: normalized exponential draws.
fn dirichlet_on(subset: &[usize], n: usize, rng: &mut ChaCha8Rng) -> ProbVector {
    let mut x = vec![0.0; n];
    for &i in subset {
        x[i] = -(1.0 - rng.random::<f64>()).ln();
    }
    ProbVector::from_mass(x).expect("positive draws")
}

fn normalize(v: Vec<f64>) -> Option<Vec<f64>> {
    let s: f64 = v.iter().sum();
    (s > 0.0).then(|| v.into_iter().map(|x| x / s).collect())
}

fn push_distinct(points: &mut Vec<Vec<f64>>, p: &[f64]) {
    if !points.iter().any(|q| l1_distance(q, p) <= ORBIT_IDENTITY_EPS) {
        points.push(p.to_vec());
    }
}

fn min_separation(points: &[Vec<f64>]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            let d = l1_distance(&points[a], &points[b]);
            best = Some(best.map_or(d, |e| e.min(d)));
        }
    }
    best
}

/// Distinct points `x M(w)/||x M(w)||` over charged words with `|w| ≤ n_max`, `x` included.
pub fn orbit_points(x: &ProbVector, m: &Partition, n_max: usize) -> Vec<Vec<f64>> {
    fn walk(x: &[f64], m: &Partition, depth: usize, points: &mut Vec<Vec<f64>>) {
        push_distinct(points, x);
        if depth == 0 {
            return;
        }
        for w in 0..m.num_labels() {
            if let Some(next) = normalize(m.member(w).left_mul(x)) {
                walk(&next, m, depth - 1, points);
            }
        }
    }
    let mut points = Vec::new();
    walk(x.as_slice(), m, n_max, &mut points);
    points
}

/// Smallest distance between distinct orbit points of `x`; `None` for a single point.
pub fn orbit_separation(x: &ProbVector, m: &Partition, n_max: usize) -> Option<f64> {
    min_separation(&orbit_points(x, m, n_max))
}

struct PairWalk<'a> {
    m: &'a Partition,
    d0: f64,
    sample: usize,
    labels: Vec<usize>,
    active: HypothesisCheck,
    distance: HypothesisCheck,
    words: usize,
}

impl PairWalk<'_> {
    fn walk(&mut self, x: &[f64], y: &[f64], depth: usize) {
        if depth == 0 {
            return;
        }
        for w in 0..self.m.num_labels() {
            let member = self.m.member(w);
            let (nx, ny) = (normalize(member.left_mul(x)), normalize(member.left_mul(y)));
            self.labels.push(w);
            match (nx, ny) {
                (Some(nx), Some(ny)) => {
                    self.words += 1;
                    let d = l1_distance(&nx, &ny);
                    if (d - self.d0).abs() > DISTANCE_TOL {
                        let (sample, word, d0) = (self.sample, self.m.word_labels(&self.labels), self.d0);
                        self.distance.fail(|| format!("sample {sample}, word {word:?}: distance {d} vs {d0}"));
                    }
                    self.walk(&nx, &ny, depth - 1);
                }
                (None, None) => {}
                _ => {
                    let (sample, word) = (self.sample, self.m.word_labels(&self.labels));
                    self.active.fail(|| format!("sample {sample}, word {word:?} charges only one start"));
                }
            }
            self.labels.pop();
        }
    }
}

/// Checks on `sample_count` seeded pairs `x, y` drawn uniformly from the face
/// `K_{S′}` and every word up to `n_max` charged by either start: equal
/// charged words, preserved distance after normalization, and separation of
/// the orbit of each `x`. The last is a finite-depth surrogate for an orbit of
/// isolated points.
pub fn theorem11_check(m: &Partition, subset: &[usize], n_max: usize, sample_count: usize, seed: u64) -> Result<Thm11Report> {
    let n = m.num_states();
    let mut s = subset.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.len() < 2 {
        return Err(Error::InvalidParams(format!("the state subset needs at least 2 states, got {}", s.len())));
    }
    if let Some(&bad) = s.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidParams(format!("state {bad} is outside 0..{n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut isolated = HypothesisCheck::passed();
    let mut walk = PairWalk {
        m,
        d0: 0.0,
        sample: 0,
        labels: Vec::new(),
        active: HypothesisCheck::passed(),
        distance: HypothesisCheck::passed(),
        words: 0,
    };
    let mut separation: Option<f64> = None;
    for sample in 0..sample_count {
        let x = dirichlet_on(&s, n, &mut rng);
        let y = dirichlet_on(&s, n, &mut rng);
        walk.sample = sample;
        walk.d0 = x.l1_distance(&y);
        walk.walk(x.as_slice(), y.as_slice(), n_max);
        match orbit_separation(&x, m, n_max) {
            Some(e) => {
                separation = Some(separation.map_or(e, |t: f64| t.min(e)));
                if e < SEPARATION_FLOOR {
                    isolated.fail(|| format!("sample {sample}: orbit points {e} apart"));
                }
            }
            None => isolated.fail(|| format!("sample {sample}: orbit is a single point")),
        }
    }
    if sample_count == 0 {
        isolated.fail(|| "no samples".into());
    }
    Ok(Thm11Report {
        subset: s,
        n_max,
        samples: sample_count,
        separation,
        isolated_orbit: isolated,
        equal_active_words: walk.active,
        distance_preserved: walk.distance,
        words_checked: walk.words,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::evolve;
    use crate::gallery::{kesten_model, kesten_perm_spec, kesten_start, perm_family_partition};
    use crate::kantorovich::kantorovich_distance;
    use crate::model::{partition_from_lumping, TransitionMatrix};

    #[test]
    fn kesten_satisfies_all_hypotheses() {
        let m = kesten_model();
        let r = theorem11_check(m.partition(), &[0, 1, 2, 3], 6, 20, 7).unwrap();
        assert!(r.all_pass(), "{r:?}");
        assert!(r.separation.unwrap() > 0.0);
        assert_eq!(r.words_checked, 20 * ((1 << 7) - 2));
    }

    #[test]
    fn kesten_start_orbit_is_eight_points_apart_by_point_four() {
        let m = kesten_model();
        let x0 = kesten_start();
        let pts = orbit_points(&x0, m.partition(), 10);
        assert_eq!(pts.len(), 8);
        // swapping .15 and .35 in two coordinates moves 2·0.2
        assert!((orbit_separation(&x0, m.partition(), 10).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn identity_lumped_chain_collapses_distances() {
        let p = TransitionMatrix::from_dense(&[vec![0.5, 0.3, 0.2], vec![0.2, 0.5, 0.3], vec![0.3, 0.2, 0.5]]).unwrap();
        let m = partition_from_lumping(&p, &["x", "y", "z"]).unwrap();
        let r = theorem11_check(&m, &[0, 1, 2], 3, 5, 1).unwrap();
        assert!(!r.distance_preserved.pass);
        assert!(r.equal_active_words.pass);
        assert!(!r.all_pass());
    }

    #[test]
    fn perm_family_kesten_passes() {
        let m = perm_family_partition(&kesten_perm_spec()).unwrap();
        assert!(theorem11_check(&m, &[0, 1, 2, 3], 4, 10, 3).unwrap().all_pass());
    }

    #[test]
    fn rejects_small_or_foreign_subsets() {
        let m = kesten_model();
        assert!(theorem11_check(m.partition(), &[1, 1], 2, 1, 0).is_err());
        assert!(theorem11_check(m.partition(), &[1, 9], 2, 1, 0).is_err());
    }

    #[test]
    fn passing_check_keeps_kantorovich_distance_apart() {
        let m = kesten_model();
        let r = theorem11_check(m.partition(), &[0, 1, 2, 3], 5, 5, 11).unwrap();
        assert!(r.all_pass());
        let x = kesten_start();
        let eps0 = orbit_separation(&x, m.partition(), 5).unwrap();
        let mut y = x.as_slice().to_vec();
        y[0] += eps0 / 4.0;
        y[2] -= eps0 / 4.0;
        let y = ProbVector::new(y).unwrap();
        assert!((x.l1_distance(&y) - eps0 / 2.0).abs() < 1e-15);
        for k in 1..=5 {
            let mx = evolve(&x, m.partition(), k, 0.0, 1e-12).unwrap().measure;
            let my = evolve(&y, m.partition(), k, 0.0, 1e-12).unwrap().measure;
            let (d, _) = kantorovich_distance(&mx, &my).unwrap();
            assert!(d >= eps0 / 2.0 - 1e-9, "n = {k}: {d}");
        }
    }
}
