use crate::model::{partition_from_lumping, FilterModel, ProbVector, Provenance, TransitionMatrix};

/// Support of each row of the 8-state example (0-based); every entry is 1/2.
const KESTEN_SUPPORT: [[usize; 2]; 8] = [
    [0, 4],
    [1, 5],
    [3, 7],
    [2, 6],
    [0, 7],
    [1, 6],
    [3, 4],
    [2, 5],
];

pub fn kesten_matrix() -> TransitionMatrix {
    let triplets: Vec<(usize, usize, f64)> = KESTEN_SUPPORT
        .iter()
        .enumerate()
        .flat_map(|(i, cols)| cols.iter().map(move |&j| (i, j, 0.5)))
        .collect();
    TransitionMatrix::from_triplets(8, &triplets).expect("rows hold two halves")
}

/// Kesten's 8-state chain lumped into `a` (states 1..4) and `b` (states 5..8).
/// The matrix is doubly stochastic, so its stationary vector is uniform.
pub fn kesten_model() -> FilterModel {
    let p = kesten_matrix();
    let g = ["a", "a", "a", "a", "b", "b", "b", "b"];
    let partition = partition_from_lumping(&p, &g).expect("lumping is total");
    FilterModel::with_stationary(partition, ProbVector::uniform(8), Provenance::new("kesten"))
        .expect("uniform vector is stationary")
}

/// Default start with `0 < x_1 = x_3 < x_2 = x_4` and no mass on states 5..8.
pub fn kesten_start() -> ProbVector {
    ProbVector::new(vec![0.15, 0.35, 0.15, 0.35, 0.0, 0.0, 0.0, 0.0]).expect("valid start")
}
