use std::fmt;
use std::sync::Arc;

type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Constant(f64),
    Coordinate(usize),
    AffineMax(Vec<(Vec<f64>, f64)>),
    Custom(Evaluator),
}

/// A real function on the simplex, optionally with a Lipschitz seminorm
/// `γ(u)` with respect to the l1 metric.
#[derive(Clone)]
pub struct TestFunction {
    repr: Repr,
    lipschitz: Option<f64>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.repr {
            Repr::Constant(c) => format!("Constant({c})"),
            Repr::Coordinate(i) => format!("Coordinate({i})"),
            Repr::AffineMax(p) => format!("AffineMax({} pieces)", p.len()),
            Repr::Custom(_) => "Custom".to_string(),
        };
        f.debug_struct("TestFunction")
            .field("kind", &kind)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

/// Seminorm of `x ↦ a·x` on the simplex: `(max a − min a)/2`, since `x − y` has zero sum.
fn affine_seminorm(a: &[f64]) -> f64 {
    let hi = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = a.iter().cloned().fold(f64::INFINITY, f64::min);
    if a.is_empty() {
        0.0
    } else {
        (hi - lo) / 2.0
    }
}

impl TestFunction {
    pub fn constant(c: f64) -> Self {
        Self { repr: Repr::Constant(c), lipschitz: Some(0.0) }
    }

    /// `u(x) = x_i`.
    pub fn coordinate(i: usize) -> Self {
        Self { repr: Repr::Coordinate(i), lipschitz: Some(0.5) }
    }

    /// `u(x) = max_n (a_n · x + b_n)`, a convex function with exact seminorm bound.
    pub fn affine_max(pieces: Vec<(Vec<f64>, f64)>) -> Self {
        assert!(!pieces.is_empty(), "affine max needs at least one piece");
        let gamma = pieces.iter().map(|(a, _)| affine_seminorm(a)).fold(0.0, f64::max);
        Self { repr: Repr::AffineMax(pieces), lipschitz: Some(gamma) }
    }

    /// `u(x) = Σ ε_i x_i` with `ε_i ∈ {−1, +1}`.
    pub fn sign_combination(signs: &[f64]) -> Self {
        Self::affine_max(vec![(signs.to_vec(), 0.0)])
    }

    /// Arbitrary evaluator with a caller-supplied seminorm bound.
    pub fn from_fn(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static, lipschitz: Option<f64>) -> Self {
        Self { repr: Repr::Custom(Arc::new(f)), lipschitz }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.repr {
            Repr::Constant(c) => *c,
            Repr::Coordinate(i) => x[*i],
            Repr::AffineMax(pieces) => pieces
                .iter()
                .map(|(a, b)| a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>() + b)
                .fold(f64::NEG_INFINITY, f64::max),
            Repr::Custom(f) => f(x),
        }
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    /// Affine pieces when the function is a finite max of affine maps.
    pub fn convex_rep(&self) -> Option<&[(Vec<f64>, f64)]> {
        match &self.repr {
            Repr::AffineMax(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_convex(&self) -> bool {
        matches!(self.repr, Repr::Constant(_) | Repr::Coordinate(_) | Repr::AffineMax(_))
    }
}
