//! Checkable sufficient conditions for asymptotic stability of the filter
//! (Condition A, Condition B1, localization and the construction combining
//! them) and the hypotheses of the non-stability criterion.
//!
//! All searches are bounded. Failing to find a witness yields
//! [`VerdictKind::Undecided`], never a claim of instability.

pub mod b1;
pub mod conditions;
pub mod thm11;
pub mod thm93;
pub mod words;

use serde::Serialize;

use crate::model::{NonnegMatrix, Partition};

pub use b1::{condition_b1_detect, B1Policy, DEFAULT_MAX_POWER, DEFAULT_TOL};
pub use conditions::{
    condition_a_search, default_col_bound, is_subrectangular, localizing_search, rank1_fit, rank1_proximity, Rank1Fit,
};
pub use thm11::{orbit_points, orbit_separation, theorem11_check, HypothesisCheck, Thm11Report};
pub use thm93::{support_path, theorem93_witness, Thm93Witness};
pub use words::{shortlex_search, WordSearch, DEFAULT_BUDGET};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VerdictKind {
    ConditionA {
        word: Vec<String>,
    },
    /// `W` has rank 1 and norm 1; every row of the normalized product is within `residual` of it.
    B1Converged {
        word: Vec<String>,
        power: usize,
        policy: String,
        residual: f64,
        #[serde(rename = "W")]
        w: NonnegMatrix,
    },
    Localizing {
        word: Vec<String>,
        nonzero_cols: usize,
        col_bound: usize,
    },
    Undecided {
        budget_spent: usize,
    },
    /// Every hypothesis of the non-stability criterion held on the face spanned by `subset`.
    Nonstable {
        subset: Vec<usize>,
        evidence: Thm11Report,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Diagnostics {
    /// Row residuals of successive normalized products, when a power sequence was followed.
    pub curve: Vec<f64>,
    pub words_examined: usize,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityVerdict {
    #[serde(flatten)]
    pub kind: VerdictKind,
    pub diagnostics: Diagnostics,
}

impl StabilityVerdict {
    pub fn is_undecided(&self) -> bool {
        matches!(self.kind, VerdictKind::Undecided { .. })
    }
}

pub fn condition_a_verdict(m: &Partition, max_len: usize, budget: usize) -> StabilityVerdict {
    let r = condition_a_search(m, max_len, budget);
    let kind = match r.word {
        Some(w) => VerdictKind::ConditionA { word: m.word_labels(&w) },
        None => VerdictKind::Undecided { budget_spent: r.examined },
    };
    let notes = if r.complete { vec![] } else { vec!["budget exhausted".into()] };
    StabilityVerdict { kind, diagnostics: Diagnostics { curve: vec![], words_examined: r.examined, notes } }
}

pub fn localizing_verdict(m: &Partition, max_len: usize, col_bound: usize, budget: usize) -> StabilityVerdict {
    let r = localizing_search(m, max_len, col_bound, budget);
    let kind = match &r.word {
        Some(w) => VerdictKind::Localizing {
            word: m.word_labels(w),
            nonzero_cols: m.word_product(w).map(|g| g.nonzero_cols().len()).unwrap_or(0),
            col_bound,
        },
        None => VerdictKind::Undecided { budget_spent: r.examined },
    };
    let mut notes = vec![format!("column bound {col_bound} of {} states", m.num_states())];
    if !r.complete {
        notes.push("budget exhausted".into());
    }
    StabilityVerdict { kind, diagnostics: Diagnostics { curve: vec![], words_examined: r.examined, notes } }
}

/// The construction's witness as a B1 verdict; a missing prerequisite or
/// non-ergodic base gives `Undecided` with the reason in the notes.
pub fn theorem93_verdict(m: &Partition, max_len: usize, col_bound: usize, tol: f64, budget: usize) -> StabilityVerdict {
    match theorem93_witness(m, max_len, col_bound, tol, budget) {
        Ok(w) => StabilityVerdict {
            kind: VerdictKind::B1Converged {
                word: m.word_labels(&w.word),
                power: 1 << w.squarings,
                policy: "construction".into(),
                residual: w.residual,
                w: w.w,
            },
            diagnostics: Diagnostics {
                curve: vec![],
                words_examined: 0,
                notes: vec![format!(
                    "a = {:?}, b = {:?}, c = {:?}, d = {:?}",
                    m.word_labels(&w.a),
                    m.word_labels(&w.b),
                    m.word_labels(&w.c),
                    m.word_labels(&w.d)
                )],
            },
        },
        Err(e) => StabilityVerdict {
            kind: VerdictKind::Undecided { budget_spent: 0 },
            diagnostics: Diagnostics { notes: vec![e.to_string()], ..Diagnostics::default() },
        },
    }
}

pub fn theorem11_verdict(m: &Partition, subset: &[usize], n_max: usize, samples: usize, seed: u64) -> crate::Result<StabilityVerdict> {
    let report = theorem11_check(m, subset, n_max, samples, seed)?;
    let diagnostics = Diagnostics { curve: vec![], words_examined: report.words_checked, notes: vec![] };
    let kind = if report.all_pass() {
        VerdictKind::Nonstable { subset: report.subset.clone(), evidence: report }
    } else {
        let failed: Vec<&str> = [
            (&report.isolated_orbit, "isolated orbit"),
            (&report.equal_active_words, "equal active words"),
            (&report.distance_preserved, "distance preserved"),
        ]
        .iter()
        .filter(|(h, _)| !h.pass)
        .map(|(_, n)| *n)
        .collect();
        return Ok(StabilityVerdict {
            kind: VerdictKind::Undecided { budget_spent: report.words_checked },
            diagnostics: Diagnostics { notes: vec![format!("failed: {}", failed.join(", "))], ..diagnostics },
        });
    };
    Ok(StabilityVerdict { kind, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::kesten_model;

    #[test]
    fn verdict_json_is_tagged() {
        let v = condition_a_verdict(kesten_model().partition(), 4, DEFAULT_BUDGET);
        let j = serde_json::to_value(&v).unwrap();
        assert_eq!(j["kind"], "undecided");
        assert!(j["diagnostics"]["words_examined"].as_u64().unwrap() > 0);
        let v = theorem11_verdict(kesten_model().partition(), &[0, 1, 2, 3], 3, 2, 0).unwrap();
        let j = serde_json::to_value(&v).unwrap();
        assert_eq!(j["kind"], "nonstable");
        assert_eq!(j["evidence"]["isolated_orbit"]["pass"], true);
    }
}
