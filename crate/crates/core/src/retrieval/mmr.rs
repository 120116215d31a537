//! Maximal marginal relevance selection.
//!
//! ```text
//! next = argmax over remaining p of  gamma * S(p) - (1 - gamma) * max over selected q of cos(h_p, h_q)
//! ```
//!
//! The diversity penalty is zero while nothing is selected. Ties go to the
//! earliest candidate.

use crate::vector::{cosine_unchecked, Vector};

pub const DEFAULT_GAMMA: f64 = 0.6;
pub const DEFAULT_SELECTED: usize = 5;

/// One greedy step's outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmrPick {
    pub index: usize,
    /// The marginal value the candidate won with.
    pub value: f64,
}

/// Greedily selects up to `n` candidate indices. `gamma` must lie in [0, 1].
pub fn mmr_select(scores: &[f64], encodings: &[Vector], gamma: f64, n: usize) -> Vec<MmrPick> {
    assert_eq!(scores.len(), encodings.len(), "one encoding per score");
    debug_assert!((0.0..=1.0).contains(&gamma), "gamma out of range: {gamma}");
    let k = n.min(scores.len());
    let mut picks = Vec::with_capacity(k);
    let mut taken = vec![false; scores.len()];
    // running max similarity to the selected set; None until something is selected
    let mut max_sim: Vec<Option<f64>> = vec![None; scores.len()];
    for _ in 0..k {
        let mut best: Option<MmrPick> = None;
        for i in 0..scores.len() {
            if taken[i] {
                continue;
            }
            let penalty = max_sim[i].unwrap_or(0.0);
            let value = gamma * scores[i] - (1.0 - gamma) * penalty;
            if best.is_none_or(|b| value > b.value) {
                best = Some(MmrPick { index: i, value });
            }
        }
        let pick = best.expect("k bounded by remaining candidates");
        taken[pick.index] = true;
        for i in 0..scores.len() {
            if taken[i] {
                continue;
            }
            let s = cosine_unchecked(&encodings[i], &encodings[pick.index]);
            max_sim[i] = Some(max_sim[i].map_or(s, |m| m.max(s)));
        }
        picks.push(pick);
    }
    picks
}
