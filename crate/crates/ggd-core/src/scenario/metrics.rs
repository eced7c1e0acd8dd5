//! Accuracy, F1, and confusion counts. Real graphs are the positive class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Authenticity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// F1 with the positive class as positive (real graphs, or "same" for
    /// pair tasks).
    pub f1: f64,
    /// Mean of the per-class F1 scores.
    pub macro_f1: f64,
    pub confusion: Confusion,
}

fn f1_from(tp: usize, fp: usize, fn_: usize) -> f64 {
    let p_den = tp + fp;
    let r_den = tp + fn_;
    if p_den == 0 || r_den == 0 {
        return 0.0;
    }
    let p = tp as f64 / p_den as f64;
    let r = tp as f64 / r_den as f64;
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Metrics over (truth, prediction) pairs with `true` as the positive class.
pub fn evaluate_bool(predictions: &[(bool, bool)]) -> Result<Metrics> {
    if predictions.is_empty() {
        return Err(Error::argument("evaluate needs at least one prediction"));
    }
    let mut c = Confusion {
        tp: 0,
        fp: 0,
        fn_: 0,
        tn: 0,
    };
    for &(truth, pred) in predictions {
        match (truth, pred) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    let total = predictions.len() as f64;
    let accuracy = (c.tp + c.tn) as f64 / total;
    let f1 = f1_from(c.tp, c.fp, c.fn_);
    // Negative-class F1 swaps the roles: tn are its true positives.
    let f1_neg = f1_from(c.tn, c.fn_, c.fp);
    Ok(Metrics {
        accuracy,
        f1,
        macro_f1: 0.5 * (f1 + f1_neg),
        confusion: c,
    })
}

/// Metrics over authenticity predictions; `Real` is positive.
pub fn evaluate(predictions: &[(Authenticity, Authenticity)]) -> Result<Metrics> {
    let mapped: Vec<(bool, bool)> = predictions
        .iter()
        .map(|&(t, p)| (t == Authenticity::Real, p == Authenticity::Real))
        .collect();
    evaluate_bool(&mapped)
}
