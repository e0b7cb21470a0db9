//! Hypothesis error against a target.

use rand::Rng as _;

use crate::boolfn::{TruthTable, MAX_TABLE_VARS};
use crate::error::Result;
use crate::influence::EstimationBudget;
use crate::oracle::Oracle;
use crate::rng;
use crate::tree::DecisionTree;
use crate::{input_mask, Input};

pub enum Reference<'a> {
    Table(&'a TruthTable),
    Oracle(&'a Oracle),
}

/// Samples for a sampled error estimate within `ε/4` with probability 0.99.
pub fn eval_samples(eps: f64) -> Result<usize> {
    Ok(EstimationBudget::new(eps / 4.0, 0.01)?.samples())
}

/// `Pr_x[h(x) != f(x)]`: exact when a table of at most 24 variables is
/// available, otherwise estimated from `samples` fresh uniform inputs drawn
/// from a stream seeded by `seed`. Evaluation never touches the oracle's
/// query counters or example stream.
pub fn measure_error(
    h: &DecisionTree,
    target: Reference<'_>,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    match target {
        Reference::Table(f) => h.to_table(f.n())?.distance(f),
        Reference::Oracle(o) => {
            if o.n() <= MAX_TABLE_VARS {
                if let Some(f) = o.corrupted_table() {
                    return h.to_table(o.n())?.distance(&f);
                }
            }
            sampled_error(h, o, samples, seed)
        }
    }
}

/// Sampled error only.
pub fn sampled_error(h: &DecisionTree, o: &Oracle, samples: usize, seed: u64) -> Result<f64> {
    h.validate(o.n())?;
    let mut r = rng::seeded(seed);
    let mask = input_mask(o.n());
    let samples = samples.max(1);
    let wrong = (0..samples)
        .filter(|_| {
            let x = r.gen::<Input>() & mask;
            h.eval(x) != o.ground_truth(x)
        })
        .count();
    Ok(wrong as f64 / samples as f64)
}
