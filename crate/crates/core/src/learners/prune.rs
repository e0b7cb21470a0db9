//! Optimal pruning of a tree to a leaf budget, and leaf labelling.
//!
//! A pruning of `T` replaces some internal nodes by leaves carrying the
//! majority label of their subcube. For every node and every budget
//! `b <= s` the DP keeps the least error reachable with at most `b` leaves,
//! either by collapsing the node or by splitting `b` between its children.
//! Children cover half their parent's subcube each, so a split's error is the
//! mean of the children's errors. On ties the DP keeps the larger structure,
//! so a majority-labelled tree whose size already fits comes back unchanged.

use crate::boolfn::TruthTable;
use crate::error::{invalid, Result};
use crate::influence::{estimate_bias_at, EstimationBudget};
use crate::oracle::Oracle;
use crate::restriction::{Restriction, SubcubeKey};
use crate::rng;
use crate::tree::DecisionTree;

/// `Pr[f = 1]` on the subcube of a tree node.
pub trait BiasReference {
    fn bias(&mut self, key: SubcubeKey) -> Result<f64>;
}

/// Exact biases from a truth table.
pub struct ExactReference<'a>(pub &'a TruthTable);

impl BiasReference for ExactReference<'_> {
    fn bias(&mut self, key: SubcubeKey) -> Result<f64> {
        let pi = key.to_restriction();
        Ok(self.0.restrict(&pi)?.bias())
    }
}

/// Sampled biases; each subcube gets its own stream derived from `seed`.
pub struct OracleReference<'a> {
    pub oracle: &'a Oracle,
    pub budget: EstimationBudget,
    pub seed: u64,
}

impl BiasReference for OracleReference<'_> {
    fn bias(&mut self, key: SubcubeKey) -> Result<f64> {
        let mut r = rng::seeded(rng::mix(self.seed, key.fingerprint()));
        estimate_bias_at(self.oracle, key, &self.budget, &mut r)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pruned {
    pub tree: DecisionTree,
    /// Error of `tree` according to the reference.
    pub error: f64,
}

/// Majority label with ties going to 0.
#[inline]
pub fn majority(bias: f64) -> bool {
    bias > 0.5
}

/// 1 iff the estimated bias of `f_π` exceeds one half.
pub fn label_leaf(
    o: &Oracle,
    pi: &Restriction,
    b: &EstimationBudget,
    rng: &mut rng::Rng,
) -> Result<bool> {
    Ok(majority(crate::influence::estimate_bias(o, pi, b, rng)?))
}

pub fn label_leaf_exact(f: &TruthTable, pi: &Restriction) -> Result<bool> {
    Ok(majority(f.restrict(pi)?.bias()))
}

#[derive(Clone, Copy, Debug)]
enum Choice {
    Leaf(bool),
    Split(usize),
}

struct Plan {
    /// `err[b - 1]`: best error with at most `b` leaves.
    err: Vec<f64>,
    choice: Vec<Choice>,
    children: Option<Box<(Plan, Plan)>>,
}

impl Plan {
    fn at(&self, b: usize) -> (f64, Choice) {
        let i = b.min(self.err.len()) - 1;
        (self.err[i], self.choice[i])
    }
}

fn plan(
    t: &DecisionTree,
    key: SubcubeKey,
    s: usize,
    reference: &mut dyn BiasReference,
) -> Result<Plan> {
    let p = reference.bias(key)?;
    match t {
        DecisionTree::Leaf(label) => {
            let e = if *label { 1.0 - p } else { p };
            Ok(Plan {
                err: vec![e],
                choice: vec![Choice::Leaf(*label)],
                children: None,
            })
        }
        DecisionTree::Node { var, zero, one } => {
            let z = plan(zero, key.with(*var, false), s, reference)?;
            let o = plan(one, key.with(*var, true), s, reference)?;
            let cap = s.min(z.err.len() + o.err.len());
            let mut err = vec![p.min(1.0 - p)];
            let mut choice = vec![Choice::Leaf(majority(p))];
            for b in 2..=cap {
                let (mut best, mut pick) = (err[b - 2], choice[b - 2]);
                for b0 in 1..b {
                    let e = (z.at(b0).0 + o.at(b - b0).0) / 2.0;
                    if e <= best {
                        best = e;
                        pick = Choice::Split(b0);
                    }
                }
                err.push(best);
                choice.push(pick);
            }
            Ok(Plan {
                err,
                choice,
                children: Some(Box::new((z, o))),
            })
        }
    }
}

fn build(t: &DecisionTree, plan: &Plan, b: usize) -> DecisionTree {
    match (plan.at(b).1, t) {
        (Choice::Leaf(label), _) => DecisionTree::Leaf(label),
        (Choice::Split(b0), DecisionTree::Node { var, zero, one }) => {
            let (z, o) = &**plan.children.as_ref().expect("split plan has children");
            let b = b.min(plan.err.len());
            DecisionTree::node(*var, build(zero, z, b0), build(one, o, b - b0))
        }
        (Choice::Split(_), DecisionTree::Leaf(_)) => unreachable!("leaves never split"),
    }
}

/// Best pruning of `tree` with at most `s` leaves under `reference`.
pub fn prune_to_size(
    tree: &DecisionTree,
    reference: &mut dyn BiasReference,
    s: usize,
) -> Result<Pruned> {
    if s == 0 {
        return Err(invalid("leaf budget must be at least 1"));
    }
    let plan = plan(tree, SubcubeKey::ROOT, s, reference)?;
    let (error, _) = plan.at(s);
    Ok(Pruned {
        tree: build(tree, &plan, s),
        error,
    })
}
