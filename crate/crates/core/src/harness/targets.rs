//! Target generators.

use rand::seq::index;
use rand::Rng as _;

use crate::boolfn::TruthTable;
use crate::error::{invalid, Error, Result};
use crate::oracle::Target;
use crate::rng;
use crate::tree::DecisionTree;
use crate::MAX_VARS;

pub const MAX_JUNTA: usize = 12;
pub const MAX_MONOTONE_VARS: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub enum TargetFamily {
    RandomTree { s: usize, n: usize },
    Junta { k: usize, n: usize },
    Monotone { n: usize },
    Explicit(Target),
}

/// A target family plus the corruption rate and seed of one draw.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetSpec {
    pub family: TargetFamily,
    pub noise: f64,
    pub seed: u64,
}

impl TargetSpec {
    /// The clean target; noise is applied by the oracle.
    pub fn build(&self) -> Result<Target> {
        match &self.family {
            TargetFamily::RandomTree { s, n } => {
                Target::tree(gen_random_tree(*s, *n, self.seed)?, *n)
            }
            TargetFamily::Junta { k, n } => Target::tree(gen_junta(*k, *n, self.seed)?, *n),
            TargetFamily::Monotone { n } => Ok(Target::Table(gen_monotone(*n, self.seed)?)),
            TargetFamily::Explicit(t) => Ok(t.clone()),
        }
    }
}

enum Slot {
    Leaf { used: Vec<usize> },
    Split { var: usize, zero: usize, one: usize },
}

/// A tree with exactly `s` leaves grown by repeatedly splitting a uniformly
/// chosen leaf (among those with a variable left) on a uniformly chosen
/// variable not yet used on its path. Leaf labels are uniform bits.
pub fn gen_random_tree(s: usize, n: usize, seed: u64) -> Result<DecisionTree> {
    if s == 0 {
        return Err(invalid("a tree needs at least one leaf"));
    }
    if n > MAX_VARS {
        return Err(Error::TooManyVariables { n, cap: MAX_VARS });
    }
    if n < 64 && s > 1usize << n {
        return Err(invalid(format!("{s} leaves need more than {n} variables")));
    }
    let mut rng = rng::seeded(seed);
    let mut slots = vec![Slot::Leaf { used: Vec::new() }];
    let mut leaves = vec![0usize];
    for _ in 1..s {
        let open: Vec<usize> = leaves
            .iter()
            .copied()
            .filter(|&i| matches!(&slots[i], Slot::Leaf { used } if used.len() < n))
            .collect();
        let pick = open[rng.gen_range(0..open.len())];
        let Slot::Leaf { used } = &slots[pick] else {
            unreachable!()
        };
        let free: Vec<usize> = (0..n).filter(|v| !used.contains(v)).collect();
        let var = free[rng.gen_range(0..free.len())];
        let mut path = used.clone();
        path.push(var);
        let zero = slots.len();
        slots.push(Slot::Leaf { used: path.clone() });
        slots.push(Slot::Leaf { used: path });
        slots[pick] = Slot::Split {
            var,
            zero,
            one: zero + 1,
        };
        leaves.retain(|&i| i != pick);
        leaves.extend([zero, zero + 1]);
    }
    fn assemble(slots: &[Slot], i: usize, rng: &mut rng::Rng) -> DecisionTree {
        match &slots[i] {
            Slot::Leaf { .. } => DecisionTree::Leaf(rng.gen()),
            Slot::Split { var, zero, one } => {
                let z = assemble(slots, *zero, rng);
                let o = assemble(slots, *one, rng);
                DecisionTree::node(*var, z, o)
            }
        }
    }
    Ok(assemble(&slots, 0, &mut rng))
}

/// Complete depth-`k` tree over `k` distinct uniformly chosen variables
/// (queried in the order drawn) with uniform leaf bits.
pub fn gen_junta(k: usize, n: usize, seed: u64) -> Result<DecisionTree> {
    if k > n.min(MAX_JUNTA) {
        return Err(invalid(format!(
            "junta size {k} exceeds min(n, {MAX_JUNTA}) for n = {n}"
        )));
    }
    if n > MAX_VARS {
        return Err(Error::TooManyVariables { n, cap: MAX_VARS });
    }
    let mut rng = rng::seeded(seed);
    let vars = index::sample(&mut rng, n, k).into_vec();
    fn grow(vars: &[usize], rng: &mut rng::Rng) -> DecisionTree {
        match vars.split_first() {
            None => DecisionTree::Leaf(rng.gen()),
            Some((&v, rest)) => {
                let z = grow(rest, rng);
                let o = grow(rest, rng);
                DecisionTree::node(v, z, o)
            }
        }
    }
    Ok(grow(&vars, &mut rng))
}

/// Random monotone function: a sparse random seed set closed upward.
///
/// Each input joins the seed set independently with probability
/// `min(1/2, ln 2 / 2^(n/2))`, which puts the threshold where half the
/// inputs are covered near the middle layer of the cube.
pub fn gen_monotone(n: usize, seed: u64) -> Result<TruthTable> {
    if n > MAX_MONOTONE_VARS {
        return Err(Error::TooManyVariables {
            n,
            cap: MAX_MONOTONE_VARS,
        });
    }
    let density = (std::f64::consts::LN_2 / 2f64.powf(n as f64 / 2.0)).min(0.5);
    let mut rng = rng::seeded(seed);
    let mut seeds = TruthTable::constant(n, false)?;
    for x in 0..seeds.len() {
        if rng.gen_bool(density) {
            seeds.set(x, true);
        }
    }
    Ok(seeds.upward_closure())
}
