//! Decision-tree learners.
//!
//! All search-based learners share one engine ([`search`]): a memoised
//! recursion over subcubes keyed by their canonical restriction. At level `t`
//! it ranks the free variables by influence (or by the lookahead criterion),
//! keeps the top `k(t)` of them, solves both child subcubes for each, and
//! keeps, for every leaf budget up to `s`, the split with the lowest mean
//! child error. The greedy learner is the `k = 1` schedule; the adaptive
//! learner is a two-phase schedule. The tree read off at budget `s` is passed
//! through [`prune::prune_to_size`] against the memoised biases.
//!
//! [`dp::learn_restriction_dp`] is the exhaustive counterpart on exact
//! tables: it optimises jointly over split variables and leaf budgets.

pub mod dp;
pub mod prune;
pub mod search;

use std::hash::{BuildHasherDefault, Hasher};
use std::str::FromStr;
use std::time::Duration;

use crate::error::{invalid, Error, Result};
use crate::influence::{EstimationBudget, MAX_LOOKAHEAD};
use crate::oracle::{AccessMode, Oracle};
use crate::tree::DecisionTree;

pub use dp::{
    learn_restriction_dp, learn_restriction_dp_mq, learn_restriction_dp_with, DpCandidates,
    DpOptions,
};
pub use prune::{
    label_leaf, label_leaf_exact, prune_to_size, BiasReference, ExactReference, OracleReference,
    Pruned,
};
pub use search::{learn_adaptive, learn_greedy, learn_topk};

/// Per-level candidate counts `k(t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GreedSchedule {
    Constant(usize),
    /// `k(t) = ceil((log2 s)^c)` at every level.
    Polylog(f64),
    /// `k1` below level `split`, `k2` from there on.
    TwoPhase {
        k1: usize,
        k2: usize,
        split: usize,
    },
}

impl GreedSchedule {
    /// Two-phase schedule with the default split `ceil(log2 s / log2 log2 s)`.
    pub fn two_phase(k1: usize, k2: usize, s: usize) -> Self {
        GreedSchedule::TwoPhase {
            k1,
            k2,
            split: default_phase_split(s),
        }
    }

    pub fn k_at(&self, level: usize, s: usize) -> usize {
        match *self {
            GreedSchedule::Constant(k) => k,
            GreedSchedule::Polylog(c) => {
                let log_s = (s.max(2) as f64).log2();
                (log_s.powf(c).ceil() as usize).max(1)
            }
            GreedSchedule::TwoPhase { k1, k2, split } => {
                if level < split {
                    k1
                } else {
                    k2
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            GreedSchedule::Constant(k) => k >= 1,
            GreedSchedule::Polylog(c) => c.is_finite() && c >= 0.0,
            GreedSchedule::TwoPhase { k1, k2, .. } => k1 >= 1 && k2 >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("schedule {self:?} has a level with k < 1")))
        }
    }

    /// `Π_{t<depth} 2·k(t)`: the subproblem count of an unmemoised search.
    pub fn subproblem_bound(&self, depth: usize, s: usize) -> f64 {
        (0..depth).map(|t| 2.0 * self.k_at(t, s) as f64).product()
    }
}

/// `ceil(log2 s / log2 log2 s)`; falls back to `ceil(log2 s)` when
/// `log2 log2 s <= 1`, i.e. `s <= 4`, where the ratio is undefined or
/// exceeds the depth itself.
pub fn default_phase_split(s: usize) -> usize {
    let log_s = (s.max(1) as f64).log2();
    let loglog = log_s.log2();
    if loglog <= 1.0 {
        log_s.ceil() as usize
    } else {
        (log_s / loglog).ceil() as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnerConfig {
    /// Leaf budget of the returned hypothesis.
    pub s: usize,
    pub eps: f64,
    pub delta: f64,
    /// `None` means `ceil(log2(s / ε))`.
    pub depth_cap: Option<usize>,
    pub schedule: GreedSchedule,
    /// 0 ranks candidates by influence alone.
    pub lookahead: usize,
    pub mode: AccessMode,
    pub seed: u64,
}

impl LearnerConfig {
    pub fn new(s: usize, eps: f64) -> Self {
        LearnerConfig {
            s,
            eps,
            delta: 0.01,
            depth_cap: None,
            schedule: GreedSchedule::Polylog(2.0),
            lookahead: 0,
            mode: AccessMode::Mq,
            seed: 0,
        }
    }

    pub fn with_depth(mut self, d: usize) -> Self {
        self.depth_cap = Some(d);
        self
    }

    pub fn with_schedule(mut self, schedule: GreedSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_lookahead(mut self, l: usize) -> Self {
        self.lookahead = l;
        self
    }

    pub fn with_mode(mut self, mode: AccessMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.s == 0 {
            return Err(invalid("size budget s must be at least 1"));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) || !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!(
                "ε and δ must lie in (0,1); got ε = {}, δ = {}",
                self.eps, self.delta
            )));
        }
        if self.lookahead > MAX_LOOKAHEAD {
            return Err(invalid(format!(
                "lookahead {} exceeds the cap of {MAX_LOOKAHEAD}",
                self.lookahead
            )));
        }
        self.schedule.validate()
    }

    pub fn depth(&self) -> usize {
        self.depth_cap
            .unwrap_or_else(|| default_depth(self.s, self.eps))
    }

    pub fn k_at(&self, level: usize) -> usize {
        self.schedule.k_at(level, self.s)
    }

    /// Influence floor and estimation accuracy.
    pub fn tau(&self) -> f64 {
        self.eps / 4.0
    }

    /// Per-estimate budget: accuracy `τ = ε/4`, and `δ` divided by a union
    /// bound over `(n + 2)·2^ℓ` estimates for each of the at most
    /// `Π 2·k(t)` subproblems.
    pub fn budget(&self, n: usize) -> Result<EstimationBudget> {
        let per_node = (n as f64 + 2.0) * 2f64.powi(self.lookahead as i32);
        let calls = self
            .schedule
            .subproblem_bound(self.depth(), self.s)
            .max(1.0)
            * per_node;
        EstimationBudget::new(self.tau(), self.delta / calls)
    }
}

/// `ceil(log2(s / ε))`.
pub fn default_depth(s: usize, eps: f64) -> usize {
    (s as f64 / eps).log2().ceil().max(0.0) as usize
}

/// Which learner a harness cell runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Greedy,
    Topk,
    Adaptive,
    Dp,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Greedy => "greedy",
            Algorithm::Topk => "topk",
            Algorithm::Adaptive => "adaptive",
            Algorithm::Dp => "dp",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Algorithm::Greedy),
            "topk" => Ok(Algorithm::Topk),
            "adaptive" => Ok(Algorithm::Adaptive),
            "dp" => Ok(Algorithm::Dp),
            _ => Err(invalid(format!("unknown algorithm {s:?}"))),
        }
    }
}

/// Runs `algo` against `o`. The DP reads the full table through membership
/// queries and considers every relevant variable unless `dp_candidates` says
/// otherwise.
pub fn learn(
    algo: Algorithm,
    o: &Oracle,
    cfg: &LearnerConfig,
    dp_candidates: DpCandidates,
) -> Result<(DecisionTree, SearchStats)> {
    match algo {
        Algorithm::Greedy => learn_greedy(o, cfg),
        Algorithm::Topk => learn_topk(o, cfg),
        Algorithm::Adaptive => learn_adaptive(o, cfg),
        Algorithm::Dp => learn_restriction_dp_mq(
            o,
            cfg,
            DpOptions {
                candidates: dp_candidates,
                ..DpOptions::default()
            },
        ),
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SearchStats {
    /// Distinct restrictions expanded (levels below the depth cap, plus the
    /// root).
    pub subproblems_explored: usize,
    /// Distinct restrictions expanded at each level.
    pub per_level: Vec<usize>,
    /// Lookups answered from the memo table.
    pub memo_hits: usize,
    pub mq_count: u64,
    pub ex_count: u64,
    pub wall: Duration,
    /// The learner's own error estimate for the returned tree.
    pub estimated_error: f64,
}

/// Hasher for [`crate::restriction::SubcubeKey`] memo tables.
#[derive(Default)]
pub(crate) struct KeyHasher(u64);

impl Hasher for KeyHasher {
    fn write(&mut self, bytes: &[u8]) {
        for chunk in bytes.chunks(8) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            self.write_u64(u64::from_le_bytes(buf));
        }
    }

    fn write_u64(&mut self, i: u64) {
        self.0 = crate::rng::mix(self.0, i);
    }

    fn write_u128(&mut self, i: u128) {
        self.0 = crate::rng::mix128(self.0, i);
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

pub(crate) type KeyMap<V> =
    std::collections::HashMap<crate::restriction::SubcubeKey, V, BuildHasherDefault<KeyHasher>>;
