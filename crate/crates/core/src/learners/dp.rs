//! Exhaustive dynamic programming over restrictions on an exact table.
//!
//! For each restriction `π` with `|π| < d` and each leaf budget `b <= s`,
//! `best(π, b)` is the fewest mistakes on `π`'s subcube achievable by a tree
//! of depth at most `d - |π|` with at most `b` leaves. A split on `v` with
//! budgets `b0 + b1 = b` costs `best(π ∪ {v=0}, b0) + best(π ∪ {v=1}, b1)`.
//! The result is an optimal tree of depth at most `d` and size at most `s`
//! over the candidate variables.

use std::time::Instant;

use crate::boolfn::TruthTable;
use crate::error::{invalid, Error, Result};
use crate::learners::prune::majority;
use crate::learners::{KeyMap, LearnerConfig, SearchStats};
use crate::oracle::Oracle;
use crate::restriction::SubcubeKey;
use crate::tree::DecisionTree;
use crate::Input;

pub const MAX_DP_VARS: usize = 16;
pub const MAX_DP_DEPTH: usize = 6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DpCandidates {
    /// Every free relevant variable.
    #[default]
    All,
    /// Only the `k(t)` most influential free variables at level `t`.
    TopInfluence,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DpOptions {
    pub candidates: DpCandidates,
    /// Upper limit on the size of the subproblem space.
    pub max_subproblems: u128,
}

impl Default for DpOptions {
    fn default() -> Self {
        DpOptions {
            candidates: DpCandidates::All,
            max_subproblems: 10_000_000,
        }
    }
}

pub fn learn_restriction_dp(
    f: &TruthTable,
    cfg: &LearnerConfig,
) -> Result<(DecisionTree, SearchStats)> {
    learn_restriction_dp_with(f, cfg, DpOptions::default())
}

/// Depth used by the DP: the configured cap, or the default depth clamped to
/// [`MAX_DP_DEPTH`].
pub fn dp_depth(cfg: &LearnerConfig) -> usize {
    cfg.depth_cap
        .unwrap_or_else(|| cfg.depth().min(MAX_DP_DEPTH))
}

/// Number of restrictions of at most `depth` variables out of `vars`:
/// `Σ_{j<=depth} C(vars, j)·2^j`.
pub fn restriction_space(vars: usize, depth: usize) -> u128 {
    let mut total = 0u128;
    let mut choose = 1u128;
    for j in 0..=depth.min(vars) {
        total += choose << j;
        choose = choose * (vars - j) as u128 / (j + 1) as u128;
    }
    total
}

/// Reads the whole table through membership queries, then runs the DP.
pub fn learn_restriction_dp_mq(
    o: &Oracle,
    cfg: &LearnerConfig,
    opts: DpOptions,
) -> Result<(DecisionTree, SearchStats)> {
    let n = o.n();
    if n > MAX_DP_VARS {
        return Err(Error::TooManyVariables {
            n,
            cap: MAX_DP_VARS,
        });
    }
    let start = Instant::now();
    let (mq0, ex0) = o.counts();
    let mut f = TruthTable::constant(n, false)?;
    for x in 0..f.len() {
        if o.mq(x as Input)? {
            f.set(x, true);
        }
    }
    let (tree, mut stats) = learn_restriction_dp_with(&f, cfg, opts)?;
    let (mq1, ex1) = o.counts();
    stats.mq_count = mq1 - mq0;
    stats.ex_count = ex1 - ex0;
    stats.wall = start.elapsed();
    Ok((tree, stats))
}

pub fn learn_restriction_dp_with(
    f: &TruthTable,
    cfg: &LearnerConfig,
    opts: DpOptions,
) -> Result<(DecisionTree, SearchStats)> {
    cfg.validate()?;
    let n = f.n();
    if n > MAX_DP_VARS {
        return Err(Error::TooManyVariables {
            n,
            cap: MAX_DP_VARS,
        });
    }
    let depth = dp_depth(cfg);
    if depth > MAX_DP_DEPTH {
        return Err(invalid(format!(
            "restriction DP depth {depth} exceeds the cap of {MAX_DP_DEPTH}"
        )));
    }
    let mut needed = restriction_space(n, depth);
    if opts.candidates == DpCandidates::TopInfluence {
        let mut level_count = 1u128;
        let mut bounded = 1u128;
        for t in 0..depth {
            level_count = level_count.saturating_mul(2 * cfg.k_at(t) as u128);
            bounded = bounded.saturating_add(level_count);
        }
        needed = needed.min(bounded);
    }
    if needed > opts.max_subproblems {
        return Err(Error::ResourceLimit {
            needed,
            limit: opts.max_subproblems,
        });
    }

    let start = Instant::now();
    let mut dp = Dp {
        cfg,
        opts,
        depth,
        s: cfg.s,
        memo: KeyMap::default(),
        stats: SearchStats {
            per_level: vec![0; depth.max(1)],
            ..SearchStats::default()
        },
    };
    let vars: Vec<usize> = (0..n).collect();
    let best = dp.solve(SubcubeKey::ROOT, f, &vars)?;
    let tree = dp.build(SubcubeKey::ROOT, f, &vars, cfg.s);
    let mut stats = dp.stats;
    stats.subproblems_explored = stats.subproblems_explored.max(1);
    stats.estimated_error = best[cfg.s.min(best.len()) - 1] as f64 / f.len() as f64;
    stats.wall = start.elapsed();
    Ok((tree, stats))
}

struct Dp<'c> {
    cfg: &'c LearnerConfig,
    opts: DpOptions,
    depth: usize,
    s: usize,
    /// Mistake counts for budgets `1..=len`; budgets past the end equal the
    /// last entry.
    memo: KeyMap<Vec<u32>>,
    stats: SearchStats,
}

fn at(v: &[u32], b: usize) -> u32 {
    v[b.min(v.len()) - 1]
}

impl Dp<'_> {
    fn candidates(&self, level: usize, table: &TruthTable, vars: &[usize]) -> Vec<usize> {
        let relevant = (0..vars.len()).filter_map(|j| {
            let c = table.sensitive_count(j);
            (c > 0).then_some((j, c))
        });
        match self.opts.candidates {
            DpCandidates::All => relevant.map(|(j, _)| j).collect(),
            DpCandidates::TopInfluence => {
                let mut ranked: Vec<_> = relevant.collect();
                ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
                let mut keep: Vec<usize> = ranked
                    .into_iter()
                    .take(self.cfg.k_at(level))
                    .map(|(j, _)| j)
                    .collect();
                keep.sort_unstable();
                keep
            }
        }
    }

    fn solve(&mut self, key: SubcubeKey, table: &TruthTable, vars: &[usize]) -> Result<Vec<u32>> {
        if let Some(v) = self.memo.get(&key) {
            self.stats.memo_hits += 1;
            return Ok(v.clone());
        }
        let level = key.len();
        let ones = table.count_ones() as u32;
        let leaf = ones.min(table.len() as u32 - ones);
        let mut best = vec![leaf];
        if level < self.depth && leaf > 0 && self.s > 1 {
            self.stats.subproblems_explored += 1;
            self.stats.per_level[level] += 1;
            let cap = self.s.min(1 << (self.depth - level));
            best.resize(cap, leaf);
            for j in self.candidates(level, table, vars) {
                let v = vars[j];
                let mut rest = vars.to_vec();
                rest.remove(j);
                let zero = self.solve(key.with(v, false), &table.restrict_var(j, false), &rest)?;
                let one = self.solve(key.with(v, true), &table.restrict_var(j, true), &rest)?;
                for b in 2..=cap {
                    for b0 in 1..b {
                        let e = at(&zero, b0) + at(&one, b - b0);
                        if e < best[b - 1] {
                            best[b - 1] = e;
                        }
                    }
                }
                if best[1] == 0 {
                    break;
                }
            }
            for b in 1..cap {
                best[b] = best[b].min(best[b - 1]);
            }
        } else if level == 0 {
            self.stats.subproblems_explored += 1;
            self.stats.per_level[0] += 1;
        }
        self.memo.insert(key, best.clone());
        Ok(best)
    }

    fn build(&self, key: SubcubeKey, table: &TruthTable, vars: &[usize], b: usize) -> DecisionTree {
        let best = &self.memo[&key];
        let target = at(best, b);
        let ones = table.count_ones() as u32;
        let leaf = ones.min(table.len() as u32 - ones);
        if target == leaf {
            return DecisionTree::Leaf(majority(table.bias()));
        }
        let level = key.len();
        for j in self.candidates(level, table, vars) {
            let v = vars[j];
            let (k0, k1) = (key.with(v, false), key.with(v, true));
            let (Some(zero), Some(one)) = (self.memo.get(&k0), self.memo.get(&k1)) else {
                continue;
            };
            for b0 in 1..b.min(best.len()) {
                let b1 = b.min(best.len()) - b0;
                if at(zero, b0) + at(one, b1) == target {
                    let mut rest = vars.to_vec();
                    rest.remove(j);
                    return DecisionTree::node(
                        v,
                        self.build(k0, &table.restrict_var(j, false), &rest, b0),
                        self.build(k1, &table.restrict_var(j, true), &rest, b1),
                    );
                }
            }
        }
        unreachable!("memoised optimum has a witness split")
    }
}
