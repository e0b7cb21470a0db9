//! Memoised top-k search over restrictions.
//!
//! Each subproblem is a subcube `π`. Its data comes from one of two places:
//!
//! - **materialised**: the learner holds the whole restricted table. It gets
//!   there by querying every point of the subcube (MQ mode) or by collecting
//!   conditioned examples until every point has been seen (EX mode), whichever
//!   is cheaper than sampling at the configured budget. Descendants restrict
//!   the parent's table locally, so they cost no further queries.
//! - **sampled**: influences and the bias are estimated from `m` fresh
//!   samples; the generator is seeded from `(seed, π)` so results do not
//!   depend on the order subproblems are visited.
//!
//! Every subproblem keeps its best estimated error for each leaf budget up to
//! `s`, so a split is scored by what its children can achieve within the size
//! bound rather than by a depth-`d` tree that fits noise. Candidates are tried
//! in increasing variable order and only a strictly better split replaces the
//! current one, so ties go to the smallest index; the search stops once some
//! two-leaf split has zero estimated error.

use std::time::Instant;

use crate::boolfn::{TruthTable, MAX_TABLE_VARS};
use crate::error::{invalid, Result};
use crate::influence::{
    estimate_influences_at, exact_lookahead, lookahead_at, pool_influences, ConditionedPool,
    EstimationBudget, InfluenceVector, Provenance,
};
use crate::learners::prune::{majority, prune_to_size, BiasReference};
use crate::learners::{GreedSchedule, KeyMap, LearnerConfig, SearchStats};
use crate::oracle::{conditioned_attempts, AccessMode, Oracle};
use crate::restriction::SubcubeKey;
use crate::rng::{self, Rng};
use crate::tree::DecisionTree;
use crate::Input;

/// Influence-greedy learner: the search with `k = 1` at every level.
pub fn learn_greedy(o: &Oracle, cfg: &LearnerConfig) -> Result<(DecisionTree, SearchStats)> {
    let cfg = cfg.clone().with_schedule(GreedSchedule::Constant(1));
    run(o, &cfg)
}

/// Top-k search under `cfg.schedule`.
pub fn learn_topk(o: &Oracle, cfg: &LearnerConfig) -> Result<(DecisionTree, SearchStats)> {
    run(o, cfg)
}

/// Top-k search with a level-dependent two-phase schedule.
pub fn learn_adaptive(o: &Oracle, cfg: &LearnerConfig) -> Result<(DecisionTree, SearchStats)> {
    if !matches!(cfg.schedule, GreedSchedule::TwoPhase { .. }) {
        return Err(invalid("the adaptive learner needs a two-phase schedule"));
    }
    run(o, cfg)
}

fn run(o: &Oracle, cfg: &LearnerConfig) -> Result<(DecisionTree, SearchStats)> {
    cfg.validate()?;
    if cfg.mode == AccessMode::Mq && o.mode() == AccessMode::ExOnly {
        return Err(crate::Error::AccessViolation);
    }
    let start = Instant::now();
    let (mq0, ex0) = o.counts();
    let mut search = Search::new(o, cfg)?;
    search.solve(SubcubeKey::ROOT, None)?;
    let built = search.build(SubcubeKey::ROOT, cfg.s);
    let pruned = prune_to_size(&built, &mut MemoBias(&search.memo), cfg.s)?;
    let (mq1, ex1) = o.counts();
    let mut stats = search.stats;
    stats.mq_count = mq1 - mq0;
    stats.ex_count = ex1 - ex0;
    stats.estimated_error = pruned.error;
    stats.wall = start.elapsed();
    Ok((pruned.tree, stats))
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Pick {
    Leaf,
    Split { var: usize, zero_budget: usize },
}

/// Best estimated error of the subcube for each leaf budget `1..=err.len()`;
/// budgets past the end behave like the last one.
#[derive(Clone, Debug)]
struct Entry {
    bias: f64,
    err: Vec<f64>,
    pick: Vec<Pick>,
}

impl Entry {
    fn at(&self, b: usize) -> (f64, Pick) {
        let i = b.min(self.err.len()) - 1;
        (self.err[i], self.pick[i])
    }
}

/// Restricted table plus the ambient index of each of its variables.
struct Local {
    table: TruthTable,
    vars: Vec<usize>,
}

impl Local {
    fn child(&self, var: usize, value: bool) -> Local {
        let j = self.vars.binary_search(&var).expect("variable is free");
        let mut vars = self.vars.clone();
        vars.remove(j);
        Local {
            table: self.table.restrict_var(j, value),
            vars,
        }
    }

    fn influences(&self) -> InfluenceVector {
        let size = self.table.len() as f64;
        InfluenceVector {
            vars: self.vars.clone(),
            scores: (0..self.vars.len())
                .map(|j| self.table.sensitive_count(j) as f64 / size)
                .collect(),
            provenance: Provenance::Exact,
        }
    }

    fn local_index(&self, var: usize) -> usize {
        self.vars.binary_search(&var).expect("variable is free")
    }
}

enum Data<'l> {
    Table(&'l Local),
    Owned(Local),
    Sampled,
}

struct Search<'a> {
    o: &'a Oracle,
    cfg: &'a LearnerConfig,
    n: usize,
    depth: usize,
    budget: EstimationBudget,
    memo: KeyMap<Entry>,
    stats: SearchStats,
}

impl<'a> Search<'a> {
    fn new(o: &'a Oracle, cfg: &'a LearnerConfig) -> Result<Self> {
        let depth = cfg.depth();
        Ok(Search {
            o,
            cfg,
            n: o.n(),
            depth,
            budget: cfg.budget(o.n())?,
            memo: KeyMap::default(),
            stats: SearchStats {
                per_level: vec![0; depth.max(1)],
                ..SearchStats::default()
            },
        })
    }

    fn rng_for(&self, key: SubcubeKey) -> Rng {
        rng::seeded(rng::mix(self.cfg.seed, key.fingerprint()))
    }

    fn free_vars(&self, key: SubcubeKey) -> Vec<usize> {
        (0..self.n).filter(|&v| !key.fixes(v)).collect()
    }

    /// Pull the whole subcube into a table when that is cheaper than the
    /// sampling the node would otherwise do.
    fn materialise(&self, key: SubcubeKey, expand: bool, rng: &mut Rng) -> Result<Option<Local>> {
        let free = self.n - key.len();
        if free > MAX_TABLE_VARS {
            return Ok(None);
        }
        let size = (1usize << free) as f64;
        let vars = self.free_vars(key);
        match self.cfg.mode {
            AccessMode::Mq => {
                let m = self.budget.samples() as f64;
                let sampling = if expand { m * (free as f64 + 2.0) } else { m };
                if size > sampling {
                    return Ok(None);
                }
                let table = TruthTable::from_fn(free, |y| {
                    self.o.mq(deposit(key, &vars, y)).expect("mode checked")
                })?;
                Ok(Some(Local { table, vars }))
            }
            AccessMode::ExOnly => {
                let m = self.budget.signed_samples() as f64;
                let expected = size * (size.ln() + 1.0);
                if expected > m {
                    return Ok(None);
                }
                let cap = (4.0 * expected) as usize + 64;
                let attempts = conditioned_attempts(key.len());
                let mut table = TruthTable::constant(free, false)?;
                let mut seen = TruthTable::constant(free, false)?;
                let mut missing = table.len();
                for _ in 0..cap {
                    let (x, label) = self.o.ex_conditioned_with(key, attempts, rng)?;
                    let y = extract(&vars, x);
                    if !seen.get(y) {
                        seen.set(y, true);
                        table.set(y, label);
                        missing -= 1;
                        if missing == 0 {
                            return Ok(Some(Local { table, vars }));
                        }
                    }
                }
                Ok(None)
            }
        }
    }

    fn solve(&mut self, key: SubcubeKey, parent: Option<&Local>) -> Result<()> {
        if self.memo.contains_key(&key) {
            self.stats.memo_hits += 1;
            return Ok(());
        }
        let level = key.len();
        let expand = level < self.depth;
        let mut rng = self.rng_for(key);
        let data = match parent {
            Some(p) => Data::Table(p),
            None => match self.materialise(key, expand, &mut rng)? {
                Some(l) => Data::Owned(l),
                None => Data::Sampled,
            },
        };
        let local = match &data {
            Data::Table(l) => Some(*l),
            Data::Owned(l) => Some(l),
            Data::Sampled => None,
        };

        if !expand {
            let bias = match local {
                Some(l) => l.table.bias(),
                None => crate::influence::estimate_bias_at(self.o, key, &self.budget, &mut rng)?,
            };
            if level == 0 {
                self.stats.subproblems_explored += 1;
                self.stats.per_level[0] += 1;
            }
            self.leaf(key, bias);
            return Ok(());
        }

        self.stats.subproblems_explored += 1;
        self.stats.per_level[level] += 1;

        let (scores, bias) = match local {
            Some(l) => (l.influences(), l.table.bias()),
            None => match self.cfg.mode {
                AccessMode::Mq => estimate_influences_at(self.o, key, &self.budget, &mut rng)?,
                AccessMode::ExOnly => {
                    let m = self.budget.signed_samples();
                    let pool = ConditionedPool::draw(self.o, key, m, &mut rng)?;
                    (
                        pool_influences(self.o, key, &pool, &self.budget),
                        pool.bias(),
                    )
                }
            },
        };

        let mut candidates = self.candidates(key, local, &scores, level, &mut rng)?;
        let cap = self.cfg.s.min(
            1usize
                .checked_shl((self.depth - level) as u32)
                .unwrap_or(usize::MAX),
        );
        if candidates.is_empty() || cap < 2 {
            self.leaf(key, bias);
            return Ok(());
        }
        candidates.sort_unstable();

        let leaf_err = bias.min(1.0 - bias);
        let mut err = vec![leaf_err; cap];
        let mut pick = vec![Pick::Leaf; cap];
        for v in candidates {
            let (k0, k1) = (key.with(v, false), key.with(v, true));
            match local {
                Some(l) => {
                    let c0 = l.child(v, false);
                    self.solve(k0, Some(&c0))?;
                    drop(c0);
                    let c1 = l.child(v, true);
                    self.solve(k1, Some(&c1))?;
                }
                None => {
                    self.solve(k0, None)?;
                    self.solve(k1, None)?;
                }
            }
            let (zero, one) = (&self.memo[&k0], &self.memo[&k1]);
            for b in 2..=cap {
                for b0 in 1..b {
                    let e = (zero.at(b0).0 + one.at(b - b0).0) / 2.0;
                    if e < err[b - 1] {
                        err[b - 1] = e;
                        pick[b - 1] = Pick::Split {
                            var: v,
                            zero_budget: b0,
                        };
                    }
                }
            }
            if err[1] == 0.0 {
                break;
            }
        }
        // A larger budget never does worse, and ties keep the smaller tree.
        for b in 1..cap {
            if err[b - 1] <= err[b] {
                err[b] = err[b - 1];
                pick[b] = pick[b - 1];
            }
        }
        self.memo.insert(key, Entry { bias, err, pick });
        Ok(())
    }

    fn leaf(&mut self, key: SubcubeKey, bias: f64) {
        let entry = Entry {
            bias,
            err: vec![bias.min(1.0 - bias)],
            pick: vec![Pick::Leaf],
        };
        self.memo.insert(key, entry);
    }

    /// The `k(t)` variables to branch on. With lookahead `ℓ > 0`, a pool of
    /// the `2·k(t)` (at least `ℓ`) most influential variables is scored by the
    /// best depth-`ℓ` cell error over sets containing each variable, and the
    /// `k(t)` best-scoring variables are kept.
    fn candidates(
        &self,
        key: SubcubeKey,
        local: Option<&Local>,
        scores: &InfluenceVector,
        level: usize,
        rng: &mut Rng,
    ) -> Result<Vec<usize>> {
        let k = self.cfg.k_at(level);
        let tau = self.cfg.tau();
        let l = self.cfg.lookahead;
        if l == 0 {
            return Ok(scores.top_k(k, tau));
        }
        let pool = scores.top_k((2 * k).max(l), tau);
        let width = l.min(pool.len());
        let mut ranked = Vec::with_capacity(pool.len());
        for &v in &pool {
            let others: Vec<usize> = pool.iter().copied().filter(|&u| u != v).collect();
            let mut best = f64::INFINITY;
            for rest in subsets(&others, width - 1) {
                let mut set = rest;
                set.push(v);
                set.sort_unstable();
                let score = match local {
                    Some(loc) => {
                        let idx: Vec<usize> = set.iter().map(|&u| loc.local_index(u)).collect();
                        exact_lookahead(&loc.table, &idx, l)?
                    }
                    None => lookahead_at(self.o, key, &set, &self.budget, rng)?,
                };
                best = best.min(score);
            }
            ranked.push((v, best));
        }
        ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        Ok(ranked.into_iter().take(k).map(|(v, _)| v).collect())
    }

    fn build(&self, key: SubcubeKey, budget: usize) -> DecisionTree {
        let e = &self.memo[&key];
        match e.at(budget).1 {
            Pick::Split { var, zero_budget } => {
                let b = budget.min(e.err.len());
                DecisionTree::node(
                    var,
                    self.build(key.with(var, false), zero_budget),
                    self.build(key.with(var, true), b - zero_budget),
                )
            }
            Pick::Leaf => DecisionTree::Leaf(majority(e.bias)),
        }
    }
}

struct MemoBias<'m>(&'m KeyMap<Entry>);

impl BiasReference for MemoBias<'_> {
    fn bias(&mut self, key: SubcubeKey) -> Result<f64> {
        Ok(self.0[&key].bias)
    }
}

/// Place the bits of `y` into the free coordinates `vars` of `key`'s subcube.
fn deposit(key: SubcubeKey, vars: &[usize], y: usize) -> Input {
    let mut x = key.values;
    for (j, &v) in vars.iter().enumerate() {
        x |= ((y >> j & 1) as Input) << v;
    }
    x
}

/// Inverse of [`deposit`].
fn extract(vars: &[usize], x: Input) -> usize {
    vars.iter()
        .enumerate()
        .fold(0, |y, (j, &v)| y | ((x >> v & 1) as usize) << j)
}

/// All `size`-element subsets of `items`, each in the order of `items`.
fn subsets(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    if size == 0 {
        return vec![Vec::new()];
    }
    if items.len() < size {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        for mut rest in subsets(&items[i + 1..], size - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}
