//! Variable influence, bias and lookahead scores.
//!
//! `Inf_i(f) = Pr_x[f(x) != f(x ^ e_i)]` for uniform `x`. Exact scores come
//! from truth tables; estimated scores draw `m = ceil(ln(2/δ) / (2τ²))`
//! samples from an [`Oracle`], which by Hoeffding puts each estimate within
//! `τ` of its mean with probability at least `1 - δ`.
//!
//! Variable indices are always the ambient (unrestricted) ones.

use rand::Rng as _;

use crate::boolfn::TruthTable;
use crate::error::{invalid, Error, Result};
use crate::oracle::{conditioned_attempts, AccessMode, Oracle};
use crate::restriction::{Restriction, SubcubeKey};
use crate::rng::Rng;
use crate::{input_mask, Input};

/// Largest supported lookahead depth.
pub const MAX_LOOKAHEAD: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Provenance {
    Exact,
    Estimated { tau: f64, delta: f64 },
}

/// Scores for the free variables of a (possibly restricted) function.
#[derive(Clone, Debug, PartialEq)]
pub struct InfluenceVector {
    /// Ambient index of each scored variable, increasing.
    pub vars: Vec<usize>,
    pub scores: Vec<f64>,
    pub provenance: Provenance,
}

impl InfluenceVector {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn score(&self, var: usize) -> Option<f64> {
        self.vars.binary_search(&var).ok().map(|i| self.scores[i])
    }

    /// Variables scoring strictly above `floor`, highest score first, ties to
    /// the smaller index, truncated to `k`.
    pub fn top_k(&self, k: usize, floor: f64) -> Vec<usize> {
        let mut ranked: Vec<(usize, f64)> = self
            .vars
            .iter()
            .copied()
            .zip(self.scores.iter().copied())
            .filter(|&(_, s)| s > floor)
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.into_iter().take(k).map(|(v, _)| v).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimationBudget {
    tau: f64,
    delta: f64,
}

impl EstimationBudget {
    pub fn new(tau: f64, delta: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) || !(delta > 0.0 && delta < 1.0) {
            return Err(invalid(format!(
                "estimation budget needs τ, δ in (0,1); got τ = {tau}, δ = {delta}"
            )));
        }
        Ok(EstimationBudget { tau, delta })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Two-sided Hoeffding sample count for a `[0, 1]`-valued mean.
    pub fn samples(&self) -> usize {
        ((2.0 / self.delta).ln() / (2.0 * self.tau * self.tau))
            .ceil()
            .max(1.0) as usize
    }

    /// Same count for a `[-1, 1]`-valued mean (range 2, so four times as many).
    pub fn signed_samples(&self) -> usize {
        ((2.0 / self.delta).ln() * 2.0 / (self.tau * self.tau))
            .ceil()
            .max(1.0) as usize
    }

    fn provenance(&self) -> Provenance {
        Provenance::Estimated {
            tau: self.tau,
            delta: self.delta,
        }
    }
}

/// Exact influence of every variable of `f`.
pub fn exact_influence(f: &TruthTable) -> InfluenceVector {
    let size = f.len() as f64;
    InfluenceVector {
        vars: (0..f.n()).collect(),
        scores: (0..f.n())
            .map(|v| f.sensitive_count(v) as f64 / size)
            .collect(),
        provenance: Provenance::Exact,
    }
}

/// Exact `E[(2f - 1)(2x_i - 1)]` for every variable; equals the influence
/// when `f` is monotone.
pub fn exact_correlation(f: &TruthTable) -> Vec<f64> {
    let size = f.len() as f64;
    (0..f.n())
        .map(|v| {
            let agree = (0..f.len())
                .filter(|&x| f.get(x) == (x >> v & 1 == 1))
                .count() as f64;
            (2.0 * agree - size) / size
        })
        .collect()
}

/// `Pr[f_π = 1]` computed exactly.
pub fn exact_bias(f: &TruthTable, pi: &Restriction) -> Result<f64> {
    Ok(f.restrict(pi)?.bias())
}

/// Best error of a depth-`ℓ` tree over `vars` on the table itself: the mean
/// over the `2^|vars|` cells of `min(p, 1 - p)`.
pub fn exact_lookahead(f: &TruthTable, vars: &[usize], depth: usize) -> Result<f64> {
    check_lookahead(vars, depth)?;
    let mut total = 0.0;
    for cell in 0..1usize << vars.len() {
        let pi = Restriction::new(
            vars.iter()
                .enumerate()
                .map(|(j, &v)| (v, cell >> j & 1 == 1)),
        )?;
        let p = f.restrict(&pi)?.bias();
        total += p.min(1.0 - p);
    }
    Ok(total / (1usize << vars.len()) as f64)
}

fn check_lookahead(vars: &[usize], depth: usize) -> Result<()> {
    if depth > MAX_LOOKAHEAD {
        return Err(invalid(format!(
            "lookahead depth {depth} exceeds the cap of {MAX_LOOKAHEAD}"
        )));
    }
    if vars.len() > depth {
        return Err(invalid(format!(
            "{} lookahead variables for depth {depth}",
            vars.len()
        )));
    }
    Ok(())
}

fn require_mq(o: &Oracle) -> Result<()> {
    match o.mode() {
        AccessMode::Mq => Ok(()),
        AccessMode::ExOnly => Err(Error::AccessViolation),
    }
}

fn subcube(o: &Oracle, pi: &Restriction) -> Result<SubcubeKey> {
    pi.check_within(o.n())?;
    pi.key()
}

fn free_var(o: &Oracle, key: SubcubeKey, var: usize) -> Result<()> {
    if var >= o.n() {
        return Err(Error::VariableOutOfRange { var, n: o.n() });
    }
    if key.fixes(var) {
        return Err(invalid(format!("x{var} is fixed by the restriction")));
    }
    Ok(())
}

#[inline]
fn uniform_in(o: &Oracle, key: SubcubeKey, rng: &mut Rng) -> Input {
    key.apply(rng.gen::<Input>() & input_mask(o.n()))
}

/// Membership-query estimate of `Inf_var(f_π)`.
pub fn estimate_influence(
    o: &Oracle,
    pi: &Restriction,
    var: usize,
    b: &EstimationBudget,
    rng: &mut Rng,
) -> Result<f64> {
    require_mq(o)?;
    let key = subcube(o, pi)?;
    free_var(o, key, var)?;
    let m = b.samples();
    let mut hits = 0usize;
    for _ in 0..m {
        let x = uniform_in(o, key, rng);
        hits += (o.mq(x)? != o.mq(x ^ 1 << var)?) as usize;
    }
    Ok(hits as f64 / m as f64)
}

/// Membership-query estimates for every free variable, sharing the base
/// point across variables: `m·(free + 1)` queries in total.
pub fn estimate_influences(
    o: &Oracle,
    pi: &Restriction,
    b: &EstimationBudget,
    rng: &mut Rng,
) -> Result<InfluenceVector> {
    let key = subcube(o, pi)?;
    Ok(estimate_influences_at(o, key, b, rng)?.0)
}

/// Shared-sample influence estimates plus the bias of the same base points.
pub(crate) fn estimate_influences_at(
    o: &Oracle,
    key: SubcubeKey,
    b: &EstimationBudget,
    rng: &mut Rng,
) -> Result<(InfluenceVector, f64)> {
    require_mq(o)?;
    let vars: Vec<usize> = (0..o.n()).filter(|&v| !key.fixes(v)).collect();
    let m = b.samples();
    let mut hits = vec![0usize; vars.len()];
    let mut ones = 0usize;
    for _ in 0..m {
        let x = uniform_in(o, key, rng);
        let fx = o.mq(x)?;
        ones += fx as usize;
        for (h, &v) in hits.iter_mut().zip(&vars) {
            *h += (o.mq(x ^ 1 << v)? != fx) as usize;
        }
    }
    let scores = hits.iter().map(|&h| h as f64 / m as f64).collect();
    Ok((
        InfluenceVector {
            vars,
            scores,
            provenance: b.provenance(),
        },
        ones as f64 / m as f64,
    ))
}

/// Examples drawn from one subcube, reused for the bias and every
/// correlation.
pub(crate) struct ConditionedPool {
    pub examples: Vec<(Input, bool)>,
}

impl ConditionedPool {
    pub fn draw(o: &Oracle, key: SubcubeKey, m: usize, rng: &mut Rng) -> Result<Self> {
        let attempts = conditioned_attempts(key.len());
        let examples = (0..m)
            .map(|_| o.ex_conditioned_with(key, attempts, rng))
            .collect::<Result<_>>()?;
        Ok(ConditionedPool { examples })
    }

    pub fn bias(&self) -> f64 {
        let ones = self.examples.iter().filter(|e| e.1).count();
        ones as f64 / self.examples.len().max(1) as f64
    }

    pub fn correlation(&self, var: usize) -> f64 {
        let agree = self
            .examples
            .iter()
            .filter(|&&(x, y)| (x >> var & 1 == 1) == y)
            .count() as f64;
        let m = self.examples.len().max(1) as f64;
        (2.0 * agree - m) / m
    }
}

/// Examples-only estimate of `E[(2f_π - 1)(2x_var - 1)]`, which equals
/// `Inf_var(f_π)` whenever `f` is monotone.
pub fn estimate_influence_monotone(
    o: &Oracle,
    pi: &Restriction,
    var: usize,
    b: &EstimationBudget,
    rng: &mut Rng,
) -> Result<f64> {
    let key = subcube(o, pi)?;
    free_var(o, key, var)?;
    let pool = ConditionedPool::draw(o, key, b.signed_samples(), rng)?;
    Ok(pool.correlation(var))
}

/// Examples-only estimates for every free variable from one shared pool.
pub fn estimate_influences_monotone(
    o: &Oracle,
    pi: &Restriction,
    b: &EstimationBudget,
    rng: &mut Rng,
) -> Result<InfluenceVector> {
    let key = subcube(o, pi)?;
    let pool = ConditionedPool::draw(o, key, b.signed_samples(), rng)?;
    Ok(pool_influences(o, key, &pool, b))
}

pub(crate) fn pool_influences(
    o: &Oracle,
    key: SubcubeKey,
    pool: &ConditionedPool,
    b: &EstimationBudget,
) -> InfluenceVector {
    let vars: Vec<usize> = (0..o.n()).filter(|&v| !key.fixes(v)).collect();
    let scores = vars.iter().map(|&v| pool.correlation(v)).collect();
    InfluenceVector {
        vars,
        scores,
        provenance: b.provenance(),
    }
}

/// Up to `k` free variables with the largest estimated influence, highest
/// first, ties to the smaller index. Estimates at or below `τ` are dropped.
/// Uses the monotone estimator when the oracle is examples-only.
pub fn top_k_influential(
    o: &Oracle,
    pi: &Restriction,
    k: usize,
    b: &EstimationBudget,
    rng: &mut Rng,
) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    let scores = match o.mode() {
        AccessMode::Mq => estimate_influences(o, pi, b, rng)?,
        AccessMode::ExOnly => estimate_influences_monotone(o, pi, b, rng)?,
    };
    Ok(scores.top_k(k, b.tau()))
}

/// Estimate of `Pr[f_π = 1]`: uniform membership queries in the subcube, or
/// conditioned examples when the oracle is examples-only.
pub fn estimate_bias(
    o: &Oracle,
    pi: &Restriction,
    b: &EstimationBudget,
    rng: &mut Rng,
) -> Result<f64> {
    let key = subcube(o, pi)?;
    estimate_bias_at(o, key, b, rng)
}

pub(crate) fn estimate_bias_at(
    o: &Oracle,
    key: SubcubeKey,
    b: &EstimationBudget,
    rng: &mut Rng,
) -> Result<f64> {
    let m = b.samples();
    match o.mode() {
        AccessMode::Mq => {
            let mut ones = 0usize;
            for _ in 0..m {
                ones += o.mq(uniform_in(o, key, rng))? as usize;
            }
            Ok(ones as f64 / m as f64)
        }
        AccessMode::ExOnly => Ok(ConditionedPool::draw(o, key, m, rng)?.bias()),
    }
}

/// Estimated best error of a depth-`ℓ` tree querying only `vars` below `π`:
/// each of the `2^|vars|` cells gets its majority label.
pub fn lookahead_score(
    o: &Oracle,
    pi: &Restriction,
    vars: &[usize],
    depth: usize,
    b: &EstimationBudget,
    rng: &mut Rng,
) -> Result<f64> {
    check_lookahead(vars, depth)?;
    let key = subcube(o, pi)?;
    let mut seen = key;
    for &v in vars {
        free_var(o, seen, v)?;
        seen = seen.with(v, false);
    }
    lookahead_at(o, key, vars, b, rng)
}

pub(crate) fn lookahead_at(
    o: &Oracle,
    key: SubcubeKey,
    vars: &[usize],
    b: &EstimationBudget,
    rng: &mut Rng,
) -> Result<f64> {
    let cells = 1usize << vars.len();
    let mut total = 0.0;
    for cell in 0..cells {
        let cell_key = vars
            .iter()
            .enumerate()
            .fold(key, |k, (j, &v)| k.with(v, cell >> j & 1 == 1));
        let p = estimate_bias_at(o, cell_key, b, rng)?;
        total += p.min(1.0 - p);
    }
    Ok(total / cells as f64)
}
