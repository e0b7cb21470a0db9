//! Simulated access to a target function.
//!
//! An [`Oracle`] answers membership queries (`mq`) and draws uniform random
//! examples (`ex`), counting both. Label noise is a *fixed* corruption of the
//! target: for `n <= 24` exactly `round(η·2^n)` inputs, chosen from the
//! seed, have their label flipped; above that, each input is flipped iff a
//! seeded hash of it falls below `η`. Either way the same input always gets
//! the same label, so the corrupted target is itself a function.
//!
//! The oracle is `Sync`: counters are atomics and the shared example stream
//! sits behind a mutex. Callers that need order-independent streams pass
//! their own generator to the `*_with` variants; the learners derive one per
//! subproblem from `(seed, restriction)`.

use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use rand::seq::index;
use rand::Rng as _;

use crate::boolfn::{TruthTable, MAX_TABLE_VARS};
use crate::error::{invalid, Error, Result};
use crate::restriction::{Restriction, SubcubeKey};
use crate::rng::{self, Rng};
use crate::tree::{parse_tree_file, DecisionTree};
use crate::{input_mask, Input, MAX_VARS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessMode {
    /// Membership queries and random examples.
    #[serde(rename = "mq")]
    Mq,
    /// Random examples only; `mq` is refused.
    #[serde(rename = "ex")]
    ExOnly,
}

impl AccessMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AccessMode::Mq => "mq",
            AccessMode::ExOnly => "ex",
        }
    }
}

impl FromStr for AccessMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mq" => Ok(AccessMode::Mq),
            "ex" => Ok(AccessMode::ExOnly),
            _ => Err(invalid(format!("unknown access mode {s:?}"))),
        }
    }
}

/// The clean function behind an oracle.
#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    Table(TruthTable),
    Tree { tree: DecisionTree, n: usize },
}

impl Target {
    pub fn tree(tree: DecisionTree, n: usize) -> Result<Self> {
        if n > MAX_VARS {
            return Err(Error::TooManyVariables { n, cap: MAX_VARS });
        }
        tree.validate(n)?;
        Ok(Target::Tree { tree, n })
    }

    pub fn n(&self) -> usize {
        match self {
            Target::Table(t) => t.n(),
            Target::Tree { n, .. } => *n,
        }
    }

    #[inline]
    pub fn eval(&self, x: Input) -> bool {
        match self {
            Target::Table(t) => t.get(x as usize),
            Target::Tree { tree, .. } => tree.eval(x),
        }
    }

    /// Exact table when `n` is within the table cap.
    pub fn to_table(&self) -> Option<TruthTable> {
        match self {
            Target::Table(t) => Some(t.clone()),
            Target::Tree { tree, n } if *n <= MAX_TABLE_VARS => tree.to_table(*n).ok(),
            Target::Tree { .. } => None,
        }
    }

    /// Load either file format: a truth table (`n=` then `hex=`) or a tree
    /// with an optional `n=` header. A headerless tree gets the smallest `n`
    /// that covers its variables.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let first = lines.next().unwrap_or("");
        let second = lines.next().unwrap_or("");
        if first.starts_with("n=") && second.starts_with("hex=") {
            return Ok(Target::Table(TruthTable::parse_file(text)?));
        }
        let (n, tree) = parse_tree_file(text)?;
        let n = n.unwrap_or_else(|| tree.min_arity().max(1));
        Target::tree(tree, n)
    }
}

#[derive(Debug)]
enum Corruption {
    None,
    Table(TruthTable),
    Hashed { threshold: u64, seed: u64 },
}

#[derive(Debug)]
pub struct Oracle {
    target: Target,
    n: usize,
    mode: AccessMode,
    noise: f64,
    seed: u64,
    corruption: Corruption,
    mq_count: AtomicU64,
    ex_count: AtomicU64,
    stream: Mutex<Rng>,
}

const NOISE_STREAM: u64 = 0x006e_6f69_7365;
const EX_STREAM: u64 = 0x6578;

impl Oracle {
    /// `noise` must lie in `[0, 1/2)`.
    pub fn new(target: Target, mode: AccessMode, noise: f64, seed: u64) -> Result<Self> {
        if !(0.0..0.5).contains(&noise) {
            return Err(invalid(format!("noise rate {noise} outside [0, 1/2)")));
        }
        let n = target.n();
        let corruption = if noise == 0.0 {
            Corruption::None
        } else if n <= MAX_TABLE_VARS {
            let size = 1usize << n;
            let flips = (noise * size as f64).round() as usize;
            let mut mask = TruthTable::constant(n, false)?;
            let mut rng = rng::seeded(rng::mix(seed, NOISE_STREAM));
            for x in index::sample(&mut rng, size, flips).iter() {
                mask.set(x, true);
            }
            Corruption::Table(mask)
        } else {
            Corruption::Hashed {
                threshold: (noise * 2f64.powi(64)) as u64,
                seed: rng::mix(seed, NOISE_STREAM),
            }
        };
        Ok(Oracle {
            target,
            n,
            mode,
            noise,
            seed,
            corruption,
            mq_count: AtomicU64::new(0),
            ex_count: AtomicU64::new(0),
            stream: Mutex::new(rng::seeded(rng::mix(seed, EX_STREAM))),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> AccessMode {
        self.mode
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    #[inline]
    fn corrupted(&self, x: Input) -> bool {
        match &self.corruption {
            Corruption::None => false,
            Corruption::Table(mask) => mask.get(x as usize),
            Corruption::Hashed { threshold, seed } => rng::mix128(*seed, x) < *threshold,
        }
    }

    /// Label of the corrupted target, without touching the counters. This is
    /// evaluation access and is not available to learners through `mq`.
    #[inline]
    pub fn ground_truth(&self, x: Input) -> bool {
        self.target.eval(x) ^ self.corrupted(x)
    }

    /// Truth table of the corrupted target, for exact evaluation.
    pub fn corrupted_table(&self) -> Option<TruthTable> {
        let clean = self.target.to_table()?;
        match &self.corruption {
            Corruption::None => Some(clean),
            Corruption::Table(mask) => clean.xor(mask).ok(),
            Corruption::Hashed { .. } => None,
        }
    }

    /// Membership query.
    pub fn mq(&self, x: Input) -> Result<bool> {
        if self.mode == AccessMode::ExOnly {
            return Err(Error::AccessViolation);
        }
        self.mq_count.fetch_add(1, Ordering::Relaxed);
        Ok(self.ground_truth(x & input_mask(self.n)))
    }

    /// Random example from the oracle's own stream.
    pub fn ex(&self) -> (Input, bool) {
        let mut rng = self.stream.lock().unwrap_or_else(|e| e.into_inner());
        self.ex_with(&mut rng)
    }

    /// Random example with `x` drawn from the caller's stream.
    pub fn ex_with(&self, rng: &mut Rng) -> (Input, bool) {
        let x = rng.gen::<Input>() & input_mask(self.n);
        self.ex_count.fetch_add(1, Ordering::Relaxed);
        (x, self.ground_truth(x))
    }

    /// Rejection-sample examples until one lies in `π`'s subcube.
    pub fn ex_conditioned(&self, pi: &Restriction, max_attempts: usize) -> Result<(Input, bool)> {
        pi.check_within(self.n)?;
        let key = pi.key()?;
        let mut rng = self.stream.lock().unwrap_or_else(|e| e.into_inner());
        self.ex_conditioned_with(key, max_attempts, &mut rng)
    }

    pub fn ex_conditioned_with(
        &self,
        key: SubcubeKey,
        max_attempts: usize,
        rng: &mut Rng,
    ) -> Result<(Input, bool)> {
        for _ in 0..max_attempts {
            let (x, y) = self.ex_with(rng);
            if key.consistent(x) {
                return Ok((x, y));
            }
        }
        Err(Error::SamplingExhausted {
            attempts: max_attempts,
        })
    }

    /// `(mq_count, ex_count)`.
    pub fn counts(&self) -> (u64, u64) {
        (
            self.mq_count.load(Ordering::Relaxed),
            self.ex_count.load(Ordering::Relaxed),
        )
    }
}

/// Attempts budget for conditioned sampling under `fixed` variables:
/// 64 times the expected `2^fixed`.
pub fn conditioned_attempts(fixed: usize) -> usize {
    64usize.saturating_mul(1usize.checked_shl(fixed as u32).unwrap_or(usize::MAX))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn and2() -> Target {
        Target::Table(TruthTable::from_fn(2, |x| x == 3).unwrap())
    }

    #[test]
    fn mq_examples() {
        let o = Oracle::new(and2(), AccessMode::Mq, 0.0, 1).unwrap();
        assert!(o.mq(0b11).unwrap());
        assert!(!o.mq(0b10).unwrap());
        assert_eq!(o.counts(), (2, 0));
    }

    #[test]
    fn ex_only_refuses_mq() {
        let o = Oracle::new(and2(), AccessMode::ExOnly, 0.0, 1).unwrap();
        assert!(matches!(o.mq(0), Err(Error::AccessViolation)));
        assert_eq!(o.counts(), (0, 0));
    }

    #[test]
    fn counters() {
        let o = Oracle::new(and2(), AccessMode::Mq, 0.0, 1).unwrap();
        assert_eq!(o.counts(), (0, 0));
        for x in 0..3 {
            o.mq(x).unwrap();
        }
        o.ex();
        o.ex();
        assert_eq!(o.counts(), (3, 2));
    }

    #[test]
    fn ex_agrees_with_mq() {
        let t = Target::Table(TruthTable::from_fn(6, |x| x % 7 < 3).unwrap());
        let o = Oracle::new(t, AccessMode::Mq, 0.2, 9).unwrap();
        for _ in 0..200 {
            let (x, y) = o.ex();
            assert_eq!(o.mq(x).unwrap(), y);
        }
    }

    #[test]
    fn corruption_flips_exact_budget() {
        let clean = TruthTable::from_fn(10, |x| x.count_ones() % 3 == 0).unwrap();
        let o = Oracle::new(Target::Table(clean.clone()), AccessMode::Mq, 0.1, 42).unwrap();
        let noisy = o.corrupted_table().unwrap();
        assert_eq!(clean.disagreements(&noisy).unwrap(), 102);
        let mut flipped = 0;
        for x in 0..1024usize {
            let answer = o.mq(x as Input).unwrap();
            assert_eq!(answer, noisy.get(x));
            if answer != clean.get(x) {
                flipped += 1;
            }
        }
        assert_eq!(flipped, 102);
    }

    #[test]
    fn hashed_corruption_is_consistent() {
        let tree: DecisionTree = "(x100 0 1)".parse().unwrap();
        let o = Oracle::new(Target::tree(tree, 128).unwrap(), AccessMode::Mq, 0.25, 5).unwrap();
        let mut rng = rng::seeded(3);
        let mut flips = 0;
        for _ in 0..4000 {
            let x: Input = rng.gen();
            let a = o.mq(x).unwrap();
            assert_eq!(a, o.mq(x).unwrap());
            flips += (a != (x >> 100 & 1 == 1)) as u32;
        }
        assert!((800..1200).contains(&flips), "{flips}");
    }

    #[test]
    fn noise_range_checked() {
        assert!(Oracle::new(and2(), AccessMode::Mq, 0.5, 0).is_err());
        assert!(Oracle::new(and2(), AccessMode::Mq, -0.1, 0).is_err());
    }

    #[test]
    fn conditioned_examples_respect_restriction() {
        let o = Oracle::new(and2(), AccessMode::ExOnly, 0.0, 4).unwrap();
        let pi = Restriction::new([(0, true)]).unwrap();
        for _ in 0..100 {
            let (x, _) = o.ex_conditioned(&pi, conditioned_attempts(1)).unwrap();
            assert_eq!(x & 1, 1);
        }
        let bad = Restriction::new([(7, true)]).unwrap();
        assert!(o.ex_conditioned(&bad, 10).is_err());
    }

    #[test]
    fn conditioned_sampling_can_exhaust() {
        let t = Target::Table(TruthTable::constant(20, true).unwrap());
        let o = Oracle::new(t, AccessMode::ExOnly, 0.0, 4).unwrap();
        let pi = Restriction::new((0..20).map(|v| (v, true))).unwrap();
        assert!(matches!(
            o.ex_conditioned(&pi, 3),
            Err(Error::SamplingExhausted { attempts: 3 })
        ));
    }

    #[test]
    fn target_parsing() {
        let t = Target::parse("n=2\nhex=8\n").unwrap();
        assert_eq!(t, and2());
        let t = Target::parse("n=40\n(x33 0 1)\n").unwrap();
        assert_eq!(t.n(), 40);
        let t = Target::parse("(x3 0 1)").unwrap();
        assert_eq!(t.n(), 4);
        assert!(Target::parse("n=2\n(x3 0 1)").is_err());
    }
}
