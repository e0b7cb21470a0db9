//! Partial assignments `π` and their packed subcube form.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::{Input, MAX_VARS};

/// A set of `(variable, bit)` pairs with distinct variables, kept sorted by
/// variable index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Restriction {
    pairs: Vec<(usize, bool)>,
}

impl Restriction {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Canonicalise the given pairs; a variable fixed twice is an error even
    /// when both bits agree.
    pub fn new(pairs: impl IntoIterator<Item = (usize, bool)>) -> Result<Self> {
        let mut pairs: Vec<_> = pairs.into_iter().collect();
        pairs.sort_unstable_by_key(|p| p.0);
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateVariable(w[0].0));
        }
        Ok(Restriction { pairs })
    }

    pub fn with(&self, var: usize, value: bool) -> Result<Self> {
        match self.pairs.binary_search_by_key(&var, |p| p.0) {
            Ok(_) => Err(Error::DuplicateVariable(var)),
            Err(at) => {
                let mut pairs = self.pairs.clone();
                pairs.insert(at, (var, value));
                Ok(Restriction { pairs })
            }
        }
    }

    /// Union of two restrictions over disjoint variables.
    pub fn union(&self, other: &Restriction) -> Result<Self> {
        Self::new(self.pairs.iter().chain(&other.pairs).copied())
    }

    pub fn pairs(&self) -> &[(usize, bool)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, var: usize) -> Option<bool> {
        self.pairs
            .binary_search_by_key(&var, |p| p.0)
            .ok()
            .map(|i| self.pairs[i].1)
    }

    /// Original indices of the variables left free among `0..n`, in order.
    /// Position `j` of the result is free variable `j` of the restricted table.
    pub fn free_vars(&self, n: usize) -> Vec<usize> {
        (0..n).filter(|&v| self.get(v).is_none()).collect()
    }

    /// Packed form; every variable must be below [`MAX_VARS`].
    pub fn key(&self) -> Result<SubcubeKey> {
        let mut key = SubcubeKey::ROOT;
        for &(var, value) in &self.pairs {
            if var >= MAX_VARS {
                return Err(Error::VariableOutOfRange { var, n: MAX_VARS });
            }
            key = key.with(var, value);
        }
        Ok(key)
    }

    pub fn check_within(&self, n: usize) -> Result<()> {
        match self.pairs.last() {
            Some(&(var, _)) if var >= n => Err(Error::VariableOutOfRange { var, n }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (var, value)) in self.pairs.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "x{var}={}", *value as u8)?;
        }
        Ok(())
    }
}

/// Parses the comma-separated `x<idx>=<bit>` form; the empty string is the
/// empty restriction.
impl FromStr for Restriction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut pos = 0;
        for token in s.split(',') {
            let trimmed = token.trim();
            if trimmed.is_empty() && s.trim().is_empty() {
                break;
            }
            let bad = |msg: &str| Error::Parse {
                pos,
                msg: format!("{msg} in {trimmed:?}"),
            };
            let (lhs, rhs) = trimmed.split_once('=').ok_or_else(|| bad("missing '='"))?;
            let var = lhs
                .strip_prefix('x')
                .and_then(|v| v.parse::<usize>().ok())
                .ok_or_else(|| bad("expected x<idx>"))?;
            let value = match rhs {
                "0" => false,
                "1" => true,
                _ => return Err(bad("expected bit 0 or 1")),
            };
            pairs.push((var, value));
            pos += token.len() + 1;
        }
        Self::new(pairs)
    }
}

/// A restriction packed into two bit masks, used as the memo key of the
/// search procedures. Equal restrictions have equal keys regardless of the
/// order in which their variables were fixed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubcubeKey {
    pub mask: Input,
    pub values: Input,
}

impl SubcubeKey {
    pub const ROOT: SubcubeKey = SubcubeKey { mask: 0, values: 0 };

    #[inline]
    pub fn with(self, var: usize, value: bool) -> Self {
        debug_assert!(self.mask >> var & 1 == 0);
        SubcubeKey {
            mask: self.mask | 1 << var,
            values: self.values | (value as Input) << var,
        }
    }

    #[inline]
    pub fn len(self) -> usize {
        self.mask.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.mask == 0
    }

    #[inline]
    pub fn fixes(self, var: usize) -> bool {
        self.mask >> var & 1 == 1
    }

    /// Overwrite the fixed coordinates of `x`.
    #[inline]
    pub fn apply(self, x: Input) -> Input {
        (x & !self.mask) | self.values
    }

    #[inline]
    pub fn consistent(self, x: Input) -> bool {
        x & self.mask == self.values
    }

    pub fn to_restriction(self) -> Restriction {
        let pairs = (0..MAX_VARS)
            .filter(|&v| self.fixes(v))
            .map(|v| (v, self.values >> v & 1 == 1))
            .collect();
        Restriction { pairs }
    }

    /// Label for seed derivation.
    #[inline]
    pub fn fingerprint(self) -> u64 {
        crate::rng::mix128(crate::rng::mix128(0, self.mask), self.values)
    }
}
