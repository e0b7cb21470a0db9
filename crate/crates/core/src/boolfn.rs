//! Exact truth tables for Boolean functions on at most [`MAX_TABLE_VARS`] variables.
//!
//! Bit `x` of the table is `f(x)`, where variable 0 is the least-significant
//! bit of `x`. Bits are packed 64 to a word; tables on fewer than six
//! variables occupy the low `2^n` bits of a single word and the unused high
//! bits are always zero.

use std::fmt;

use crate::error::{Error, Result};
use crate::restriction::Restriction;

/// Exactness cap: 2^24 bits = 2 MiB.
pub const MAX_TABLE_VARS: usize = 24;

/// `LANE[i]` selects the bit positions whose bit `i` is zero.
const LANE: [u64; 6] = [
    0x5555_5555_5555_5555,
    0x3333_3333_3333_3333,
    0x0f0f_0f0f_0f0f_0f0f,
    0x00ff_00ff_00ff_00ff,
    0x0000_ffff_0000_ffff,
    0x0000_0000_ffff_ffff,
];

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TruthTable {
    n: usize,
    words: Vec<u64>,
}

#[inline]
fn word_count(n: usize) -> usize {
    if n <= 6 {
        1
    } else {
        1 << (n - 6)
    }
}

#[inline]
fn low_mask(n: usize) -> u64 {
    if n >= 6 {
        u64::MAX
    } else {
        (1u64 << (1 << n)) - 1
    }
}

/// Gather the bits of `w` selected by `LANE[i]` into the low 32 bits.
#[inline]
fn compress_lane(w: u64, i: usize) -> u64 {
    let mut x = w & LANE[i];
    for j in i..5 {
        x = (x | (x >> (1 << j))) & LANE[j + 1];
    }
    x
}

fn check_arity(n: usize) -> Result<()> {
    if n > MAX_TABLE_VARS {
        return Err(Error::TooManyVariables {
            n,
            cap: MAX_TABLE_VARS,
        });
    }
    Ok(())
}

impl TruthTable {
    /// The constant function on `n` variables.
    pub fn constant(n: usize, value: bool) -> Result<Self> {
        check_arity(n)?;
        let fill = if value { u64::MAX } else { 0 };
        let mut words = vec![fill; word_count(n)];
        words[0] &= low_mask(n);
        Ok(TruthTable { n, words })
    }

    /// `f` is called once per input, in increasing index order.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize) -> bool) -> Result<Self> {
        let mut t = Self::constant(n, false)?;
        for x in 0..t.len() {
            if f(x) {
                t.words[x >> 6] |= 1 << (x & 63);
            }
        }
        Ok(t)
    }

    /// Build from `2^n` bits given in index order.
    pub fn from_bits(n: usize, bits: &[bool]) -> Result<Self> {
        check_arity(n)?;
        if bits.len() != 1 << n {
            return Err(crate::error::invalid(format!(
                "expected {} bits for n = {n}, got {}",
                1usize << n,
                bits.len()
            )));
        }
        Self::from_fn(n, |x| bits[x])
    }

    /// Build from packed words; high bits beyond `2^n` must be clear.
    pub fn from_words(n: usize, words: Vec<u64>) -> Result<Self> {
        check_arity(n)?;
        if words.len() != word_count(n) || words[0] & !low_mask(n) != 0 {
            return Err(crate::error::invalid("word vector does not match arity"));
        }
        Ok(TruthTable { n, words })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of inputs, `2^n`.
    #[inline]
    pub fn len(&self) -> usize {
        1 << self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, x: usize) -> bool {
        debug_assert!(x < self.len());
        (self.words[x >> 6] >> (x & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, x: usize, value: bool) {
        debug_assert!(x < self.len());
        let bit = 1u64 << (x & 63);
        if value {
            self.words[x >> 6] |= bit;
        } else {
            self.words[x >> 6] &= !bit;
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// `Pr[f = 1]` under the uniform distribution.
    pub fn bias(&self) -> f64 {
        self.count_ones() as f64 / self.len() as f64
    }

    pub fn is_constant(&self) -> Option<bool> {
        match self.count_ones() {
            0 => Some(false),
            c if c == self.len() as u64 => Some(true),
            _ => None,
        }
    }

    pub fn complement(&self) -> TruthTable {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        words[0] &= low_mask(self.n);
        TruthTable { n: self.n, words }
    }

    pub fn xor(&self, other: &TruthTable) -> Result<TruthTable> {
        self.same_arity(other)?;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(TruthTable { n: self.n, words })
    }

    fn same_arity(&self, other: &TruthTable) -> Result<()> {
        if self.n != other.n {
            return Err(Error::ArityMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    /// Number of inputs on which the two functions differ.
    pub fn disagreements(&self, other: &TruthTable) -> Result<u64> {
        self.same_arity(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as u64)
            .sum())
    }

    /// Exact disagreement fraction `Pr_x[f(x) != g(x)]`.
    pub fn distance(&self, other: &TruthTable) -> Result<f64> {
        Ok(self.disagreements(other)? as f64 / self.len() as f64)
    }

    /// Fix variable `var` to `value`; the result is over `n - 1` variables
    /// with every variable above `var` shifted down by one.
    pub fn restrict_var(&self, var: usize, value: bool) -> TruthTable {
        assert!(var < self.n, "x{var} out of range for n = {}", self.n);
        let n = self.n - 1;
        let words = if var >= 6 {
            let block = 1 << (var - 6);
            let offset = if value { block } else { 0 };
            self.words
                .chunks(2 * block)
                .flat_map(|c| c[offset..offset + block].iter().copied())
                .collect()
        } else {
            let shift = 1 << var;
            let halves = self.words.iter().map(|&w| {
                let w = if value { w >> shift } else { w };
                compress_lane(w, var)
            });
            if self.n <= 6 {
                halves.collect()
            } else {
                let halves: Vec<u64> = halves.collect();
                halves.chunks(2).map(|p| p[0] | (p[1] << 32)).collect()
            }
        };
        TruthTable { n, words }
    }

    /// Restrict by a partial assignment. Free variables keep their relative
    /// order and are renumbered `0..n - |π|`.
    pub fn restrict(&self, pi: &Restriction) -> Result<TruthTable> {
        if let Some(&(var, _)) = pi.pairs().last() {
            if var >= self.n {
                return Err(Error::VariableOutOfRange { var, n: self.n });
            }
        }
        let mut t = self.clone();
        // Highest index first so lower indices stay put.
        for &(var, value) in pi.pairs().iter().rev() {
            t = t.restrict_var(var, value);
        }
        Ok(t)
    }

    /// Number of inputs `x` with `f(x) != f(x ^ e_var)`.
    pub fn sensitive_count(&self, var: usize) -> u64 {
        assert!(var < self.n);
        let pairs: u64 = if var >= 6 {
            let block = 1 << (var - 6);
            self.words
                .chunks(2 * block)
                .map(|c| {
                    c[..block]
                        .iter()
                        .zip(&c[block..])
                        .map(|(a, b)| (a ^ b).count_ones() as u64)
                        .sum::<u64>()
                })
                .sum()
        } else {
            let shift = 1 << var;
            self.words
                .iter()
                .map(|&w| ((w ^ (w >> shift)) & LANE[var]).count_ones() as u64)
                .sum()
        };
        2 * pairs
    }

    /// True iff raising any single input bit never lowers the output.
    pub fn is_monotone(&self) -> bool {
        (0..self.n).all(|var| {
            if var >= 6 {
                let block = 1 << (var - 6);
                self.words.chunks(2 * block).all(|c| {
                    c[..block]
                        .iter()
                        .zip(&c[block..])
                        .all(|(lo, hi)| lo & !hi == 0)
                })
            } else {
                let shift = 1 << var;
                self.words.iter().all(|&w| {
                    let lo = w & LANE[var];
                    let hi = (w >> shift) & LANE[var];
                    lo & !hi == 0
                })
            }
        })
    }

    /// `f'(x) = OR of f(y) over all y below x`, the smallest monotone
    /// function above `f`.
    #[allow(clippy::needless_range_loop)]
    pub fn upward_closure(&self) -> TruthTable {
        let mut words = self.words.clone();
        for var in 0..self.n {
            if var >= 6 {
                let block = 1 << (var - 6);
                for c in words.chunks_mut(2 * block) {
                    let (lo, hi) = c.split_at_mut(block);
                    for (l, h) in lo.iter().zip(hi.iter_mut()) {
                        *h |= *l;
                    }
                }
            } else {
                let shift = 1 << var;
                for w in words.iter_mut() {
                    *w |= (*w & LANE[var]) << shift;
                }
            }
        }
        TruthTable { n: self.n, words }
    }

    /// Bits in index order, e.g. `"0001"` for AND on two variables.
    pub fn bit_string(&self) -> String {
        (0..self.len())
            .map(|x| if self.get(x) { '1' } else { '0' })
            .collect()
    }

    /// Hex digits, most significant first; the last digit holds indices 0..3
    /// with index 0 as its least-significant bit.
    pub fn to_hex(&self) -> String {
        let digits = (self.len() / 4).max(1);
        (0..digits)
            .rev()
            .map(|j| {
                let nibble = (self.words[j / 16] >> (4 * (j % 16))) & 0xf;
                char::from_digit(nibble as u32, 16).unwrap()
            })
            .collect()
    }

    pub fn from_hex(n: usize, hex: &str) -> Result<Self> {
        let mut t = Self::constant(n, false)?;
        let digits = (t.len() / 4).max(1);
        if hex.len() != digits {
            return Err(Error::Parse {
                pos: 0,
                msg: format!(
                    "expected {digits} hex digits for n = {n}, found {}",
                    hex.len()
                ),
            });
        }
        for (pos, c) in hex.chars().enumerate() {
            let nibble = c.to_digit(16).ok_or_else(|| Error::Parse {
                pos,
                msg: format!("invalid hex digit {c:?}"),
            })? as u64;
            let j = digits - 1 - pos;
            t.words[j / 16] |= nibble << (4 * (j % 16));
        }
        if t.words[0] & !low_mask(n) != 0 {
            return Err(Error::Parse {
                pos: 0,
                msg: format!("value has bits beyond the 2^{n} table"),
            });
        }
        Ok(t)
    }

    /// The two-line file form: `n=<int>` then `hex=<digits>`.
    pub fn to_file_string(&self) -> String {
        format!("n={}\nhex={}\n", self.n, self.to_hex())
    }

    pub fn parse_file(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let n_line = lines.next().ok_or_else(|| Error::Parse {
            pos: 0,
            msg: "missing n= line".into(),
        })?;
        let n = parse_n_line(n_line)?;
        let hex_line = lines.next().ok_or_else(|| Error::Parse {
            pos: n_line.len(),
            msg: "missing hex= line".into(),
        })?;
        let hex = hex_line.strip_prefix("hex=").ok_or_else(|| Error::Parse {
            pos: n_line.len() + 1,
            msg: "expected hex=".into(),
        })?;
        Self::from_hex(n, hex)
    }
}

/// Parse a header line of the form `n=<int>`.
pub fn parse_n_line(line: &str) -> Result<usize> {
    line.trim()
        .strip_prefix("n=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Parse {
            pos: 0,
            msg: format!("expected n=<int>, found {line:?}"),
        })
}

impl fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruthTable(n={}, hex={})", self.n, self.to_hex())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn and2() -> TruthTable {
        TruthTable::from_fn(2, |x| x == 3).unwrap()
    }

    fn xor2() -> TruthTable {
        TruthTable::from_fn(2, |x| (x ^ (x >> 1)) & 1 == 1).unwrap()
    }

    #[test]
    fn restrict_examples() {
        let and = and2();
        assert_eq!(and.restrict(&Restriction::empty()).unwrap(), and);
        let r = and
            .restrict(&Restriction::new([(0, false)]).unwrap())
            .unwrap();
        assert_eq!(r.n(), 1);
        assert_eq!(r.is_constant(), Some(false));
        let r = xor2()
            .restrict(&Restriction::new([(1, true)]).unwrap())
            .unwrap();
        assert_eq!(r.bit_string(), "10");
    }

    #[test]
    fn restrict_out_of_range() {
        let err = and2().restrict(&Restriction::new([(5, true)]).unwrap());
        assert!(matches!(
            err,
            Err(Error::VariableOutOfRange { var: 5, n: 2 })
        ));
    }

    #[test]
    fn restrict_var_matches_pointwise_definition() {
        let f = TruthTable::from_fn(9, |x| (x * 2654435761usize) >> 7 & 1 == 1).unwrap();
        for var in 0..9 {
            for value in [false, true] {
                let r = f.restrict_var(var, value);
                for y in 0..r.len() {
                    let lo = y & ((1 << var) - 1);
                    let hi = (y >> var) << (var + 1);
                    let x = hi | lo | ((value as usize) << var);
                    assert_eq!(r.get(y), f.get(x), "var {var} value {value} y {y}");
                }
            }
        }
    }

    #[test]
    fn distance_examples() {
        let and = and2();
        let or = TruthTable::from_fn(2, |x| x != 0).unwrap();
        assert_eq!(and.distance(&and).unwrap(), 0.0);
        assert_eq!(and.distance(&and.complement()).unwrap(), 1.0);
        assert_eq!(and.distance(&or).unwrap(), 0.5);
        let three = TruthTable::constant(3, true).unwrap();
        assert!(matches!(
            and.distance(&three),
            Err(Error::ArityMismatch { .. })
        ));
    }

    #[test]
    fn monotonicity_examples() {
        assert!(and2().is_monotone());
        assert!(!xor2().is_monotone());
        let maj3 = TruthTable::from_fn(3, |x| x.count_ones() >= 2).unwrap();
        assert!(maj3.is_monotone());
    }

    #[test]
    fn sensitivity_counts() {
        assert_eq!(xor2().sensitive_count(0), 4);
        let maj3 = TruthTable::from_fn(3, |x| x.count_ones() >= 2).unwrap();
        assert_eq!(maj3.sensitive_count(2), 4);
        let dict = TruthTable::from_fn(8, |x| x >> 7 & 1 == 1).unwrap();
        assert_eq!(dict.sensitive_count(7), 256);
        assert_eq!(dict.sensitive_count(2), 0);
    }

    #[test]
    fn closure_of_constants_is_constant() {
        for n in [0, 3, 8] {
            for v in [false, true] {
                let c = TruthTable::constant(n, v).unwrap();
                assert_eq!(c.upward_closure(), c);
            }
        }
    }

    #[test]
    fn hex_layout() {
        assert_eq!(and2().to_hex(), "8");
        let dict = TruthTable::from_fn(1, |x| x == 1).unwrap();
        assert_eq!(dict.to_hex(), "2");
        let f = TruthTable::from_fn(3, |x| x == 0 || x == 7).unwrap();
        assert_eq!(f.to_hex(), "81");
        assert_eq!(f.to_file_string(), "n=3\nhex=81\n");
        assert_eq!(TruthTable::parse_file("n=3\nhex=81\n").unwrap(), f);
        assert!(TruthTable::from_hex(1, "4").is_err());
        assert!(TruthTable::from_hex(3, "8").is_err());
        assert!(TruthTable::from_hex(3, "8g").is_err());
    }

    #[test]
    fn arity_cap() {
        assert!(matches!(
            TruthTable::constant(25, false),
            Err(Error::TooManyVariables { n: 25, cap: 24 })
        ));
    }
}
