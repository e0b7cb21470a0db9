//! Decision-tree hypotheses and their text form.
//!
//! The text form is `0` / `1` for leaves and `(x<idx> <child0> <child1>)` for
//! internal nodes, with `child0` taken when the variable is 0. Tree files may
//! carry an optional `n=<int>` header line giving the ambient variable count.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::boolfn::TruthTable;
use crate::error::{Error, Result};
use crate::{Input, MAX_VARS};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum DecisionTree {
    Leaf(bool),
    Node {
        var: usize,
        zero: Box<DecisionTree>,
        one: Box<DecisionTree>,
    },
}

impl DecisionTree {
    pub fn leaf(value: bool) -> Self {
        DecisionTree::Leaf(value)
    }

    pub fn node(var: usize, zero: DecisionTree, one: DecisionTree) -> Self {
        DecisionTree::Node {
            var,
            zero: Box::new(zero),
            one: Box::new(one),
        }
    }

    /// Follow `x` to a leaf. Variables at or above [`MAX_VARS`] read as 0;
    /// use [`DecisionTree::eval_checked`] when the tree is not yet validated.
    #[inline]
    pub fn eval(&self, x: Input) -> bool {
        let mut t = self;
        loop {
            match t {
                DecisionTree::Leaf(b) => return *b,
                DecisionTree::Node { var, zero, one } => {
                    t = if *var < MAX_VARS && x >> var & 1 == 1 {
                        one
                    } else {
                        zero
                    };
                }
            }
        }
    }

    pub fn eval_checked(&self, n: usize, x: Input) -> Result<bool> {
        let mut t = self;
        loop {
            match t {
                DecisionTree::Leaf(b) => return Ok(*b),
                DecisionTree::Node { var, zero, one } => {
                    if *var >= n || *var >= MAX_VARS {
                        return Err(Error::VariableOutOfRange { var: *var, n });
                    }
                    t = if x >> var & 1 == 1 { one } else { zero };
                }
            }
        }
    }

    /// Number of leaves.
    pub fn size(&self) -> usize {
        match self {
            DecisionTree::Leaf(_) => 1,
            DecisionTree::Node { zero, one, .. } => zero.size() + one.size(),
        }
    }

    /// Edge count of the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            DecisionTree::Leaf(_) => 0,
            DecisionTree::Node { zero, one, .. } => 1 + zero.depth().max(one.depth()),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, DecisionTree::Leaf(_))
    }

    /// Variables queried anywhere in the tree.
    pub fn support(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_support(&mut out);
        out
    }

    fn collect_support(&self, out: &mut BTreeSet<usize>) {
        if let DecisionTree::Node { var, zero, one } = self {
            out.insert(*var);
            zero.collect_support(out);
            one.collect_support(out);
        }
    }

    /// Check that every variable is below `n` and no path repeats a variable.
    pub fn validate(&self, n: usize) -> Result<()> {
        fn walk(t: &DecisionTree, n: usize, path: &mut Vec<usize>) -> Result<()> {
            if let DecisionTree::Node { var, zero, one } = t {
                if *var >= n {
                    return Err(Error::VariableOutOfRange { var: *var, n });
                }
                if path.contains(var) {
                    return Err(Error::RepeatedVariable(*var));
                }
                path.push(*var);
                walk(zero, n, path)?;
                walk(one, n, path)?;
                path.pop();
            }
            Ok(())
        }
        walk(self, n, &mut Vec::new())
    }

    pub fn to_table(&self, n: usize) -> Result<TruthTable> {
        self.validate_range(n)?;
        TruthTable::from_fn(n, |x| self.eval(x as Input))
    }

    fn validate_range(&self, n: usize) -> Result<()> {
        match self.support().last() {
            Some(&var) if var >= n => Err(Error::VariableOutOfRange { var, n }),
            _ => Ok(()),
        }
    }

    /// Smallest ambient variable count this tree can be evaluated on.
    pub fn min_arity(&self) -> usize {
        self.support().last().map_or(0, |v| v + 1)
    }
}

impl fmt::Display for DecisionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecisionTree::Leaf(b) => write!(f, "{}", *b as u8),
            DecisionTree::Node { var, zero, one } => write!(f, "(x{var} {zero} {one})"),
        }
    }
}

impl FromStr for DecisionTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser {
            src: s.as_bytes(),
            pos: 0,
        };
        let tree = p.tree()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("trailing input"));
        }
        Ok(tree)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn tree(&mut self) -> Result<DecisionTree> {
        self.skip_ws();
        match self.src.get(self.pos) {
            Some(b'0') => {
                self.pos += 1;
                Ok(DecisionTree::Leaf(false))
            }
            Some(b'1') => {
                self.pos += 1;
                Ok(DecisionTree::Leaf(true))
            }
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                if self.src.get(self.pos) != Some(&b'x') {
                    return Err(self.error("expected x<idx>"));
                }
                self.pos += 1;
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let var = std::str::from_utf8(&self.src[start..self.pos])
                    .ok()
                    .and_then(|d| d.parse().ok())
                    .ok_or_else(|| Error::Parse {
                        pos: start,
                        msg: "expected variable index".into(),
                    })?;
                let zero = self.tree()?;
                let one = self.tree()?;
                self.skip_ws();
                if self.src.get(self.pos) != Some(&b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(DecisionTree::node(var, zero, one))
            }
            Some(_) => Err(self.error("expected '0', '1' or '('")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

/// Render a tree file with its `n=` header.
pub fn tree_file_string(n: usize, tree: &DecisionTree) -> String {
    format!("n={n}\n{tree}\n")
}

/// Parse a tree file; returns the header's `n` when present.
pub fn parse_tree_file(text: &str) -> Result<(Option<usize>, DecisionTree)> {
    let trimmed = text.trim_start();
    if trimmed.starts_with("n=") {
        let (header, rest) = trimmed.split_once('\n').unwrap_or((trimmed, ""));
        let n = crate::boolfn::parse_n_line(header)?;
        let tree: DecisionTree = rest.parse()?;
        tree.validate(n)?;
        Ok((Some(n), tree))
    } else {
        Ok((None, trimmed.parse()?))
    }
}
