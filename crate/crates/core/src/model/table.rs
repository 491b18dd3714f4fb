//! Dense potential tables.
//!
//! A [`PotentialTable`] is a nonnegative function over the joint outcome
//! space of an ordered list of axes. Entries are stored row-major, so the
//! last axis varies fastest. Tables carry no normalization: two tables that
//! differ by a positive scalar describe the same conditional distribution or
//! likelihood.

use std::fmt;

use super::NodeId;

/// One dimension of a table: the variable it ranges over and that variable's
/// outcome count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Axis {
    pub node: NodeId,
    pub card: usize,
}

impl Axis {
    pub fn new(node: NodeId, card: usize) -> Self {
        Axis { node, card }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TableError {
    #[error("table over {axes} axes needs {expected} entries, got {found}")]
    EntryCount {
        axes: usize,
        expected: usize,
        found: usize,
    },
    #[error("axis for node {0} appears more than once")]
    RepeatedAxis(NodeId),
    #[error("axis for node {0} has zero outcomes")]
    EmptyAxis(NodeId),
    #[error("table has no axis for node {0}")]
    MissingAxis(NodeId),
}

#[derive(Clone, PartialEq)]
pub struct PotentialTable {
    axes: Vec<Axis>,
    entries: Vec<f64>,
}

impl fmt::Debug for PotentialTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialTable")
            .field("axes", &self.axes)
            .field("entries", &self.entries)
            .finish()
    }
}

fn strides_for(axes: &[Axis]) -> Vec<usize> {
    let mut strides = vec![0; axes.len()];
    let mut acc = 1;
    for (k, axis) in axes.iter().enumerate().rev() {
        strides[k] = acc;
        acc *= axis.card;
    }
    strides
}

/// Number of joint configurations over `axes`.
pub fn config_count(axes: &[Axis]) -> usize {
    axes.iter().map(|a| a.card).product()
}

/// Advances `config` to the next row-major configuration over `axes`.
/// Returns false once every configuration has been visited.
pub fn next_config(config: &mut [usize], axes: &[Axis]) -> bool {
    for k in (0..axes.len()).rev() {
        config[k] += 1;
        if config[k] < axes[k].card {
            return true;
        }
        config[k] = 0;
    }
    false
}

impl PotentialTable {
    pub fn new(axes: Vec<Axis>, entries: Vec<f64>) -> Result<Self, TableError> {
        for (k, axis) in axes.iter().enumerate() {
            if axis.card == 0 {
                return Err(TableError::EmptyAxis(axis.node));
            }
            if axes[..k].iter().any(|a| a.node == axis.node) {
                return Err(TableError::RepeatedAxis(axis.node));
            }
        }
        let expected = config_count(&axes);
        if entries.len() != expected {
            return Err(TableError::EntryCount {
                axes: axes.len(),
                expected,
                found: entries.len(),
            });
        }
        Ok(PotentialTable { axes, entries })
    }

    /// A 0-axis table holding a single value.
    pub fn scalar(value: f64) -> Self {
        PotentialTable {
            axes: Vec::new(),
            entries: vec![value],
        }
    }

    /// A table of ones over `axes`.
    pub fn ones(axes: Vec<Axis>) -> Result<Self, TableError> {
        let n = config_count(&axes);
        Self::new(axes, vec![1.0; n])
    }

    /// Builds a table by evaluating `f` at every configuration over `axes`,
    /// in row-major order.
    pub fn from_fn(
        axes: Vec<Axis>,
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> Result<Self, TableError> {
        let n = config_count(&axes);
        let mut entries = Vec::with_capacity(n);
        let mut config = vec![0usize; axes.len()];
        loop {
            entries.push(f(&config));
            if !next_config(&mut config, &axes) {
                break;
            }
        }
        Self::new(axes, entries)
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.axes.is_empty()
    }

    pub fn axis_position(&self, node: NodeId) -> Option<usize> {
        self.axes.iter().position(|a| a.node == node)
    }

    pub fn strides(&self) -> Vec<usize> {
        strides_for(&self.axes)
    }

    /// Value at a configuration given in this table's own axis order.
    pub fn get(&self, config: &[usize]) -> f64 {
        debug_assert_eq!(config.len(), self.axes.len());
        let mut idx = 0;
        for (k, &c) in config.iter().enumerate() {
            idx = idx * self.axes[k].card + c;
        }
        self.entries[idx]
    }

    /// Maps each of this table's axes to its position in `outer`.
    ///
    /// Fails if some axis of this table is absent from `outer`.
    pub fn projection(&self, outer: &[Axis]) -> Result<Projection, TableError> {
        let strides = self.strides();
        let mut terms = Vec::with_capacity(self.axes.len());
        for (k, axis) in self.axes.iter().enumerate() {
            let pos = outer
                .iter()
                .position(|a| a.node == axis.node)
                .ok_or(TableError::MissingAxis(axis.node))?;
            terms.push((pos, strides[k]));
        }
        Ok(Projection { terms })
    }

    /// Removes the axis of `node` by fixing it at `outcome`.
    pub fn slice(&self, node: NodeId, outcome: usize) -> Result<Self, TableError> {
        let pos = self
            .axis_position(node)
            .ok_or(TableError::MissingAxis(node))?;
        let mut axes = self.axes.clone();
        axes.remove(pos);
        let mut full = vec![0usize; self.axes.len()];
        Self::from_fn(axes, |config| {
            full[..pos].copy_from_slice(&config[..pos]);
            full[pos] = outcome;
            full[pos + 1..].copy_from_slice(&config[pos..]);
            self.get(&full)
        })
    }

    /// Sums the axis of `node` out of the table.
    pub fn sum_out(&self, node: NodeId) -> Result<Self, TableError> {
        let pos = self
            .axis_position(node)
            .ok_or(TableError::MissingAxis(node))?;
        let card = self.axes[pos].card;
        let mut axes = self.axes.clone();
        axes.remove(pos);
        let mut full = vec![0usize; self.axes.len()];
        Self::from_fn(axes, |config| {
            full[..pos].copy_from_slice(&config[..pos]);
            full[pos + 1..].copy_from_slice(&config[pos..]);
            let mut total = 0.0;
            for x in 0..card {
                full[pos] = x;
                total += self.get(&full);
            }
            total
        })
    }

    /// Pointwise product of `self` and `other` laid out over `axes`, which
    /// must cover the axes of both operands.
    pub fn product(&self, other: &Self, axes: Vec<Axis>) -> Result<Self, TableError> {
        let left = self.projection(&axes)?;
        let right = other.projection(&axes)?;
        Self::from_fn(axes, |config| {
            self.entries[left.index(config)] * other.entries[right.index(config)]
        })
    }

    /// The same function with its axes permuted into `axes` (which must be a
    /// permutation of the current axes).
    pub fn reorder(&self, axes: Vec<Axis>) -> Result<Self, TableError> {
        if axes.len() != self.axes.len() {
            return Err(TableError::EntryCount {
                axes: axes.len(),
                expected: config_count(&axes),
                found: self.entries.len(),
            });
        }
        let proj = self.projection(&axes)?;
        Self::from_fn(axes, |config| self.entries[proj.index(config)])
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_all_zero(&self) -> bool {
        self.entries.iter().all(|&v| v == 0.0)
    }

    /// Scales the table so its largest entry is 1. Returns false, leaving the
    /// table untouched, when every entry is zero.
    pub fn rescale_max(&mut self) -> bool {
        let max = self.max_entry();
        if max.is_nan() || max <= 0.0 || max.is_infinite() {
            return false;
        }
        for v in &mut self.entries {
            *v /= max;
        }
        true
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.entries {
            *v *= factor;
        }
    }

    /// All entries finite and nonnegative.
    pub fn is_nonnegative_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite() && *v >= 0.0)
    }

    /// Normalized conditional over the first axis given one configuration of
    /// the remaining axes. `rest` indexes the flattened trailing axes.
    /// An all-zero slice comes back as all zeros.
    pub fn conditional_slice(&self, rest: usize) -> Vec<f64> {
        let Some(first) = self.axes.first() else {
            return vec![1.0];
        };
        let inner = self.entries.len() / first.card;
        let mut column: Vec<f64> = (0..first.card)
            .map(|x| self.entries[x * inner + rest])
            .collect();
        let total: f64 = column.iter().sum();
        if total > 0.0 {
            for v in &mut column {
                *v /= total;
            }
        }
        column
    }
}

/// Precomputed mapping from a configuration over some outer axis list to a
/// flat index into a table whose axes are a subset of it.
#[derive(Clone, Debug)]
pub struct Projection {
    terms: Vec<(usize, usize)>,
}

impl Projection {
    pub fn index(&self, outer_config: &[usize]) -> usize {
        self.terms
            .iter()
            .map(|&(pos, stride)| outer_config[pos] * stride)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ax(n: usize, card: usize) -> Axis {
        Axis::new(NodeId(n), card)
    }

    #[test]
    fn rejects_wrong_entry_count() {
        let err = PotentialTable::new(vec![ax(0, 2), ax(1, 3)], vec![1.0; 4]).unwrap_err();
        assert_eq!(
            err,
            TableError::EntryCount {
                axes: 2,
                expected: 6,
                found: 4
            }
        );
    }

    #[test]
    fn slice_and_sum_out() {
        // axes (a:2, b:3), row-major
        let t = PotentialTable::new(vec![ax(0, 2), ax(1, 3)], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
            .unwrap();
        assert_eq!(t.get(&[1, 2]), 6.0);
        assert_eq!(t.slice(NodeId(0), 1).unwrap().entries(), &[4.0, 5.0, 6.0]);
        assert_eq!(t.slice(NodeId(1), 0).unwrap().entries(), &[1.0, 4.0]);
        assert_eq!(t.sum_out(NodeId(0)).unwrap().entries(), &[5.0, 7.0, 9.0]);
        assert_eq!(t.sum_out(NodeId(1)).unwrap().entries(), &[6.0, 15.0]);
        let s = t.slice(NodeId(0), 0).unwrap().slice(NodeId(1), 1).unwrap();
        assert!(s.is_scalar());
        assert_eq!(s.entries(), &[2.0]);
    }

    #[test]
    fn product_broadcasts() {
        let a = PotentialTable::new(vec![ax(0, 2)], vec![2.0, 3.0]).unwrap();
        let b = PotentialTable::new(vec![ax(1, 2)], vec![5.0, 7.0]).unwrap();
        let p = a.product(&b, vec![ax(1, 2), ax(0, 2)]).unwrap();
        assert_eq!(p.entries(), &[10.0, 15.0, 14.0, 21.0]);
        assert!(a.product(&b, vec![ax(0, 2)]).is_err());
    }

    #[test]
    fn reorder_transposes() {
        let t = PotentialTable::new(vec![ax(0, 2), ax(1, 3)], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
            .unwrap();
        let r = t.reorder(vec![ax(1, 3), ax(0, 2)]).unwrap();
        assert_eq!(r.entries(), &[1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
    }

    #[test]
    fn rescale_and_conditionals() {
        let mut t =
            PotentialTable::new(vec![ax(0, 2), ax(1, 2)], vec![2.0, 0.0, 6.0, 0.0]).unwrap();
        assert!(t.rescale_max());
        assert_eq!(t.entries(), &[1.0 / 3.0, 0.0, 1.0, 0.0]);
        assert_eq!(t.conditional_slice(0), vec![0.25, 0.75]);
        assert_eq!(t.conditional_slice(1), vec![0.0, 0.0]);
        let mut z = PotentialTable::ones(vec![ax(0, 2)]).unwrap();
        z.scale(0.0);
        assert!(!z.rescale_max());
    }
}
