//! Exact arithmetic in the group of unit upper-triangular integer matrices.
//!
//! A [`UnipotentMatrix`] stores only its strictly-upper entries; the diagonal
//! is implicitly one and everything below it zero. Entries are arbitrary
//! precision, so nothing ever wraps or rounds. Public indices are 1-based:
//! entry `(i, j)` with `1 <= i < j <= n`.
//!
//! Two storage layouts exist. Small dimensions use a packed dense triangle;
//! large dimensions keep a sorted map of the nonzero entries, which is what
//! short random words in a big group actually populate. The layout never
//! changes results, only cost.

use std::collections::btree_map;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::Add;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensions up to and including this use the dense layout by default.
pub const DEFAULT_DENSE_CUTOFF: usize = 32;

/// Exponent of an elementary generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_i32(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_i32(value: i32) -> Option<Sign> {
        match value {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    Dense,
    Sparse,
}

impl Layout {
    pub fn for_dimension(n: usize) -> Layout {
        Layout::with_cutoff(n, DEFAULT_DENSE_CUTOFF)
    }

    pub fn with_cutoff(n: usize, cutoff: usize) -> Layout {
        if n <= cutoff {
            Layout::Dense
        } else {
            Layout::Sparse
        }
    }
}

/// The first superdiagonal `(z_{1,2}, z_{2,3}, ..., z_{n-1,n})` of a matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SuperdiagonalVector {
    values: Vec<BigInt>,
}

impl SuperdiagonalVector {
    pub fn new(values: Vec<BigInt>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidDimension(1));
        }
        Ok(SuperdiagonalVector { values })
    }

    pub fn from_i64s(values: &[i64]) -> Result<Self> {
        SuperdiagonalVector::new(values.iter().map(|&v| BigInt::from(v)).collect())
    }

    pub fn zeros(n: usize) -> Result<Self> {
        check_dimension(n)?;
        Ok(SuperdiagonalVector {
            values: vec![BigInt::zero(); n - 1],
        })
    }

    /// Ambient matrix dimension, one more than the vector length.
    pub fn dimension(&self) -> usize {
        self.values.len() + 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Entry `(i, i+1)`, 1-based.
    pub fn get(&self, i: usize) -> &BigInt {
        &self.values[i - 1]
    }

    pub fn values(&self) -> &[BigInt] {
        &self.values
    }

    pub fn into_values(self) -> Vec<BigInt> {
        self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(Zero::is_zero)
    }
}

impl Add for &SuperdiagonalVector {
    type Output = SuperdiagonalVector;

    fn add(self, rhs: &SuperdiagonalVector) -> SuperdiagonalVector {
        assert_eq!(self.len(), rhs.len(), "superdiagonal length mismatch");
        SuperdiagonalVector {
            values: self
                .values
                .iter()
                .zip(&rhs.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

#[derive(Clone)]
enum Store {
    /// Packed strictly-upper triangle, row-major.
    Dense(Vec<BigInt>),
    /// Nonzero strictly-upper entries keyed by 0-based `(row, col)`.
    Sparse(BTreeMap<(usize, usize), BigInt>),
}

/// A unit upper-triangular `n x n` integer matrix.
#[derive(Clone)]
pub struct UnipotentMatrix {
    n: usize,
    store: Store,
}

fn check_dimension(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::InvalidDimension(n))
    } else {
        Ok(())
    }
}

#[inline]
fn packed_offset(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

fn packed_len(n: usize) -> usize {
    n * (n - 1) / 2
}

enum RowIter<'a> {
    Dense {
        row: &'a [BigInt],
        first_col: usize,
        pos: usize,
    },
    Sparse(btree_map::Range<'a, (usize, usize), BigInt>),
}

impl<'a> Iterator for RowIter<'a> {
    type Item = (usize, &'a BigInt);

    fn next(&mut self) -> Option<Self::Item> {
        match self {
            RowIter::Dense {
                row,
                first_col,
                pos,
            } => {
                while *pos < row.len() {
                    let p = *pos;
                    *pos += 1;
                    if !row[p].is_zero() {
                        return Some((*first_col + p, &row[p]));
                    }
                }
                None
            }
            RowIter::Sparse(range) => range.next().map(|(&(_, j), v)| (j, v)),
        }
    }
}

impl UnipotentMatrix {
    /// The identity `I_n`.
    pub fn identity(n: usize) -> Result<Self> {
        UnipotentMatrix::identity_in(n, Layout::for_dimension(n))
    }

    pub fn identity_in(n: usize, layout: Layout) -> Result<Self> {
        check_dimension(n)?;
        Ok(UnipotentMatrix::identity_unchecked(n, layout))
    }

    fn identity_unchecked(n: usize, layout: Layout) -> Self {
        let store = match layout {
            Layout::Dense => Store::Dense(vec![BigInt::zero(); packed_len(n)]),
            Layout::Sparse => Store::Sparse(BTreeMap::new()),
        };
        UnipotentMatrix { n, store }
    }

    /// `A_i^{sign}`: the identity with `sign` at position `(i, i+1)`.
    pub fn elementary(n: usize, i: usize, sign: Sign) -> Result<Self> {
        check_dimension(n)?;
        if i == 0 || i >= n {
            return Err(Error::IndexOutOfRange {
                index: i,
                max: n - 1,
            });
        }
        let mut m = UnipotentMatrix::identity_unchecked(n, Layout::for_dimension(n));
        m.add_at(i - 1, i, &BigInt::from(sign.as_i32()));
        Ok(m)
    }

    /// Builds a matrix from 1-based strictly-upper entries. Repeated positions add.
    pub fn from_entries<I>(n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = ((usize, usize), BigInt)>,
    {
        check_dimension(n)?;
        let mut m = UnipotentMatrix::identity_unchecked(n, Layout::for_dimension(n));
        for ((i, j), value) in entries {
            if i == 0 || j > n || i >= j {
                return Err(Error::IndexOutOfRange {
                    index: i.max(j),
                    max: n,
                });
            }
            m.add_at(i - 1, j - 1, &value);
        }
        Ok(m)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn layout(&self) -> Layout {
        match self.store {
            Store::Dense(_) => Layout::Dense,
            Store::Sparse(_) => Layout::Sparse,
        }
    }

    pub fn to_layout(&self, layout: Layout) -> Self {
        if self.layout() == layout {
            return self.clone();
        }
        let mut m = UnipotentMatrix::identity_unchecked(self.n, layout);
        for ((i, j), v) in self.nonzeros0() {
            m.add_at(i, j, v);
        }
        m
    }

    /// Entry `(i, j)`, 1-based, including the implicit diagonal and lower part.
    pub fn entry(&self, i: usize, j: usize) -> BigInt {
        assert!(
            (1..=self.n).contains(&i) && (1..=self.n).contains(&j),
            "entry ({i}, {j}) outside a {n}x{n} matrix",
            n = self.n
        );
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => BigInt::one(),
            std::cmp::Ordering::Greater => BigInt::zero(),
            std::cmp::Ordering::Less => self.get0(i - 1, j - 1).cloned().unwrap_or_default(),
        }
    }

    /// Nonzero strictly-upper entries in row-major order, 1-based.
    pub fn nonzero_entries(&self) -> Vec<((usize, usize), BigInt)> {
        self.nonzeros0()
            .map(|((i, j), v)| ((i + 1, j + 1), v.clone()))
            .collect()
    }

    pub fn nonzero_count(&self) -> usize {
        self.nonzeros0().count()
    }

    /// True iff every strictly-upper entry is zero.
    pub fn is_identity(&self) -> bool {
        match &self.store {
            Store::Dense(v) => v.iter().all(Zero::is_zero),
            Store::Sparse(m) => m.is_empty(),
        }
    }

    pub fn superdiagonal(&self) -> SuperdiagonalVector {
        SuperdiagonalVector {
            values: self.diagonal(1),
        }
    }

    /// The `offset`-th superdiagonal `(z_{1,1+offset}, ..., z_{n-offset,n})`.
    pub fn diagonal(&self, offset: usize) -> Vec<BigInt> {
        assert!(offset >= 1 && offset < self.n, "no superdiagonal {offset}");
        (0..self.n - offset)
            .map(|i| self.get0(i, i + offset).cloned().unwrap_or_default())
            .collect()
    }

    /// Exact product `self * other`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.mul_unchecked(other))
    }

    /// Exact inverse through the terminating series `I - N + N^2 - ...`
    /// where `N` is the strictly-upper part.
    pub fn inverse(&self) -> Self {
        let mut inv = UnipotentMatrix::identity_unchecked(self.n, self.layout());
        let mut term = self.clone();
        let mut negate = true;
        while !term.is_identity() {
            inv.accumulate(&term, negate);
            term = self.strict_product(&term, self);
            negate = !negate;
        }
        inv
    }

    /// The commutator `a b a^{-1} b^{-1}`, computed as `(ab)(ba)^{-1}`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.commutator_unchecked(other))
    }

    pub(crate) fn commutator_unchecked(&self, other: &Self) -> Self {
        let ab = self.mul_unchecked(other);
        let ba = other.mul_unchecked(self);
        ab.mul_unchecked(&ba.inverse())
    }

    /// True iff `self * other == other * self`.
    pub fn commutes_with(&self, other: &Self) -> Result<bool> {
        self.check_same(other)?;
        Ok(self.mul_unchecked(other) == other.mul_unchecked(self))
    }

    /// In place `self <- A_i^{sign} * self` (row `i` gains `sign` times row `i+1`).
    pub fn left_mul_elementary(&mut self, i: usize, sign: Sign) -> Result<()> {
        self.check_index(i)?;
        let k = i - 1;
        let s = BigInt::from(sign.as_i32());
        let below: Vec<(usize, BigInt)> = self.row0(k + 1).map(|(j, v)| (j, v * &s)).collect();
        self.add_at(k, k + 1, &s);
        for (j, v) in below {
            self.add_at(k, j, &v);
        }
        Ok(())
    }

    /// In place `self <- self * A_i^{sign}` (column `i+1` gains `sign` times column `i`).
    pub fn right_mul_elementary(&mut self, i: usize, sign: Sign) -> Result<()> {
        self.check_index(i)?;
        let k = i - 1;
        let s = BigInt::from(sign.as_i32());
        let column: Vec<(usize, BigInt)> = self
            .nonzeros0()
            .filter(|&((_, j), _)| j == k)
            .map(|((r, _), v)| (r, v * &s))
            .collect();
        self.add_at(k, k + 1, &s);
        for (r, v) in column {
            self.add_at(r, k + 1, &v);
        }
        Ok(())
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            Err(Error::DimensionMismatch {
                left: self.n,
                right: other.n,
            })
        } else {
            Ok(())
        }
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 || i >= self.n {
            Err(Error::IndexOutOfRange {
                index: i,
                max: self.n - 1,
            })
        } else {
            Ok(())
        }
    }

    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        let mut out = self.strict_product(self, other);
        out.accumulate(self, false);
        out.accumulate(other, false);
        out
    }

    /// Matrix holding `N_a N_b` as its strictly-upper part, in `self`'s layout.
    fn strict_product(&self, a: &Self, b: &Self) -> Self {
        let mut out = UnipotentMatrix::identity_unchecked(self.n, self.layout());
        match &mut out.store {
            Store::Dense(cells) => {
                let n = self.n;
                for i in 0..n {
                    for (k, aik) in a.row0(i) {
                        for (j, bkj) in b.row0(k) {
                            cells[packed_offset(n, i, j)] += aik * bkj;
                        }
                    }
                }
            }
            Store::Sparse(map) => {
                for ((i, k), aik) in a.nonzeros0() {
                    for (j, bkj) in b.row0(k) {
                        *map.entry((i, j)).or_default() += aik * bkj;
                    }
                }
                map.retain(|_, v| !v.is_zero());
            }
        }
        out
    }

    /// Adds (or subtracts) the strictly-upper part of `other` into `self`.
    fn accumulate(&mut self, other: &Self, negate: bool) {
        for ((i, j), v) in other.nonzeros0() {
            if negate {
                self.add_at(i, j, &-v);
            } else {
                self.add_at(i, j, v);
            }
        }
    }

    fn add_at(&mut self, i: usize, j: usize, value: &BigInt) {
        if value.is_zero() {
            return;
        }
        match &mut self.store {
            Store::Dense(cells) => cells[packed_offset(self.n, i, j)] += value,
            Store::Sparse(map) => match map.entry((i, j)) {
                btree_map::Entry::Vacant(slot) => {
                    slot.insert(value.clone());
                }
                btree_map::Entry::Occupied(mut slot) => {
                    *slot.get_mut() += value;
                    if slot.get().is_zero() {
                        slot.remove();
                    }
                }
            },
        }
    }

    fn get0(&self, i: usize, j: usize) -> Option<&BigInt> {
        match &self.store {
            Store::Dense(cells) => Some(&cells[packed_offset(self.n, i, j)]),
            Store::Sparse(map) => map.get(&(i, j)),
        }
    }

    fn row0(&self, i: usize) -> RowIter<'_> {
        match &self.store {
            Store::Dense(cells) => {
                if i + 1 >= self.n {
                    return RowIter::Dense {
                        row: &[],
                        first_col: 0,
                        pos: 0,
                    };
                }
                let start = packed_offset(self.n, i, i + 1);
                let len = self.n - i - 1;
                RowIter::Dense {
                    row: &cells[start..start + len],
                    first_col: i + 1,
                    pos: 0,
                }
            }
            Store::Sparse(map) => RowIter::Sparse(map.range((i, 0)..(i + 1, 0))),
        }
    }

    fn nonzeros0(&self) -> Box<dyn Iterator<Item = ((usize, usize), &BigInt)> + '_> {
        match &self.store {
            Store::Dense(_) => {
                Box::new((0..self.n).flat_map(move |i| self.row0(i).map(move |(j, v)| ((i, j), v))))
            }
            Store::Sparse(map) => Box::new(map.iter().map(|(&k, v)| (k, v))),
        }
    }
}

impl PartialEq for UnipotentMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.nonzeros0().eq(other.nonzeros0())
    }
}

impl Eq for UnipotentMatrix {}

impl Hash for UnipotentMatrix {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.n.hash(state);
        for (pos, v) in self.nonzeros0() {
            pos.hash(state);
            v.hash(state);
        }
    }
}

impl fmt::Debug for UnipotentMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "U{}{{", self.n)?;
        for (idx, ((i, j), v)) in self.nonzeros0().enumerate() {
            if idx > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({},{}):{}", i + 1, j + 1, v)?;
        }
        write!(f, "}}")
    }
}
