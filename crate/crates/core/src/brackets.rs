//! Bracket calculus on superdiagonal vectors.
//!
//! For vectors `a` of length `s` and `b` of length `m <= s`, with `p = s - m`,
//! the bracket `[a b]` is the `(m-1)`-vector whose entry `t` is the 2x2
//! determinant
//!
//! ```text
//! | a_t        b_t     |
//! | a_{p+t+1}  b_{t+1} |
//! ```
//!
//! If `b_1, ..., b_{k+1}` are the superdiagonals of `B_1, ..., B_{k+1}`, the
//! `k`-fold commutator `[B_1, [B_2, ... [B_k, B_{k+1}]]]` (with
//! `[x, y] = x y x^{-1} y^{-1}`) vanishes on its first `k` superdiagonals and
//! its `(k+1)`-st superdiagonal is `[b_1 [b_2 ... [b_k b_{k+1}] ...]]`, sign
//! included. The `brackets_match_matrix_commutators` integration test pins
//! this against exact matrix arithmetic.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::unipotent::SuperdiagonalVector;

/// Integer vector fed to (or produced by) a bracket.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BracketOperand(Vec<BigInt>);

impl BracketOperand {
    pub fn new(values: Vec<BigInt>) -> Self {
        BracketOperand(values)
    }

    pub fn from_i64s(values: &[i64]) -> Self {
        BracketOperand(values.iter().map(|&v| BigInt::from(v)).collect())
    }

    pub fn values(&self) -> &[BigInt] {
        &self.0
    }

    pub fn into_values(self) -> Vec<BigInt> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }
}

impl From<SuperdiagonalVector> for BracketOperand {
    fn from(v: SuperdiagonalVector) -> Self {
        BracketOperand(v.into_values())
    }
}

impl From<&SuperdiagonalVector> for BracketOperand {
    fn from(v: &SuperdiagonalVector) -> Self {
        BracketOperand(v.values().to_vec())
    }
}

/// `[a b]`; `a` is the outer (newly applied, longer) operand.
pub fn bracket(a: &BracketOperand, b: &BracketOperand) -> Result<BracketOperand> {
    Ok(BracketOperand(bracket_values(&a.0, &b.0)?))
}

fn bracket_values(a: &[BigInt], b: &[BigInt]) -> Result<Vec<BigInt>> {
    let (s, m) = (a.len(), b.len());
    if m < 2 {
        return Err(Error::BracketOperands {
            outer: s,
            inner: m,
            reason: "inner operand needs at least two entries",
        });
    }
    if s < m {
        return Err(Error::BracketOperands {
            outer: s,
            inner: m,
            reason: "outer operand is shorter than inner operand",
        });
    }
    let p = s - m;
    Ok((0..m - 1)
        .map(|t| &a[t] * &b[t + 1] - &a[p + t + 1] * &b[t])
        .collect())
}

/// `[b_1 [b_2 ... [b_k b_{k+1}] ...]]` for `k + 1` equal-length operands.
///
/// With operands of length `n - 1` the result has length `n - 1 - k`; depth
/// `k >= n - 1` leaves nothing and is reported as [`Error::DepthExhausted`].
pub fn iterated_bracket(operands: &[BracketOperand]) -> Result<BracketOperand> {
    if operands.len() < 2 {
        return Err(Error::BracketOperands {
            outer: operands.len(),
            inner: 0,
            reason: "need at least two operands",
        });
    }
    let len = operands[0].len();
    if let Some(bad) = operands.iter().find(|op| op.len() != len) {
        return Err(Error::BracketOperands {
            outer: len,
            inner: bad.len(),
            reason: "operands must share one length",
        });
    }
    let depth = operands.len() - 1;
    if depth >= len {
        return Err(Error::DepthExhausted { depth, len });
    }
    let (last, rest) = operands.split_last().expect("two or more operands");
    let mut acc = last.0.clone();
    for op in rest.iter().rev() {
        acc = bracket_values(&op.0, &acc)?;
    }
    Ok(BracketOperand(acc))
}

/// Binomial coefficient by the multiplicative formula.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for step in 0..k {
        acc = acc * BigInt::from(n - step) / BigInt::from(step + 1);
    }
    acc
}

/// Coefficient of `w_1 ... v_i ... w_{n-1}` in the corner entry of
/// `[W, [W, ... [W, V]]]` with `n - 2` copies of `W`.
///
/// Each bracket against an all-ones vector is a forward difference, so the
/// corner is the `(n-2)`-th forward difference of `v`:
/// `(-1)^{n-1-i} * C(n-2, i-1)`. The last coefficient is always `+1`.
pub fn corner_coefficient(n: usize, i: usize) -> BigInt {
    assert!(
        n >= 3 && (1..n).contains(&i),
        "corner coefficient ({n}, {i})"
    );
    let c = binomial((n - 2) as u64, (i - 1) as u64);
    if (n - 1 - i).is_multiple_of(2) {
        c
    } else {
        -c
    }
}

/// Closed form of the corner entry of `[W, [W, ... [W, V]]]` (`n - 2` copies of `W`):
/// `sum_i K_i v_i prod_{j != i} w_j` with `K_i` from [`corner_coefficient`].
pub fn corner_coefficient_form(v: &SuperdiagonalVector, w: &SuperdiagonalVector) -> Result<BigInt> {
    if v.len() != w.len() {
        return Err(Error::DimensionMismatch {
            left: v.dimension(),
            right: w.dimension(),
        });
    }
    let n = v.dimension();
    if n < 3 {
        return Err(Error::InvalidDimension(n));
    }
    let w = w.values();
    let len = w.len();
    // prefix[i] = w_1 ... w_i, suffix[i] = w_{i+1} ... w_{n-1} (0-based slices).
    let mut prefix = Vec::with_capacity(len + 1);
    prefix.push(BigInt::one());
    for x in w {
        let next = prefix.last().unwrap() * x;
        prefix.push(next);
    }
    let mut suffix = vec![BigInt::one(); len + 1];
    for i in (0..len).rev() {
        suffix[i] = &suffix[i + 1] * &w[i];
    }
    let mut total = BigInt::zero();
    for (i, vi) in v.values().iter().enumerate() {
        if vi.is_zero() {
            continue;
        }
        total += corner_coefficient(n, i + 1) * vi * &prefix[i] * &suffix[i + 1];
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(v: &[i64]) -> BracketOperand {
        BracketOperand::from_i64s(v)
    }

    #[test]
    fn hand_evaluated_brackets() {
        assert_eq!(
            bracket(&op(&[1, 2, 3]), &op(&[4, 5, 6])).unwrap(),
            op(&[-3, -3])
        );
        assert_eq!(
            bracket(&op(&[1, 0, 2, 1]), &op(&[3, 1])).unwrap(),
            op(&[-2])
        );
    }

    #[test]
    fn self_bracket_vanishes() {
        let v = op(&[5, -2, 7, 0, 3]);
        assert!(bracket(&v, &v).unwrap().is_zero());
    }

    #[test]
    fn bracket_rejects_bad_operands() {
        assert!(matches!(
            bracket(&op(&[1, 2, 3]), &op(&[4])),
            Err(Error::BracketOperands { .. })
        ));
        assert!(matches!(
            bracket(&op(&[1, 2]), &op(&[4, 5, 6])),
            Err(Error::BracketOperands { .. })
        ));
    }

    #[test]
    fn iterated_bracket_depth_limits() {
        let v = op(&[1, 2, 3]);
        let w = op(&[1, 1, 1]);
        assert_eq!(iterated_bracket(&[w.clone(), v.clone()]).unwrap().len(), 2);
        assert_eq!(
            iterated_bracket(&[w.clone(), w.clone(), v.clone()])
                .unwrap()
                .len(),
            1
        );
        assert!(matches!(
            iterated_bracket(&[w.clone(), w.clone(), w.clone(), v.clone()]),
            Err(Error::DepthExhausted { depth: 3, len: 3 })
        ));
        assert!(iterated_bracket(std::slice::from_ref(&v)).is_err());
        assert!(iterated_bracket(&[v, op(&[1, 2])]).is_err());
    }

    #[test]
    fn zero_last_operand_gives_zero() {
        let z = op(&[0, 0, 0, 0]);
        let out = iterated_bracket(&[op(&[1, 2, 3, 4]), op(&[-1, 5, 2, 2]), z]).unwrap();
        assert!(out.is_zero());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(0, 0), BigInt::from(1));
        assert_eq!(binomial(10, 3), BigInt::from(120));
        assert_eq!(binomial(3, 5), BigInt::from(0));
        assert_eq!(
            binomial(60, 30),
            "118264581564861424".parse::<BigInt>().unwrap()
        );
    }

    #[test]
    fn corner_form_small_cases() {
        // n = 4, v = e_1, w = ones: second difference of (1, 0, 0) is 1.
        let v = SuperdiagonalVector::from_i64s(&[1, 0, 0]).unwrap();
        let w = SuperdiagonalVector::from_i64s(&[1, 1, 1]).unwrap();
        assert_eq!(corner_coefficient_form(&v, &w).unwrap(), BigInt::from(1));
        let zero_w = SuperdiagonalVector::from_i64s(&[0, 0, 0]).unwrap();
        assert_eq!(
            corner_coefficient_form(&v, &zero_w).unwrap(),
            BigInt::from(0)
        );
        // n = 3: the corner of [W, V] is w_1 v_2 - w_2 v_1.
        let v = SuperdiagonalVector::from_i64s(&[2, 5]).unwrap();
        let w = SuperdiagonalVector::from_i64s(&[3, 7]).unwrap();
        assert_eq!(
            corner_coefficient_form(&v, &w).unwrap(),
            BigInt::from(3 * 5 - 7 * 2)
        );
    }
}
