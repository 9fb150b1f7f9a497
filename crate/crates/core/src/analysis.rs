//! Decision procedures and letter statistics for `G = <V, W>`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::brackets::{iterated_bracket, BracketOperand};
use crate::error::{Error, Result};
use crate::unipotent::{SuperdiagonalVector, UnipotentMatrix};
use crate::words::Word;

/// A generator pair together with its cached superdiagonals and matrices.
#[derive(Clone, Debug)]
pub struct GroupSample {
    n: usize,
    v_word: Word,
    w_word: Word,
    v_sd: SuperdiagonalVector,
    w_sd: SuperdiagonalVector,
    matrices: OnceLock<(UnipotentMatrix, UnipotentMatrix)>,
}

impl GroupSample {
    pub fn new(v_word: Word, w_word: Word) -> Result<Self> {
        if v_word.dimension() != w_word.dimension() {
            return Err(Error::DimensionMismatch {
                left: v_word.dimension(),
                right: w_word.dimension(),
            });
        }
        Ok(GroupSample {
            n: v_word.dimension(),
            v_sd: v_word.superdiagonal(),
            w_sd: w_word.superdiagonal(),
            v_word,
            w_word,
            matrices: OnceLock::new(),
        })
    }

    /// Like [`GroupSample::new`] with the matrices already known. The caller
    /// guarantees `v == v_word.evaluate()` and likewise for `w`.
    pub fn with_matrices(
        v_word: Word,
        w_word: Word,
        v: UnipotentMatrix,
        w: UnipotentMatrix,
    ) -> Result<Self> {
        let g = GroupSample::new(v_word, w_word)?;
        g.matrices.set((v, w)).expect("fresh cell");
        Ok(g)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn v_word(&self) -> &Word {
        &self.v_word
    }

    pub fn w_word(&self) -> &Word {
        &self.w_word
    }

    pub fn v_superdiagonal(&self) -> &SuperdiagonalVector {
        &self.v_sd
    }

    pub fn w_superdiagonal(&self) -> &SuperdiagonalVector {
        &self.w_sd
    }

    /// `(V, W)` as matrices, evaluated on first use.
    pub fn matrices(&self) -> (&UnipotentMatrix, &UnipotentMatrix) {
        let (v, w) = self
            .matrices
            .get_or_init(|| (self.v_word.evaluate(), self.w_word.evaluate()));
        (v, w)
    }
}

/// Which generator occupies a slot of a nesting pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gen {
    V,
    W,
}

/// Left-normed nesting `[B_1, [B_2, ... [B_k, B_{k+1}]]]`, written `B_1 B_2 ... B_{k+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pattern(pub Vec<Gen>);

impl Pattern {
    /// Number of commutator brackets, one less than the number of slots.
    pub fn depth(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    fn prepend(&self, outer: Gen) -> Pattern {
        let mut gens = Vec::with_capacity(self.0.len() + 1);
        gens.push(outer);
        gens.extend_from_slice(&self.0);
        Pattern(gens)
    }

    /// Evaluates the nested commutator with exact matrix arithmetic.
    pub fn evaluate(&self, v: &UnipotentMatrix, w: &UnipotentMatrix) -> Result<UnipotentMatrix> {
        let pick = |g: Gen| if g == Gen::V { v } else { w };
        let (last, rest) = self
            .0
            .split_last()
            .ok_or_else(|| Error::parse("pattern", "", "empty pattern"))?;
        let mut acc = pick(*last).clone();
        for g in rest.iter().rev() {
            acc = pick(*g).commutator(&acc)?;
        }
        Ok(acc)
    }

    /// The matching operand list for [`iterated_bracket`].
    pub fn operands(
        &self,
        v: &SuperdiagonalVector,
        w: &SuperdiagonalVector,
    ) -> Vec<BracketOperand> {
        self.0
            .iter()
            .map(|g| BracketOperand::from(if *g == Gen::V { v } else { w }))
            .collect()
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.0 {
            f.write_str(if *g == Gen::V { "V" } else { "W" })?;
        }
        Ok(())
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                'V' => Ok(Gen::V),
                'W' => Ok(Gen::W),
                _ => Err(Error::parse("pattern", s, "letters must be V or W")),
            })
            .collect::<Result<Vec<_>>>()
            .map(Pattern)
    }
}

impl Serialize for Pattern {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Pattern {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Outcome of [`step`].
///
/// `step` is the nilpotency step when `decided`; otherwise the search hit its
/// depth bound and `step` is only a lower bound. The trivial group `<I, I>`
/// has step 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: usize,
    pub witness: Option<Pattern>,
    pub certificate_d: Option<usize>,
    pub decided: bool,
}

/// `V` and `W` commute, checked as `VW == WV` in exact arithmetic.
pub fn is_abelian(g: &GroupSample) -> bool {
    let (v, w) = g.matrices();
    v.commutes_with(w).expect("sample dimensions agree")
}

/// Every letter of `v` commutes with every letter of `w`, i.e. no index pair at distance one.
pub fn supercommutes(v: &Word, w: &Word) -> bool {
    let occupied = v.index_occupancy();
    w.letters()
        .iter()
        .all(|l| occupied[l.index - 1] == 0 && occupied[l.index + 1] == 0)
}

/// `F`: number of letter pairs `(V_i, W_j)` that fail to commute.
pub fn count_noncommuting_pairs(v: &Word, w: &Word) -> u64 {
    let occupied = v.index_occupancy();
    w.letters()
        .iter()
        .map(|l| u64::from(occupied[l.index - 1]) + u64::from(occupied[l.index + 1]))
        .sum()
}

/// Letter-collision statistics of one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinStatistics {
    /// Non-commuting letter pairs between the two words.
    pub f: u64,
    /// Indices blocked by a neighbour of some letter of `V`.
    pub b: u64,
    /// `2 * len(V) - b`.
    pub d: u64,
    /// Indices used by neither word.
    pub empty_bins: u64,
}

/// Collision statistics: every letter `A_k^{±1}` of `v` marks bins `k-1` and
/// `k+1` (when in range); `b` counts marked bins. Empty bins count indices
/// used by no letter of either word.
pub fn bin_statistics(v: &Word, w: &Word) -> BinStatistics {
    let n = v.dimension();
    let mut marked = vec![false; n + 1];
    for l in v.letters() {
        if l.index >= 2 {
            marked[l.index - 1] = true;
        }
        if l.index < n - 1 {
            marked[l.index + 1] = true;
        }
    }
    let b = marked.iter().filter(|&&m| m).count() as u64;
    let ov = v.index_occupancy();
    let ow = w.index_occupancy();
    let empty_bins = (1..n).filter(|&i| ov[i] == 0 && ow[i] == 0).count() as u64;
    BinStatistics {
        f: count_noncommuting_pairs(v, w),
        b,
        d: 2 * v.len() as u64 - b,
        empty_bins,
    }
}

/// Smallest `d` with `v_d = w_d = 0`.
///
/// Any such `d` rules out full step: an `(n-2)`-fold commutator is central,
/// so its only entry is the corner of the iterated bracket, and a matching
/// zero forces that corner to vanish.
pub fn matching_zero_certificate(g: &GroupSample) -> Option<usize> {
    g.v_sd
        .values()
        .iter()
        .zip(g.w_sd.values())
        .position(|(a, b)| a.is_zero() && b.is_zero())
        .map(|p| p + 1)
}

/// `max{d - 1, n - 1 - d}`.
///
/// This bounds the step when no letter of index `d` occurs in either word,
/// because `<V, W>` is then block diagonal. A matching zero produced by
/// cancelling letters does not give this bound: `V = A_2 A_1 A_2^{-1}`,
/// `W = A_3` in `U_4` have `v_2 = w_2 = 0` and step 2.
pub fn certificate_step_bound(n: usize, d: usize) -> usize {
    (d - 1).max(n - 1 - d)
}

/// Corner entry of `[W, [W, ... [W, V]]]` (`n - 2` copies of `W`) via brackets.
/// Nonzero means full step; zero decides nothing.
pub fn corner_probe(g: &GroupSample) -> Result<BigInt> {
    if g.n < 3 {
        return Err(Error::InvalidDimension(g.n));
    }
    let mut operands = vec![BracketOperand::from(&g.w_sd); g.n - 2];
    operands.push(BracketOperand::from(&g.v_sd));
    let out = iterated_bracket(&operands)?;
    Ok(out.into_values().pop().expect("single corner entry"))
}

/// Nilpotency step of `<V, W>` by enumerating left-normed commutators of the
/// generators depth by depth.
///
/// Commutators equal as matrices have equal extensions, so each depth keeps
/// only distinct nontrivial values; the search stops at the first empty
/// depth, or at depth `n - 2` since `U_n` itself has step `n - 1`. With
/// `max_depth` set, a nonempty depth `max_depth` ends the search undecided.
pub fn step(g: &GroupSample, max_depth: Option<usize>) -> StepReport {
    let n = g.n;
    let certificate_d = matching_zero_certificate(g);
    let (v, w) = g.matrices();
    let gens: Vec<(Gen, &UnipotentMatrix)> = [(Gen::V, v), (Gen::W, w)]
        .into_iter()
        .filter(|(_, m)| !m.is_identity())
        .collect();

    let mut seen: HashSet<UnipotentMatrix> = HashSet::new();
    let mut level: Vec<(Pattern, UnipotentMatrix)> = Vec::new();
    for (gen, m) in &gens {
        if seen.insert((*m).clone()) {
            level.push((Pattern(vec![*gen]), (*m).clone()));
        }
    }
    if level.is_empty() {
        return StepReport {
            step: 0,
            witness: None,
            certificate_d,
            decided: true,
        };
    }

    let mut depth = 0;
    loop {
        if depth + 1 == n - 1 {
            return StepReport {
                step: n - 1,
                witness: Some(level[0].0.clone()),
                certificate_d,
                decided: true,
            };
        }
        if max_depth.is_some_and(|max| depth >= max) {
            return StepReport {
                step: depth + 1,
                witness: Some(level[0].0.clone()),
                certificate_d,
                decided: false,
            };
        }
        seen.clear();
        let mut next = Vec::new();
        for (gen, outer) in &gens {
            for (pattern, inner) in &level {
                let c = outer.commutator_unchecked(inner);
                if !c.is_identity() && seen.insert(c.clone()) {
                    next.push((pattern.prepend(*gen), c));
                }
            }
        }
        if next.is_empty() {
            return StepReport {
                step: depth + 1,
                witness: Some(level[0].0.clone()),
                certificate_d,
                decided: true,
            };
        }
        level = next;
        depth += 1;
    }
}

/// Tri-state full-step verdict used by experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FullStep {
    Yes,
    No,
    Undetermined,
}

/// Full-step decision with fast paths: a matching-zero certificate rules it
/// out, a nonzero corner probe confirms it, and otherwise exact enumeration
/// runs when `n <= exact_ceiling`.
pub fn full_step_status(g: &GroupSample, exact_ceiling: usize) -> FullStep {
    let n = g.n;
    if n >= 3 {
        if matching_zero_certificate(g).is_some() {
            return FullStep::No;
        }
        if !corner_probe(g).expect("n >= 3").is_zero() {
            return FullStep::Yes;
        }
    }
    if n > exact_ceiling {
        return FullStep::Undetermined;
    }
    if step(g, None).step == n - 1 {
        FullStep::Yes
    } else {
        FullStep::No
    }
}

/// `<V, W>` has step `n - 1`.
pub fn has_full_step(g: &GroupSample) -> bool {
    full_step_status(g, usize::MAX) == FullStep::Yes
}

fn type_i_at(cv: &[u32], cw: &[u32], i: usize) -> bool {
    cv[i] == 1 && cv[i + 1] == 0 && cw[i] == 1 && cw[i + 1] == 1
}

/// Smallest odd `i <= n - 2` where `V` has exactly one letter of index `i` and
/// none of index `i+1`, and `W` has exactly one of each. Such a pair cannot
/// commute.
pub fn find_type_i_configuration(v: &Word, w: &Word) -> Option<usize> {
    let (cv, cw) = (v.index_occupancy(), w.index_occupancy());
    let n = v.dimension();
    (1..n.saturating_sub(1))
        .step_by(2)
        .find(|&i| type_i_at(&cv, &cw, i))
}

/// Number of odd `i` carrying a type-`i` configuration.
pub fn count_type_i_configurations(v: &Word, w: &Word) -> usize {
    let (cv, cw) = (v.index_occupancy(), w.index_occupancy());
    let n = v.dimension();
    (1..n.saturating_sub(1))
        .step_by(2)
        .filter(|&i| type_i_at(&cv, &cw, i))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::Letter;

    fn word(n: usize, letters: &[(usize, i32)]) -> Word {
        Word::new(
            n,
            letters
                .iter()
                .map(|&(i, s)| Letter::new(i, crate::unipotent::Sign::from_i32(s).unwrap()))
                .collect(),
        )
        .unwrap()
    }

    fn sample(n: usize, v: &[(usize, i32)], w: &[(usize, i32)]) -> GroupSample {
        GroupSample::new(word(n, v), word(n, w)).unwrap()
    }

    #[test]
    fn abelian_examples() {
        assert!(is_abelian(&sample(5, &[(1, 1)], &[(3, 1)])));
        assert!(!is_abelian(&sample(3, &[(1, 1)], &[(2, 1)])));
        let same = &[(1, 1), (2, -1), (1, 1)];
        assert!(is_abelian(&sample(4, same, same)));
    }

    #[test]
    fn supercommute_and_pair_counts() {
        let v = word(6, &[(1, 1), (1, -1)]);
        let w = word(6, &[(3, 1)]);
        assert!(supercommutes(&v, &w));
        assert_eq!(count_noncommuting_pairs(&v, &w), 0);
        let v = word(6, &[(2, 1)]);
        let w = word(6, &[(3, -1)]);
        assert!(!supercommutes(&v, &w));
        let v = word(6, &[(2, 1), (2, 1)]);
        assert_eq!(count_noncommuting_pairs(&v, &w), 2);
    }

    #[test]
    fn bins() {
        let empty = word(8, &[]);
        let s = bin_statistics(&word(8, &[(4, 1)]), &empty);
        assert_eq!((s.b, s.d), (2, 0));
        let s = bin_statistics(&word(8, &[(1, -1)]), &empty);
        assert_eq!((s.b, s.d), (1, 1));
        let s = bin_statistics(&word(8, &[(7, 1)]), &empty);
        assert_eq!((s.b, s.d), (1, 1));
        // A_2 and A_4 both mark bin 3.
        let s = bin_statistics(&word(8, &[(2, 1), (4, 1)]), &word(8, &[(5, 1)]));
        assert_eq!((s.b, s.d, s.empty_bins), (3, 1, 4));
        assert_eq!(bin_statistics(&empty, &empty).empty_bins, 7);
    }

    #[test]
    fn heisenberg_step() {
        let g = sample(3, &[(1, 1)], &[(2, 1)]);
        let r = step(&g, None);
        assert_eq!(r.step, 2);
        assert!(r.decided);
        assert_eq!(r.witness.unwrap().to_string(), "VW");
        assert!(has_full_step(&g));
    }

    #[test]
    fn trivial_and_abelian_steps() {
        let r = step(&sample(4, &[], &[]), None);
        assert_eq!((r.step, r.witness.is_none()), (0, true));
        assert_eq!(step(&sample(4, &[(1, 1)], &[(1, 1)]), None).step, 1);
        assert_eq!(
            step(&sample(2, &[(1, 1)], &[(1, -1), (1, -1)]), None).step,
            1
        );
    }

    #[test]
    fn step_depth_bound_is_reported_as_undecided() {
        let g = sample(5, &[(1, 1), (3, 1)], &[(2, 1), (4, 1)]);
        let full = step(&g, None);
        assert!(full.decided && full.step >= 3);
        let bounded = step(&g, Some(1));
        assert!(!bounded.decided);
        assert_eq!(bounded.step, 2);
    }

    #[test]
    fn certificates() {
        let v = SuperdiagonalVector::from_i64s(&[1, 0, 1]).unwrap();
        let w = SuperdiagonalVector::from_i64s(&[2, 0, 0]).unwrap();
        let g = GroupSample {
            n: 4,
            v_word: Word::empty(4).unwrap(),
            w_word: Word::empty(4).unwrap(),
            v_sd: v,
            w_sd: w,
            matrices: OnceLock::new(),
        };
        assert_eq!(matching_zero_certificate(&g), Some(2));
        let g = sample(4, &[(1, 1), (2, 1), (3, 1)], &[]);
        assert_eq!(matching_zero_certificate(&g), None);
        assert_eq!(certificate_step_bound(8, 1), 6);
        assert_eq!(certificate_step_bound(8, 4), 3);
    }

    #[test]
    fn corner_probe_ones() {
        // w = all ones, v = e_1 at n = 4: (n-2)-th difference of (1,0,0) is 1.
        let g = sample(4, &[(1, 1)], &[(1, 1), (2, 1), (3, 1)]);
        assert_eq!(corner_probe(&g).unwrap(), BigInt::from(1));
        assert!(corner_probe(&sample(2, &[(1, 1)], &[])).is_err());
    }

    #[test]
    fn type_i_configurations() {
        let v = word(8, &[(1, 1), (5, 1)]);
        let w = word(8, &[(1, 1), (2, 1)]);
        assert_eq!(find_type_i_configuration(&v, &w), Some(1));
        assert_eq!(count_type_i_configurations(&v, &w), 1);
        assert!(!is_abelian(&GroupSample::new(v, w).unwrap()));
        let a2 = word(8, &[(2, 1)]);
        assert_eq!(find_type_i_configuration(&a2, &a2), None);
    }

    #[test]
    fn pattern_text() {
        let p: Pattern = "WWV".parse().unwrap();
        assert_eq!(p.depth(), 2);
        assert_eq!(p.to_string(), "WWV");
        assert!("WX".parse::<Pattern>().is_err());
        let json = serde_json::to_string(&StepReport {
            step: 2,
            witness: Some(p),
            certificate_d: None,
            decided: true,
        })
        .unwrap();
        assert_eq!(
            json,
            r#"{"step":2,"witness":"WWV","certificate_d":null,"decided":true}"#
        );
    }
}
