//! Exhaustive enumeration of every word pair at tiny `(n, len)`.
//!
//! Each event the Monte Carlo harness estimates gets an exact count here,
//! and so an exact rational probability.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{is_abelian, step, supercommutes, GroupSample};
use crate::error::{Error, Result};
use crate::unipotent::{Sign, UnipotentMatrix};
use crate::words::{Letter, Word};

/// Default cap on the number of word pairs.
pub const DEFAULT_BUDGET: u128 = 10_000_000;

/// Order in which word pairs are visited. Counts never depend on it; the
/// choice exists so that claim can be tested.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnumerationOrder {
    /// `V` outer, `W` inner, words in mixed-radix order with the first letter
    /// varying slowest.
    #[default]
    Forward,
    /// `W` outer, `V` inner, both lists walked back to front with the last
    /// letter varying slowest.
    Reversed,
}

#[derive(Clone, Copy, Debug)]
pub struct OracleOptions {
    pub budget: u128,
    pub order: EnumerationOrder,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            budget: DEFAULT_BUDGET,
            order: EnumerationOrder::Forward,
        }
    }
}

/// Exact event counts over all `(2(n-1))^{2 len}` pairs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExhaustiveResult {
    pub n: usize,
    pub ell: usize,
    pub total_pairs: u128,
    pub abelian: u128,
    pub supercommute: u128,
    pub full_step: u128,
    pub step_histogram: BTreeMap<usize, u128>,
}

impl ExhaustiveResult {
    fn ratio(&self, count: u128) -> BigRational {
        BigRational::new(BigInt::from(count), BigInt::from(self.total_pairs))
    }

    pub fn p_abelian(&self) -> BigRational {
        self.ratio(self.abelian)
    }

    pub fn p_supercommute(&self) -> BigRational {
        self.ratio(self.supercommute)
    }

    /// Commuting but not supercommuting.
    pub fn p_gap(&self) -> BigRational {
        self.ratio(self.abelian - self.supercommute)
    }

    pub fn p_full_step(&self) -> BigRational {
        self.ratio(self.full_step)
    }

    pub fn step_probabilities(&self) -> BTreeMap<usize, BigRational> {
        self.step_histogram
            .iter()
            .map(|(&s, &c)| (s, self.ratio(c)))
            .collect()
    }
}

fn pair_count(n: usize, ell: usize) -> Option<u128> {
    let alphabet = 2 * (n as u128 - 1);
    alphabet.checked_pow(u32::try_from(2 * ell).ok()?)
}

/// Every word of length `ell` over `U_n`'s generators, in mixed-radix order
/// of the letter code used by the sampler (`A_1, A_1^{-1}, A_2, ...`).
pub fn all_words(n: usize, ell: usize) -> Result<Vec<Word>> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    let alphabet: Vec<Letter> = (1..n)
        .flat_map(|i| [Letter::new(i, Sign::Plus), Letter::new(i, Sign::Minus)])
        .collect();
    let mut words = vec![Vec::new()];
    for _ in 0..ell {
        words = words
            .into_iter()
            .flat_map(|prefix: Vec<Letter>| {
                alphabet.iter().map(move |&l| {
                    let mut w = prefix.clone();
                    w.push(l);
                    w
                })
            })
            .collect();
    }
    words
        .into_iter()
        .map(|letters| Word::new(n, letters))
        .collect()
}

#[derive(Default)]
struct Tally {
    abelian: u128,
    supercommute: u128,
    full_step: u128,
    steps: BTreeMap<usize, u128>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.abelian += other.abelian;
        self.supercommute += other.supercommute;
        self.full_step += other.full_step;
        for (s, c) in other.steps {
            *self.steps.entry(s).or_default() += c;
        }
        self
    }
}

pub fn enumerate_all(n: usize, ell: usize) -> Result<ExhaustiveResult> {
    enumerate_all_with(n, ell, OracleOptions::default())
}

pub fn enumerate_all_with(
    n: usize,
    ell: usize,
    options: OracleOptions,
) -> Result<ExhaustiveResult> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    let total = pair_count(n, ell).unwrap_or(u128::MAX);
    if total > options.budget {
        return Err(Error::BudgetExceeded {
            required: total,
            budget: options.budget,
        });
    }
    let mut words = all_words(n, ell)?;
    if options.order == EnumerationOrder::Reversed {
        words.reverse();
        for w in &mut words {
            *w = Word::new(n, w.letters().iter().rev().copied().collect())?;
        }
    }
    // Evaluated once and shared across the inner loop.
    let evaluated: Vec<(Word, UnipotentMatrix)> = words
        .into_iter()
        .map(|w| {
            let m = w.evaluate();
            (w, m)
        })
        .collect();

    let tally = evaluated
        .par_iter()
        .map(|outer| {
            let mut t = Tally::default();
            for inner in &evaluated {
                let (v, w) = match options.order {
                    EnumerationOrder::Forward => (outer, inner),
                    EnumerationOrder::Reversed => (inner, outer),
                };
                let g =
                    GroupSample::with_matrices(v.0.clone(), w.0.clone(), v.1.clone(), w.1.clone())
                        .expect("words share a dimension");
                if is_abelian(&g) {
                    t.abelian += 1;
                }
                if supercommutes(&v.0, &w.0) {
                    t.supercommute += 1;
                }
                let s = step(&g, None).step;
                if s == n - 1 {
                    t.full_step += 1;
                }
                *t.steps.entry(s).or_default() += 1;
            }
            t
        })
        .reduce(Tally::default, Tally::merge);

    Ok(ExhaustiveResult {
        n,
        ell,
        total_pairs: total,
        abelian: tally.abelian,
        supercommute: tally.supercommute,
        full_step: tally.full_step,
        step_histogram: tally.steps,
    })
}

/// Exact distribution of the step over all pairs.
pub fn step_histogram(n: usize, ell: usize) -> Result<BTreeMap<usize, BigRational>> {
    Ok(enumerate_all(n, ell)?.step_probabilities())
}
