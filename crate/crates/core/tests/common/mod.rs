#![allow(dead_code)]

use std::collections::HashSet;

use nilwalk::analysis::{Gen, Pattern};
use nilwalk::{Letter, Sign, Word};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense `n x n` matrix over `i64`, row-major. Independent of the crate's
/// matrix type on purpose.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Small {
    pub n: usize,
    pub a: Vec<i64>,
}

impl Small {
    pub fn identity(n: usize) -> Small {
        let mut a = vec![0; n * n];
        for i in 0..n {
            a[i * n + i] = 1;
        }
        Small { n, a }
    }

    pub fn of_word(w: &Word) -> Small {
        let n = w.dimension();
        let mut m = Small::identity(n);
        for l in w.letters() {
            let mut e = Small::identity(n);
            e.a[(l.index - 1) * n + l.index] = l.sign.as_i32() as i64;
            m = m.mul(&e);
        }
        m
    }

    pub fn mul(&self, o: &Small) -> Small {
        let n = self.n;
        let mut a = vec![0; n * n];
        for i in 0..n {
            for k in 0..n {
                let x = self.a[i * n + k];
                if x != 0 {
                    for j in 0..n {
                        a[i * n + j] += x * o.a[k * n + j];
                    }
                }
            }
        }
        Small { n, a }
    }

    /// Inverse of a unit upper-triangular matrix by back substitution.
    pub fn inv(&self) -> Small {
        let n = self.n;
        let mut x = Small::identity(n);
        for col in 0..n {
            for i in (0..col).rev() {
                let s: i64 = (i + 1..=col)
                    .map(|k| self.a[i * n + k] * x.a[k * n + col])
                    .sum();
                x.a[i * n + col] = -s;
            }
        }
        x
    }

    pub fn is_identity(&self) -> bool {
        *self == Small::identity(self.n)
    }

    /// `a^{-1} b^{-1} a b`.
    pub fn comm(&self, o: &Small) -> Small {
        self.inv().mul(&o.inv()).mul(self).mul(o)
    }
}

/// Step of `<V, W>` from simple commutators over `{V, W, V^-1, W^-1}`:
/// the first `r` with every `[x_1, [x_2, ... [x_r, x_{r+1}]]]` trivial.
pub fn brute_force_step(v: &Word, w: &Word) -> usize {
    let vm = Small::of_word(v);
    let wm = Small::of_word(w);
    let gens = vec![vm.clone(), wm.clone(), vm.inv(), wm.inv()];
    let mut level: HashSet<Small> = gens.iter().filter(|&g| !g.is_identity()).cloned().collect();
    let mut r = 0;
    while !level.is_empty() {
        r += 1;
        let mut next = HashSet::new();
        for x in &gens {
            for y in &level {
                let c = x.comm(y);
                if !c.is_identity() {
                    next.insert(c);
                }
            }
        }
        level = next;
    }
    r
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_word<R: Rng>(r: &mut R, n: usize, len: usize) -> Word {
    let letters = (0..len)
        .map(|_| {
            let sign = if r.gen_bool(0.5) {
                Sign::Plus
            } else {
                Sign::Minus
            };
            Letter::new(r.gen_range(1..n), sign)
        })
        .collect();
    Word::new(n, letters).unwrap()
}

/// Every pattern with `depth + 1` slots.
pub fn patterns(depth: usize) -> Vec<Pattern> {
    let slots = depth + 1;
    (0..1u32 << slots)
        .map(|bits| {
            Pattern(
                (0..slots)
                    .map(|k| if bits >> k & 1 == 0 { Gen::V } else { Gen::W })
                    .collect(),
            )
        })
        .collect()
}

/// `|estimate - p| <= k * sqrt(p (1 - p) / trials)`, exact equality when `p`
/// is 0 or 1.
pub fn within_binomial_sigma(estimate: f64, p: f64, trials: u64, k: f64) -> bool {
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    (estimate - p).abs() <= k * sigma + 1e-12
}
