//! Words in the standard generators `A_1^{±1}, ..., A_{n-1}^{±1}` and the
//! uniform random walk that produces them.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::unipotent::{Layout, Sign, SuperdiagonalVector, UnipotentMatrix};

/// One signed generator `A_index^{sign}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub index: usize,
    pub sign: Sign,
}

impl Letter {
    pub fn new(index: usize, sign: Sign) -> Self {
        Letter { index, sign }
    }

    pub fn plus(index: usize) -> Self {
        Letter::new(index, Sign::Plus)
    }

    pub fn minus(index: usize) -> Self {
        Letter::new(index, Sign::Minus)
    }

    pub fn inverse(self) -> Self {
        Letter::new(self.index, self.sign.flip())
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            Sign::Plus => write!(f, "{}^+1", self.index),
            Sign::Minus => write!(f, "{}^-1", self.index),
        }
    }
}

impl FromStr for Letter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (idx, sign) = s
            .split_once('^')
            .ok_or_else(|| Error::parse("letter", s, "expected index^sign"))?;
        let index: usize = idx
            .trim()
            .parse()
            .map_err(|_| Error::parse("letter", s, "index is not a positive integer"))?;
        let sign = match sign.trim() {
            "+1" | "1" | "+" => Sign::Plus,
            "-1" | "-" => Sign::Minus,
            _ => return Err(Error::parse("letter", s, "sign must be +1 or -1")),
        };
        Ok(Letter { index, sign })
    }
}

/// `sigma_i`: +1 for `A_i`, -1 for `A_i^{-1}`, 0 for any other letter.
pub fn sigma(i: usize, letter: Letter) -> i32 {
    if letter.index == i {
        letter.sign.as_i32()
    } else {
        0
    }
}

/// A word of letters over `U_n`.
///
/// Text form is `n:len:i1^s1,i2^s2,...`, e.g. `4:3:1^+1,2^+1,1^-1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    n: usize,
    letters: Vec<Letter>,
}

impl Word {
    pub fn new(n: usize, letters: Vec<Letter>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        if let Some(bad) = letters.iter().find(|l| l.index == 0 || l.index >= n) {
            return Err(Error::IndexOutOfRange {
                index: bad.index,
                max: n - 1,
            });
        }
        Ok(Word { n, letters })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Word::new(n, Vec::new())
    }

    /// Parses a bare comma-separated letter list such as `1^+1,2^-1`.
    pub fn parse_letters(n: usize, text: &str) -> Result<Self> {
        let text = text.trim();
        let letters = if text.is_empty() {
            Vec::new()
        } else {
            text.split(',')
                .map(str::parse)
                .collect::<Result<Vec<_>>>()?
        };
        Word::new(n, letters)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    /// Product of the elementary matrices of the letters, left to right.
    pub fn evaluate(&self) -> UnipotentMatrix {
        self.evaluate_in(Layout::for_dimension(self.n))
    }

    pub fn evaluate_in(&self, layout: Layout) -> UnipotentMatrix {
        let mut m = UnipotentMatrix::identity_in(self.n, layout).expect("word dimension checked");
        // Left multiplication only touches one row; walk the word backwards.
        for letter in self.letters.iter().rev() {
            m.left_mul_elementary(letter.index, letter.sign)
                .expect("letter index checked");
        }
        m
    }

    /// Signed letter counts per index; equals the superdiagonal of `evaluate()`.
    pub fn superdiagonal(&self) -> SuperdiagonalVector {
        let mut counts = vec![0i64; self.n - 1];
        for letter in &self.letters {
            counts[letter.index - 1] += i64::from(letter.sign.as_i32());
        }
        SuperdiagonalVector::new(counts.into_iter().map(BigInt::from).collect()).expect("n >= 2")
    }

    /// Number of letters (either sign) per index; slot 0 and slot `n` stay zero.
    pub fn index_occupancy(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.n + 1];
        for letter in &self.letters {
            counts[letter.index] += 1;
        }
        counts
    }

    pub fn inverse(&self) -> Word {
        Word {
            n: self.n,
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }
}

/// Free-function form of [`Word::evaluate`].
pub fn evaluate(word: &Word) -> UnipotentMatrix {
    word.evaluate()
}

/// Free-function form of [`Word::superdiagonal`].
pub fn superdiagonal_of_word(word: &Word) -> SuperdiagonalVector {
    word.superdiagonal()
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:", self.n, self.letters.len())?;
        for (k, letter) in self.letters.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{letter}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().splitn(3, ':');
        let (Some(n), Some(len), Some(body)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse("word", s, "expected n:len:letters"));
        };
        let n: usize = n
            .parse()
            .map_err(|_| Error::parse("word", s, "bad dimension"))?;
        let len: usize = len
            .parse()
            .map_err(|_| Error::parse("word", s, "bad length"))?;
        let word = Word::parse_letters(n, body)?;
        if word.len() != len {
            return Err(Error::parse(
                "word",
                s,
                format!("header says {len} letters, found {}", word.len()),
            ));
        }
        Ok(word)
    }
}

/// Reproducible source of uniform random words.
///
/// Every `(seed, stream_id)` pair addresses an independent ChaCha8 stream, so
/// trial `k` of an experiment can be regenerated without replaying trials
/// `0..k`.
#[derive(Clone, Debug)]
pub struct WalkSampler {
    n: usize,
    length: usize,
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl WalkSampler {
    pub fn new(n: usize, length: usize, seed: u64, stream_id: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Ok(WalkSampler {
            n,
            length,
            seed,
            stream_id,
            rng,
        })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// One letter, uniform over the `2(n-1)` signed generators.
    pub fn sample_letter(&mut self) -> Letter {
        let r = self.rng.gen_range(0..2 * (self.n - 1));
        let sign = if r % 2 == 0 { Sign::Plus } else { Sign::Minus };
        Letter::new(r / 2 + 1, sign)
    }

    /// Next word of the configured length from this stream.
    pub fn sample_word(&mut self) -> Word {
        let letters = (0..self.length).map(|_| self.sample_letter()).collect();
        Word { n: self.n, letters }
    }

    /// The generator pair `(V, W)` of one trial.
    pub fn sample_pair(&mut self) -> (Word, Word) {
        let v = self.sample_word();
        let w = self.sample_word();
        (v, w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_definition() {
        assert_eq!(sigma(3, Letter::plus(3)), 1);
        assert_eq!(sigma(3, Letter::minus(3)), -1);
        assert_eq!(sigma(2, Letter::plus(5)), 0);
    }

    #[test]
    fn empty_word_is_identity() {
        let mut sampler = WalkSampler::new(5, 0, 3, 0).unwrap();
        let w = sampler.sample_word();
        assert!(w.is_empty());
        assert!(w.evaluate().is_identity());
        assert!(w.superdiagonal().is_zero());
    }

    #[test]
    fn evaluates_heisenberg_word() {
        let w = Word::new(3, vec![Letter::plus(1), Letter::plus(2)]).unwrap();
        let m = w.evaluate();
        let expect: Vec<_> = [((1, 2), 1), ((1, 3), 1), ((2, 3), 1)]
            .into_iter()
            .map(|(p, v)| (p, BigInt::from(v)))
            .collect();
        assert_eq!(m.nonzero_entries(), expect);
    }

    #[test]
    fn signed_counts() {
        let w = Word::new(4, vec![Letter::plus(1), Letter::plus(2), Letter::minus(1)]).unwrap();
        assert_eq!(
            w.superdiagonal(),
            SuperdiagonalVector::from_i64s(&[0, 1, 0]).unwrap()
        );
        assert_eq!(w.superdiagonal(), w.evaluate().superdiagonal());
    }

    #[test]
    fn sampler_is_deterministic_per_stream() {
        let a = WalkSampler::new(9, 40, 1, 7).unwrap().sample_word();
        let b = WalkSampler::new(9, 40, 1, 7).unwrap().sample_word();
        let c = WalkSampler::new(9, 40, 1, 8).unwrap().sample_word();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn text_format() {
        let w = Word::new(4, vec![Letter::plus(1), Letter::plus(2), Letter::minus(1)]).unwrap();
        assert_eq!(w.to_string(), "4:3:1^+1,2^+1,1^-1");
        assert_eq!("4:3:1^+1,2^+1,1^-1".parse::<Word>().unwrap(), w);
        assert_eq!("6:0:".parse::<Word>().unwrap(), Word::empty(6).unwrap());
        assert!("4:2:1^+1".parse::<Word>().is_err());
        assert!("4:1:4^+1".parse::<Word>().is_err());
        assert!("4:1:2^+2".parse::<Word>().is_err());
        assert_eq!(
            Word::parse_letters(3, "1^+1").unwrap().letters(),
            &[Letter::plus(1)]
        );
    }

    #[test]
    fn rejects_out_of_range_letters() {
        assert!(matches!(
            Word::new(3, vec![Letter::plus(3)]),
            Err(Error::IndexOutOfRange { index: 3, max: 2 })
        ));
        assert!(Word::new(3, vec![Letter::plus(0)]).is_err());
    }

    #[test]
    fn inverse_word_evaluates_to_inverse() {
        let mut s = WalkSampler::new(6, 12, 5, 0).unwrap();
        let w = s.sample_word();
        assert_eq!(w.inverse().evaluate(), w.evaluate().inverse());
    }
}
