//! Distribution of one superdiagonal coordinate of a long random word.
//!
//! A single coordinate of the endpoint is a lazy walk on the integers: each
//! step is `+1` or `-1` with probability `p` and `0` otherwise. Three routes
//! to its law live here and are checked against each other:
//!
//! * [`dp_distribution`]: convolution of the step law, exact rationals up to
//!   a length ceiling and double-double floats beyond it;
//! * [`quadrature_zero_probability`] / [`pair_zero_probability`]: numerical
//!   integration of the characteristic function;
//! * [`asymptotic_zero_law`]: the local-limit reference curve `K sqrt(n/len)`.

use std::cell::Cell;
use std::f64::consts::PI;
use std::io::Write;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};

/// `1 / sqrt(2 pi)`.
pub const K: f64 = 0.398_942_280_401_432_7;

/// Absolute accuracy targeted by the quadrature routines.
pub const QUADRATURE_TOLERANCE: f64 = 1e-12;

/// Default walk length up to which [`dp_distribution`] stays exact.
pub const DEFAULT_EXACT_CEILING: u64 = 10_000;

/// How per-letter probabilities are derived from the dimension `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parameterization {
    /// `p = 1 / (2(n-1))`: the exact law of one coordinate under uniform letters.
    LetterUniform,
    /// `p = 1 / (2n)`: the simplified per-dimension law used for asymptotics.
    PerDimension,
}

impl Parameterization {
    pub fn params(self, n: usize, steps: u64) -> Result<LazyWalkParams> {
        match self {
            Parameterization::LetterUniform => LazyWalkParams::letter_uniform(n, steps),
            Parameterization::PerDimension => LazyWalkParams::per_dimension(n, steps),
        }
    }
}

/// Symmetric three-point step law repeated `steps` times, exact rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LazyWalkParams {
    steps: u64,
    p_plus: BigRational,
    p_minus: BigRational,
    p_zero: BigRational,
}

impl LazyWalkParams {
    pub fn new(steps: u64, p_plus: BigRational, p_minus: BigRational) -> Result<Self> {
        let zero = BigRational::zero();
        if p_plus < zero || p_minus < zero {
            return Err(Error::InvalidParams("negative step probability".into()));
        }
        if p_plus != p_minus {
            return Err(Error::InvalidParams(format!(
                "only symmetric walks are supported (p+ = {p_plus}, p- = {p_minus})"
            )));
        }
        let p_zero = BigRational::one() - &p_plus - &p_minus;
        if p_zero < zero {
            return Err(Error::InvalidParams("step probabilities exceed one".into()));
        }
        Ok(LazyWalkParams {
            steps,
            p_plus,
            p_minus,
            p_zero,
        })
    }

    pub fn symmetric(steps: u64, p: BigRational) -> Result<Self> {
        LazyWalkParams::new(steps, p.clone(), p)
    }

    pub fn letter_uniform(n: usize, steps: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        LazyWalkParams::symmetric(steps, ratio(1, 2 * (n as u64 - 1)))
    }

    pub fn per_dimension(n: usize, steps: u64) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidDimension(n));
        }
        LazyWalkParams::symmetric(steps, ratio(1, 2 * n as u64))
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn with_steps(&self, steps: u64) -> Self {
        LazyWalkParams {
            steps,
            ..self.clone()
        }
    }

    pub fn p_plus(&self) -> &BigRational {
        &self.p_plus
    }

    pub fn p_minus(&self) -> &BigRational {
        &self.p_minus
    }

    pub fn p_zero(&self) -> &BigRational {
        &self.p_zero
    }

    fn p_f64(&self) -> f64 {
        self.p_plus.to_f64().expect("finite probability")
    }
}

fn ratio(num: u64, den: u64) -> BigRational {
    Ratio::new(BigInt::from(num), BigInt::from(den))
}

#[derive(Clone, Debug)]
enum Masses {
    /// `numerators[k] / denominator` is the mass at `+k` (and `-k`).
    Exact {
        numerators: Vec<BigUint>,
        denominator: BigUint,
    },
    Approximate(Vec<f64>),
}

/// Law of the walk endpoint on `-steps..=steps`. Symmetric, so only the
/// nonnegative half is stored.
#[derive(Clone, Debug)]
pub struct EndpointDistribution {
    steps: u64,
    masses: Masses,
}

impl EndpointDistribution {
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.masses, Masses::Exact { .. })
    }

    pub fn support(&self) -> std::ops::RangeInclusive<i64> {
        -(self.steps as i64)..=self.steps as i64
    }

    pub fn mass(&self, offset: i64) -> f64 {
        let k = offset.unsigned_abs();
        if k > self.steps {
            return 0.0;
        }
        match &self.masses {
            Masses::Exact {
                numerators,
                denominator,
            } => big_ratio_to_f64(&numerators[k as usize], denominator),
            Masses::Approximate(m) => m[k as usize],
        }
    }

    pub fn exact_mass(&self, offset: i64) -> Option<BigRational> {
        let k = offset.unsigned_abs();
        match &self.masses {
            Masses::Exact {
                numerators,
                denominator,
            } => {
                let num = if k > self.steps {
                    BigUint::zero()
                } else {
                    numerators[k as usize].clone()
                };
                Some(Ratio::new(num.into(), denominator.clone().into()))
            }
            Masses::Approximate(_) => None,
        }
    }

    pub fn exact_total(&self) -> Option<BigRational> {
        match &self.masses {
            Masses::Exact {
                numerators,
                denominator,
            } => {
                let mut total = numerators[0].clone();
                for x in &numerators[1..] {
                    total += x * 2u32;
                }
                Some(Ratio::new(total.into(), denominator.clone().into()))
            }
            Masses::Approximate(_) => None,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.support().map(|k| self.mass(k)).sum()
    }

    /// CSV rows `offset,probability,rational`; the rational column is empty for
    /// approximate distributions.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "offset,probability,rational")?;
        for k in self.support() {
            let rational = self
                .exact_mass(k)
                .map(|r| r.to_string())
                .unwrap_or_default();
            writeln!(out, "{k},{:e},{rational}", self.mass(k))?;
        }
        Ok(())
    }
}

/// `num / den` in double precision without overflowing either operand.
pub(crate) fn big_ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    // Shift so the integer quotient keeps at least 64 significant bits.
    let shift = (den.bits() as i64 - num.bits() as i64 + 64).max(0);
    let q = ((num << shift as usize) / den)
        .to_f64()
        .unwrap_or(f64::INFINITY);
    scale_by_power_of_two(q, -shift)
}

fn scale_by_power_of_two(mut x: f64, mut exp: i64) -> f64 {
    while exp < -1000 {
        x *= 2f64.powi(-1000);
        exp += 1000;
        if x == 0.0 {
            return 0.0;
        }
    }
    x * 2f64.powi(exp as i32)
}

pub fn big_rational_to_f64(r: &BigRational) -> f64 {
    let sign = if r.numer() < &BigInt::zero() {
        -1.0
    } else {
        1.0
    };
    sign * big_ratio_to_f64(r.numer().magnitude(), r.denom().magnitude())
}

/// Options for [`dp_distribution_with`].
#[derive(Clone, Copy, Debug)]
pub struct DpOptions {
    /// Longest walk computed in exact arithmetic.
    pub exact_ceiling: u64,
}

impl Default for DpOptions {
    fn default() -> Self {
        DpOptions {
            exact_ceiling: DEFAULT_EXACT_CEILING,
        }
    }
}

/// Endpoint law by repeated convolution with the step law.
pub fn dp_distribution(params: &LazyWalkParams) -> EndpointDistribution {
    dp_distribution_with(params, DpOptions::default())
}

pub fn dp_distribution_with(params: &LazyWalkParams, options: DpOptions) -> EndpointDistribution {
    if params.steps <= options.exact_ceiling {
        exact_convolution(params)
    } else {
        approximate_convolution(params)
    }
}

fn exact_convolution(params: &LazyWalkParams) -> EndpointDistribution {
    // Common denominator: p_plus = a/d, p_zero = c/d.
    let d: BigInt = params.p_plus.denom().lcm(params.p_zero.denom());
    let a = (params.p_plus.numer() * (&d / params.p_plus.denom()))
        .to_biguint()
        .expect("nonnegative");
    let c = (params.p_zero.numer() * (&d / params.p_zero.denom()))
        .to_biguint()
        .expect("nonnegative");
    let d = d.to_biguint().expect("positive");

    let mut counts: Vec<BigUint> = vec![BigUint::one()];
    for _ in 0..params.steps {
        let len = counts.len();
        let mut next = Vec::with_capacity(len + 1);
        for k in 0..=len {
            let mut acc = BigUint::zero();
            if k < len {
                acc += &c * &counts[k];
            }
            // Neighbours k-1 and k+1, folding -1 onto +1.
            let left = if k == 0 {
                counts.get(1)
            } else {
                counts.get(k - 1)
            };
            if let Some(x) = left {
                acc += &a * x;
            }
            if let Some(x) = counts.get(k + 1) {
                acc += &a * x;
            }
            next.push(acc);
        }
        counts = next;
    }
    EndpointDistribution {
        steps: params.steps,
        masses: Masses::Exact {
            numerators: counts,
            denominator: num_traits::pow::Pow::pow(&d, params.steps),
        },
    }
}

/// `r` to double-double. `TwoFloat`'s division only keeps the high word, so
/// the quotient gets one correction step from the exact residual instead.
fn two_float_of(r: &BigRational) -> TwoFloat {
    let num = r.numer().to_f64().expect("finite");
    let den = r.denom().to_f64().expect("finite");
    let q0 = num / den;
    let residual = TwoFloat::from(num) - TwoFloat::from(den) * TwoFloat::from(q0);
    TwoFloat::from(q0) + TwoFloat::from(f64::from(residual) / den)
}

fn approximate_convolution(params: &LazyWalkParams) -> EndpointDistribution {
    let a = two_float_of(&params.p_plus);
    let c = two_float_of(&params.p_zero);
    let mut probs: Vec<TwoFloat> = vec![TwoFloat::from(1.0)];
    for _ in 0..params.steps {
        let len = probs.len();
        let mut next = Vec::with_capacity(len + 1);
        for k in 0..=len {
            let mut acc = TwoFloat::from(0.0);
            if k < len {
                acc += c * probs[k];
            }
            let left = if k == 0 {
                probs.get(1)
            } else {
                probs.get(k - 1)
            };
            if let Some(&x) = left {
                acc += a * x;
            }
            if let Some(&x) = probs.get(k + 1) {
                acc += a * x;
            }
            next.push(acc);
        }
        probs = next;
    }
    EndpointDistribution {
        steps: params.steps,
        masses: Masses::Approximate(probs.into_iter().map(f64::from).collect()),
    }
}

/// A quadrature value with its achieved error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureValue {
    pub value: f64,
    pub error_estimate: f64,
}

/// Panel edges on `[0, pi]`, refined geometrically around both ends where the
/// integrand can peak. `scale` is the width of the central peak.
fn panel_edges(scale: f64) -> Vec<f64> {
    let mut edges = vec![0.0, PI];
    let mut x = scale / 4.0;
    while x < PI {
        edges.push(x);
        edges.push(PI - x);
        x *= 2.0;
    }
    edges.retain(|e| (0.0..=PI).contains(e));
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    edges
}

fn integrate_panels<F: Fn(f64) -> f64>(f: F, edges: &[f64], tolerance: f64) -> QuadratureValue {
    let per_panel = tolerance / (4.0 * edges.len() as f64);
    let mut value = 0.0;
    let mut error = 0.0;
    for pair in edges.windows(2) {
        let out = quadrature::integrate(&f, pair[0], pair[1], per_panel);
        value += out.integral;
        error += out.error_estimate;
    }
    QuadratureValue {
        value,
        error_estimate: error,
    }
}

fn peak_scale(p: f64, steps: u64) -> f64 {
    let spread = 2.0 * p * steps as f64;
    if spread <= 1.0 {
        PI
    } else {
        (1.0 / spread.sqrt()).min(PI)
    }
}

fn check_steps(steps: u64) -> Result<i32> {
    i32::try_from(steps).map_err(|_| Error::InvalidParams(format!("walk length {steps} too large")))
}

/// `P(endpoint = 0) = (1/pi) * integral_0^pi phi(t)^len dt` with
/// `phi(t) = 1 - 4p sin^2(t/2)`.
pub fn quadrature_zero_probability(params: &LazyWalkParams) -> Result<QuadratureValue> {
    let steps = check_steps(params.steps)?;
    if steps == 0 {
        return Ok(QuadratureValue {
            value: 1.0,
            error_estimate: 0.0,
        });
    }
    let p = params.p_f64();
    let phi = |t: f64| {
        let s = (t / 2.0).sin();
        (1.0 - 4.0 * p * s * s).powi(steps)
    };
    let edges = panel_edges(peak_scale(p, params.steps));
    let raw = integrate_panels(phi, &edges, QUADRATURE_TOLERANCE * PI);
    finish(raw, 1.0 / PI)
}

/// `P(x = y = 0)` for two coordinates sharing one walk: each step moves one
/// of them by `±1` with probability `p` per direction, or neither with
/// probability `1 - 4p`.
pub fn pair_zero_probability(params: &LazyWalkParams) -> Result<QuadratureValue> {
    let steps = check_steps(params.steps)?;
    if params.p_zero < params.p_plus.clone() * BigRational::from_integer(2.into()) {
        return Err(Error::InvalidParams(
            "pair walk needs 4p <= 1 so the joint zero step has nonnegative mass".into(),
        ));
    }
    if steps == 0 {
        return Ok(QuadratureValue {
            value: 1.0,
            error_estimate: 0.0,
        });
    }
    let p = params.p_f64();
    let edges = panel_edges(peak_scale(p, params.steps));
    let inner_error = Cell::new(0.0f64);
    let outer = |t1: f64| {
        let s1 = (t1 / 2.0).sin();
        let base = 1.0 - 4.0 * p * s1 * s1;
        let inner = integrate_panels(
            |t2: f64| {
                let s2 = (t2 / 2.0).sin();
                (base - 4.0 * p * s2 * s2).powi(steps)
            },
            &edges,
            QUADRATURE_TOLERANCE * PI * PI / 10.0,
        );
        inner_error.set(inner_error.get().max(inner.error_estimate));
        inner.value
    };
    let raw = integrate_panels(outer, &edges, QUADRATURE_TOLERANCE * PI * PI / 10.0);
    let combined = QuadratureValue {
        value: raw.value,
        error_estimate: raw.error_estimate + PI * inner_error.get(),
    };
    finish(combined, 1.0 / (PI * PI))
}

fn finish(raw: QuadratureValue, scale: f64) -> Result<QuadratureValue> {
    let out = QuadratureValue {
        value: raw.value * scale,
        error_estimate: raw.error_estimate * scale,
    };
    if !out.value.is_finite() || out.error_estimate > QUADRATURE_TOLERANCE {
        return Err(Error::QuadratureNonConvergence {
            achieved: out.error_estimate,
            target: QUADRATURE_TOLERANCE,
        });
    }
    Ok(out)
}

/// Exact `P(x = y = 0)` for the pair walk by two-dimensional convolution.
/// Cost grows like `len^3`; meant for short walks.
pub fn pair_dp_zero_probability(params: &LazyWalkParams) -> Result<BigRational> {
    let two = BigRational::from_integer(2.into());
    let joint_zero = params.p_zero.clone() - &params.p_plus * two;
    if joint_zero < BigRational::zero() {
        return Err(Error::InvalidParams("pair walk needs 4p <= 1".into()));
    }
    let steps = params.steps as usize;
    let d: BigInt = params.p_plus.denom().lcm(joint_zero.denom());
    let a = params.p_plus.numer() * (&d / params.p_plus.denom());
    let c = joint_zero.numer() * (&d / joint_zero.denom());
    let width = 2 * steps + 1;
    let idx = |x: usize, y: usize| x * width + y;
    let mut grid = vec![BigInt::zero(); width * width];
    grid[idx(steps, steps)] = BigInt::one();
    for _ in 0..steps {
        let mut next = vec![BigInt::zero(); width * width];
        for x in 0..width {
            for y in 0..width {
                let g = &grid[idx(x, y)];
                if g.is_zero() {
                    continue;
                }
                next[idx(x, y)] += &c * g;
                next[idx(x + 1, y)] += &a * g;
                next[idx(x - 1, y)] += &a * g;
                next[idx(x, y + 1)] += &a * g;
                next[idx(x, y - 1)] += &a * g;
            }
        }
        grid = next;
    }
    let denominator = num_traits::pow::Pow::pow(&d, steps);
    Ok(Ratio::new(grid[idx(steps, steps)].clone(), denominator))
}

/// Local-limit reference curve `K sqrt(n / len)`.
pub fn asymptotic_zero_law(n: usize, steps: u64) -> f64 {
    assert!(steps > 0, "asymptotic law needs a positive length");
    K * (n as f64 / steps as f64).sqrt()
}

/// Two-coordinate reference curve `K^2 n / len`.
pub fn asymptotic_pair_zero_law(n: usize, steps: u64) -> f64 {
    assert!(steps > 0, "asymptotic law needs a positive length");
    K * K * n as f64 / steps as f64
}
