//! Browser bindings for the demo page in `www/`.
//!
//! Every export returns a JSON string. The plain `*_json` functions hold the
//! logic so they can be tested natively; the `#[wasm_bindgen]` wrappers only
//! convert errors.

use nilwalk::analysis::{full_step_status, is_abelian, step, supercommutes, FullStep, GroupSample};
use nilwalk::dist::{asymptotic_zero_law, dp_distribution_with, DpOptions, LazyWalkParams};
use nilwalk::experiments::{run, ExperimentConfig, ExperimentKind, LengthRule};
use nilwalk::WalkSampler;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Keeps a browser tab responsive.
const MAX_WORK: u64 = 5_000_000;

#[derive(Serialize)]
struct CurvePoint {
    c: f64,
    ell: u64,
    estimate: f64,
    stderr: f64,
    theory: f64,
}

#[derive(Serialize)]
struct ZeroPoint {
    ell: u64,
    probability: f64,
    limit: f64,
}

#[derive(Serialize)]
struct StepResult {
    v: String,
    w: String,
    step: usize,
    witness: Option<String>,
    abelian: bool,
    supercommute: bool,
    full_step: bool,
    corner_decides: bool,
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// `P(abelian)` at `points` evenly spaced constants `c` in `(0, c_max]`,
/// with `len = ceil(c * sqrt(n))`.
pub fn abelian_curve_json(
    n: usize,
    c_max: f64,
    points: usize,
    trials: u64,
    seed: u64,
) -> Result<String, String> {
    if points == 0 || c_max.is_nan() || c_max <= 0.0 {
        return Err("need at least one point and c_max > 0".into());
    }
    let work = (points as u64)
        .saturating_mul(trials)
        .saturating_mul((c_max * (n as f64).sqrt()) as u64 + 1);
    if work > MAX_WORK {
        return Err(format!(
            "too much work ({work} letter draws); lower n, points or trials"
        ));
    }
    let rules = (1..=points)
        .map(|k| LengthRule::Sqrt {
            c: c_max * k as f64 / points as f64,
        })
        .collect();
    let config = ExperimentConfig::new(ExperimentKind::AbelianCurve, vec![n])
        .with_rules(rules)
        .with_trials(trials)
        .with_seed(seed)
        .with_workers(1);
    let result = run(&config).map_err(|e| e.to_string())?;
    let curve: Vec<CurvePoint> = result
        .rows
        .iter()
        .filter(|r| r.experiment == "abelian-curve.abelian")
        .map(|r| CurvePoint {
            c: r.c.unwrap_or(0.0),
            ell: r.ell,
            estimate: r.estimate,
            stderr: r.stderr,
            theory: r.theory.unwrap_or(f64::NAN),
        })
        .collect();
    to_json(&curve)
}

/// `P(v_k = 0)` for lengths `1..=ell_max` (at most `points` of them), with the
/// limit `K * sqrt((n - 1) / len)`. Under uniform letters a coordinate moves
/// with probability `1/(n-1)`, hence `n - 1`.
pub fn zero_probability_json(n: usize, ell_max: u64, points: u64) -> Result<String, String> {
    if ell_max == 0 || points == 0 {
        return Err("need ell_max > 0 and points > 0".into());
    }
    if ell_max > 20_000 {
        return Err("ell_max is capped at 20000 in the browser".into());
    }
    let stride = ell_max.div_ceil(points).max(1);
    let options = DpOptions { exact_ceiling: 0 };
    let curve = (1..=ell_max)
        .filter(|l| l % stride == 0 || *l == ell_max)
        .map(|ell| {
            let params = LazyWalkParams::letter_uniform(n, ell).map_err(|e| e.to_string())?;
            Ok(ZeroPoint {
                ell,
                probability: dp_distribution_with(&params, options).mass(0),
                limit: asymptotic_zero_law(n - 1, ell),
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    to_json(&curve)
}

/// Draws a random pair of words and computes the step of the group they generate.
pub fn random_group_step_json(n: usize, ell: usize, seed: u64) -> Result<String, String> {
    if n > 12 || ell > 200 {
        return Err("the browser demo allows n <= 12 and len <= 200".into());
    }
    let mut sampler = WalkSampler::new(n, ell, seed, 0).map_err(|e| e.to_string())?;
    let (v, w) = sampler.sample_pair();
    let supercommute = supercommutes(&v, &w);
    let g = GroupSample::new(v, w).map_err(|e| e.to_string())?;
    let report = step(&g, None);
    let result = StepResult {
        v: g.v_word().to_string(),
        w: g.w_word().to_string(),
        step: report.step,
        witness: report.witness.map(|p| p.to_string()),
        abelian: is_abelian(&g),
        supercommute,
        full_step: report.step + 1 == n,
        corner_decides: full_step_status(&g, 0) != FullStep::Undetermined,
    };
    to_json(&result)
}

#[wasm_bindgen]
pub fn abelian_curve(
    n: usize,
    c_max: f64,
    points: usize,
    trials: u64,
    seed: u64,
) -> Result<String, JsValue> {
    abelian_curve_json(n, c_max, points, trials, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn zero_probability_curve(n: usize, ell_max: u64, points: u64) -> Result<String, JsValue> {
    zero_probability_json(n, ell_max, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn random_group_step(n: usize, ell: usize, seed: u64) -> Result<String, JsValue> {
    random_group_step_json(n, ell, seed).map_err(|e| JsValue::from_str(&e))
}
