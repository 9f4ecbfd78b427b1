//! Browser bindings for the static demo page in `www/`.
//!
//! Each exported function returns a JSON string, or throws a string error.
//! The `*_json` functions hold the logic and are usable natively.

use popgini::dataset::bundled_reference;
use popgini::gini::{gini_coefficient, lorenz_curve, max_gini, subsample_experiment, IncomeSample};
use popgini::report::{build_report, ClassificationRow};
use popgini::targetmodel::{fit_target_model, predict, Prediction, TargetGiniModel};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Upper limit on Monte Carlo trials from the page.
pub const MAX_TRIALS: u32 = 200_000;

#[derive(Serialize)]
struct GiniView {
    n: usize,
    gini: f64,
    max_gini: f64,
    lorenz: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct CurveView {
    beta1: f64,
    beta2: f64,
    /// `(population, target Gini)` on a log-spaced grid.
    curve: Vec<(f64, f64)>,
    countries: Vec<ClassificationRow>,
    within_5: usize,
    within_10_cumulative: usize,
}

#[derive(Serialize)]
struct PredictionView {
    #[serde(flatten)]
    prediction: Prediction,
    beta1: f64,
    beta2: f64,
}

fn model(full: bool) -> Result<TargetGiniModel, String> {
    let m = fit_target_model(&bundled_reference()).map_err(|e| e.to_string())?;
    Ok(if full {
        m.full_precision()
    } else {
        m.published_precision()
    })
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Gini coefficient, its `(n-1)/n` bound and the Lorenz curve of incomes
/// given one per line.
pub fn gini_and_lorenz_json(text: &str) -> Result<String, String> {
    let s = IncomeSample::parse_lines(text).map_err(|e| e.to_string())?;
    let gini = gini_coefficient(&s).map_err(|e| e.to_string())?;
    let lorenz = lorenz_curve(&s).map_err(|e| e.to_string())?;
    to_json(&GiniView {
        n: s.len(),
        gini,
        max_gini: max_gini(s.len() as u64).map_err(|e| e.to_string())?,
        lorenz,
    })
}

/// The fitted target curve over `points` log-spaced populations from 1 to
/// ten times the largest country, plus every classified country.
pub fn target_curve_json(full_precision: bool, points: u32) -> Result<String, String> {
    if points < 2 {
        return Err("at least 2 curve points are needed".into());
    }
    let d = bundled_reference();
    let m = model(full_precision)?;
    let report = build_report(&m, &d).map_err(|e| e.to_string())?;
    let top = (d.max_population().unwrap_or(1) as f64 * 10.0).ln();
    let curve = (0..points)
        .map(|i| {
            let ln_p = top * i as f64 / (points - 1) as f64;
            (ln_p.exp(), m.beta1 * ln_p + m.beta2 * ln_p * ln_p)
        })
        .collect();
    to_json(&CurveView {
        beta1: m.beta1,
        beta2: m.beta2,
        curve,
        countries: report.rows,
        within_5: report.counts.within_5,
        within_10_cumulative: report.counts.within_10_cumulative,
    })
}

/// Target Gini for one population. `population` arrives as a JS number.
pub fn predict_population_json(population: f64, full_precision: bool) -> Result<String, String> {
    if !population.is_finite() || population.fract() != 0.0 || !(1.0..=9.0e15).contains(&population)
    {
        return Err(format!(
            "population must be a whole number of at least 1, got {population}"
        ));
    }
    let m = model(full_precision)?;
    let prediction = predict(&m, population as u64).map_err(|e| e.to_string())?;
    to_json(&PredictionView {
        prediction,
        beta1: m.beta1,
        beta2: m.beta2,
    })
}

/// Mean Gini of `trials` random size-`k` subsamples versus the full sample.
pub fn subsample_bias_json(text: &str, k: u32, trials: u32, seed: u32) -> Result<String, String> {
    if trials > MAX_TRIALS {
        return Err(format!("at most {MAX_TRIALS} trials, got {trials}"));
    }
    let s = IncomeSample::parse_lines(text).map_err(|e| e.to_string())?;
    let r = subsample_experiment(&s, k as usize, trials as usize, u64::from(seed))
        .map_err(|e| e.to_string())?;
    to_json(&r)
}

#[wasm_bindgen]
pub fn gini_and_lorenz(text: &str) -> Result<String, JsValue> {
    gini_and_lorenz_json(text).map_err(JsValue::from)
}

#[wasm_bindgen]
pub fn target_curve(full_precision: bool, points: u32) -> Result<String, JsValue> {
    target_curve_json(full_precision, points).map_err(JsValue::from)
}

#[wasm_bindgen]
pub fn predict_population(population: f64, full_precision: bool) -> Result<String, JsValue> {
    predict_population_json(population, full_precision).map_err(JsValue::from)
}

#[wasm_bindgen]
pub fn subsample_bias(text: &str, k: u32, trials: u32, seed: u32) -> Result<String, JsValue> {
    subsample_bias_json(text, k, trials, seed).map_err(JsValue::from)
}
