//! The target-Gini model: `Gini = b1 ln P + b2 (ln P)^2`, no intercept.
//!
//! The zero intercept pins the prediction for a one-person country at exactly
//! zero. Fits include that one-person observation by default.

use serde::{Deserialize, Serialize};

use crate::dataset::{with_anchor, Dataset};
use crate::error::{Error, Result};
use crate::gini::max_gini;
use crate::regress::{fit, FitResult, HcVariant, ModelSpec, Regressor};

/// Decimal places of the published coefficients.
pub const PUBLISHED_DECIMALS: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientPrecision {
    #[default]
    Full,
    /// Coefficients rounded half away from zero to this many decimals.
    Decimals(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetGiniModel {
    pub beta1: f64,
    pub beta2: f64,
    pub precision: CoefficientPrecision,
    pub fit: FitResult,
    /// Fingerprint of the dataset the model was fitted on.
    pub source: String,
    pub max_population: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TargetOptions {
    /// Append the one-person observation before fitting.
    pub add_anchor: bool,
    pub hc: HcVariant,
}

impl Default for TargetOptions {
    fn default() -> Self {
        TargetOptions {
            add_anchor: true,
            hc: HcVariant::default(),
        }
    }
}

pub fn fit_target_model(d: &Dataset) -> Result<TargetGiniModel> {
    fit_target_model_with(d, &TargetOptions::default())
}

pub fn fit_target_model_with(d: &Dataset, options: &TargetOptions) -> Result<TargetGiniModel> {
    let data = if options.add_anchor {
        with_anchor(d)
    } else {
        d.clone()
    };
    if data.len() < 3 {
        return Err(Error::InsufficientData {
            n_obs: data.len(),
            n_params: 2,
        });
    }
    let spec = ModelSpec::target().with_hc(options.hc);
    let fit = fit_dataset(&data, &spec)?;
    Ok(TargetGiniModel {
        beta1: fit.coefficients[0],
        beta2: fit.coefficients[1],
        precision: CoefficientPrecision::Full,
        source: data.fingerprint(),
        max_population: data.max_population().unwrap_or(1),
        fit,
    })
}

fn fit_dataset(d: &Dataset, spec: &ModelSpec) -> Result<FitResult> {
    let populations: Vec<u64> = d.records().iter().map(|r| r.population).collect();
    let y: Vec<f64> = d.records().iter().map(|r| r.gini).collect();
    fit(&y, &spec.design_matrix(&populations), spec)
}

/// Rounds half away from zero to `decimals` places.
pub fn round_to(x: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (x * scale).round() / scale
}

impl TargetGiniModel {
    /// Same model with coefficients rounded to `decimals` places.
    pub fn rounded(&self, decimals: u32) -> Self {
        TargetGiniModel {
            beta1: round_to(self.fit.coefficients[0], decimals),
            beta2: round_to(self.fit.coefficients[1], decimals),
            precision: CoefficientPrecision::Decimals(decimals),
            ..self.clone()
        }
    }

    /// Coefficients as printed in the published equation (four decimals).
    /// The published estimated-Gini column was computed from these.
    pub fn published_precision(&self) -> Self {
        self.rounded(PUBLISHED_DECIMALS)
    }

    pub fn full_precision(&self) -> Self {
        TargetGiniModel {
            beta1: self.fit.coefficients[0],
            beta2: self.fit.coefficients[1],
            precision: CoefficientPrecision::Full,
            ..self.clone()
        }
    }

    pub fn value_at(&self, population: u64) -> f64 {
        let l = (population as f64).ln();
        self.beta1 * l + self.beta2 * l * l
    }

    /// `ln P` at the parabola's turning point, if `beta2 != 0`.
    pub fn vertex_ln_population(&self) -> Option<f64> {
        (self.beta2 != 0.0).then(|| -self.beta1 / (2.0 * self.beta2))
    }

    /// Sign expectations: `beta1 > 0`, `beta2 < 0`.
    pub fn sign_warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.beta1 <= 0.0 {
            w.push(format!(
                "coefficient on ln(Pop) is {} (expected > 0)",
                self.beta1
            ));
        }
        if self.beta2 >= 0.0 {
            w.push(format!(
                "coefficient on ln(Pop)^2 is {} (expected < 0)",
                self.beta2
            ));
        }
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub population: u64,
    pub gini: f64,
    /// Population exceeds the largest one in the fitting data.
    pub extrapolated: bool,
    /// Prediction lies outside `[0, (P-1)/P]`. It is reported, not clamped.
    pub out_of_bounds: bool,
}

pub fn predict(m: &TargetGiniModel, population: u64) -> Result<Prediction> {
    if population < 1 {
        return Err(Error::Domain("population must be at least 1".into()));
    }
    let gini = m.value_at(population);
    let bound = max_gini(population)?;
    Ok(Prediction {
        population,
        gini,
        extrapolated: population > m.max_population,
        out_of_bounds: !(0.0..=bound).contains(&gini),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalForm {
    Linear,
    Quadratic,
    Cubic,
    LogPlusRoot,
}

impl FunctionalForm {
    pub const ALL: [FunctionalForm; 4] = [
        FunctionalForm::Linear,
        FunctionalForm::Quadratic,
        FunctionalForm::Cubic,
        FunctionalForm::LogPlusRoot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FunctionalForm::Linear => "linear",
            FunctionalForm::Quadratic => "quadratic",
            FunctionalForm::Cubic => "cubic",
            FunctionalForm::LogPlusRoot => "log+root",
        }
    }

    pub fn basis(self) -> Vec<Regressor> {
        use Regressor::*;
        match self {
            FunctionalForm::Linear => vec![LnPop],
            FunctionalForm::Quadratic => vec![LnPop, LnPopSquared],
            FunctionalForm::Cubic => vec![LnPop, LnPopSquared, LnPopCubed],
            FunctionalForm::LogPlusRoot => vec![LnPop, SqrtLnPop],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormEntry {
    pub form: FunctionalForm,
    pub name: String,
    pub n_params: usize,
    pub r_squared: Option<f64>,
    pub adj_r_squared: Option<f64>,
    pub coefficients: Vec<f64>,
    /// Set when the form could not be fitted.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormComparison {
    pub entries: Vec<FormEntry>,
    /// Form names by adjusted R², best first; failed forms last.
    pub ranking: Vec<String>,
}

/// Fits the four zero-intercept forms on `d` plus the anchor observation.
pub fn compare_forms(d: &Dataset) -> Result<FormComparison> {
    compare_forms_with(d, &TargetOptions::default())
}

pub fn compare_forms_with(d: &Dataset, options: &TargetOptions) -> Result<FormComparison> {
    if d.len() < 5 {
        return Err(Error::InsufficientData {
            n_obs: d.len(),
            n_params: 5,
        });
    }
    let data = if options.add_anchor {
        with_anchor(d)
    } else {
        d.clone()
    };
    let entries: Vec<FormEntry> = FunctionalForm::ALL
        .iter()
        .map(|&form| {
            let spec = ModelSpec::new(form.basis(), false, options.hc).expect("static basis");
            match fit_dataset(&data, &spec) {
                Ok(f) => FormEntry {
                    form,
                    name: form.name().to_string(),
                    n_params: f.n_params,
                    r_squared: Some(f.r_squared),
                    adj_r_squared: Some(f.adj_r_squared),
                    coefficients: f.coefficients,
                    error: None,
                },
                Err(e) => FormEntry {
                    form,
                    name: form.name().to_string(),
                    n_params: spec.n_params(),
                    r_squared: None,
                    adj_r_squared: None,
                    coefficients: Vec::new(),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let mut order: Vec<&FormEntry> = entries.iter().collect();
    // stable sort: ties keep the canonical form order
    order.sort_by(|a, b| match (a.adj_r_squared, b.adj_r_squared) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    let ranking = order.iter().map(|e| e.name.clone()).collect();
    Ok(FormComparison { entries, ranking })
}
