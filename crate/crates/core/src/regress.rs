//! Ordinary least squares with heteroskedasticity-consistent inference.
//!
//! Coefficients come from a Householder QR of the design, never from the
//! normal equations. With `X = QR` the sandwich covariance is
//!
//! ```text
//! V = (X'X)^-1 X' diag(w e^2) X (X'X)^-1 = R^-1 (Q' diag(w e^2) Q) R^-T
//! ```
//!
//! where `w = 1` for HC0 and `w = n/(n-k)` for HC1.

#![allow(clippy::needless_range_loop)]

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Qr};
use crate::special::student_t_p_value;

/// Relative tolerance for declaring a design column dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;

pub const INTERCEPT_NAME: &str = "(intercept)";

/// A regressor built from a population count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regressor {
    LnPop,
    LnPopSquared,
    LnPopCubed,
    SqrtLnPop,
}

impl Regressor {
    pub fn name(self) -> &'static str {
        match self {
            Regressor::LnPop => "ln(Pop)",
            Regressor::LnPopSquared => "ln(Pop)^2",
            Regressor::LnPopCubed => "ln(Pop)^3",
            Regressor::SqrtLnPop => "sqrt(ln(Pop))",
        }
    }

    pub fn eval(self, population: u64) -> f64 {
        let l = (population as f64).ln();
        match self {
            Regressor::LnPop => l,
            Regressor::LnPopSquared => l * l,
            Regressor::LnPopCubed => l * l * l,
            Regressor::SqrtLnPop => l.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum HcVariant {
    /// White's estimator, `w = 1`.
    HC0,
    /// `w = n/(n-k)`. Reproduces the published t-statistics; the default.
    #[default]
    HC1,
}

impl fmt::Display for HcVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HcVariant::HC0 => "HC0",
            HcVariant::HC1 => "HC1",
        })
    }
}

impl FromStr for HcVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hc0" => Ok(HcVariant::HC0),
            "hc1" => Ok(HcVariant::HC1),
            _ => Err(format!("unknown HC variant `{s}` (expected hc0 or hc1)")),
        }
    }
}

/// Total sum of squares used by R².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum R2Convention {
    /// `1 - SSR / sum (y - mean)^2`
    #[default]
    Centered,
    /// `1 - SSR / sum y^2`
    Uncentered,
}

/// Degrees-of-freedom adjustment for adjusted R²:
/// `1 - (1 - R²)(n - d)/(n - k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DfStyle {
    /// `d = 1`
    #[default]
    Standard,
    /// `d = 0`
    NoIntercept,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub basis: Vec<Regressor>,
    pub include_intercept: bool,
    pub hc_variant: HcVariant,
    pub r2_convention: R2Convention,
    pub df_style: DfStyle,
}

impl ModelSpec {
    pub fn new(
        basis: Vec<Regressor>,
        include_intercept: bool,
        hc_variant: HcVariant,
    ) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::Domain("model basis is empty".into()));
        }
        for (i, r) in basis.iter().enumerate() {
            if basis[..i].contains(r) {
                return Err(Error::Domain(format!(
                    "regressor `{}` appears twice",
                    r.name()
                )));
            }
        }
        Ok(ModelSpec {
            basis,
            include_intercept,
            hc_variant,
            r2_convention: R2Convention::default(),
            df_style: DfStyle::default(),
        })
    }

    /// `{ln P, (ln P)^2}` through the origin.
    pub fn target() -> Self {
        ModelSpec::new(
            vec![Regressor::LnPop, Regressor::LnPopSquared],
            false,
            HcVariant::default(),
        )
        .expect("static basis is valid")
    }

    pub fn with_hc(mut self, hc: HcVariant) -> Self {
        self.hc_variant = hc;
        self
    }

    pub fn with_gof(mut self, r2: R2Convention, df: DfStyle) -> Self {
        self.r2_convention = r2;
        self.df_style = df;
        self
    }

    pub fn n_params(&self) -> usize {
        self.basis.len() + usize::from(self.include_intercept)
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_params());
        if self.include_intercept {
            names.push(INTERCEPT_NAME.to_string());
        }
        names.extend(self.basis.iter().map(|r| r.name().to_string()));
        names
    }

    /// Rows of basis values, one per population. The intercept column is not
    /// included; [`fit`] adds it.
    pub fn design_matrix(&self, populations: &[u64]) -> Vec<Vec<f64>> {
        populations
            .iter()
            .map(|&p| self.basis.iter().map(|r| r.eval(p)).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub robust_covariance: Vec<Vec<f64>>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub n_obs: usize,
    pub n_params: usize,
    pub residuals: Vec<f64>,
    pub hc_variant: HcVariant,
    pub r2_convention: R2Convention,
    pub df_style: DfStyle,
}

impl FitResult {
    pub fn df_resid(&self) -> usize {
        self.n_obs - self.n_params
    }

    pub fn ssr(&self) -> f64 {
        self.residuals.iter().map(|e| e * e).sum()
    }
}

/// Fits `y` on the columns of `x` (plus an intercept if the spec asks for one).
///
/// `x` is given row-wise, one row per observation, with one column per
/// regressor of `spec.basis`.
pub fn fit(y: &[f64], x: &[Vec<f64>], spec: &ModelSpec) -> Result<FitResult> {
    let n = y.len();
    if x.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} design rows for {} responses",
            x.len(),
            n
        )));
    }
    if let Some(row) = x.iter().find(|r| r.len() != spec.basis.len()) {
        return Err(Error::DimensionMismatch(format!(
            "design row has {} columns, basis has {}",
            row.len(),
            spec.basis.len()
        )));
    }
    if y.iter().chain(x.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::Domain(
            "non-finite value in response or design".into(),
        ));
    }
    let k = spec.n_params();
    if n <= k {
        return Err(Error::InsufficientData {
            n_obs: n,
            n_params: k,
        });
    }

    let rows: Vec<Vec<f64>> = if spec.include_intercept {
        x.iter()
            .map(|r| std::iter::once(1.0).chain(r.iter().copied()).collect())
            .collect()
    } else {
        x.to_vec()
    };
    let design = Matrix::from_rows(&rows).expect("rows checked rectangular");
    let names = spec.column_names();
    let qr = Qr::new(&design, RANK_TOLERANCE).map_err(|dep| Error::SingularDesign {
        column: names[dep.0].clone(),
    })?;

    let coefficients = qr.solve(y);
    let residuals: Vec<f64> = (0..n)
        .map(|i| {
            y[i] - (0..k)
                .map(|j| design.get(i, j) * coefficients[j])
                .sum::<f64>()
        })
        .collect();

    let hc0 = sandwich(&qr, &residuals);
    let robust_covariance = match spec.hc_variant {
        HcVariant::HC0 => hc0,
        HcVariant::HC1 => {
            let scale = n as f64 / (n - k) as f64;
            hc0.into_iter()
                .map(|row| row.into_iter().map(|v| v * scale).collect())
                .collect()
        }
    };

    let std_errors: Vec<f64> = (0..k)
        .map(|j| robust_covariance[j][j].max(0.0).sqrt())
        .collect();
    let t_stats: Vec<f64> = coefficients
        .iter()
        .zip(&std_errors)
        .map(|(b, se)| t_ratio(*b, *se))
        .collect();
    let df = (n - k) as u64;
    let p_values = t_stats
        .iter()
        .map(|t| student_t_p_value(*t, df))
        .collect::<Result<Vec<_>>>()?;

    let (r_squared, adj_r_squared) =
        goodness_of_fit(y, &residuals, spec, spec.r2_convention, spec.df_style)?;

    Ok(FitResult {
        names,
        coefficients,
        robust_covariance,
        std_errors,
        t_stats,
        p_values,
        r_squared,
        adj_r_squared,
        n_obs: n,
        n_params: k,
        residuals,
        hc_variant: spec.hc_variant,
        r2_convention: spec.r2_convention,
        df_style: spec.df_style,
    })
}

fn t_ratio(beta: f64, se: f64) -> f64 {
    if se > 0.0 {
        beta / se
    } else if beta == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(beta)
    }
}

/// HC0 sandwich `R^-1 (Q' diag(e^2) Q) R^-T`, exactly symmetric.
fn sandwich(qr: &Qr, residuals: &[f64]) -> Vec<Vec<f64>> {
    let q = qr.thin_q();
    let r_inv = qr.r_inverse();
    let (n, k) = (q.rows(), q.cols());

    let mut meat = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in a..k {
            let s: f64 = (0..n)
                .map(|i| residuals[i] * residuals[i] * q.get(i, a) * q.get(i, b))
                .sum();
            meat[a][b] = s;
            meat[b][a] = s;
        }
    }
    // left = R^-1 * meat
    let mut left = vec![vec![0.0; k]; k];
    for i in 0..k {
        for b in 0..k {
            left[i][b] = (0..k).map(|a| r_inv.get(i, a) * meat[a][b]).sum();
        }
    }
    let mut v = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let s: f64 = (0..k).map(|b| left[i][b] * r_inv.get(j, b)).sum();
            v[i][j] = s;
            v[j][i] = s;
        }
    }
    v
}

/// R² and adjusted R² under the chosen conventions, with `k` taken from
/// `spec.n_params()`.
pub fn goodness_of_fit(
    y: &[f64],
    residuals: &[f64],
    spec: &ModelSpec,
    convention: R2Convention,
    df_style: DfStyle,
) -> Result<(f64, f64)> {
    if y.len() != residuals.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} responses, {} residuals",
            y.len(),
            residuals.len()
        )));
    }
    let n = y.len();
    let k = spec.n_params();
    let d = match df_style {
        DfStyle::Standard => 1,
        DfStyle::NoIntercept => 0,
    };
    if n <= k {
        return Err(Error::InsufficientData {
            n_obs: n,
            n_params: k,
        });
    }
    let tss: f64 = match convention {
        R2Convention::Centered => {
            let mean = y.iter().sum::<f64>() / n as f64;
            y.iter().map(|v| (v - mean).powi(2)).sum()
        }
        R2Convention::Uncentered => y.iter().map(|v| v * v).sum(),
    };
    if tss <= 0.0 {
        return Err(Error::DegenerateResponse);
    }
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let r2 = 1.0 - ssr / tss;
    let adj = 1.0 - (1.0 - r2) * (n - d) as f64 / (n - k) as f64;
    Ok((r2, adj))
}
