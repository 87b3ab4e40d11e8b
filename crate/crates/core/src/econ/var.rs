use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::ols::LeastSquares;
use crate::error::{Error, Result};
use crate::eval::csv_row;
use crate::timeseries::SeriesSet;

/// Observations as an n×k matrix with one named column per variable.
#[derive(Clone, Debug, PartialEq)]
pub struct VarData {
    names: Vec<String>,
    values: DMatrix<f64>,
}

impl VarData {
    pub fn new(names: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if names.len() != values.ncols() || names.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{} names for {} columns",
                names.len(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("VAR data must be finite".into()));
        }
        Ok(VarData { names, values })
    }

    pub fn from_columns(names: &[&str], columns: &[&[f64]]) -> Result<Self> {
        let n = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidArgument(
                "VAR columns differ in length".into(),
            ));
        }
        let values = DMatrix::from_fn(n, columns.len(), |r, c| columns[c][r]);
        VarData::new(names.iter().map(|s| (*s).to_owned()).collect(), values)
    }

    /// Select `names` from a series set, in the given order.
    pub fn from_set(set: &SeriesSet, names: &[&str]) -> Result<Self> {
        let cols = names
            .iter()
            .map(|n| set.require(n).map(|s| s.values.as_slice()))
            .collect::<Result<Vec<_>>>()?;
        VarData::from_columns(names, &cols)
    }

    /// Keep only the rows where `keep` is true.
    pub fn filter_rows(&self, keep: &[bool]) -> Result<Self> {
        if keep.len() != self.n_obs() {
            return Err(Error::InvalidArgument("row mask length mismatch".into()));
        }
        let rows: Vec<usize> = (0..self.n_obs()).filter(|&r| keep[r]).collect();
        let values = DMatrix::from_fn(rows.len(), self.k(), |r, c| self.values[(rows[r], c)]);
        VarData::new(self.names.clone(), values)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n_obs(&self) -> usize {
        self.values.nrows()
    }

    pub fn k(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }
}

/// A fitted VAR(p): `y_t = c + A_1 y_{t-1} + ... + A_p y_{t-p} + e_t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarModel {
    pub names: Vec<String>,
    pub lag_order: usize,
    pub intercept: DVector<f64>,
    /// `coefficients[i]` is A_{i+1}; entry (j, m) is the effect of
    /// variable m at lag i+1 on variable j.
    pub coefficients: Vec<DMatrix<f64>>,
    /// Residual covariance with divisor `n_obs - k p - 1`.
    pub sigma: DMatrix<f64>,
    /// Residuals, one row per usable observation.
    pub residuals: DMatrix<f64>,
    /// Observations used in estimation.
    pub n_obs: usize,
}

impl VarModel {
    pub fn k(&self) -> usize {
        self.intercept.len()
    }

    /// One-step prediction given the `p` most recent observations,
    /// `recent[0]` being the latest.
    pub fn predict(&self, recent: &[DVector<f64>]) -> DVector<f64> {
        let mut y = self.intercept.clone();
        for (a, lagged) in self.coefficients.iter().zip(recent) {
            y += a * lagged;
        }
        y
    }

    /// ML residual covariance (divisor `n_obs`), used by the information
    /// criterion.
    pub fn sigma_ml(&self) -> DMatrix<f64> {
        self.residuals.tr_mul(&self.residuals) / self.n_obs as f64
    }
}

fn var_design(data: &DMatrix<f64>, p: usize, first: usize) -> DMatrix<f64> {
    let k = data.ncols();
    DMatrix::from_fn(data.nrows() - first, 1 + k * p, |r, c| {
        if c == 0 {
            return 1.0;
        }
        let t = r + first;
        let lag = (c - 1) / k + 1;
        data[(t - lag, (c - 1) % k)]
    })
}

/// Fit VAR(p) using observations `t = first..n` (0-based; `first >= p`).
///
/// Each equation is estimated by OLS on an intercept and `p` lags of all
/// variables; all equations share one factorisation.
pub fn fit_var_window(data: &VarData, p: usize, first: usize) -> Result<VarModel> {
    if p == 0 {
        return Err(Error::InvalidArgument(
            "VAR lag order must be at least 1".into(),
        ));
    }
    if first < p {
        return Err(Error::InvalidArgument(format!(
            "estimation window starts at {first}, before lag {p}"
        )));
    }
    let (n, k) = data.values.shape();
    let n_eff = n.saturating_sub(first);
    if n_eff <= k * p + 1 {
        return Err(Error::InsufficientData(format!(
            "{n_eff} usable observations for a VAR({p}) in {k} variables; need more than {}",
            k * p + 1
        )));
    }
    let ls = LeastSquares::new(var_design(&data.values, p, first))?;
    let mut intercept = DVector::zeros(k);
    let mut coefficients = vec![DMatrix::zeros(k, k); p];
    let mut residuals = DMatrix::zeros(n_eff, k);
    for j in 0..k {
        let y = DVector::from_iterator(n_eff, data.values.column(j).iter().skip(first).copied());
        let fit = ls.fit(&y)?;
        intercept[j] = fit.coefficients[0];
        for (c, &b) in fit.coefficients.iter().enumerate().skip(1) {
            coefficients[(c - 1) / k][(j, (c - 1) % k)] = b;
        }
        residuals.set_column(j, &DVector::from_vec(fit.residuals));
    }
    let cross = residuals.tr_mul(&residuals);
    let sigma = (&cross + cross.transpose()) / (2.0 * (n_eff - k * p - 1) as f64);
    Ok(VarModel {
        names: data.names.clone(),
        lag_order: p,
        intercept,
        coefficients,
        sigma,
        residuals,
        n_obs: n_eff,
    })
}

pub fn fit_var(data: &VarData, p: usize) -> Result<VarModel> {
    fit_var_window(data, p, p)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LagSelection {
    pub lag_order: usize,
    /// AIC for lag orders `1..=max_lag`.
    pub aic: Vec<f64>,
}

/// Pick the lag order in `1..=max_lag` minimising
/// `ln det Σ(p) + 2 (k² p + k) / n_eff`, every candidate fitted on the
/// window implied by `max_lag`.
pub fn select_lag(data: &VarData, max_lag: usize) -> Result<LagSelection> {
    if max_lag == 0 {
        return Err(Error::InvalidArgument("max lag must be at least 1".into()));
    }
    let k = data.k() as f64;
    let mut aic = Vec::with_capacity(max_lag);
    for p in 1..=max_lag {
        let model = fit_var_window(data, p, max_lag)?;
        let det = model.sigma_ml().determinant();
        if det.is_nan() || det <= 0.0 {
            return Err(Error::Numerical(format!(
                "residual covariance is singular at lag {p}"
            )));
        }
        aic.push(det.ln() + 2.0 * (k * k * p as f64 + k) / model.n_obs as f64);
    }
    let lag_order = aic
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i + 1)
        .expect("max_lag >= 1");
    Ok(LagSelection { lag_order, aic })
}

pub const VAR_COLUMNS: &str = "equation,regressor,lag,coefficient";

/// Long-format coefficient table; the intercept has regressor `const`
/// and lag 0.
pub fn var_csv(model: &VarModel) -> String {
    let mut out = format!("{VAR_COLUMNS}\n");
    for (j, eq) in model.names.iter().enumerate() {
        out.push_str(&csv_row(&[
            eq,
            "const",
            "0",
            &model.intercept[j].to_string(),
        ]));
        for (i, a) in model.coefficients.iter().enumerate() {
            for (m, reg) in model.names.iter().enumerate() {
                out.push_str(&csv_row(&[
                    eq,
                    reg,
                    &(i + 1).to_string(),
                    &a[(j, m)].to_string(),
                ]));
            }
        }
    }
    out
}
