use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::ols::LeastSquares;
use super::special::f_sf;
use crate::error::{Error, Result};
use crate::eval::csv_row;

/// Outcome of the joint F-test on `lag` lags of `cause` in the equation
/// for `effect`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrangerResult {
    pub cause: String,
    pub effect: String,
    pub lag: usize,
    pub f_stat: f64,
    pub p_value: f64,
    pub df_num: usize,
    pub df_den: usize,
    pub ssr_restricted: f64,
    pub ssr_unrestricted: f64,
    /// Set by [`bonferroni`]; false until then.
    pub significant_after_correction: bool,
}

/// Lag design for observations `t = lag..n`: intercept, `lag` lags of
/// `own`, then (optionally) `lag` lags of `other`.
fn lag_design(own: &[f64], other: Option<&[f64]>, lag: usize) -> DMatrix<f64> {
    let n_obs = own.len() - lag;
    let cols = 1 + lag * if other.is_some() { 2 } else { 1 };
    DMatrix::from_fn(n_obs, cols, |r, c| {
        let t = r + lag;
        match c {
            0 => 1.0,
            c if c <= lag => own[t - c],
            c => other.expect("cause columns only exist with a cause")[t - (c - lag)],
        }
    })
}

/// Test whether `cause` Granger-causes `effect` at every lag order
/// `1..=max_lag`.
///
/// For lag `L` both regressions use observations `t = L+1..n`: the
/// restricted one regresses `effect_t` on an intercept and `L` own lags,
/// the unrestricted one adds `L` lags of `cause`. The statistic
/// `((SSR_r - SSR_u) / L) / (SSR_u / (n_obs - 2L - 1))` is referred to
/// F(L, n_obs - 2L - 1).
pub fn granger_test(
    cause_name: &str,
    cause: &[f64],
    effect_name: &str,
    effect: &[f64],
    max_lag: usize,
) -> Result<Vec<GrangerResult>> {
    if max_lag == 0 {
        return Err(Error::InvalidArgument("max lag must be at least 1".into()));
    }
    if cause.len() != effect.len() {
        return Err(Error::InvalidArgument(format!(
            "series lengths differ ({} vs {}); align them first",
            cause.len(),
            effect.len()
        )));
    }
    let n = effect.len();
    if n <= 3 * max_lag + 2 {
        return Err(Error::InsufficientData(format!(
            "{n} observations; need more than {} for max lag {max_lag}",
            3 * max_lag + 2
        )));
    }
    (1..=max_lag)
        .map(|lag| {
            let target = DVector::from_column_slice(&effect[lag..]);
            let restricted = LeastSquares::new(lag_design(effect, None, lag))?.fit(&target)?;
            let unrestricted =
                LeastSquares::new(lag_design(effect, Some(cause), lag))?.fit(&target)?;
            let (ssr_r, ssr_u) = (restricted.ssr, unrestricted.ssr);
            // Nested models: adding regressors cannot raise the SSR beyond rounding.
            if ssr_u > ssr_r * (1.0 + 1e-9) + f64::MIN_POSITIVE {
                return Err(Error::Numerical(format!(
                    "unrestricted SSR {ssr_u} exceeds restricted SSR {ssr_r} at lag {lag}"
                )));
            }
            let df_num = lag;
            let df_den = unrestricted.n_obs - (2 * lag + 1);
            if ssr_u <= 0.0 {
                return Err(Error::Numerical(format!(
                    "unrestricted model fits `{effect_name}` exactly at lag {lag}"
                )));
            }
            let f_stat = (((ssr_r - ssr_u).max(0.0)) / df_num as f64) / (ssr_u / df_den as f64);
            let p_value = f_sf(f_stat, df_num as u32, df_den as u32)?;
            Ok(GrangerResult {
                cause: cause_name.to_owned(),
                effect: effect_name.to_owned(),
                lag,
                f_stat,
                p_value,
                df_num,
                df_den,
                ssr_restricted: ssr_r,
                ssr_unrestricted: ssr_u,
                significant_after_correction: false,
            })
        })
        .collect()
}

/// Per-test significance level `alpha / m`.
pub fn bonferroni_threshold(alpha: f64, m: usize) -> f64 {
    alpha / m as f64
}

/// Flag results whose p-value is strictly below `alpha / m`.
pub fn bonferroni(
    mut results: Vec<GrangerResult>,
    alpha: f64,
    m: usize,
) -> Result<Vec<GrangerResult>> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "Bonferroni m must be at least 1".into(),
        ));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha {alpha} must lie in (0, 1)"
        )));
    }
    let threshold = bonferroni_threshold(alpha, m);
    for r in &mut results {
        r.significant_after_correction = r.p_value < threshold;
    }
    Ok(results)
}

pub const GRANGER_COLUMNS: &str = "cause,effect,lag,f_stat,p_value,significant";

pub fn granger_csv(results: &[GrangerResult]) -> String {
    let mut out = format!("{GRANGER_COLUMNS}\n");
    for r in results {
        out.push_str(&csv_row(&[
            &r.cause,
            &r.effect,
            &r.lag.to_string(),
            &r.f_stat.to_string(),
            &format!("{:?}", r.p_value),
            if r.significant_after_correction {
                "true"
            } else {
                "false"
            },
        ]));
    }
    out
}
