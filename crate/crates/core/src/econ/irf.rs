use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::var::{fit_var, VarData, VarModel};
use crate::error::{Error, Result};
use crate::eval::csv_row;

/// Unit-impulse responses Ψ_0..Ψ_H.
///
/// Ψ_0 = I and Ψ_h = Σ_{i=1..min(h,p)} A_i Ψ_{h-i}; entry (j, i) of Ψ_h is
/// the response of variable j after h steps to a one-unit impulse in
/// variable i.
pub fn irf(model: &VarModel, horizon: usize) -> Vec<DMatrix<f64>> {
    let k = model.k();
    let mut psi: Vec<DMatrix<f64>> = Vec::with_capacity(horizon + 1);
    psi.push(DMatrix::identity(k, k));
    for h in 1..=horizon {
        let mut next = DMatrix::zeros(k, k);
        for i in 1..=h.min(model.lag_order) {
            next += &model.coefficients[i - 1] * &psi[h - i];
        }
        psi.push(next);
    }
    psi
}

/// Responses to one-standard-deviation orthogonal shocks, Ψ_h P with P
/// the lower Cholesky factor of Σ (ordering = variable order).
pub fn orthogonalized_irf(model: &VarModel, horizon: usize) -> Result<Vec<DMatrix<f64>>> {
    let chol =
        model.sigma.clone().cholesky().ok_or_else(|| {
            Error::Numerical("residual covariance is not positive definite".into())
        })?;
    let p = chol.l();
    Ok(irf(model, horizon).into_iter().map(|m| m * &p).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapOptions {
    pub horizon: usize,
    pub reps: usize,
    pub seed: u64,
    /// Two-sided level; bands are the alpha/2 and 1 - alpha/2 quantiles.
    pub alpha: f64,
    pub orthogonalized: bool,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions {
            horizon: 10,
            reps: 1000,
            seed: 0,
            alpha: 0.05,
            orthogonalized: false,
        }
    }
}

/// Response path of one variable to an impulse in another.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IrfResult {
    pub impulse: String,
    pub response: String,
    /// Indexed by horizon 0..=H.
    pub point: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl IrfResult {
    pub fn horizon(&self) -> usize {
        self.point.len() - 1
    }
}

/// A fitted model together with banded responses for every
/// (impulse, response) pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IrfBands {
    pub model: VarModel,
    pub results: Vec<IrfResult>,
    /// Replications whose refit failed and were left out.
    pub failed_reps: usize,
    pub reps: usize,
}

impl IrfBands {
    pub fn pair(&self, impulse: &str, response: &str) -> Option<&IrfResult> {
        self.results
            .iter()
            .find(|r| r.impulse == impulse && r.response == response)
    }
}

/// Quantile with linear interpolation between order statistics
/// (`sorted` must be ascending and non-empty).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

fn responses(model: &VarModel, opts: &BootstrapOptions) -> Result<Vec<DMatrix<f64>>> {
    if opts.orthogonalized {
        orthogonalized_irf(model, opts.horizon)
    } else {
        Ok(irf(model, opts.horizon))
    }
}

/// Regenerate a series from `model` with resampled residual rows, seeded
/// from the original first `p` observations.
fn resample_path(model: &VarModel, data: &VarData, rng: &mut ChaCha20Rng) -> Result<VarData> {
    let (n, k) = (data.n_obs(), data.k());
    let p = model.lag_order;
    let m = model.residuals.nrows();
    let mut rows: Vec<DVector<f64>> = (0..p).map(|t| data.values().row(t).transpose()).collect();
    for _ in p..n {
        let draw = rng.random_range(0..m);
        let recent: Vec<DVector<f64>> = rows.iter().rev().take(p).cloned().collect();
        let y = model.predict(&recent) + model.residuals.row(draw).transpose();
        rows.push(y);
    }
    let values = DMatrix::from_fn(n, k, |r, c| rows[r][c]);
    VarData::new(data.names().to_vec(), values)
}

/// Fit VAR(p) and attach residual-bootstrap bands to its impulse
/// responses.
///
/// Replication `r` draws from a ChaCha20 stream seeded with `seed` on
/// stream `r`, so results do not depend on scheduling. Failed refits are
/// dropped; more than 1% failures is an error. The point estimate is the
/// original-sample response; bands are widened if needed so that they
/// always bracket it.
pub fn irf_bands(data: &VarData, p: usize, opts: &BootstrapOptions) -> Result<IrfBands> {
    if opts.reps < 100 {
        return Err(Error::InvalidArgument(format!(
            "at least 100 bootstrap replications required, got {}",
            opts.reps
        )));
    }
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha {} must lie in (0, 1)",
            opts.alpha
        )));
    }
    let model = fit_var(data, p)?;
    let point = responses(&model, opts)?;

    let draws: Vec<Option<Vec<DMatrix<f64>>>> = (0..opts.reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
            rng.set_stream(r as u64);
            resample_path(&model, data, &mut rng)
                .and_then(|d| fit_var(&d, p))
                .and_then(|m| responses(&m, opts))
                .ok()
        })
        .collect();
    let ok: Vec<&Vec<DMatrix<f64>>> = draws.iter().flatten().collect();
    let failed_reps = opts.reps - ok.len();
    if failed_reps * 100 > opts.reps {
        return Err(Error::Numerical(format!(
            "{failed_reps} of {} bootstrap refits failed (limit 1%)",
            opts.reps
        )));
    }

    let k = model.k();
    let mut results = Vec::with_capacity(k * k);
    let mut buf = Vec::with_capacity(ok.len());
    for imp in 0..k {
        for resp in 0..k {
            let mut lower = Vec::with_capacity(opts.horizon + 1);
            let mut upper = Vec::with_capacity(opts.horizon + 1);
            let pt: Vec<f64> = point.iter().map(|m| m[(resp, imp)]).collect();
            for h in 0..=opts.horizon {
                buf.clear();
                buf.extend(ok.iter().map(|d| d[h][(resp, imp)]));
                buf.sort_by(f64::total_cmp);
                lower.push(quantile(&buf, opts.alpha / 2.0).min(pt[h]));
                upper.push(quantile(&buf, 1.0 - opts.alpha / 2.0).max(pt[h]));
            }
            results.push(IrfResult {
                impulse: model.names[imp].clone(),
                response: model.names[resp].clone(),
                point: pt,
                lower,
                upper,
            });
        }
    }
    Ok(IrfBands {
        model,
        results,
        failed_reps,
        reps: opts.reps,
    })
}

pub const IRF_COLUMNS: &str = "impulse,response,horizon,point,lower,upper";

pub fn irf_csv(results: &[IrfResult]) -> String {
    let mut out = format!("{IRF_COLUMNS}\n");
    for r in results {
        for h in 0..r.point.len() {
            out.push_str(&csv_row(&[
                &r.impulse,
                &r.response,
                &h.to_string(),
                &r.point[h].to_string(),
                &r.lower[h].to_string(),
                &r.upper[h].to_string(),
            ]));
        }
    }
    out
}
