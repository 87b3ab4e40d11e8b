//! Estimation machinery: least squares, the F distribution, Granger
//! tests, VAR models and impulse responses.

mod granger;
mod irf;
mod ols;
mod special;
mod var;

pub use granger::{
    bonferroni, bonferroni_threshold, granger_csv, granger_test, GrangerResult, GRANGER_COLUMNS,
};
pub use irf::{
    irf, irf_bands, irf_csv, orthogonalized_irf, quantile, BootstrapOptions, IrfBands, IrfResult,
    IRF_COLUMNS,
};
pub use ols::{ols, LeastSquares, OlsFit, MAX_CONDITION};
pub use special::{
    f_sf, ln_beta, ln_gamma, regularized_incomplete_beta, CF_MAX_ITER, CF_TOLERANCE,
};
pub use var::{
    fit_var, fit_var_window, select_lag, var_csv, LagSelection, VarData, VarModel, VAR_COLUMNS,
};
