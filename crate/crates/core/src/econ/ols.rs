use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest condition estimate accepted before a design is called rank
/// deficient.
pub const MAX_CONDITION: f64 = 1e10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Sum of squared residuals.
    pub ssr: f64,
    pub n_obs: usize,
    pub n_params: usize,
}

/// A QR factorisation of a design matrix, reusable across right-hand
/// sides.
///
/// Columns are scaled to unit norm before factorising; the ratio of the
/// largest to smallest diagonal entry of R on the scaled design is the
/// condition estimate checked against [`MAX_CONDITION`].
#[derive(Clone, Debug)]
pub struct LeastSquares {
    design: DMatrix<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    scale: DVector<f64>,
    condition: f64,
}

impl LeastSquares {
    pub fn new(design: DMatrix<f64>) -> Result<Self> {
        let (n, k) = design.shape();
        if k == 0 || n <= k {
            return Err(Error::InsufficientData(format!(
                "least squares needs more observations ({n}) than parameters ({k})"
            )));
        }
        if design.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(
                "design matrix has non-finite entries".into(),
            ));
        }
        let scale = DVector::from_iterator(k, design.column_iter().map(|c| c.norm()));
        if scale.iter().any(|&s| s == 0.0) {
            return Err(Error::RankDeficient {
                condition: f64::INFINITY,
            });
        }
        let mut scaled = design.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col /= scale[j];
        }
        let qr = scaled.qr();
        let r = qr.r();
        let diag: Vec<f64> = (0..k).map(|i| r[(i, i)].abs()).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        if condition.is_nan() || condition > MAX_CONDITION {
            return Err(Error::RankDeficient { condition });
        }
        Ok(LeastSquares {
            q: qr.q(),
            r,
            design,
            scale,
            condition,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.design.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.design.ncols()
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn coefficients(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        if y.len() != self.n_obs() {
            return Err(Error::InvalidArgument(format!(
                "target has {} rows, design has {}",
                y.len(),
                self.n_obs()
            )));
        }
        let k = self.n_params();
        let qty = self.q.tr_mul(y);
        let mut beta = DVector::zeros(k);
        for i in (0..k).rev() {
            let mut acc = qty[i];
            for j in i + 1..k {
                acc -= self.r[(i, j)] * beta[j];
            }
            beta[i] = acc / self.r[(i, i)];
        }
        Ok(beta.component_div(&self.scale))
    }

    pub fn fit(&self, y: &DVector<f64>) -> Result<OlsFit> {
        let beta = self.coefficients(y)?;
        let residuals = y - &self.design * &beta;
        Ok(OlsFit {
            ssr: residuals.norm_squared(),
            coefficients: beta.iter().copied().collect(),
            residuals: residuals.iter().copied().collect(),
            n_obs: self.n_obs(),
            n_params: self.n_params(),
        })
    }
}

/// Ordinary least squares of `y` on the columns of `design`.
pub fn ols(design: &DMatrix<f64>, y: &[f64]) -> Result<OlsFit> {
    LeastSquares::new(design.clone())?.fit(&DVector::from_column_slice(y))
}
