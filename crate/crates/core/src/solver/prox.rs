use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Minimizer over `s in [0, 1]` of `0.5 (s - m)^2 + kappa |s|`.
#[inline]
pub fn prox_scalar(m: f64, kappa: f64) -> f64 {
    (m - kappa).max(0.0).min(1.0)
}

/// Entrywise soft-threshold by `kappa` followed by clipping to `[0, 1]`.
pub fn prox_box_l1(m: ArrayView2<'_, f64>, kappa: f64) -> Result<Array2<f64>> {
    if !(kappa >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "kappa",
            value: kappa,
            reason: "threshold must be nonnegative",
        });
    }
    Ok(m.mapv(|v| prox_scalar(v, kappa)))
}
