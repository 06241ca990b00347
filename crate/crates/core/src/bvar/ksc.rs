//! Seven-component normal mixture approximating the `log χ²₁` distribution
//! (Kim, Shephard and Chib 1998).

use crate::numeric::stats::{normal_log_pdf, LN_2PI};

pub const WEIGHTS: [f64; 7] = [0.00730, 0.10556, 0.00002, 0.04395, 0.34001, 0.24566, 0.25750];
/// Component means, already shifted by the `log χ²₁` mean offset 1.2704.
pub const MEANS: [f64; 7] = [
    -10.12999 - 1.2704,
    -3.97281 - 1.2704,
    -8.56686 - 1.2704,
    2.77786 - 1.2704,
    0.61942 - 1.2704,
    1.79518 - 1.2704,
    -1.08819 - 1.2704,
];
pub const VARIANCES: [f64; 7] = [5.79596, 2.61369, 5.17950, 0.16735, 0.64009, 0.34023, 1.26261];

/// Offset in `log(u² + c̄)`.
pub const OFFSET: f64 = 1e-3;

/// Log posterior weights of the components for a residual `z = y* - 2 log s`.
pub fn component_log_weights(z: f64) -> [f64; 7] {
    let mut out = [0.0; 7];
    for j in 0..7 {
        out[j] = WEIGHTS[j].ln() + normal_log_pdf(z, MEANS[j], VARIANCES[j]);
    }
    out
}

/// Log density of the mixture at `z`.
pub fn mixture_log_pdf(z: f64) -> f64 {
    crate::numeric::stats::log_sum_exp(&component_log_weights(z))
}

/// Exact log density of `log ε²` with `ε ~ N(0, 1)`.
pub fn log_chi2_log_pdf(z: f64) -> f64 {
    -0.5 * LN_2PI + 0.5 * (z - z.exp())
}
