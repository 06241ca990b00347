use super::model::encode;
use super::params::GsAeParams;
use super::{GsAeError, Result};
use crate::data::Panel;
use crate::factors::{FactorSet, Method};
use crate::numeric::stats::pearson;
use crate::numeric::Matrix;

fn column(m: &Matrix, j: usize) -> Vec<f64> {
    m.column(j).iter().copied().collect()
}

/// Encodes the panel_x block and standardizes each factor. The sign of an
/// anchored factor is chosen so that it correlates positively with the mean
/// of its anchor group; other factors follow their most correlated variable.
pub fn extract_factors(
    params: &GsAeParams,
    panel: &Panel,
    method: Method,
    anchor_names: Option<Vec<String>>,
) -> Result<FactorSet> {
    let x = panel.x_matrix();
    let raw = encode(params, &x)?;
    let (means, stds) = crate::numeric::stats::column_moments(&raw);
    let t = raw.nrows();
    let mut latent = raw.clone();
    for k in 0..raw.ncols() {
        if !(stds[k] > 1e-10) {
            return Err(GsAeError::DegenerateFactor(k));
        }
        latent.column_mut(k).add_scalar_mut(-means[k]);
        latent.column_mut(k).scale_mut(1.0 / stds[k]);
        let f = column(&latent, k);
        let sign = if k < params.n_anchors {
            let members: Vec<usize> = (0..params.arch.n).filter(|&i| params.var_group[i] == k).collect();
            let anchor_mean: Vec<f64> =
                (0..t).map(|r| members.iter().map(|&i| x[(r, i)]).sum::<f64>() / members.len() as f64).collect();
            pearson(&f, &anchor_mean)
        } else {
            (0..x.ncols())
                .map(|i| pearson(&f, &column(&x, i)))
                .fold(0.0, |best: f64, c| if c.abs() > best.abs() { c } else { best })
        };
        if sign < 0.0 {
            latent.column_mut(k).neg_mut();
        }
    }
    let latent_names = match &anchor_names {
        Some(names) if names.len() == raw.ncols() => names.clone(),
        _ => (1..=raw.ncols()).map(|i| format!("F{i}")).collect(),
    };
    Ok(FactorSet {
        latent,
        observable: panel.y_matrix(),
        method,
        latent_names,
        observable_names: panel.y_names(),
        anchor_names,
        dates: panel.dates.clone(),
    })
}
