use super::{standardize_columns, FactorSet, Method, Result};
use crate::data::Panel;
use crate::numeric::{pca, Vector};

#[derive(Debug, Clone)]
pub struct PcaFactors {
    pub factors: FactorSet,
    pub explained_ratio: Vector,
    /// `N×K` loadings of the panel_x block.
    pub loadings: crate::numeric::Matrix,
}

/// First `k` principal components of the panel_x block, scaled so that
/// `FᵀF = T·I`.
pub fn pca_factors(panel: &Panel, k: usize) -> Result<PcaFactors> {
    let x = panel.x_matrix();
    let p = pca(&x, k)?;
    let latent = standardize_columns(&p.scores)?;
    let factors = FactorSet {
        latent,
        observable: panel.y_matrix(),
        method: Method::Pca,
        latent_names: (1..=k).map(|i| format!("PC{i}")).collect(),
        observable_names: panel.y_names(),
        anchor_names: None,
        dates: panel.dates.clone(),
    };
    Ok(PcaFactors { factors, explained_ratio: p.explained_ratio, loadings: p.loadings })
}
