//! Scattering features, OLS selection and the kernel classifier chained.

use serde::{Deserialize, Serialize};

use crate::classify::{Classifier, KernelClassifier, KernelConfig};
use crate::error::{Error, Result};
use crate::features::{build_features_from, normalize};
use crate::scatter::HaarNetwork;
use crate::select::{default_per_class, ols_select, SelectionState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Highest scattering order kept as a feature (structured networks).
    pub max_order: Option<usize>,
    /// Target size `M = K C` of the selected dictionary.
    pub target_dim: usize,
    pub kernel: KernelConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            max_order: Some(4),
            target_dim: 1000,
            kernel: KernelConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub networks: Vec<HaarNetwork>,
    pub max_order: Option<usize>,
    pub selection: SelectionState,
    pub classifier: KernelClassifier,
}

fn embed(
    networks: &[HaarNetwork],
    max_order: Option<usize>,
    selection: &SelectionState,
    images: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let f = build_features_from(networks, images, max_order)?;
    Ok(selection.project(&f)?.iter().map(|u| normalize(u).0).collect())
}

impl Pipeline {
    pub fn fit(networks: Vec<HaarNetwork>, images: &[Vec<f64>], labels: &[usize], cfg: &PipelineConfig) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::DimensionMismatch { expected: images.len(), found: labels.len() });
        }
        let f = build_features_from(&networks, images, cfg.max_order)?;
        let classes = labels.iter().max().map_or(0, |m| m + 1);
        let k = default_per_class(cfg.target_dim, classes, f.cols(), f.rows());
        let selection = ols_select(&f, labels, k)?;
        let embedded: Vec<Vec<f64>> = selection.project(&f)?.iter().map(|u| normalize(u).0).collect();
        let classifier = KernelClassifier::fit(cfg.kernel, &embedded, labels, classes)?;
        Ok(Pipeline { networks, max_order: cfg.max_order, selection, classifier })
    }

    /// Unit-norm selected features of each signal.
    pub fn embed(&self, images: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        embed(&self.networks, self.max_order, &self.selection, images)
    }

    pub fn predict(&self, images: &[Vec<f64>]) -> Result<Vec<usize>> {
        self.classifier.predict(&self.embed(images)?)
    }
}
