//! Versioned JSON model files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classify::KernelClassifier;
use crate::error::{Error, Result};
use crate::learn::{BaggedModel, Matcher, Norm};
use crate::pipeline::Pipeline;
use crate::scatter::{HaarNetwork, Mode, Pairing};
use crate::select::SelectionState;

pub const FORMAT_VERSION: u32 = 1;
const FORMAT_NAME: &str = "haarscat-model";

/// How the pairings were obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingInfo {
    /// `learned` or `grid`.
    pub source: String,
    pub norm: Norm,
    pub matcher: Matcher,
    pub seed: u64,
    /// Training samples used by each transform, when learned.
    pub subset_assignment: Vec<usize>,
}

/// Everything needed to replay a trained pipeline. Field order is fixed,
/// so saving a loaded file reproduces it byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub mode: Mode,
    pub depth: usize,
    pub dim: usize,
    /// Layer pairings of every transform, as sorted index pairs.
    pub transforms: Vec<Vec<Pairing>>,
    pub training: TrainingInfo,
    pub max_order: Option<usize>,
    pub selection: Option<SelectionState>,
    pub classifier: Option<KernelClassifier>,
}

impl ModelFile {
    pub fn new(networks: &[HaarNetwork], training: TrainingInfo) -> Result<Self> {
        let first = networks.first().ok_or_else(|| Error::InvalidArgument("no transforms".into()))?;
        if networks
            .iter()
            .any(|n| n.mode() != first.mode() || n.dim() != first.dim() || n.depth() != first.depth())
        {
            return Err(Error::InvalidNetwork("transforms disagree on mode, dimension or depth".into()));
        }
        Ok(ModelFile {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            mode: first.mode(),
            depth: first.depth(),
            dim: first.dim(),
            transforms: networks.iter().map(|n| n.layers().to_vec()).collect(),
            training,
            max_order: None,
            selection: None,
            classifier: None,
        })
    }

    pub fn from_bagged(model: &BaggedModel) -> Result<Self> {
        ModelFile::new(
            &model.transforms,
            TrainingInfo {
                source: "learned".into(),
                norm: model.config.norm,
                matcher: model.config.matcher,
                seed: model.config.seed,
                subset_assignment: model.subset_assignment.clone(),
            },
        )
    }

    /// Stores the selection and classifier alongside the pairings.
    pub fn with_pipeline(mut self, pipeline: &Pipeline) -> Result<Self> {
        let layers: Vec<Vec<Pairing>> = pipeline.networks.iter().map(|n| n.layers().to_vec()).collect();
        if layers != self.transforms {
            return Err(Error::InvalidNetwork("pipeline was fitted on other transforms".into()));
        }
        self.max_order = pipeline.max_order;
        self.selection = Some(pipeline.selection.clone());
        self.classifier = Some(pipeline.classifier.clone());
        Ok(self)
    }

    /// The fitted pipeline, if the file holds one.
    pub fn pipeline(&self) -> Result<Option<Pipeline>> {
        let (Some(selection), Some(classifier)) = (&self.selection, &self.classifier) else {
            return Ok(None);
        };
        Ok(Some(Pipeline {
            networks: self.networks()?,
            max_order: self.max_order,
            selection: selection.clone(),
            classifier: classifier.clone(),
        }))
    }

    pub fn networks(&self) -> Result<Vec<HaarNetwork>> {
        self.transforms
            .iter()
            .map(|layers| {
                let net = HaarNetwork::new(self.mode, self.dim, layers.clone())?;
                if net.depth() != self.depth {
                    return Err(Error::InvalidNetwork(format!("transform has depth {}, expected {}", net.depth(), self.depth)));
                }
                Ok(net)
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string(self).map_err(|e| Error::CorruptFile(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::CorruptFile(e.to_string()))?;
        if value.get("format").and_then(|f| f.as_str()) != Some(FORMAT_NAME) {
            return Err(Error::CorruptFile("not a model file".into()));
        }
        let found = value
            .get("version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::CorruptFile("missing version".into()))?;
        if found != u64::from(FORMAT_VERSION) {
            return Err(Error::VersionMismatch { expected: FORMAT_VERSION, found: found as u32 });
        }
        let model: ModelFile = serde_json::from_value(value).map_err(|e| Error::CorruptFile(e.to_string()))?;
        model.networks().map_err(|e| Error::CorruptFile(e.to_string()))?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(fs::write(path, self.to_json()?)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ModelFile::from_json(&fs::read_to_string(path)?)
    }
}

/// The network that acts on inputs permuted by `perm` (value `v` moved to
/// `perm[v]`) exactly as `net` acts on the originals. Every layer is
/// renamed by the permutation its input underwent.
pub fn relabel_network(net: &HaarNetwork, perm: &[usize]) -> Result<HaarNetwork> {
    if perm.len() != net.dim() {
        return Err(Error::DimensionMismatch { expected: net.dim(), found: perm.len() });
    }
    let mut current = perm.to_vec();
    let mut layers = Vec::with_capacity(net.depth());
    for p in net.layers() {
        let q = p.relabel(&current)?;
        let position: std::collections::HashMap<(usize, usize), usize> =
            q.pairs().iter().enumerate().map(|(n, &ab)| (ab, n)).collect();
        let row_perm: Vec<usize> = p
            .pairs()
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (current[a], current[b]);
                position[&(x.min(y), x.max(y))]
            })
            .collect();
        current = match net.mode() {
            Mode::Structured => row_perm,
            Mode::Free => (0..net.dim()).map(|i| 2 * row_perm[i / 2] + i % 2).collect(),
        };
        layers.push(q);
    }
    HaarNetwork::new(net.mode(), net.dim(), layers)
}
