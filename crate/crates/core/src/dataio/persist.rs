//! Versioned JSON documents for trained models.
//!
//! A document stores everything needed to rebuild the model exactly: the
//! simplex vertices, transformation and preprocessing settings, the label
//! dictionary, the regressor's hyperparameters and the training inputs and
//! latent targets. Loading refactorizes the regressor from those, which is
//! deterministic, so a loaded model predicts bit-for-bit like the original.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LabelMap, Preprocessing};
use crate::classifier::CasimacModel;
use crate::error::{Error, Result};
use crate::geometry::SimplexGeometry;
use crate::regression::RegressorSnapshot;
use crate::transform::TransformConfig;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub inputs: Vec<Vec<f64>>,
    pub latent: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub backend: String,
    pub vertices: Vec<Vec<f64>>,
    pub labels: LabelMap,
    pub transform: TransformConfig,
    pub preprocessing: Preprocessing,
    pub regressor: RegressorSnapshot,
    pub training: TrainingRecord,
}

impl ModelDocument {
    pub fn from_model(model: &CasimacModel) -> Result<Self> {
        let regressor = model.regressor.snapshot().ok_or_else(|| {
            Error::InvalidConfig(format!("backend `{}` does not support persistence", model.backend))
        })?;
        Ok(Self {
            format_version: FORMAT_VERSION,
            tool_version: crate::VERSION.to_owned(),
            seed: model.seed,
            backend: model.backend.clone(),
            vertices: model.geometry.vertices().to_vec(),
            labels: model.labels.clone(),
            transform: model.transform.clone(),
            preprocessing: model.preprocessing.clone(),
            regressor,
            training: TrainingRecord {
                inputs: model.train_inputs.clone(),
                latent: model.train_latent.clone(),
                labels: model.train_labels.clone(),
            },
        })
    }

    pub fn into_model(self) -> Result<CasimacModel> {
        let geometry = SimplexGeometry::from_vertices(self.vertices)?;
        if self.labels.len() != geometry.n() {
            return Err(Error::Data(format!(
                "document has {} labels for {} vertices",
                self.labels.len(),
                geometry.n()
            )));
        }
        let t = &self.training;
        if t.inputs.len() != t.latent.len() || t.inputs.len() != t.labels.len() {
            return Err(Error::Data("training record columns differ in length".into()));
        }
        let regressor = self.regressor.restore(&t.inputs, &t.latent)?;
        Ok(CasimacModel {
            geometry,
            transform: self.transform,
            labels: self.labels,
            preprocessing: self.preprocessing,
            regressor,
            backend: self.backend,
            seed: self.seed,
            train_inputs: self.training.inputs,
            train_latent: self.training.latent,
            train_labels: self.training.labels,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a document, rejecting unknown format versions before anything
    /// else.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let header: Header = serde_json::from_str(text)?;
        if header.format_version != FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: header.format_version,
                expected: FORMAT_VERSION,
            });
        }
        Ok(serde_json::from_str(text)?)
    }
}

pub fn save_model(path: &Path, model: &CasimacModel) -> Result<()> {
    let text = ModelDocument::from_model(model)?.to_json()?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<CasimacModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ModelDocument::from_json(&text)?.into_model()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{FitOptions, McConfig};
    use crate::dataio::synth_quadrants;
    use crate::regression::GprBackend;

    fn model() -> CasimacModel {
        let d = synth_quadrants(24, 5).unwrap();
        let map = LabelMap::new(vec!["q1".into(), "q2".into(), "q3".into(), "q4".into()]).unwrap();
        CasimacModel::fit(&d, map, &FitOptions::default(), &GprBackend::default(), 8).unwrap()
    }

    #[test]
    fn round_trip_predicts_identically() {
        let m = model();
        let text = ModelDocument::from_model(&m).unwrap().to_json().unwrap();
        let back = ModelDocument::from_json(&text).unwrap().into_model().unwrap();
        let probes = synth_quadrants(20, 99).unwrap();
        let mc = McConfig { sample_count: 500, seed: 1 };
        for x in probes.features() {
            let a = m.predict_latent(x).unwrap();
            let b = back.predict_latent(x).unwrap();
            assert_eq!(a, b);
        }
        assert_eq!(
            m.predict_proba_batch(probes.features(), &mc).unwrap(),
            back.predict_proba_batch(probes.features(), &mc).unwrap()
        );
        // saving the loaded model reproduces the document byte for byte
        assert_eq!(ModelDocument::from_model(&back).unwrap().to_json().unwrap(), text);
    }

    #[test]
    fn version_mismatch() {
        let text = ModelDocument::from_model(&model()).unwrap().to_json().unwrap();
        let bumped = text.replacen("\"format_version\": 1", "\"format_version\": 2", 1);
        assert!(matches!(
            ModelDocument::from_json(&bumped),
            Err(Error::FormatVersion { found: 2, expected: 1 })
        ));
    }

    #[test]
    fn truncated_document() {
        let text = ModelDocument::from_model(&model()).unwrap().to_json().unwrap();
        let cut = &text[..text.len() / 2];
        assert!(matches!(ModelDocument::from_json(cut), Err(Error::Document(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let m = model();
        save_model(&path, &m).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back.label_map(), m.label_map());
        assert!(load_model(&dir.path().join("missing.json")).is_err());
    }
}
