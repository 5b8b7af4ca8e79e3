//! Single-file JSON model format.
//!
//! The header carries everything needed to reproduce predictions: format
//! version, registry identity, feature encoding and the training seed. The
//! strategy (with its RAkEL settings) and tree settings lead the embedded
//! model, followed by the payload.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{StudentRecord, TemplateRegistry};
use crate::error::{Error, Result};
use crate::features::{FeatureExtractor, FeatureMode};
use crate::mlc::{Prediction, TrainedModel};
use crate::nlg::{render_summary, select_templates, RenderOptions, SelectionResult, Summary};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: String,
    pub registry_version: String,
    pub registry_hash: String,
    pub feature_mode: FeatureMode,
    pub weeks: usize,
    pub seed: u64,
    pub model: TrainedModel,
}

impl ModelArtifact {
    pub fn new(
        model: TrainedModel,
        registry: &TemplateRegistry,
        extractor: &FeatureExtractor,
        seed: u64,
    ) -> Self {
        ModelArtifact {
            format_version: FORMAT_VERSION.to_string(),
            registry_version: registry.version().to_string(),
            registry_hash: registry.hash(),
            feature_mode: extractor.mode(),
            weeks: extractor.weeks(),
            seed,
            model,
        }
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("artifact serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Probe {
            format_version: String,
        }
        let probe: Probe = serde_json::from_str(s)?;
        if probe.format_version != FORMAT_VERSION {
            return Err(Error::UnsupportedFormat(probe.format_version));
        }
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&s)
    }

    /// Loads and checks the artifact against the registry in use.
    pub fn load_for(path: impl AsRef<Path>, registry: &TemplateRegistry) -> Result<Self> {
        let a = Self::load(path)?;
        a.check_registry(registry)?;
        Ok(a)
    }

    pub fn check_registry(&self, registry: &TemplateRegistry) -> Result<()> {
        let found = registry.hash();
        if found != self.registry_hash {
            return Err(Error::RegistryMismatch {
                expected: self.registry_hash.clone(),
                found,
            });
        }
        Ok(())
    }

    pub fn extractor(&self) -> FeatureExtractor {
        FeatureExtractor::new(self.feature_mode, self.weeks)
    }

    /// Predicts one record. Real-history chains take their history from the
    /// record's expert labels.
    pub fn predict_record(
        &self,
        record: &StudentRecord,
        registry: &TemplateRegistry,
    ) -> Result<Prediction> {
        if record.weeks != self.weeks {
            return Err(Error::WeekMismatch {
                student_id: record.student_id.clone(),
                expected: self.weeks,
                found: record.weeks,
            });
        }
        let gold = if self.model.strategy.needs_gold() {
            let ids = record.expert_labels.as_ref().ok_or(Error::MissingGold)?;
            Some(registry.labelset_to_vector(ids)?)
        } else {
            None
        };
        let x = self.extractor().values(record);
        self.model.predict_with_votes(&x, gold.as_ref())
    }

    /// predict → select → render.
    pub fn feedback(
        &self,
        record: &StudentRecord,
        registry: &TemplateRegistry,
        opts: &RenderOptions,
    ) -> Result<(SelectionResult, Summary)> {
        let p = self.predict_record(record, registry)?;
        let selection = select_templates(&p.labels, Some(&p.votes), registry)?;
        let summary = render_summary(&selection, record, opts);
        Ok((selection, summary))
    }
}
