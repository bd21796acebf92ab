use std::collections::BTreeMap;

use ctxdecode::harness::digest_of;
use ctxdecode::providers::ProviderConfig;
use ctxdecode::{DistanceMetric, NormalizationConfig};
use serde::Serialize;
use serde_json::Value;

/// Everything that can change a command's output. `--jobs` is left out on
/// purpose: results are identical for any worker count.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub version: &'static str,
    pub command: &'static str,
    pub normalization: NormalizationConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<DistanceMetric>,
    pub seed: u64,
    pub strict: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub providers: Option<ProviderConfig>,
    pub paths: BTreeMap<&'static str, String>,
    pub params: BTreeMap<&'static str, Value>,
}

impl RunConfig {
    pub fn digest(&self) -> String {
        digest_of(self)
    }

    pub fn path(mut self, key: &'static str, p: &std::path::Path) -> Self {
        self.paths.insert(key, p.display().to_string());
        self
    }

    pub fn param(mut self, key: &'static str, v: impl Serialize) -> Self {
        self.params
            .insert(key, serde_json::to_value(v).expect("param serializes"));
        self
    }
}
