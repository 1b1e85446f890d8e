//! Flag values merged over an optional JSON config file.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Every setting a subcommand may read. Flags win over the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clamp: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub otp: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub string: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ns: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ds: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eve_test: Option<bool>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),*) => {
        Settings { $($field: $top.$field.or($base.$field)),* }
    };
}

impl Settings {
    /// `self` with unset fields taken from `base`.
    pub fn over(self, base: Settings) -> Settings {
        overlay!(
            base, self, channel, n, d, clamp, delta, eps, blocks, seed, otp, csv, p, trials, message,
            string, position, ns, ds, trace, eve_test
        )
    }
}

/// Parsed config file and the SHA-256 of its bytes.
pub fn load(path: &Path) -> Result<(Settings, String), String> {
    let bytes = std::fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let settings: Settings =
        serde_json::from_slice(&bytes).map_err(|e| format!("bad config {}: {e}", path.display()))?;
    Ok((settings, hex::encode(Sha256::digest(&bytes))))
}
