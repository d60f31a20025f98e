//! Pipeline configuration. Every field has a default so partial
//! configuration files are accepted; unknown keys are rejected.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Uniform sampling.
    #[default]
    None,
    /// Binary external-edge / ordinary classes.
    Edges,
    /// Curvature quantile classes.
    Curvature,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "none" => Ok(Mode::None),
            "edges" => Ok(Mode::Edges),
            "curvature" => Ok(Mode::Curvature),
            _ => Err(Error::InvalidParam(format!(
                "unknown mode '{s}' (expected none, edges or curvature)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub k: usize,
    pub passes: usize,
    pub octree_scale: Option<f64>,
    pub upsample_s: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            k: 8,
            passes: 1,
            octree_scale: None,
            upsample_s: 6,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub v_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResampleConfig {
    pub points: Option<usize>,
    pub mode: Mode,
    /// Colon-separated rates. Edges mode: `edge:ordinary`; curvature
    /// mode: flattest class first.
    pub rates: Option<String>,
    pub edge_threshold: f64,
    /// Neighborhood size of the feature classifiers.
    pub feature_k: usize,
    pub curvature_classes: usize,
    /// Reserved; the pipeline uses no randomness.
    pub seed: Option<u64>,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        ResampleConfig {
            points: None,
            mode: Mode::None,
            rates: None,
            edge_threshold: 0.02,
            feature_k: 16,
            curvature_classes: 5,
            seed: None,
        }
    }
}

impl ResampleConfig {
    /// Rate weights indexed by class id.
    pub fn class_rates(&self) -> Result<Vec<f64>> {
        match self.mode {
            Mode::None => Ok(vec![1.0]),
            Mode::Edges => {
                let r = parse_rates(self.rates.as_deref().unwrap_or("7:3"))?;
                if r.len() != 2 {
                    return Err(Error::InvalidParam(format!(
                        "edges mode takes two rates (edge:ordinary), got {}",
                        r.len()
                    )));
                }
                Ok(vec![r[1], r[0]])
            }
            Mode::Curvature => {
                let r = parse_rates(self.rates.as_deref().unwrap_or("2:3:4:5:6"))?;
                if r.len() != self.curvature_classes {
                    return Err(Error::InvalidParam(format!(
                        "{} rates given for {} curvature classes",
                        r.len(),
                        self.curvature_classes
                    )));
                }
                Ok(r)
            }
        }
    }
}

/// Parse `"7:3"` style rate lists.
pub fn parse_rates(s: &str) -> Result<Vec<f64>> {
    let rates = s
        .split(':')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| Error::InvalidParam(format!("bad rate '{t}' in '{s}'")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if rates.iter().all(|&r| r == 0.0) {
        return Err(Error::InvalidParam(format!("rates '{s}' are all zero")));
    }
    Ok(rates)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub k: usize,
    pub hole_fill_max: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig {
            k: 16,
            hole_fill_max: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemeshConfig {
    pub iterations: usize,
    /// Defaults to on in edges mode.
    pub preserve_edges: Option<bool>,
    pub adaptive: bool,
    pub keep_internal_edges: bool,
    /// Guard external-edge vertices with at least two (rather than more
    /// than two) external-edge neighbors.
    pub guard_two_neighbors: bool,
}

impl Default for RemeshConfig {
    fn default() -> Self {
        RemeshConfig {
            iterations: 5,
            preserve_edges: None,
            adaptive: false,
            keep_internal_edges: false,
            guard_two_neighbors: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub mls_k: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig { mls_k: 12 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub preprocess: PreprocessConfig,
    pub grid: GridConfig,
    pub resample: ResampleConfig,
    pub mesh: MeshConfig,
    pub remesh: RemeshConfig,
    pub metrics: MetricsConfig,
}

impl Config {
    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParam(m.into()));
        if self.preprocess.k == 0 {
            return bad("preprocess.k must be at least 1");
        }
        if self.preprocess.octree_scale.is_some_and(|s| !(s > 0.0)) {
            return bad("preprocess.octree_scale must be positive");
        }
        if self.grid.v_scale.is_some_and(|s| !(s > 0.0)) {
            return bad("grid.v_scale must be positive");
        }
        if self.resample.points.is_some_and(|p| p < 3) {
            return bad("resample.points must be at least 3");
        }
        if self.resample.curvature_classes < 2 {
            return bad("resample.curvature_classes must be at least 2");
        }
        if self.mesh.k < 2 {
            return bad("mesh.k must be at least 2");
        }
        if self.remesh.iterations == 0 {
            return bad("remesh.iterations must be at least 1");
        }
        self.resample.class_rates()?;
        Ok(())
    }
}
