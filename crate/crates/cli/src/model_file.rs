//! JSON model files.
//!
//! The layout is canonical: fixed key order, one matrix row per line, and
//! numbers printed in shortest round-trip form, so loading and re-saving a
//! file reproduces it byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use gesture_core::lstm::{LstmParams, OutputParams, GATE_ORDER};
use gesture_core::numerics::Matrix;
use gesture_core::{Network, TrainConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT_NAME: &str = "gesture-lstm";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model file: {0}")]
    Malformed(String),
    #[error("unsupported model file version {found} (expected {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("model shape error: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub inputs: usize,
    pub hidden: usize,
    pub classes: usize,
    pub gate_order: String,
    pub seed: u64,
    pub train_config: Option<TrainConfig>,
    pub w_x: Vec<Vec<f64>>,
    pub w_h: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub w_y: Vec<Vec<f64>>,
    pub b_y: Vec<f64>,
}

impl ModelFile {
    pub fn from_network(net: &Network, train_config: Option<TrainConfig>) -> Self {
        Self {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            inputs: net.inputs(),
            hidden: net.hidden(),
            classes: net.classes(),
            gate_order: GATE_ORDER.into(),
            seed: train_config.as_ref().map_or(0, |c| c.seed),
            train_config,
            w_x: net.lstm.w_x.to_rows(),
            w_h: net.lstm.w_h.to_rows(),
            b: net.lstm.b.clone(),
            w_y: net.output.w_y.to_rows(),
            b_y: net.output.b_y.clone(),
        }
    }

    /// Validates the header and every shape, then builds the network.
    pub fn to_network(&self) -> Result<Network, ModelError> {
        if self.format != FORMAT_NAME {
            return Err(ModelError::Malformed(format!(
                "format tag {:?}, expected {FORMAT_NAME:?}",
                self.format
            )));
        }
        if self.version != FORMAT_VERSION {
            return Err(ModelError::Version {
                found: self.version,
            });
        }
        if self.gate_order != GATE_ORDER {
            return Err(ModelError::Shape(format!(
                "gate order {:?}, expected {GATE_ORDER:?}",
                self.gate_order
            )));
        }
        let (n, h, q) = (self.inputs, self.hidden, self.classes);
        if n == 0 || h == 0 || q < 2 {
            return Err(ModelError::Shape(format!(
                "N={n}, H={h}, Q={q}: need N >= 1, H >= 1, Q >= 2"
            )));
        }
        let w_x = matrix("W_x", &self.w_x, 4 * h, n, self)?;
        let w_h = matrix("W_h", &self.w_h, 4 * h, h, self)?;
        let w_y = matrix("W_y", &self.w_y, q, h, self)?;
        vector("b", &self.b, 4 * h, self)?;
        vector("b_y", &self.b_y, q, self)?;
        Ok(Network {
            lstm: LstmParams {
                w_x,
                w_h,
                b: self.b.clone(),
            },
            output: OutputParams {
                w_y,
                b_y: self.b_y.clone(),
            },
        })
    }

    pub fn to_text(&self) -> String {
        let num = |v: &f64| serde_json::to_string(v).expect("finite floats serialize");
        let row = |r: &[f64]| format!("[{}]", r.iter().map(num).collect::<Vec<_>>().join(","));
        let rows = |m: &[Vec<f64>]| {
            if m.is_empty() {
                "[]".to_string()
            } else {
                let body: Vec<String> = m.iter().map(|r| format!("    {}", row(r))).collect();
                format!("[\n{}\n  ]", body.join(",\n"))
            }
        };
        let fields = [
            ("format", json(&self.format)),
            ("version", json(&self.version)),
            ("inputs", json(&self.inputs)),
            ("hidden", json(&self.hidden)),
            ("classes", json(&self.classes)),
            ("gate_order", json(&self.gate_order)),
            ("seed", json(&self.seed)),
            ("train_config", json(&self.train_config)),
            ("w_x", rows(&self.w_x)),
            ("w_h", rows(&self.w_h)),
            ("b", row(&self.b)),
            ("w_y", rows(&self.w_y)),
            ("b_y", row(&self.b_y)),
        ];
        let body: Vec<String> = fields
            .iter()
            .map(|(k, v)| format!("  \"{k}\": {v}"))
            .collect();
        format!("{{\n{}\n}}\n", body.join(",\n"))
    }

    pub fn parse(text: &str) -> Result<Self, ModelError> {
        // Check the version before the full schema so old files get a clear message.
        #[derive(Deserialize)]
        struct Header {
            version: Option<u32>,
        }
        let header: Header =
            serde_json::from_str(text).map_err(|e| ModelError::Malformed(e.to_string()))?;
        match header.version {
            Some(FORMAT_VERSION) => {}
            Some(found) => return Err(ModelError::Version { found }),
            None => return Err(ModelError::Malformed("missing version".into())),
        }
        serde_json::from_str(text).map_err(|e| ModelError::Malformed(e.to_string()))
    }
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("model header serializes")
}

fn matrix(
    name: &str,
    rows: &[Vec<f64>],
    r: usize,
    c: usize,
    f: &ModelFile,
) -> Result<Matrix, ModelError> {
    let actual_cols = rows.first().map_or(0, Vec::len);
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        return Err(ModelError::Shape(format!(
            "{name} is {}x{actual_cols} but N={}, H={}, Q={} require {r}x{c}",
            rows.len(),
            f.inputs,
            f.hidden,
            f.classes
        )));
    }
    Matrix::from_rows(rows).map_err(|e| ModelError::Shape(format!("{name}: {e}")))
}

fn vector(name: &str, v: &[f64], len: usize, f: &ModelFile) -> Result<(), ModelError> {
    if v.len() != len {
        return Err(ModelError::Shape(format!(
            "{name} has {} entries but H={}, Q={} require {len}",
            v.len(),
            f.hidden,
            f.classes
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(ModelError::Shape(format!("{name} has a non-finite entry")));
    }
    Ok(())
}

pub fn save_model(model: &ModelFile, path: &Path) -> Result<(), ModelError> {
    fs::write(path, model.to_text()).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<ModelFile, ModelError> {
    let text = fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let model = ModelFile::parse(&text)?;
    model.to_network()?;
    Ok(model)
}

/// Loads a model file and returns the validated network with its header.
pub fn load_network(path: &Path) -> Result<(ModelFile, Network), ModelError> {
    let model = load_model(path)?;
    let net = model.to_network()?;
    Ok((model, net))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ModelFile {
        let net = Network::init(6, 4, 6, 3);
        let cfg = TrainConfig {
            hidden: 4,
            seed: 3,
            ..TrainConfig::default()
        };
        ModelFile::from_network(&net, Some(cfg))
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        let m = sample();
        save_model(&m, &a).unwrap();
        let loaded = load_model(&a).unwrap();
        assert_eq!(loaded, m);
        save_model(&loaded, &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert_eq!(loaded.to_network().unwrap(), Network::init(6, 4, 6, 3));
    }

    #[test]
    fn truncated_file_is_malformed() {
        let text = sample().to_text();
        let err = ModelFile::parse(&text[..text.len() / 2]).unwrap_err();
        assert!(err.to_string().starts_with("malformed model file"), "{err}");
    }

    #[test]
    fn version_mismatch() {
        let text = sample()
            .to_text()
            .replace("\"version\": 1", "\"version\": 7");
        assert!(matches!(
            ModelFile::parse(&text),
            Err(ModelError::Version { found: 7 })
        ));
    }

    #[test]
    fn hidden_inconsistent_with_recurrent_weights() {
        let mut m = sample();
        m.hidden = 5;
        let err = m.to_network().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("W_x is 16x6") || msg.contains("W_h"), "{msg}");
        assert!(msg.contains("H=5"), "{msg}");

        let mut m = sample();
        m.w_h.pop();
        let msg = m.to_network().unwrap_err().to_string();
        assert!(
            msg.contains("W_h is 15x4") && msg.contains("H=4") && msg.contains("16x4"),
            "{msg}"
        );
    }

    #[test]
    fn unknown_gate_order_rejected() {
        let mut m = sample();
        m.gate_order = "iofg".into();
        assert!(matches!(m.to_network(), Err(ModelError::Shape(_))));
    }
}
