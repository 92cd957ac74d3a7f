//! Run configurations. Unknown keys are rejected; errors name the field path
//! and the line/column in the file.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use hyperrcm::asymptotics::Quantity;
use hyperrcm::AdjacencySpec64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Process exit status classes.
#[derive(Debug)]
pub enum Failure {
    /// Bad input: exit code 2.
    Validation(String),
    /// Numerical failure: exit code 3.
    Numerical(String),
    /// I/O on outputs: exit code 1.
    Io(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "invalid input: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<hyperrcm::Error> for Failure {
    fn from(e: hyperrcm::Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

pub fn invalid<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Validation(msg.into()))
}

/// Reads and strictly parses a JSON config.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|m| Failure::Validation(format!("{}: {m}", path.display())))
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, String> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let inner = e.inner();
        let field = e.path().to_string();
        let field = if field == "." { "top level".to_string() } else { format!("field `{field}`") };
        let (line, col) = (inner.line(), inner.column());
        let msg = inner.to_string();
        let msg = msg.strip_suffix(&format!(" at line {line} column {col}")).unwrap_or(&msg).to_string();
        format!("line {line}, column {col}, {field}: {msg}")
    })?;
    de.end().map_err(|e| format!("line {}, column {}: trailing characters", e.line(), e.column()))?;
    Ok(value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub spec: AdjacencySpec64,
    /// Intensity; give this or `expected_degree`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// `lambda * norm_1to1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_degree: Option<f64>,
    #[serde(rename = "R")]
    pub r_ball: f64,
    /// Plant a point at the origin.
    #[serde(default)]
    pub palm_origin: bool,
    /// Write an SVG; defaults to `d == 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<bool>,
    /// Hyperbolic radius of the drawn vertex discs; defaults to half the
    /// unit-volume radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderConfig {
    /// Output of `simulate` (or a bare configuration); relative paths are
    /// taken from the config file's directory.
    pub input: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagramsConfig {
    pub spec: AdjacencySpec64,
    #[serde(rename = "C", default = "default_c")]
    pub c: f64,
}

fn default_c() -> f64 {
    2.0
}

fn default_n() -> u32 {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExpansionConfig {
    Boolean {
        d: usize,
        #[serde(rename = "L")]
        l: f64,
        #[serde(default = "default_quantity")]
        quantity: Quantity,
    },
    Heat3 {
        #[serde(rename = "L")]
        l: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amplitude: Option<f64>,
    },
    /// Diagram-based expansion for any profile.
    General {
        spec: AdjacencySpec64,
        #[serde(rename = "C", default = "default_c")]
        c: f64,
        #[serde(rename = "N", default = "default_n")]
        n: u32,
    },
}

fn default_quantity() -> Quantity {
    Quantity::LambdaC
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub spec: AdjacencySpec64,
    #[serde(rename = "R_list")]
    pub r_list: Vec<f64>,
    pub replicas: usize,
    /// Search interval in units of `lambda * norm_1to1`.
    pub bracket: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shell_margin: Option<f64>,
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_grid() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransformConfig {
    /// Spherical transform on `[0, s_max]` (d = 3).
    Forward { spec: AdjacencySpec64, s_max: f64, points: usize },
    /// Forward then inverse; reports the recovered profile next to the original.
    RoundTrip { spec: AdjacencySpec64, s_max: f64, points: usize, r_max: f64, r_points: usize },
    /// `phi^{*k}` sampled on `[0, support]`.
    Convolve {
        spec: AdjacencySpec64,
        power: usize,
        r_points: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nodes: Option<usize>,
    },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_names_the_field_and_line() {
        let text = "{\n  \"spec\": {\"d\": 2, \"family\": \"boolean\", \"L\": 1.0},\n  \"R\": 3.0,\n  \"lamda\": 1.0\n}";
        let err = parse::<SimulateConfig>(text).unwrap_err();
        assert!(err.contains("line 4"), "{err}");
        assert!(err.contains("lamda"), "{err}");
    }

    #[test]
    fn nested_error_has_a_path() {
        let text = r#"{"spec": {"d": 2, "family": "boolean", "L": 1.0}, "R_list": [6, "x"], "replicas": 10, "bracket": [0.5, 3]}"#;
        let err = parse::<EstimateConfig>(text).unwrap_err();
        assert!(err.contains("R_list[1]"), "{err}");
    }

    #[test]
    fn tagged_configs_reject_unknown_keys() {
        assert!(parse::<ExpansionConfig>(r#"{"model":"boolean","d":2,"L":8}"#).is_ok());
        assert!(parse::<ExpansionConfig>(r#"{"model":"boolean","d":2,"L":8,"extra":1}"#).is_err());
        assert!(parse::<ExpansionConfig>(r#"{"model":"ising","d":2,"L":8}"#).is_err());
    }

    #[test]
    fn trailing_garbage_is_rejected() {
        assert!(parse::<DiagramsConfig>(r#"{"spec":{"d":3,"family":"heat3","L":1}} x"#).is_err());
    }
}
