use std::path::PathBuf;

use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Quantize,
    Classify,
    Beals,
    Roundtrip,
    Demo2d,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Quantize => "quantize",
            Command::Classify => "classify",
            Command::Beals => "beals",
            Command::Roundtrip => "roundtrip",
            Command::Demo2d => "demo2d",
            Command::Report => "report",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub command: Command,
    #[serde(default)]
    pub operator: OperatorSection,
    #[serde(default)]
    pub truncation: TruncationSection,
    #[serde(default)]
    pub quantization: QuantizationSection,
    #[serde(default)]
    pub classify: ClassifySection,
    #[serde(default)]
    pub beals: BealsSection,
    #[serde(default)]
    pub roundtrip: RoundtripSection,
}

/// Exactly one of `name`, `symbol` or `matrix_file`.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    pub name: Option<String>,
    pub param: Option<f64>,
    pub symbol: Option<String>,
    /// Declared order of `symbol`; estimated from growth when absent.
    pub order: Option<f64>,
    pub matrix_file: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationSection {
    pub rows: usize,
    pub cols: Option<usize>,
    pub pad: usize,
}

impl Default for TruncationSection {
    fn default() -> Self {
        Self {
            rows: 64,
            cols: None,
            pad: 5,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantizationSection {
    pub tolerance: f64,
    /// Largest fraction of entries allowed to miss `tolerance`.
    pub max_nonconverged_fraction: f64,
    pub half_width: Option<f64>,
    pub panels: Option<usize>,
    pub order_per_panel: Option<usize>,
}

impl Default for QuantizationSection {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_nonconverged_fraction: 0.0,
            half_width: None,
            panels: None,
            order_per_panel: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifySection {
    pub r: f64,
    pub alpha_max: usize,
    pub n_max: u32,
    pub floor: f64,
}

impl Default for ClassifySection {
    fn default() -> Self {
        Self {
            r: 0.0,
            alpha_max: 2,
            n_max: 4,
            floor: 1e-13,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BealsSection {
    pub r: f64,
    pub alpha_max: usize,
    pub beta_max: usize,
    pub s_list: Vec<f64>,
}

impl Default for BealsSection {
    fn default() -> Self {
        Self {
            r: 0.0,
            alpha_max: 2,
            beta_max: 2,
            s_list: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoundtripSection {
    /// The comparison grid covers `[-half_width, half_width]^2`.
    pub half_width: f64,
    pub points: usize,
}

impl Default for RoundtripSection {
    fn default() -> Self {
        Self {
            half_width: 3.0,
            points: 25,
        }
    }
}

impl JobConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}
