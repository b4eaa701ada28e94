//! JSON file format for spin configurations.
//!
//! ```json
//! {"kind": "scalar", "half_width": 1, "values": [1, -1, 1, -1, 1, -1, 1, -1, 1]}
//! {"kind": "planar", "half_width": 0, "angles": [1.5707963267948966]}
//! ```
//!
//! Values are listed row by row: rows run over `y` from `-L` to `L`,
//! columns over `x`. Optional `frozen` lists `[x, y]` sites to pin.

use decim_core::{BoxRegion, Site, SpinConfiguration, SpinKind};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConfigurationFile {
    Scalar {
        half_width: u32,
        values: Vec<i8>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        frozen: Vec<[i32; 2]>,
    },
    Planar {
        half_width: u32,
        angles: Vec<f64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        frozen: Vec<[i32; 2]>,
    },
}

impl ConfigurationFile {
    pub fn from_configuration(c: &SpinConfiguration) -> Self {
        let half_width = c.window().half_width();
        let frozen = c.frozen().iter().map(|s| [s.x, s.y]).collect();
        match c.kind() {
            SpinKind::Scalar => ConfigurationFile::Scalar {
                half_width,
                values: c.scalar_values().expect("scalar configuration").to_vec(),
                frozen,
            },
            SpinKind::Planar => ConfigurationFile::Planar {
                half_width,
                angles: c.angles().expect("planar configuration"),
                frozen,
            },
        }
    }

    pub fn to_configuration(&self) -> Result<SpinConfiguration, CliError> {
        let (half_width, len, frozen) = match self {
            ConfigurationFile::Scalar {
                half_width,
                values,
                frozen,
            } => (*half_width, values.len(), frozen),
            ConfigurationFile::Planar {
                half_width,
                angles,
                frozen,
            } => (*half_width, angles.len(), frozen),
        };
        let window = BoxRegion::new(half_width);
        if len != window.len() {
            return Err(CliError::Config(format!(
                "configuration of half-width {half_width} needs {} values, found {len}",
                window.len()
            )));
        }
        let mut c = match self {
            ConfigurationFile::Scalar { values, .. } => {
                SpinConfiguration::from_scalar_fn(window, |s| values[window.index(s).unwrap()])
                    .map_err(CliError::config)?
            }
            ConfigurationFile::Planar { angles, .. } => {
                if let Some(a) = angles.iter().find(|a| !a.is_finite()) {
                    return Err(CliError::Config(format!("angle {a} is not finite")));
                }
                SpinConfiguration::from_angle_fn(window, |s| angles[window.index(s).unwrap()])
            }
        };
        for &[x, y] in frozen {
            c.freeze(Site::new(x, y)).map_err(CliError::config)?;
        }
        Ok(c)
    }

    pub fn parse(text: &str) -> Result<SpinConfiguration, CliError> {
        let file: Self = serde_json::from_str(text).map_err(CliError::config)?;
        file.to_configuration()
    }
}
