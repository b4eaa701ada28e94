//! JSON run configuration.
//!
//! Every block rejects unknown keys. Structural problems (wrong types,
//! unknown keys) surface as serde errors; missing values that only some
//! commands need are reported by [`RunConfig`]'s accessors with the dotted
//! path of the field.

use std::path::{Path, PathBuf};

use decim_core::config::RotatorAlternation;
use decim_core::decimation::{ImageCenter, NRule};
use decim_core::{ChainSpec, CouplingModel, Family};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Published JSON schema of the run configuration.
pub const SCHEMA: &str = include_str!("../schema/run-config.schema.json");

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Required by every command except `decimate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub chain: ChainConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub magnetize: MagnetizeConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub decimate: DecimateConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    NnIsing,
    AxialLr,
    BiaxialLr,
    IsoLrIsing,
    AnisoRotator,
    IsoLrRotator,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: FamilyName,
    #[serde(rename = "J", default = "one")]
    pub strength: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Decay exponent of single-exponent long-range families.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Horizontal exponent of the bi-axial family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<f64>,
    /// Vertical exponent of the bi-axial family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Truncation radius; finite-range families ignore it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<u32>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<u32>,
    #[serde(rename = "L_list", default, skip_serializing_if = "Option::is_none")]
    pub inner_list: Option<Vec<u32>>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub outer: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub sweeps: u64,
    pub burn_in: u64,
    pub thinning: u64,
    pub seed: u64,
    pub proposal_width: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            sweeps: 4000,
            burn_in: 400,
            thinning: 1,
            seed: 1,
            proposal_width: ChainSpec::DEFAULT_PROPOSAL_WIDTH,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum CenterName {
    #[default]
    Alternating,
    AllPlus,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum AlternationName {
    #[default]
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub replicas: u32,
    pub center: CenterName,
    pub alternation: AlternationName,
    /// Also run at `2N` and report the gap shift.
    pub convergence: bool,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            replicas: decim_core::ProbeSpec::DEFAULT_REPLICAS,
            center: CenterName::Alternating,
            alternation: AlternationName::Horizontal,
            convergence: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NRuleConfig {
    #[default]
    PowerSchedule,
    FixedRatio {
        ratio: f64,
    },
    Bound {
        target_c: f64,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default)]
    pub n_rule: NRuleConfig,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MagnetizeConfig {
    /// Half-width of the central block whose mean spin is reported;
    /// defaults to `L / 4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core_half_width: Option<u32>,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ExteriorName {
    #[default]
    Free,
    Plus,
    Minus,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub exterior: ExteriorName,
    /// Clock states per rotator.
    pub q: u32,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            exterior: ExteriorName::Free,
            q: 64,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DecimateConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub csv: bool,
    pub json: bool,
    /// Dump per-chain observable series as CSV.
    pub series: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("results"),
            csv: true,
            json: true,
            series: false,
        }
    }
}

fn missing(field: &str) -> CliError {
    CliError::Config(format!("missing field `{field}`"))
}

fn invalid(field: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("invalid `{field}`: {why}"))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn model(&self) -> Result<&ModelConfig, CliError> {
        self.model.as_ref().ok_or_else(|| missing("model"))
    }

    pub fn coupling_model(&self) -> Result<CouplingModel, CliError> {
        let m = self.model()?;
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| missing(&format!("model.{name}")));
        let family = match m.family {
            FamilyName::NnIsing => Family::NearestNeighborIsing,
            FamilyName::AxialLr => Family::AxialIsing {
                alpha: need(m.alpha, "alpha")?,
            },
            FamilyName::BiaxialLr => Family::BiAxialIsing {
                alpha_horizontal: need(m.alpha1, "alpha1")?,
                alpha_vertical: need(m.alpha2, "alpha2")?,
            },
            FamilyName::IsoLrIsing => Family::IsotropicIsing {
                alpha: need(m.alpha, "alpha")?,
            },
            FamilyName::AnisoRotator => Family::AnisotropicRotator {
                kappa: need(m.kappa, "kappa")?,
            },
            FamilyName::IsoLrRotator => Family::IsotropicRotator {
                alpha: need(m.alpha, "alpha")?,
            },
        };
        CouplingModel::new(family, m.strength).map_err(|e| invalid("model", e))
    }

    /// Truncation radius: 1 for finite-range families, required otherwise.
    pub fn radius(&self) -> Result<u32, CliError> {
        let model = self.coupling_model()?;
        let radius = self.model()?.radius;
        if !model.family().is_long_range() {
            return Ok(radius.unwrap_or(1).max(1));
        }
        match radius {
            Some(0) => Err(invalid("model.radius", "must be positive")),
            Some(r) => Ok(r),
            None => Err(missing("model.radius")),
        }
    }

    pub fn beta(&self) -> Result<f64, CliError> {
        let beta = self.model()?.beta.ok_or_else(|| missing("model.beta"))?;
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(invalid("model.beta", "must be finite and non-negative"));
        }
        Ok(beta)
    }

    pub fn inner(&self) -> Result<u32, CliError> {
        self.geometry.inner.ok_or_else(|| missing("geometry.L"))
    }

    /// `geometry.L_list`, or the single `geometry.L`.
    pub fn inner_list(&self) -> Result<Vec<u32>, CliError> {
        match (&self.geometry.inner_list, self.geometry.inner) {
            (Some(list), _) if list.is_empty() => {
                Err(invalid("geometry.L_list", "must not be empty"))
            }
            (Some(list), _) => Ok(list.clone()),
            (None, Some(l)) => Ok(vec![l]),
            (None, None) => Err(missing("geometry.L_list")),
        }
    }

    pub fn target_c(&self) -> Result<f64, CliError> {
        let t = self.geometry.target_c.unwrap_or(1.0);
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid("geometry.target_c", "must be positive"));
        }
        Ok(t)
    }

    pub fn eps(&self) -> f64 {
        self.geometry
            .eps
            .unwrap_or(decim_core::ProbeSpec::DEFAULT_EPS)
    }

    pub fn chain_spec(&self) -> Result<ChainSpec, CliError> {
        let c = &self.chain;
        let spec = ChainSpec {
            sweeps: c.sweeps,
            burn_in: c.burn_in,
            seed: c.seed,
            proposal_width: c.proposal_width,
            thinning: c.thinning,
        };
        spec.validate().map_err(|e| invalid("chain", e))?;
        Ok(spec)
    }

    pub fn n_rule(&self) -> NRule {
        match self.scan.n_rule {
            NRuleConfig::PowerSchedule => NRule::PowerSchedule,
            NRuleConfig::FixedRatio { ratio } => NRule::FixedRatio(ratio),
            NRuleConfig::Bound { target_c } => NRule::Bound { target: target_c },
        }
    }

    pub fn center(&self) -> ImageCenter {
        match self.probe.center {
            CenterName::Alternating => ImageCenter::Alternating,
            CenterName::AllPlus => ImageCenter::AllPlus,
        }
    }

    pub fn alternation(&self) -> RotatorAlternation {
        match self.probe.alternation {
            AlternationName::Horizontal => RotatorAlternation::Horizontal,
            AlternationName::Vertical => RotatorAlternation::Vertical,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = RunConfig::from_json(r#"{"model": {"family": "nn_ising", "beta": 0.5}}"#).unwrap();
        assert_eq!(c.model().unwrap().strength, 1.0);
        assert_eq!(c.beta().unwrap(), 0.5);
        assert_eq!(c.radius().unwrap(), 1);
        assert_eq!(c.chain, ChainConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        let e =
            RunConfig::from_json(r#"{"model": {"family": "nn_ising", "bta": 0.5}}"#).unwrap_err();
        assert!(e.to_string().contains("bta"), "{e}");
        let e =
            RunConfig::from_json(r#"{"model": {"family": "nn_ising"}, "extra": 1}"#).unwrap_err();
        assert!(e.to_string().contains("extra"));
    }

    #[test]
    fn missing_fields_are_named() {
        let c =
            RunConfig::from_json(r#"{"model": {"family": "iso_lr_ising", "alpha": 3}}"#).unwrap();
        assert!(c.beta().unwrap_err().to_string().contains("model.beta"));
        assert!(c.radius().unwrap_err().to_string().contains("model.radius"));
        let c =
            RunConfig::from_json(r#"{"model": {"family": "biaxial_lr", "alpha1": 1.5}}"#).unwrap();
        assert!(c
            .coupling_model()
            .unwrap_err()
            .to_string()
            .contains("model.alpha2"));
        let c = RunConfig::from_json(r#"{"geometry": {"L": 2}}"#).unwrap();
        assert!(c.beta().unwrap_err().to_string().contains("`model`"));
    }

    #[test]
    fn n_rule_forms() {
        let c = RunConfig::from_json(
            r#"{"model": {"family": "nn_ising"}, "scan": {"n_rule": {"kind": "fixed_ratio", "ratio": 1.5}}}"#,
        )
        .unwrap();
        assert_eq!(c.n_rule(), NRule::FixedRatio(1.5));
    }

    #[test]
    fn schema_is_valid_json() {
        let v: serde_json::Value = serde_json::from_str(SCHEMA).unwrap();
        assert_eq!(v["additionalProperties"], false);
    }
}
