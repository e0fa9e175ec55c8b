//! JSON file schemas for networks, datasets, losses and the hardness
//! instances, with conversions to and from the core types.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use stattest_core::hardness::{AbsNormalForm, PltInstance};
use stattest_core::model::{Dataset, LossKind, LossModel, Network, Unit};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitFile {
    pub u: f64,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub units: Vec<UnitFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFile {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    /// Points already carry a trailing bias coordinate.
    #[serde(default)]
    pub bias_appended: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossName {
    Square,
    Identity,
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossFile {
    pub kind: LossName,
    /// Bound on `|loss'|` over the region of interest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_lip: Option<f64>,
    /// Lipschitz constant of `loss'`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lg_lip: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PltFile {
    pub m: usize,
    pub vectors: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnfFile {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    #[serde(rename = "Z")]
    pub z: Vec<Vec<f64>>,
    #[serde(rename = "L")]
    pub l: Vec<Vec<f64>>,
}

impl From<&Network> for NetworkFile {
    fn from(net: &Network) -> Self {
        NetworkFile {
            units: net
                .units()
                .iter()
                .map(|u| UnitFile { u: u.u, w: u.w.clone() })
                .collect(),
        }
    }
}

impl TryFrom<NetworkFile> for Network {
    type Error = CliError;

    fn try_from(file: NetworkFile) -> Result<Self, CliError> {
        let units = file.units.into_iter().map(|u| Unit::new(u.u, u.w)).collect();
        Ok(Network::new(units)?)
    }
}

impl From<&Dataset> for DatasetFile {
    fn from(data: &Dataset) -> Self {
        DatasetFile {
            points: data.points().to_vec(),
            labels: data.labels().to_vec(),
            bias_appended: data.bias_appended(),
        }
    }
}

impl TryFrom<DatasetFile> for Dataset {
    type Error = CliError;

    fn try_from(file: DatasetFile) -> Result<Self, CliError> {
        Ok(Dataset::from_parts(file.points, file.labels, file.bias_appended)?)
    }
}

impl LossFile {
    pub fn to_model(&self) -> Result<LossModel, CliError> {
        let mut loss = match self.kind {
            LossName::Square => LossModel::square(),
            LossName::Identity => LossModel::identity(),
            LossName::Logistic => LossModel::logistic(),
        };
        if let Some(v) = self.l_lip {
            check_constant("l_lip", v)?;
            loss = loss.with_lip_value(v);
        }
        if let Some(v) = self.lg_lip {
            check_constant("lg_lip", v)?;
            loss = loss.with_lip_grad(v);
        }
        Ok(loss)
    }
}

fn check_constant(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(CliError::input(format!(
            "{name} must be finite and nonnegative, got {v}"
        )))
    }
}

pub fn loss_name(kind: LossKind) -> &'static str {
    match kind {
        LossKind::Square => "square",
        LossKind::Identity => "identity",
        LossKind::Logistic => "logistic",
        LossKind::Custom => "custom",
    }
}

impl From<&PltInstance> for PltFile {
    fn from(inst: &PltInstance) -> Self {
        PltFile {
            m: inst.dim(),
            vectors: inst
                .vectors()
                .iter()
                .map(|v| v.iter().map(|&x| x as i64).collect())
                .collect(),
        }
    }
}

impl TryFrom<PltFile> for PltInstance {
    type Error = CliError;

    fn try_from(file: PltFile) -> Result<Self, CliError> {
        let vectors = file
            .vectors
            .into_iter()
            .map(|v| v.into_iter().map(|x| x as f64).collect())
            .collect();
        Ok(PltInstance::new(file.m, vectors)?)
    }
}

impl From<&AbsNormalForm> for AnfFile {
    fn from(anf: &AbsNormalForm) -> Self {
        AnfFile {
            a: anf.a.clone(),
            b: anf.b.clone(),
            z: anf.z.clone(),
            l: anf.l.clone(),
        }
    }
}

impl TryFrom<AnfFile> for AbsNormalForm {
    type Error = CliError;

    fn try_from(file: AnfFile) -> Result<Self, CliError> {
        Ok(AbsNormalForm::new(file.a, file.b, file.z, file.l)?)
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: malformed JSON: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn load_network(path: &Path) -> Result<Network, CliError> {
    read_json::<NetworkFile>(path)?.try_into()
}

pub fn load_dataset(path: &Path) -> Result<Dataset, CliError> {
    read_json::<DatasetFile>(path)?.try_into()
}

pub fn load_loss(path: &Path) -> Result<LossModel, CliError> {
    read_json::<LossFile>(path)?.to_model()
}
