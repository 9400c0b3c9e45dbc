//! TOML run configuration. Every module parameter is addressable as
//! `section.key`; CLI flags override the file.

use ddiqkd_core::bell::BsmOutcome;
use ddiqkd_core::noise::{ChannelParams, DetectorParams, SourceParams};
use ddiqkd_core::protocol::{AdversaryModel, RemapTable};
use ddiqkd_core::quantum::Bb84State;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub source: SourceSection,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub detector: DetectorSection,
    #[serde(default)]
    pub adversary: AdversarySection,
    #[serde(default)]
    pub phase_scan: PhaseScanSection,
    #[serde(default)]
    pub table: TableSection,
    #[serde(default)]
    pub rates: RatesSection,
    #[serde(default)]
    pub fock: FockSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub rounds: u64,
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { rounds: 100_000, seed: 1 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub kind: String,
    pub mu: Option<f64>,
}

impl Default for SourceSection {
    fn default() -> Self {
        Self { kind: "single_photon".into(), mu: None }
    }
}

impl SourceSection {
    pub fn to_params(&self) -> Result<SourceParams, CliError> {
        match self.kind.as_str() {
            "single_photon" => Ok(SourceParams::SinglePhoton),
            "wcs" => {
                let mu = self.mu.ok_or_else(|| {
                    CliError::validation("source.mu", "required when source.kind = \"wcs\"")
                })?;
                Ok(SourceParams::Wcs { mu })
            }
            other => Err(CliError::validation(
                "source.kind",
                &format!("unknown source kind {other:?} (expected single_photon or wcs)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub transmittance: Option<f64>,
    pub loss_db_per_km: Option<f64>,
    pub length_km: Option<f64>,
    pub depolarization: f64,
    pub phase_misalignment: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            transmittance: None,
            loss_db_per_km: None,
            length_km: None,
            depolarization: 0.0,
            phase_misalignment: 0.0,
        }
    }
}

impl ChannelSection {
    pub fn to_params(&self) -> Result<ChannelParams, CliError> {
        let params = match (self.transmittance, self.loss_db_per_km, self.length_km) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(CliError::validation(
                    "channel.transmittance",
                    "give either transmittance or the loss_db_per_km/length_km pair, not both",
                ));
            }
            (Some(t), None, None) => ChannelParams {
                transmittance: t,
                depolarization: self.depolarization,
                phase_misalignment: self.phase_misalignment,
            },
            (None, Some(loss), Some(len)) => {
                ChannelParams::from_fiber(loss, len, self.depolarization, self.phase_misalignment)?
            }
            (None, None, None) => ChannelParams {
                transmittance: 1.0,
                depolarization: self.depolarization,
                phase_misalignment: self.phase_misalignment,
            },
            _ => {
                return Err(CliError::validation(
                    "channel.loss_db_per_km",
                    "loss_db_per_km and length_km must be given together",
                ));
            }
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub efficiency: f64,
    pub dark_count: f64,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self { efficiency: 1.0, dark_count: 0.0 }
    }
}

impl DetectorSection {
    pub fn to_params(&self) -> Result<DetectorParams, CliError> {
        let params = DetectorParams {
            efficiency: self.efficiency,
            dark_count: self.dark_count,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySection {
    pub kind: String,
    pub probability: Option<f64>,
    pub remap: Option<String>,
}

impl Default for AdversarySection {
    fn default() -> Self {
        Self { kind: "none".into(), probability: None, remap: None }
    }
}

impl AdversarySection {
    pub fn to_model(&self) -> Result<AdversaryModel, CliError> {
        let model = match self.kind.as_str() {
            "none" => AdversaryModel::None,
            "intercept_resend" => AdversaryModel::InterceptResend {
                probability: self.probability.unwrap_or(1.0),
            },
            "detector_control" => {
                let remap = match self.remap.as_deref().unwrap_or("constant_phi_plus") {
                    "identity" => RemapTable::identity(),
                    "constant_phi_plus" => RemapTable::constant(BsmOutcome::PhiPlus),
                    "swap_phi_psi" => RemapTable::swap_phi_psi(),
                    other => {
                        return Err(CliError::validation(
                            "adversary.remap",
                            &format!(
                                "unknown remap {other:?} (expected identity, \
                                 constant_phi_plus or swap_phi_psi)"
                            ),
                        ));
                    }
                };
                AdversaryModel::DetectorControl { remap }
            }
            other => {
                return Err(CliError::validation(
                    "adversary.kind",
                    &format!(
                        "unknown adversary {other:?} (expected none, intercept_resend \
                         or detector_control)"
                    ),
                ));
            }
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseScanSection {
    pub state: String,
    pub points: usize,
    pub n_per_point: u64,
}

impl Default for PhaseScanSection {
    fn default() -> Self {
        Self { state: "plus".into(), points: 24, n_per_point: 0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSection {
    pub n_per_cell: u64,
}

impl Default for TableSection {
    fn default() -> Self {
        Self { n_per_cell: 10_000 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    pub mu: f64,
    pub eta_det: f64,
    pub loss_max_db: f64,
    pub points: usize,
    pub clock_hz: f64,
    pub qber: f64,
}

impl Default for RatesSection {
    fn default() -> Self {
        Self {
            mu: 0.5,
            eta_det: 0.25,
            loss_max_db: 40.0,
            points: 41,
            clock_hz: 1e9,
            qber: 0.015,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockSection {
    pub sectors: Vec<usize>,
    pub family_size: usize,
    pub n_max: usize,
}

impl Default for FockSection {
    fn default() -> Self {
        Self { sectors: vec![1, 2, 3, 4], family_size: 50, n_max: 4 }
    }
}

pub fn parse_bb84(label: &str) -> Result<Bb84State, CliError> {
    match label {
        "plus" => Ok(Bb84State::Plus),
        "minus" => Ok(Bb84State::Minus),
        "plus_i" => Ok(Bb84State::PlusI),
        "minus_i" => Ok(Bb84State::MinusI),
        other => Err(CliError::validation(
            "phase_scan.state",
            &format!("unknown state {other:?} (expected plus, minus, plus_i or minus_i)"),
        )),
    }
}

pub fn load(path: &std::path::Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::ConfigParse(e.to_string()))
}
