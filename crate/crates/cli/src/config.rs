//! Flat scenario configuration file.
//!
//! Every network parameter is a top-level key; a missing key takes its
//! default, an unknown key is an error. `--set key=value` overrides are
//! applied to the parsed table before it is checked.

use std::path::Path;

use serde::{Deserialize, Serialize};

use femtosim::clustering::{GvcfConfig, TargetPercentile};
use femtosim::geometry::{Area, MsCount};
use femtosim::radio::RadioParams;
use femtosim::simkernel::{Algorithm, ScenarioConfig};
use femtosim::spectrum::{MAX_FEMTO_CHANNELS, TOTAL_CHANNELS};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    // deployment
    pub area_side_m: f64,
    pub femto_radius_m: f64,
    pub macro_radius_m: f64,
    pub n_faps: usize,
    pub max_ms_per_fap: usize,
    /// `uniform` (1..=max per FAP) or `fixed` (exactly max per FAP).
    pub ms_distribution: String,

    // spectrum
    pub total_channels: usize,
    pub channels: usize,
    pub channel_width_khz: f64,

    // radio
    pub carrier_freq_ghz: f64,
    pub fap_tx_dbm: f64,
    pub macro_tx_dbm: f64,
    pub internal_wall_loss_db: f64,
    pub external_wall_loss_db: f64,
    pub external_walls: u32,
    pub shadowing_db: f64,
    pub noise_figure_db: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se_cap_bpshz: Option<f64>,

    // clustering
    pub algorithm: String,
    pub safety_distance_m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se_target_bpshz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sinr_target_db: Option<f64>,
    /// `p50` or `p90` (level reached by 90% of mobiles).
    pub target_percentile: String,

    // experiment
    pub replicas: usize,
    pub seed: u64,
    pub sweep_n_faps: Vec<usize>,
    pub sweep_channels: Vec<usize>,
    pub adapt_rounds: usize,
}

impl Default for FileConfig {
    fn default() -> Self {
        let area = Area::default();
        let radio = RadioParams::default();
        let gvcf = GvcfConfig::default();
        let scenario = ScenarioConfig::default();
        Self {
            area_side_m: area.side,
            femto_radius_m: area.femto_radius,
            macro_radius_m: area.macro_radius,
            n_faps: scenario.n_faps,
            max_ms_per_fap: gvcf.max_ms_per_fap,
            ms_distribution: "uniform".into(),
            total_channels: TOTAL_CHANNELS,
            channels: scenario.channels_available,
            channel_width_khz: radio.channel_width_hz / 1e3,
            carrier_freq_ghz: radio.carrier_freq_ghz,
            fap_tx_dbm: scenario.fap_tx_dbm,
            macro_tx_dbm: radio.macro_tx_dbm,
            internal_wall_loss_db: radio.internal_wall_loss_db,
            external_wall_loss_db: radio.external_wall_loss_per_wall_db,
            external_walls: radio.n_external_walls_interference,
            shadowing_db: radio.shadowing_sigma_db,
            noise_figure_db: radio.ms_noise_figure_db,
            se_cap_bpshz: radio.se_cap,
            algorithm: "gvcf".into(),
            safety_distance_m: gvcf.d_th,
            se_target_bpshz: None,
            sinr_target_db: None,
            target_percentile: "p50".into(),
            replicas: scenario.n_replicas,
            seed: scenario.base_seed,
            sweep_n_faps: vec![50, 100, 150, 200],
            sweep_channels: vec![4, 8, 12, 16, 20],
            adapt_rounds: 10,
        }
    }
}

fn range(msg: impl Into<String>) -> CliError {
    CliError::Range(msg.into())
}

impl FileConfig {
    /// Parses file text and applies `key=value` overrides in order.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Malformed(e.to_string()))?;
        for o in overrides {
            let (key, value) = parse_override(o)?;
            table.insert(key, value);
        }
        let cfg: FileConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Malformed(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| CliError::MissingFile(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::parse(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.total_channels != TOTAL_CHANNELS {
            return Err(range(format!(
                "total_channels must be {TOTAL_CHANNELS}, got {}",
                self.total_channels
            )));
        }
        let check_channels = |c: usize| {
            if c == 0 || c > MAX_FEMTO_CHANNELS {
                Err(range(format!(
                    "channels must be in 1..={MAX_FEMTO_CHANNELS}, got {c}"
                )))
            } else {
                Ok(())
            }
        };
        check_channels(self.channels)?;
        for &c in &self.sweep_channels {
            check_channels(c)?;
        }
        if self.n_faps == 0 || self.sweep_n_faps.contains(&0) {
            return Err(range("n_faps must be at least 1"));
        }
        if self.sweep_n_faps.is_empty() || self.sweep_channels.is_empty() {
            return Err(range("sweep grids must not be empty"));
        }
        // TOML integers are signed 64-bit
        if self.seed > i64::MAX as u64 {
            return Err(range(format!("seed must be at most {}", i64::MAX)));
        }
        if self.replicas == 0 {
            return Err(range("replicas must be at least 1"));
        }
        if self.adapt_rounds == 0 {
            return Err(range("adapt_rounds must be at least 1"));
        }
        self.ms_count()?;
        self.percentile()?;
        self.algorithm()?;
        self.scenario().validate().map_err(|e| range(e.to_string()))
    }

    pub fn algorithm(&self) -> Result<Algorithm, CliError> {
        self.algorithm
            .parse()
            .map_err(|_| range(format!("unknown algorithm `{}`", self.algorithm)))
    }

    fn ms_count(&self) -> Result<MsCount, CliError> {
        match self.ms_distribution.as_str() {
            "uniform" => Ok(MsCount::Uniform {
                max: self.max_ms_per_fap,
            }),
            "fixed" => Ok(MsCount::Fixed(self.max_ms_per_fap)),
            other => Err(range(format!(
                "ms_distribution must be `uniform` or `fixed`, got `{other}`"
            ))),
        }
    }

    fn percentile(&self) -> Result<TargetPercentile, CliError> {
        match self.target_percentile.as_str() {
            "p50" => Ok(TargetPercentile::P50),
            "p90" => Ok(TargetPercentile::P90),
            other => Err(range(format!(
                "target_percentile must be `p50` or `p90`, got `{other}`"
            ))),
        }
    }

    /// Scenario for the configured `n_faps` and `channels`. Call after
    /// [`FileConfig::validate`].
    pub fn scenario(&self) -> ScenarioConfig {
        ScenarioConfig {
            area: Area {
                side: self.area_side_m,
                femto_radius: self.femto_radius_m,
                macro_radius: self.macro_radius_m,
            },
            n_faps: self.n_faps,
            channels_available: self.channels,
            algorithm: self.algorithm().unwrap_or(Algorithm::Gvcf),
            n_replicas: self.replicas,
            base_seed: self.seed,
            radio: RadioParams {
                carrier_freq_ghz: self.carrier_freq_ghz,
                internal_wall_loss_db: self.internal_wall_loss_db,
                external_wall_loss_per_wall_db: self.external_wall_loss_db,
                n_external_walls_interference: self.external_walls,
                shadowing_sigma_db: self.shadowing_db,
                ms_noise_figure_db: self.noise_figure_db,
                channel_width_hz: self.channel_width_khz * 1e3,
                macro_tx_dbm: self.macro_tx_dbm,
                se_cap: self.se_cap_bpshz,
            },
            gvcf: GvcfConfig {
                d_th: self.safety_distance_m,
                max_ms_per_fap: self.max_ms_per_fap,
                se_target: self.se_target_bpshz,
                sinr_target: self.sinr_target_db,
                percentile_for_targets: self.percentile().unwrap_or(TargetPercentile::P50),
            },
            fap_tx_dbm: self.fap_tx_dbm,
            ms_per_fap: self.ms_count().unwrap_or_default(),
        }
    }
}

fn parse_override(s: &str) -> Result<(String, toml::Value), CliError> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| CliError::Malformed(format!("override `{s}` is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    if key.is_empty() {
        return Err(CliError::Malformed(format!(
            "override `{s}` has an empty key"
        )));
    }
    let doc: Result<toml::Table, _> = format!("v = {raw}").parse();
    let value = match doc {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        // bare words such as `algorithm=ncs`
        Err(_) => toml::Value::String(raw.to_string()),
    };
    Ok((key.to_string(), value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let c = FileConfig::parse("", &[]).unwrap();
        assert_eq!(c, FileConfig::default());
        let s = c.scenario();
        assert_eq!(s.area.femto_radius, 10.0);
        assert_eq!(s.fap_tx_dbm, 10.0);
        assert_eq!(s.radio.channel_width_hz, 180_000.0);
        assert_eq!(s.radio.shadowing_sigma_db, 6.0);
        assert_eq!(s, ScenarioConfig::default());
    }

    #[test]
    fn overrides_apply_after_file() {
        let c = FileConfig::parse(
            "n_faps = 100\n",
            &["n_faps=200".into(), "channels=20".into()],
        )
        .unwrap();
        assert_eq!(c.n_faps, 200);
        assert_eq!(c.channels, 20);
        let c =
            FileConfig::parse("", &["algorithm=ncs".into(), "sweep_n_faps=[50]".into()]).unwrap();
        assert_eq!(c.algorithm().unwrap(), Algorithm::Ncs);
        assert_eq!(c.sweep_n_faps, vec![50]);
    }

    #[test]
    fn error_kinds() {
        assert!(matches!(
            FileConfig::parse("", &["channels=21".into()]),
            Err(CliError::Range(_))
        ));
        assert!(matches!(
            FileConfig::parse("channels = 0", &[]),
            Err(CliError::Range(_))
        ));
        assert!(matches!(
            FileConfig::parse("bogus = 1", &[]),
            Err(CliError::Malformed(_))
        ));
        assert!(matches!(
            FileConfig::parse("n_faps = ", &[]),
            Err(CliError::Malformed(_))
        ));
        assert!(matches!(
            FileConfig::parse("n_faps = \"x\"", &[]),
            Err(CliError::Malformed(_))
        ));
        assert!(matches!(
            FileConfig::parse("", &["noequals".into()]),
            Err(CliError::Malformed(_))
        ));
        assert!(matches!(
            FileConfig::load(Some(Path::new("/nonexistent/femtosim.toml")), &[]),
            Err(CliError::MissingFile(_))
        ));
    }

    #[test]
    fn serialization_round_trips() {
        let mut c = FileConfig::default();
        assert_eq!(FileConfig::parse(&c.to_toml(), &[]).unwrap(), c);
        c.se_target_bpshz = Some(3.6);
        c.se_cap_bpshz = Some(6.0);
        c.algorithm = "ncs".into();
        c.sweep_channels = vec![8, 12];
        assert_eq!(FileConfig::parse(&c.to_toml(), &[]).unwrap(), c);
    }
}
