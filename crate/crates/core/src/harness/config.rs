use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ConfigError;
use crate::record::CoreConfig;
use crate::sbr::SbrConfig;
use crate::tage::TageConfig;
use crate::timeline::TivConfig;

/// A branch address that reads and writes as `0x`-prefixed hex in JSON.
/// Plain integers are accepted on input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pc(pub u64);

impl fmt::Display for Pc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

impl FromStr for Pc {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
            Some(hex) => u64::from_str_radix(hex, 16),
            None => s.parse(),
        };
        parsed.map(Pc).map_err(|_| ConfigError::new(format!("`{s}` is not a branch address")))
    }
}

impl Serialize for Pc {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Pc {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(n) => Ok(Pc(n)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// The `sbr.*` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SbrParams {
    pub alloc_accuracy_threshold: f64,
    pub conf_min_obs: u32,
    pub conf_sbr_min: f64,
    pub conf_fetch_max: f64,
    /// Derive the H2P set from a baseline pass.
    pub h2p_auto: bool,
    /// Explicit H2P set, used when `h2p_auto` is off.
    pub h2p_pcs: Vec<Pc>,
    pub per_pc_repredict: BTreeMap<Pc, u32>,
}

impl Default for SbrParams {
    fn default() -> Self {
        let d = SbrConfig::default();
        SbrParams {
            alloc_accuracy_threshold: d.alloc_accuracy_threshold,
            conf_min_obs: d.conf_min_obs,
            conf_sbr_min: d.conf_sbr_min,
            conf_fetch_max: d.conf_fetch_max,
            h2p_auto: true,
            h2p_pcs: Vec::new(),
            per_pc_repredict: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YtivMode {
    Excluded,
    /// Included, with every power-of-two threshold from 2 up to the
    /// re-predict cycle.
    Included,
}

/// The `sweep.*` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub repredict_cycles: Vec<u32>,
    pub co_thresholds: Vec<u32>,
    pub ytiv_modes: Vec<YtivMode>,
    pub xor_ghist: Vec<bool>,
    pub alloc_accuracy_thresholds: Vec<f64>,
    pub master_seed: u64,
    /// Worker threads; 0 picks the number of cores.
    pub threads: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            repredict_cycles: vec![4, 8, 16, 32],
            co_thresholds: vec![2, 4, 8, 16, 32, 64, 128],
            ytiv_modes: vec![YtivMode::Excluded, YtivMode::Included],
            xor_ghist: vec![false, true],
            alloc_accuracy_thresholds: vec![0.99, 0.80],
            master_seed: 1,
            threads: 0,
        }
    }
}

/// One experiment configuration document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub core: CoreConfig,
    /// Fetch predictor; the SBR TAGE uses the same geometry without a bimodal table.
    pub tage: TageConfig,
    pub tiv: TivConfig,
    pub sbr: SbrParams,
    pub sweep: SweepSpec,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError::new(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.core.validate()?;
        self.tage.validate()?;
        if !self.sbr.h2p_auto && self.sbr.h2p_pcs.is_empty() {
            return Err(ConfigError::new("sbr.h2p_pcs is empty and sbr.h2p_auto is off"));
        }
        self.sbr_config(Vec::new()).validate()
    }

    /// SBR configuration for the given H2P set.
    pub fn sbr_config(&self, h2p_set: Vec<u64>) -> SbrConfig {
        SbrConfig {
            tiv: self.tiv.clone(),
            sbr_tage: TageConfig { use_bimodal: false, ..self.tage.clone() },
            alloc_accuracy_threshold: self.sbr.alloc_accuracy_threshold,
            conf_min_obs: self.sbr.conf_min_obs,
            conf_sbr_min: self.sbr.conf_sbr_min,
            conf_fetch_max: self.sbr.conf_fetch_max,
            h2p_set,
            per_pc_repredict: self.sbr.per_pc_repredict.iter().map(|(pc, &rc)| (pc.0, rc)).collect(),
        }
    }
}
