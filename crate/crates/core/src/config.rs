//! Run configuration: one JSON document, fully defaulted, with every value
//! overridable by its dotted key.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::detector::{DetectorConfig, FeatureConfig, SelfTrainConfig};
use crate::finegrained::FineConfig;
use crate::refinement::{Mode, PipelineConfig, RefinementConfig};
use crate::social::CommunityConfig;
use crate::synth::SynthConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub addr: String,
    /// When set, every request must carry it in `x-annotator-token`.
    pub token: Option<String>,
    /// How often an interactive run checks the queue, in milliseconds.
    pub poll_ms: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            addr: "127.0.0.1:8080".into(),
            token: None,
            poll_ms: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Users with fewer collected tweets are dropped at ingest.
    pub min_tweets_per_user: usize,
    pub features: FeatureConfig,
    pub detector: DetectorConfig,
    pub self_train: SelfTrainConfig,
    pub communities: CommunityConfig,
    pub refinement: RefinementConfig,
    pub finegrained: FineConfig,
    pub synth: SynthConfig,
    pub service: ServiceConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            min_tweets_per_user: 5,
            features: FeatureConfig::default(),
            detector: DetectorConfig::default(),
            self_train: SelfTrainConfig::default(),
            communities: CommunityConfig::default(),
            refinement: RefinementConfig::default(),
            finegrained: FineConfig::default(),
            synth: SynthConfig::default(),
            service: ServiceConfig::default(),
        }
    }
}

fn located(e: serde_path_to_error::Error<serde_json::Error>) -> Error {
    let path = e.path().to_string();
    let inner = e.into_inner();
    let message = inner.to_string();
    if let Some(rest) = message.strip_prefix("unknown field `") {
        let field = rest.split('`').next().unwrap_or_default();
        let key = if path == "." || path.ends_with(field) {
            path.trim_start_matches('.').to_string()
        } else {
            format!("{path}.{field}")
        };
        return Error::ConfigKey(if key.is_empty() { field.to_string() } else { key });
    }
    Error::ConfigValue {
        key: path,
        message: message.split(" at line").next().unwrap_or_default().to_string(),
    }
}

impl RunConfig {
    pub fn from_value(value: Value) -> Result<Self> {
        let config: RunConfig = serde_path_to_error::deserialize(value).map_err(located)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        Self::from_value(value)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Loads `path` if given, then applies `key=value` overrides in order.
    pub fn resolve(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let base = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        base.with_overrides(overrides)
    }

    /// Values are read as JSON when they parse, otherwise as strings.
    pub fn with_overrides(&self, overrides: &[(String, String)]) -> Result<Self> {
        let mut value = serde_json::to_value(self)?;
        for (key, raw) in overrides {
            let slot = key
                .split('.')
                .try_fold(&mut value, |node, part| match node {
                    Value::Object(map) => map.get_mut(part),
                    Value::Array(items) => part.parse::<usize>().ok().and_then(move |i| items.get_mut(i)),
                    _ => None,
                })
                .ok_or_else(|| Error::ConfigKey(key.clone()))?;
            let new = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.clone()));
            if matches!(slot, Value::Object(_)) && !matches!(new, Value::Object(_)) {
                return Err(Error::ConfigValue {
                    key: key.clone(),
                    message: "is a section; set one of its keys".into(),
                });
            }
            *slot = new;
        }
        Self::from_value(value)
    }

    /// Sets every seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.detector.seed = seed;
        self.communities.seed = seed;
        self.finegrained.seed = seed;
        self.synth.seed = seed;
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.refinement.mode = mode;
    }

    pub fn validate(&self) -> Result<()> {
        self.communities.validate()?;
        self.synth.validate()?;
        let q = self.self_train.entropy_quantile;
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::ConfigValue {
                key: "self_train.entropy_quantile".into(),
                message: format!("must be in [0, 1], got {q}"),
            });
        }
        if self.features.repr_dim <= crate::detector::N_STATS {
            return Err(Error::ConfigValue {
                key: "features.repr_dim".into(),
                message: format!("must exceed the {} cascade statistics", crate::detector::N_STATS),
            });
        }
        if self.features.hash_dim == 0 {
            return Err(Error::ConfigValue {
                key: "features.hash_dim".into(),
                message: "must be positive".into(),
            });
        }
        Ok(())
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            features: self.features,
            detector: self.detector,
            self_train: self.self_train,
            communities: self.communities,
            refinement: self.refinement,
            finegrained: self.finegrained,
        }
    }

    pub fn to_pretty_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_json(&c.to_pretty_json().unwrap()).unwrap(), c);
        assert_eq!(RunConfig::from_json("{}").unwrap(), c);
    }

    #[test]
    fn dotted_overrides() {
        let c = RunConfig::default()
            .with_overrides(&set(&[
                ("detector.epochs", "30"),
                ("refinement.mode", "interactive"),
                ("synth.propensity.1", "0.2"),
                ("service.token", "secret"),
            ]))
            .unwrap();
        assert_eq!(c.detector.epochs, 30);
        assert_eq!(c.refinement.mode, Mode::Interactive);
        assert_eq!(c.synth.propensity, vec![0.85, 0.2]);
        assert_eq!(c.service.token.as_deref(), Some("secret"));
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = RunConfig::default().with_overrides(&set(&[("detector.epoch", "3")])).unwrap_err();
        assert!(matches!(&e, Error::ConfigKey(k) if k == "detector.epoch"), "{e}");
        let e = RunConfig::from_json(r#"{"detector": {"epoch": 3}}"#).unwrap_err();
        assert!(matches!(&e, Error::ConfigKey(k) if k == "detector.epoch"), "{e}");
        let e = RunConfig::from_json(r#"{"detectr": {}}"#).unwrap_err();
        assert!(matches!(&e, Error::ConfigKey(k) if k == "detectr"), "{e}");
    }

    #[test]
    fn bad_values_are_named() {
        let e = RunConfig::default().with_overrides(&set(&[("detector.epochs", "many")])).unwrap_err();
        assert!(matches!(&e, Error::ConfigValue { key, .. } if key == "detector.epochs"), "{e}");
        let e = RunConfig::default().with_overrides(&set(&[("communities.tau_dom", "0.3")])).unwrap_err();
        assert!(matches!(&e, Error::ConfigValue { key, .. } if key == "communities.tau_dom"), "{e}");
        let e = RunConfig::default().with_overrides(&set(&[("detector", "3")])).unwrap_err();
        assert!(matches!(&e, Error::ConfigValue { key, .. } if key == "detector"), "{e}");
    }

    #[test]
    fn seed_reaches_every_module() {
        let mut c = RunConfig::default();
        c.set_seed(99);
        let p = c.pipeline();
        assert_eq!((p.detector.seed, p.communities.seed, p.finegrained.seed, c.synth.seed), (99, 99, 99, 99));
    }
}
