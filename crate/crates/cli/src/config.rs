//! Run configuration files.

use std::path::Path;

use normcompat::catalogue::examples::Example;
use normcompat::groups::cocharacter::{LeviSub, MirabolicDescriptor};
use normcompat::groups::{Cocharacter, GroupDescriptor, Placement};
use normcompat::linalg::integral::prime_factors;
use normcompat::linalg::QMatrix;
use normcompat::spherical::{PairConfig, SearchStrategy};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("{path}:{line}:{column}: at `{field}`: {msg}")]
    Parse { path: String, line: usize, column: usize, field: String, msg: String },
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
}

/// A `PairConfig` whose `u` may be left out (for `find-u`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub h: GroupDescriptor,
    pub g: GroupDescriptor,
    pub embedding: Vec<Placement>,
    pub eta_g: Cocharacter,
    pub mirabolic_h: MirabolicDescriptor,
    pub levi_sub_g: LeviSub,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<QMatrix>,
}

impl PairSpec {
    /// The pair config, with the identity standing in for a missing `u`.
    pub fn to_config(&self) -> PairConfig {
        PairConfig {
            h: self.h.clone(),
            g: self.g.clone(),
            embedding: self.embedding.clone(),
            eta_g: self.eta_g.clone(),
            mirabolic_h: self.mirabolic_h.clone(),
            levi_sub_g: self.levi_sub_g.clone(),
            u: self.u.clone().unwrap_or_else(|| QMatrix::identity(self.eta_g.len())),
        }
    }
}

impl From<PairConfig> for PairSpec {
    fn from(c: PairConfig) -> Self {
        PairSpec {
            h: c.h,
            g: c.g,
            embedding: c.embedding,
            eta_g: c.eta_g,
            mirabolic_h: c.mirabolic_h,
            levi_sub_g: c.levi_sub_g,
            u: Some(c.u),
        }
    }
}

/// Enumeration caps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    /// Points of `Q_H^0` or `G` modulo `p^depth`.
    pub points: u64,
    /// Cosets in a compactly supported class.
    pub cosets: u64,
    /// Candidates tried by `find-u`.
    pub search: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { points: 1 << 20, cosets: 1 << 12, search: 1 << 12 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub pair: PairSpec,
    pub p: u64,
    pub r_max: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_override: Option<u32>,
    pub budgets: Budgets,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchStrategy>,
}

pub fn is_prime(p: u64) -> bool {
    p >= 2 && prime_factors(&p.into()).into_iter().eq([p])
}

impl RunConfig {
    pub fn from_example(ex: &Example) -> RunConfig {
        let r_max = match ex.name {
            "modular-symbol" | "rankin-selberg" => 2,
            _ => 1,
        };
        RunConfig {
            pair: ex.pair.clone().into(),
            p: ex.p,
            r_max,
            depth_override: None,
            budgets: Budgets::default(),
            seed: 0,
            search: None,
        }
    }

    pub fn parse(text: &str, path: &str) -> Result<RunConfig, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            ConfigError::Parse { path: path.into(), line: inner.line(), column: inner.column(), field, msg: inner.to_string() }
        })?;
        cfg.validate().map_err(|msg| ConfigError::Invalid { path: path.into(), msg })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io { path: shown.clone(), msg: e.to_string() })?;
        RunConfig::parse(&text, &shown)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !is_prime(self.p) {
            return Err(format!("p = {} is not prime", self.p));
        }
        let b = &self.budgets;
        if b.points == 0 || b.cosets == 0 || b.search == 0 {
            return Err("budgets must be positive".into());
        }
        if let Some(u) = &self.pair.u {
            if !u.is_integral() {
                return Err("u must be an integer matrix".into());
            }
        }
        Ok(())
    }

    /// Pretty JSON with a trailing newline, as written to fixture files.
    pub fn to_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// sha256 of the compact serialization, so whitespace does not matter.
    pub fn hash(&self) -> String {
        let s = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(s.as_bytes()))
    }
}
