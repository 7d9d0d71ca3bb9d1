//! Flat key-value run configuration.
//!
//! Keys mirror the fields of [`SearchParams`]; durations are in seconds.
//!
//! ```toml
//! n_shak = 50
//! mode = "simple"
//! t_limit = 5.0
//! ```

use std::time::Duration;

use bppc_core::{BinRemoval, CoverMode, FfdOrder, Mode, PenaltyWeights, SearchParams};
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Value(String),
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub n_shak: Option<usize>,
    pub n_ls: Option<usize>,
    pub n_sc: Option<usize>,
    pub s_pool: Option<usize>,
    pub t_limit: Option<f64>,
    pub s_shak: Option<usize>,
    pub omega_c: Option<i64>,
    pub omega_w: Option<i64>,
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub wall_limit: Option<f64>,
    pub ffd_order: Option<FfdOrder>,
    pub bin_removal: Option<BinRemoval>,
    pub assign_max_nodes: Option<usize>,
    pub cover_mode: Option<CoverMode>,
    pub sc_node_limit: Option<u64>,
}

fn seconds(name: &str, value: f64) -> Result<Duration, ConfigError> {
    Duration::try_from_secs_f64(value).map_err(|_| ConfigError::Value(format!("{name} must be a non-negative number of seconds")))
}

impl Overrides {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Fields set in `other` take precedence.
    pub fn merged(mut self, other: &Overrides) -> Overrides {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f.clone(); } )* };
        }
        take!(
            n_shak, n_ls, n_sc, s_pool, t_limit, s_shak, omega_c, omega_w, mode, seed, wall_limit, ffd_order,
            bin_removal, assign_max_nodes, cover_mode, sc_node_limit
        );
        self
    }

    pub fn apply(&self, params: &mut SearchParams) -> Result<(), ConfigError> {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { params.$f = v; } )* };
        }
        set!(n_shak, n_ls, n_sc, s_pool, s_shak, mode, seed, ffd_order, bin_removal, cover_mode);
        if let Some(v) = self.t_limit {
            params.t_limit = seconds("t_limit", v)?;
        }
        if let Some(v) = self.wall_limit {
            params.wall_limit = Some(seconds("wall_limit", v)?);
        }
        if let Some(v) = self.assign_max_nodes {
            params.assign_max_nodes = Some(v);
        }
        if let Some(v) = self.sc_node_limit {
            params.sc_node_limit = Some(v);
        }
        match (self.omega_c, self.omega_w) {
            (None, None) => {}
            (c, w) => {
                let current = params.weights;
                let c = c.or(current.map(|p| p.conflict()));
                let w = w.or(current.map(|p| p.excess())).unwrap_or(1);
                let Some(c) = c else {
                    return Err(ConfigError::Value("omega_w given without omega_c".into()));
                };
                params.weights = Some(
                    PenaltyWeights::new(c, w)
                        .ok_or_else(|| ConfigError::Value("penalty weights must be positive".into()))?,
                );
            }
        }
        params.validate().map_err(|e| ConfigError::Value(e.to_string()))
    }

    pub fn to_params(&self) -> Result<SearchParams, ConfigError> {
        let mut params = SearchParams::default();
        self.apply(&mut params)?;
        Ok(params)
    }
}
