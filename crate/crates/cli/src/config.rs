//! Run configuration, schema version 1.
//!
//! A run is one TOML file. Top-level keys:
//!
//! | key              | type    | notes                                          |
//! |------------------|---------|------------------------------------------------|
//! | `schema_version` | integer | must be `1`                                    |
//! | `mode`           | string  | `coeffs`, `bloch`, `jc`, `dephasing-exact`, `markov`, `oracle-compare`, `fig1`, `supp-fig2` |
//! | `seed`           | integer | optional, default 0; recorded in metadata      |
//! | `output`         | string  | optional file stem, default derived from mode  |
//!
//! Tables: `[system]`, `[bath]`, `[grid]`, `[series]`, `[initial]`,
//! `[markov]`, `[oracle]`. Which are required depends on the mode; see
//! [`RunConfig::validate`].

use serde::{Deserialize, Serialize};
use spinbath::oracle::{Mode as OracleMode, OracleModel};
use spinbath::{SpectralFamily, SpectralModel, SystemModel, TimeGrid, TlsParams};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    Coeffs,
    Bloch,
    Jc,
    DephasingExact,
    Markov,
    OracleCompare,
    Fig1,
    SuppFig2,
}

impl RunMode {
    pub fn name(self) -> &'static str {
        match self {
            RunMode::Coeffs => "coeffs",
            RunMode::Bloch => "bloch",
            RunMode::Jc => "jc",
            RunMode::DephasingExact => "dephasing-exact",
            RunMode::Markov => "markov",
            RunMode::OracleCompare => "oracle-compare",
            RunMode::Fig1 => "fig1",
            RunMode::SuppFig2 => "supp-fig2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    pub n_max: usize,
    /// Sum the whole series through the resolvent instead of truncating.
    #[serde(default)]
    pub resolvent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// Bloch vector `(v_x, v_y, v_z)`; `v_z = 1` is the excited state.
    pub bloch: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovConfig {
    /// Weight `D` of the local correlation `D δ(τ − s)`.
    pub rate: f64,
    /// When set, also run the master equation with a peaked kernel of this width.
    #[serde(default)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub frequency: f64,
    pub coupling: f64,
    pub levels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub model: OracleModel,
    pub temperature: f64,
    pub modes: Vec<ModeConfig>,
    /// Extra runs, each with the squared coupling halved again.
    #[serde(default)]
    pub halvings: usize,
}

impl OracleConfig {
    pub fn modes(&self) -> Vec<OracleMode> {
        self.modes
            .iter()
            .map(|m| OracleMode {
                frequency: m.frequency,
                coupling: m.coupling,
            })
            .collect()
    }

    pub fn levels(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.levels).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub mode: RunMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bath: Option<SpectralModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<TimeGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<SeriesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub markov: Option<MarkovConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
}

/// Preset parameters of the `fig1` and `supp-fig2` modes (`ε = Δ = 10`).
pub fn fig1_system() -> SystemModel {
    SystemModel::SpinBoson {
        tls: TlsParams {
            delta: 10.0,
            epsilon: 10.0,
        },
        k0_sq: 0.4,
    }
}

pub fn fig1_bath() -> SpectralModel {
    SpectralModel {
        family: SpectralFamily::OhmicGaussian {
            prefactor: 2.0 * std::f64::consts::PI,
            cutoff: 20.0,
        },
        temperature: 1.0,
    }
}

pub const FIG1_ORDERS: usize = 6;

fn schema(path: &str, msg: impl Into<String>) -> CliError {
    CliError::Schema {
        path: path.to_string(),
        message: msg.into(),
    }
}

fn finite(path: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(schema(path, format!("must be finite, got {x}")))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::parse(text).map_err(|e| schema("", e.to_string()))?;
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            schema(if path == "." { "" } else { &path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    /// Output file stem.
    pub fn stem(&self) -> String {
        self.output.clone().unwrap_or_else(|| self.mode.name().replace('-', "_"))
    }

    pub fn n_max(&self) -> usize {
        match (self.series, self.mode) {
            (Some(s), _) => s.n_max,
            (None, RunMode::Fig1 | RunMode::SuppFig2) => FIG1_ORDERS,
            (None, _) => 1,
        }
    }

    pub fn resolvent(&self) -> bool {
        self.series.is_some_and(|s| s.resolvent)
    }

    /// Mode-specific presence and finiteness checks.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(schema(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if let Some(stem) = &self.output {
            if stem.is_empty() || stem.contains(['/', '\\']) {
                return Err(schema("output", "must be a plain file stem"));
            }
        }
        if let Some(s) = &self.system {
            self.check_system(s)?;
        }
        if let Some(b) = &self.bath {
            b.validate().map_err(|e| schema("bath", e.to_string()))?;
        }
        if let Some(s) = self.series {
            if !(1..=spinbath::kernels::MAX_ORDER).contains(&s.n_max) {
                return Err(schema(
                    "series.n_max",
                    format!("must lie in 1..={}, got {}", spinbath::kernels::MAX_ORDER, s.n_max),
                ));
            }
        }
        if let Some(i) = self.initial {
            for (k, x) in i.bloch.iter().enumerate() {
                finite(&format!("initial.bloch[{k}]"), *x)?;
            }
            let norm = i.bloch.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1.0 + 1e-12 {
                return Err(schema("initial.bloch", format!("norm {norm} exceeds 1")));
            }
        }
        if let Some(m) = self.markov {
            finite("markov.rate", m.rate)?;
            if let Some(s) = m.sigma {
                if !(s > 0.0 && s.is_finite()) {
                    return Err(schema("markov.sigma", format!("must be positive, got {s}")));
                }
            }
        }
        if let Some(o) = &self.oracle {
            self.check_oracle(o)?;
        }

        let need = |present: bool, field: &str| {
            if present {
                Ok(())
            } else {
                Err(schema(field, format!("required for mode {}", self.mode.name())))
            }
        };
        match self.mode {
            RunMode::Fig1 | RunMode::SuppFig2 => {
                need(self.grid.is_some(), "grid")?;
                if self.resolvent() {
                    return Err(schema("series.resolvent", "the preset plots partial sums"));
                }
            }
            RunMode::Coeffs => {
                need(self.system.is_some(), "system")?;
                need(self.bath.is_some(), "bath")?;
                need(self.grid.is_some(), "grid")?;
            }
            RunMode::Bloch | RunMode::DephasingExact => {
                need(self.system.is_some(), "system")?;
                need(self.bath.is_some(), "bath")?;
                need(self.grid.is_some(), "grid")?;
                need(self.initial.is_some(), "initial")?;
                self.require_spin_boson()?;
                if self.mode == RunMode::DephasingExact {
                    if let Some(SystemModel::SpinBoson { tls, .. }) = self.system {
                        if tls.delta != 0.0 {
                            return Err(schema("system.tls.delta", "pure dephasing needs delta = 0"));
                        }
                    }
                }
            }
            RunMode::Jc => {
                need(self.system.is_some(), "system")?;
                need(self.bath.is_some(), "bath")?;
                need(self.grid.is_some(), "grid")?;
                if !matches!(self.system, Some(SystemModel::JaynesCummings { .. })) {
                    return Err(schema("system.model", "mode jc needs model = \"jaynes_cummings\""));
                }
            }
            RunMode::Markov => {
                need(self.system.is_some(), "system")?;
                need(self.grid.is_some(), "grid")?;
                need(self.initial.is_some(), "initial")?;
                need(self.markov.is_some(), "markov")?;
                self.require_spin_boson()?;
            }
            RunMode::OracleCompare => {
                need(self.grid.is_some(), "grid")?;
                need(self.oracle.is_some(), "oracle")?;
                if self.resolvent() {
                    return Err(schema("series.resolvent", "oracle comparison uses truncated orders"));
                }
            }
        }
        Ok(())
    }

    fn require_spin_boson(&self) -> Result<(), CliError> {
        match self.system {
            Some(SystemModel::SpinBoson { .. }) => Ok(()),
            _ => Err(schema(
                "system.model",
                format!("mode {} needs model = \"spin_boson\"", self.mode.name()),
            )),
        }
    }

    fn check_system(&self, s: &SystemModel) -> Result<(), CliError> {
        match *s {
            SystemModel::SpinBoson { tls, k0_sq } => {
                finite("system.tls.delta", tls.delta)?;
                finite("system.tls.epsilon", tls.epsilon)?;
                finite("system.k0_sq", k0_sq)?;
            }
            SystemModel::JaynesCummings { omega0, g_sq } => {
                finite("system.omega0", omega0)?;
                finite("system.g_sq", g_sq)?;
            }
        }
        s.validate().map_err(|e| schema("system", e.to_string()))
    }

    fn check_oracle(&self, o: &OracleConfig) -> Result<(), CliError> {
        match o.model {
            OracleModel::SpinBoson { tls, k0 } => {
                finite("oracle.model.tls.delta", tls.delta)?;
                finite("oracle.model.tls.epsilon", tls.epsilon)?;
                finite("oracle.model.k0", k0)?;
            }
            OracleModel::Rabi { tls, g } => {
                finite("oracle.model.tls.delta", tls.delta)?;
                finite("oracle.model.tls.epsilon", tls.epsilon)?;
                finite("oracle.model.g", g)?;
            }
            OracleModel::JaynesCummings { omega0, g } => {
                finite("oracle.model.omega0", omega0)?;
                finite("oracle.model.g", g)?;
            }
        }
        finite("oracle.temperature", o.temperature)?;
        for (k, m) in o.modes.iter().enumerate() {
            finite(&format!("oracle.modes[{k}].frequency"), m.frequency)?;
            finite(&format!("oracle.modes[{k}].coupling"), m.coupling)?;
        }
        if o.halvings > 6 {
            return Err(schema("oracle.halvings", format!("at most 6, got {}", o.halvings)));
        }
        spinbath::oracle::DiscreteBathSpec::new(o.modes(), o.levels(), o.temperature)
            .map(|_| ())
            .map_err(|e| schema("oracle.modes", e.to_string()))
    }
}
