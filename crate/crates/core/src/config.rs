//! Run configuration: a JSON-serializable description of a job, merged with
//! command-line overrides and resolved into validated library types.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{DynamicsConfig, DynamicsError, GridSpec};
use crate::maps::{MapError, MapKind, MapSpec, ParamMode};
use crate::qc::{estimate_dilatation, QcError, SampleRegion};
use crate::regions::{EscapeSeeds, RegionError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("dilatation estimate for faithful mode failed: {0}")]
    Estimate(#[from] QcError),
}

/// Partial overrides for the dynamics thresholds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsOverrides {
    pub escape_radius: Option<f64>,
    pub zero_tol: Option<f64>,
    pub max_iter: Option<u32>,
    pub check_horizon: Option<u32>,
}

/// A run description. Every field is optional so that a config file and
/// command-line flags can be merged; flags win.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub map: Option<MapKind>,
    pub mode: Option<ParamMode>,
    pub d: Option<u32>,
    pub delta: Option<f64>,
    pub eps: Option<f64>,
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsOverrides>,
    pub grid: Option<GridSpec>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<String>>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("RunConfig serializes")
    }

    /// Overlay `other` on `self`: any field set in `other` wins.
    pub fn merged_with(&self, other: &RunConfig) -> RunConfig {
        RunConfig {
            map: other.map.or(self.map),
            mode: other.mode.or(self.mode),
            d: other.d.or(self.d),
            delta: other.delta.or(self.delta),
            eps: other.eps.or(self.eps),
            eta: other.eta.or(self.eta),
            dynamics: match (self.dynamics, other.dynamics) {
                (Some(a), Some(b)) => Some(DynamicsOverrides {
                    escape_radius: b.escape_radius.or(a.escape_radius),
                    zero_tol: b.zero_tol.or(a.zero_tol),
                    max_iter: b.max_iter.or(a.max_iter),
                    check_horizon: b.check_horizon.or(a.check_horizon),
                }),
                (a, b) => b.or(a),
            },
            grid: other.grid.or(self.grid),
            seed: other.seed.or(self.seed),
            out: other.out.clone().or_else(|| self.out.clone()),
            checks: other.checks.clone().or_else(|| self.checks.clone()),
        }
    }

    /// Apply defaults and validate into ready-to-use library types.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let kind = self.map.unwrap_or(MapKind::PolyP);
        let mode = self.mode.unwrap_or(ParamMode::Demo);
        let spec = match mode {
            ParamMode::Demo => {
                let demo = MapSpec::demo(kind);
                MapSpec::with_params(
                    kind,
                    self.d.unwrap_or(demo.d),
                    self.delta.unwrap_or(demo.delta),
                    ParamMode::Demo,
                )?
            }
            ParamMode::Faithful => {
                // faithful parameters hinge on the sampled dilatation of the
                // stretch over the cone where its derivative is nonconstant
                let stretch = MapSpec::demo(MapKind::StretchH);
                let report =
                    estimate_dilatation(&stretch, &SampleRegion::StretchCone, 20_000, 1e-6)?;
                let derived = MapSpec::faithful(kind, report.k_hat)?;
                let spec = MapSpec::with_params(
                    kind,
                    self.d.unwrap_or(derived.d),
                    self.delta.unwrap_or(derived.delta),
                    ParamMode::Faithful,
                )?;
                spec.ensure_faithful(report.k_hat)?;
                spec
            }
        };
        let mut dynamics = DynamicsConfig::for_map(&spec);
        if let Some(over) = self.dynamics {
            if let Some(v) = over.escape_radius {
                dynamics.escape_radius = v;
            }
            if let Some(v) = over.zero_tol {
                dynamics.zero_tol = v;
            }
            if let Some(v) = over.max_iter {
                dynamics.max_iter = v;
            }
            if let Some(v) = over.check_horizon {
                dynamics.check_horizon = v;
            }
        }
        dynamics.validate()?;
        let seeds = EscapeSeeds::new(self.eps.unwrap_or(1.0 / 32.0))?;
        let grid = self.grid.unwrap_or(GridSpec {
            x0: -1.5,
            y0: -1.5,
            x1: 1.5,
            y1: 1.5,
            width: 512,
            height: 512,
        });
        grid.validate()?;
        Ok(Resolved {
            spec,
            dynamics,
            seeds,
            eta: self.eta.unwrap_or(1e-3),
            grid,
            seed: self.seed.unwrap_or(0),
            out: self.out.clone(),
            checks: self.checks.clone(),
        })
    }
}

/// A validated, fully-defaulted run description.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub spec: MapSpec,
    pub dynamics: DynamicsConfig,
    pub seeds: EscapeSeeds,
    pub eta: f64,
    pub grid: GridSpec,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub checks: Option<Vec<String>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_field_identical() {
        let config = RunConfig {
            map: Some(MapKind::PolyP),
            mode: Some(ParamMode::Demo),
            d: Some(5),
            delta: Some(0.01),
            eps: Some(0.03125),
            eta: Some(1e-3),
            dynamics: Some(DynamicsOverrides {
                escape_radius: Some(8.944),
                zero_tol: Some(1e-9),
                max_iter: Some(10_000),
                check_horizon: Some(10),
            }),
            grid: Some(GridSpec {
                x0: -1.5,
                y0: -1.5,
                x1: 1.5,
                y1: 1.5,
                width: 512,
                height: 512,
            }),
            seed: Some(7),
            out: Some(PathBuf::from("out.ppm")),
            checks: Some(vec!["symmetry".into()]),
        };
        let text = config.to_json();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn map_names_use_the_flag_spelling() {
        let text = r#"{"map": "ftilde", "mode": "demo"}"#;
        let config: RunConfig = serde_json::from_str(text).unwrap();
        assert_eq!(config.map, Some(MapKind::TranscendentalFt));
        assert!(serde_json::from_str::<RunConfig>(r#"{"map": "q"}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"mop": "p"}"#).is_err());
    }

    #[test]
    fn flag_overrides_win_over_the_file() {
        let file = RunConfig {
            map: Some(MapKind::DyadicF),
            delta: Some(0.5),
            seed: Some(1),
            ..Default::default()
        };
        let flags = RunConfig {
            map: Some(MapKind::PolyP),
            ..Default::default()
        };
        let merged = file.merged_with(&flags);
        assert_eq!(merged.map, Some(MapKind::PolyP));
        assert_eq!(merged.delta, Some(0.5));
        assert_eq!(merged.seed, Some(1));
    }

    #[test]
    fn resolve_applies_defaults_and_validates() {
        let resolved = RunConfig::default().resolve().unwrap();
        assert_eq!(resolved.spec.kind, MapKind::PolyP);
        assert_eq!(resolved.spec.d, 5);
        assert_eq!(resolved.grid.width, 512);
        assert!((resolved.seeds.epsilon() - 0.03125).abs() < 1e-15);

        let bad = RunConfig {
            d: Some(4),
            ..Default::default()
        };
        assert!(bad.resolve().is_err());
        let bad_eps = RunConfig {
            eps: Some(0.3),
            ..Default::default()
        };
        assert!(bad_eps.resolve().is_err());
    }

    #[test]
    fn faithful_mode_derives_a_large_odd_degree() {
        let config = RunConfig {
            mode: Some(ParamMode::Faithful),
            ..Default::default()
        };
        let resolved = config.resolve().unwrap();
        assert_eq!(resolved.spec.d % 2, 1);
        assert!(resolved.spec.d > 32, "d = {}", resolved.spec.d);
        assert!(resolved.spec.delta > 0.0);
        // explicit too-small degree must be rejected against the estimate
        let bad = RunConfig {
            mode: Some(ParamMode::Faithful),
            d: Some(5),
            ..Default::default()
        };
        assert!(bad.resolve().is_err());
    }
}
