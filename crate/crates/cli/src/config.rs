//! Experiment configuration: TOML with strict keys, then flag overrides and
//! per-scenario validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use horoflow::surfaces::{Grid, GridField, MagneticField, SurfaceModel};
use horoflow::trig::{TrigSeries, TrigTerm};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    CheckAlgebra,
    Simulate,
    Variation,
    Invariants,
    CriticalValue,
    ClosedOrbit,
    Acceptance,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::CheckAlgebra => "check-algebra",
            Scenario::Simulate => "simulate",
            Scenario::Variation => "variation",
            Scenario::Invariants => "invariants",
            Scenario::CriticalValue => "critical-value",
            Scenario::ClosedOrbit => "closed-orbit",
            Scenario::Acceptance => "acceptance",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    #[default]
    Genus2Octagon,
    FlatTorus,
    Sphere,
    HalfPlane,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default)]
    pub preset: Preset,
    /// Metric scale of the octagon surface, side length of the torus.
    pub scale: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    #[default]
    Constant,
    Bump,
    Trig,
    Grid,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    #[serde(default)]
    pub kind: FieldKind,
    pub lambda: Option<f64>,
    pub base: Option<f64>,
    pub amplitude: Option<f64>,
    pub mean: Option<f64>,
    /// `[amplitude, kx, ky, phase]` per term.
    pub terms: Option<Vec<[f64; 4]>>,
    pub path: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub samples: Option<usize>,
    pub action_samples: Option<usize>,
    pub resolution: Option<usize>,
    /// Points per axis of the check-algebra sweep.
    pub grid: Option<usize>,
    /// Half-width of the check-algebra sweep.
    pub range: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSpec {
    pub x: f64,
    pub y: f64,
    pub phi: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationSpec {
    pub y0: Option<f64>,
    pub ydot0: Option<f64>,
    pub u0: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosedOrbitSpec {
    /// Deck word such as `"a"` or `"T1^2 T2^-1"`.
    pub word: Option<String>,
    pub energy: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptanceSpec {
    pub criteria: Option<Vec<u8>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Option<Scenario>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub field: FieldSpec,
    #[serde(default)]
    pub numerics: Numerics,
    pub start: Option<StartSpec>,
    #[serde(default)]
    pub variation: VariationSpec,
    #[serde(default)]
    pub closed_orbit: ClosedOrbitSpec,
    #[serde(default)]
    pub acceptance: AcceptanceSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Invalid configuration; `key` is the dotted path of the offending entry.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("`{key}`: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        message: message.into(),
    }
}

/// Command-line values that replace config entries.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub samples: Option<usize>,
    pub resolution: Option<usize>,
    pub lambda: Option<f64>,
}

impl ExperimentConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn apply(&mut self, o: &Overrides) {
        fn set<T: Clone>(slot: &mut Option<T>, v: &Option<T>) {
            if v.is_some() {
                slot.clone_from(v);
            }
        }
        set(&mut self.seed, &o.seed);
        set(&mut self.workers, &o.workers);
        set(&mut self.output.dir, &o.out);
        set(&mut self.numerics.dt, &o.dt);
        set(&mut self.numerics.horizon, &o.horizon);
        set(&mut self.numerics.samples, &o.samples);
        set(&mut self.numerics.resolution, &o.resolution);
        if o.lambda.is_some() {
            self.field = FieldSpec {
                lambda: o.lambda,
                ..FieldSpec::default()
            };
        }
    }

    /// Whether the scenario draws random samples and therefore needs a seed.
    pub fn is_stochastic(&self, scenario: Scenario) -> bool {
        match scenario {
            Scenario::Invariants | Scenario::Acceptance => true,
            Scenario::Simulate => self.start.is_none(),
            _ => false,
        }
    }

    /// Checks everything the chosen scenario reads, so that runtime errors
    /// come only from the numerics.
    pub fn validate(&self, scenario: Scenario) -> Result<(), ConfigError> {
        if let Some(s) = self.scenario {
            if s != scenario {
                return Err(invalid("scenario", format!("config is for `{s}` but `{scenario}` was requested")));
            }
        }
        if self.is_stochastic(scenario) && self.seed.is_none() {
            return Err(invalid("seed", format!("missing; required by the stochastic scenario `{scenario}`")));
        }
        if self.workers == Some(0) {
            return Err(invalid("workers", "must be at least 1"));
        }
        let n = &self.numerics;
        for (key, v) in [("numerics.dt", n.dt), ("numerics.horizon", n.horizon), ("numerics.range", n.range)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(invalid(key, format!("must be positive, got {v}")));
                }
            }
        }
        for (key, v) in [
            ("numerics.samples", n.samples),
            ("numerics.action_samples", n.action_samples),
            ("numerics.resolution", n.resolution),
            ("numerics.grid", n.grid),
        ] {
            if v == Some(0) {
                return Err(invalid(key, "must be at least 1"));
            }
        }
        if let Some(e) = self.closed_orbit.energy {
            if !(e.is_finite() && e > 0.0) {
                return Err(invalid("closed_orbit.energy", format!("must be positive, got {e}")));
            }
        }
        if let Some(c) = &self.acceptance.criteria {
            if let Some(bad) = c.iter().find(|id| !horoflow_acceptance::IDS.contains(id)) {
                return Err(invalid("acceptance.criteria", format!("no criterion {bad}")));
            }
        }
        if scenario != Scenario::CheckAlgebra && scenario != Scenario::Acceptance {
            self.model()?;
            self.field()?;
        }
        Ok(())
    }

    pub fn model(&self) -> Result<SurfaceModel, ConfigError> {
        let scale = self.model.scale;
        if let Some(s) = scale {
            if !(s.is_finite() && s > 0.0) {
                return Err(invalid("model.scale", format!("must be positive, got {s}")));
            }
        }
        Ok(match self.model.preset {
            Preset::Genus2Octagon => match scale {
                Some(a) if a != 1.0 => SurfaceModel::genus2_octagon_scaled(a),
                _ => SurfaceModel::genus2_octagon(),
            },
            Preset::FlatTorus => SurfaceModel::flat_torus(scale.unwrap_or(1.0)),
            Preset::Sphere | Preset::HalfPlane if scale.is_some_and(|s| s != 1.0) => {
                return Err(invalid("model.scale", "only the genus2-octagon and flat-torus presets are scalable"))
            }
            Preset::Sphere => SurfaceModel::sphere(),
            Preset::HalfPlane => SurfaceModel::half_plane(),
        })
    }

    pub fn field(&self) -> Result<MagneticField, ConfigError> {
        let f = &self.field;
        let kind_name = format!("{:?}", f.kind).to_lowercase();
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| invalid(key, format!("required for kind = \"{kind_name}\"")));
        let stray: &[(&str, bool)] = match f.kind {
            FieldKind::Constant => &[
                ("field.base", f.base.is_some()),
                ("field.amplitude", f.amplitude.is_some()),
                ("field.mean", f.mean.is_some()),
                ("field.terms", f.terms.is_some()),
                ("field.path", f.path.is_some()),
            ],
            FieldKind::Bump => &[
                ("field.lambda", f.lambda.is_some()),
                ("field.mean", f.mean.is_some()),
                ("field.terms", f.terms.is_some()),
                ("field.path", f.path.is_some()),
            ],
            FieldKind::Trig => &[
                ("field.lambda", f.lambda.is_some()),
                ("field.base", f.base.is_some()),
                ("field.amplitude", f.amplitude.is_some()),
                ("field.path", f.path.is_some()),
            ],
            FieldKind::Grid => &[
                ("field.lambda", f.lambda.is_some()),
                ("field.base", f.base.is_some()),
                ("field.amplitude", f.amplitude.is_some()),
                ("field.mean", f.mean.is_some()),
                ("field.terms", f.terms.is_some()),
            ],
        };
        if let Some((key, _)) = stray.iter().find(|(_, set)| *set) {
            return Err(invalid(key, format!("not used by kind = \"{kind_name}\"")));
        }
        Ok(match f.kind {
            FieldKind::Constant => MagneticField::constant(f.lambda.unwrap_or(0.0)),
            FieldKind::Bump => {
                if self.model.preset != Preset::Genus2Octagon {
                    return Err(invalid("field.kind", "the bump field lives on the genus2-octagon preset"));
                }
                MagneticField::octagon_bump(need(f.base, "field.base")?, need(f.amplitude, "field.amplitude")?)
            }
            FieldKind::Trig => {
                let terms = f.terms.as_ref().ok_or_else(|| invalid("field.terms", "required for kind = \"trig\""))?;
                MagneticField::Trig {
                    mean: f.mean.unwrap_or(0.0),
                    series: TrigSeries::new(
                        terms
                            .iter()
                            .map(|&[amplitude, kx, ky, phase]| TrigTerm { amplitude, kx, ky, phase })
                            .collect(),
                    ),
                }
            }
            FieldKind::Grid => {
                let path = f.path.as_ref().ok_or_else(|| invalid("field.path", "required for kind = \"grid\""))?;
                let grid = Grid::load(path).map_err(|e| invalid("field.path", e.to_string()))?;
                MagneticField::Grid(Arc::new(GridField::new(grid)))
            }
        })
    }

    pub fn out_dir(&self) -> PathBuf {
        self.output.dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}
