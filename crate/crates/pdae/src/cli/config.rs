//! Run configuration: a flat JSON key set plus named initial-condition
//! presets. Unknown keys are rejected so a typo cannot silently fall
//! back to a default.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constraint::{ConstraintSign, ConstraintSolver};
use crate::error::{PdaeError, Result};
use crate::grid::{DiffState, Grid1D, GridFn};
use crate::integrate::{Evolution, RhsMode, Scheme, StepperConfig};
use crate::operators::{BoundaryKind, OperatorSet};

use super::io::read_field_csv;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BcKind {
    #[default]
    Neumann,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    #[default]
    ExpEuler,
    Etd2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityKind {
    #[default]
    Paper,
    SquareTest,
    Zero,
}

/// Named initial-condition presets per field. `from_csv` reads a
/// two-column `x,value` file written with 17 significant digits, so a
/// field can be round-tripped bitwise through text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum IcPreset {
    #[default]
    Zero,
    GaussBump {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    CosineMode {
        k: u32,
        amplitude: f64,
    },
    FromCsv {
        path: PathBuf,
    },
}

impl IcPreset {
    fn validate(&self) -> Result<()> {
        match self {
            IcPreset::Zero => Ok(()),
            IcPreset::GaussBump {
                amplitude,
                center,
                width,
            } => {
                if !(amplitude.is_finite() && center.is_finite() && width.is_finite()) {
                    return Err(PdaeError::Config("gauss_bump parameters must be finite".into()));
                }
                if *width <= 0.0 {
                    return Err(PdaeError::Config(format!(
                        "gauss_bump width must be positive, got {width}"
                    )));
                }
                Ok(())
            }
            IcPreset::CosineMode { amplitude, .. } => {
                if !amplitude.is_finite() {
                    return Err(PdaeError::Config("cosine_mode amplitude must be finite".into()));
                }
                Ok(())
            }
            IcPreset::FromCsv { .. } => Ok(()),
        }
    }

    pub fn evaluate(&self, grid: &Arc<Grid1D>, base_dir: &Path) -> Result<GridFn> {
        match self {
            IcPreset::Zero => Ok(GridFn::zeros(grid.clone())),
            IcPreset::GaussBump {
                amplitude,
                center,
                width,
            } => GridFn::from_fn(grid.clone(), |x| {
                let z = (x - center) / width;
                amplitude * (-0.5 * z * z).exp()
            }),
            IcPreset::CosineMode { k, amplitude } => {
                let freq = *k as f64 * std::f64::consts::PI;
                GridFn::from_fn(grid.clone(), |x| amplitude * (freq * x).cos())
            }
            IcPreset::FromCsv { path } => {
                let resolved = if path.is_absolute() {
                    path.clone()
                } else {
                    base_dir.join(path)
                };
                read_field_csv(&resolved, grid)
            }
        }
    }
}

fn d_n_cells() -> usize {
    64
}
fn d_sign() -> i64 {
    -1
}
fn d_dt() -> f64 {
    1e-3
}
fn d_t_end() -> f64 {
    0.5
}
fn d_output_every() -> usize {
    1
}
fn d_threshold() -> f64 {
    1e8
}

/// The full flat key set of a run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "d_n_cells")]
    pub n_cells: usize,
    #[serde(default)]
    pub bc: BcKind,
    #[serde(default = "d_sign")]
    pub constraint_sign: i64,
    #[serde(default)]
    pub scheme: SchemeKind,
    #[serde(default = "d_dt")]
    pub dt: f64,
    #[serde(default = "d_t_end")]
    pub t_end: f64,
    #[serde(default = "d_output_every")]
    pub output_every: usize,
    #[serde(default)]
    pub ic_u: IcPreset,
    #[serde(default)]
    pub ic_v: IcPreset,
    #[serde(default = "d_threshold")]
    pub blowup_norm_threshold: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub a_disabled: bool,
    #[serde(default)]
    pub nonlinearity: NonlinearityKind,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all keys defaulted")
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            PdaeError::Config(format!("cannot read {}: {e}", path.display()))
        })?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| PdaeError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cells < 4 {
            return Err(PdaeError::Config(format!(
                "n_cells must be at least 4, got {}",
                self.n_cells
            )));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(PdaeError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(PdaeError::Config(format!(
                "t_end must be nonnegative, got {}",
                self.t_end
            )));
        }
        if self.output_every == 0 {
            return Err(PdaeError::Config("output_every must be at least 1".into()));
        }
        if !(self.blowup_norm_threshold.is_finite() && self.blowup_norm_threshold > 1.0) {
            return Err(PdaeError::Config(format!(
                "blowup_norm_threshold must exceed 1, got {}",
                self.blowup_norm_threshold
            )));
        }
        ConstraintSign::from_factor(self.constraint_sign).map_err(|e| {
            PdaeError::Config(e.to_string())
        })?;
        self.ic_u.validate()?;
        self.ic_v.validate()?;
        Ok(())
    }

    pub fn boundary_kind(&self) -> BoundaryKind {
        match self.bc {
            BcKind::Neumann => BoundaryKind::Neumann,
            BcKind::Dirichlet => BoundaryKind::Dirichlet,
        }
    }

    pub fn scheme(&self) -> Scheme {
        match self.scheme {
            SchemeKind::ExpEuler => Scheme::ExpEuler,
            SchemeKind::Etd2 => Scheme::Etd2,
        }
    }

    pub fn rhs_mode(&self) -> RhsMode {
        match self.nonlinearity {
            NonlinearityKind::Paper => RhsMode::Reduced,
            NonlinearityKind::SquareTest => RhsMode::SquareTest,
            NonlinearityKind::Zero => RhsMode::Zero,
        }
    }

    pub fn stepper_config(&self) -> StepperConfig {
        let mut cfg = StepperConfig::new(self.scheme(), self.dt, self.t_end);
        cfg.blowup_norm_threshold = self.blowup_norm_threshold;
        cfg.output_every = self.output_every;
        cfg
    }

    /// Assemble everything a run needs. `base_dir` anchors relative
    /// `from_csv` paths (callers pass the config file's directory).
    pub fn build(&self, base_dir: &Path) -> Result<Session> {
        self.validate()?;
        let grid = Grid1D::shared(self.n_cells)?;
        let ops = OperatorSet::assemble(grid.clone(), self.boundary_kind())?;
        let solver = ConstraintSolver::new(&ops, ConstraintSign::from_factor(self.constraint_sign)?)?;
        let initial = DiffState::new(
            self.ic_u.evaluate(&grid, base_dir)?,
            self.ic_v.evaluate(&grid, base_dir)?,
        )?;
        Ok(Session {
            grid,
            ops,
            solver,
            initial,
            stepper: self.stepper_config(),
            rhs_mode: self.rhs_mode(),
            a_disabled: self.a_disabled,
        })
    }
}

/// Assembled run state: operators, cached constraint factorization,
/// initial data, and stepping parameters.
pub struct Session {
    pub grid: Arc<Grid1D>,
    pub ops: OperatorSet,
    pub solver: ConstraintSolver,
    pub initial: DiffState,
    pub stepper: StepperConfig,
    pub rhs_mode: RhsMode,
    pub a_disabled: bool,
}

impl Session {
    pub fn evolution(&self) -> Evolution<'_> {
        Evolution::new(&self.ops, &self.solver)
            .with_mode(self.rhs_mode)
            .with_generator_disabled(self.a_disabled)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_empty_object() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.n_cells, 64);
        assert_eq!(cfg.constraint_sign, -1);
        assert_eq!(cfg.bc, BcKind::Neumann);
        assert_eq!(cfg.nonlinearity, NonlinearityKind::Paper);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"n_cellz": 64}"#);
        assert!(err.is_err());
    }

    #[test]
    fn presets_parse() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{
                "n_cells": 32,
                "ic_u": {"preset": "cosine_mode", "k": 1, "amplitude": 0.5},
                "ic_v": {"preset": "gauss_bump", "amplitude": 1.0, "center": 0.5, "width": 0.1}
            }"#,
        )
        .unwrap();
        assert!(matches!(cfg.ic_u, IcPreset::CosineMode { k: 1, .. }));
        let session = cfg.build(Path::new(".")).unwrap();
        assert_eq!(session.grid.n_cells(), 32);
        let mid = session.grid.n_nodes() / 2;
        assert!((session.initial.v().values()[mid] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_values_are_rejected() {
        for bad in [
            r#"{"dt": 0.0}"#,
            r#"{"t_end": -1.0}"#,
            r#"{"constraint_sign": 2}"#,
            r#"{"n_cells": 2}"#,
            r#"{"blowup_norm_threshold": 0.5}"#,
            r#"{"ic_u": {"preset": "gauss_bump", "amplitude": 1.0, "center": 0.5, "width": 0.0}}"#,
        ] {
            let cfg: RunConfig = serde_json::from_str(bad).unwrap();
            assert!(cfg.validate().is_err(), "accepted bad config {bad}");
        }
    }

    #[test]
    fn cosine_mode_zero_frequency_is_constant() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"ic_u": {"preset": "cosine_mode", "k": 0, "amplitude": 10.0}}"#,
        )
        .unwrap();
        let session = cfg.build(Path::new(".")).unwrap();
        for v in session.initial.u().values() {
            assert_eq!(*v, 10.0);
        }
    }
}
