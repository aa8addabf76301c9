//! Scenario configuration: one TOML file, overridable by dotted paths.
//!
//! A scenario is either a field run (`[grid]` present) or a 0D drive
//! (`[drive]` present: homogeneous `∇v(t)` imposed, no momentum balance).

use std::path::Path;

use evd_core::grid::{Boundary, Grid};
use evd_core::material::{Material, Profile};
use evd_core::stepper::{GradientSchedule, Problem, State, StepConfig};
use evd_core::Mat3;
use serde::{Deserialize, Serialize};

use crate::error::{EvdError, Result};

const IDENTITY: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

fn identity() -> [[f64; 3]; 3] {
    IDENTITY
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    /// Cells per axis, `dim` entries.
    pub cells: Vec<usize>,
    /// Domain lengths in m, `dim` entries.
    pub length: Vec<f64>,
    pub boundary: Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub schedule: GradientSchedule,
    #[serde(default = "identity")]
    pub fe0: [[f64; 3]; 3],
    #[serde(default = "one")]
    pub alpha0: f64,
}

/// Initial velocity in m/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VelocityInit {
    #[default]
    Zero,
    Uniform {
        value: [f64; 3],
    },
    /// `v₀ = amplitude · sin(2π k x₁ / L₁)`, a shear layer independent of x₀.
    ShearWave {
        amplitude: f64,
        #[serde(default = "one")]
        wavenumber: f64,
    },
    /// `v₀ = rate · (x₀ − L₀/2)`.
    Stretch {
        rate: f64,
    },
    /// Stream function `amplitude · sin²(πx₀/L₀) sin²(πx₁/L₁)`; vanishes on walls.
    Vortex {
        amplitude: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// kg/m³.
    #[serde(default)]
    pub density: Profile,
    #[serde(default)]
    pub velocity: VelocityInit,
    #[serde(default = "identity")]
    pub fe: [[f64; 3]; 3],
    #[serde(default)]
    pub alpha: Profile,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            density: Profile::default(),
            velocity: VelocityInit::Zero,
            fe: IDENTITY,
            alpha: Profile::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Encoding {
    #[default]
    Binary,
    Ascii,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Write a snapshot every n accepted steps (and the last one); 0 disables.
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default)]
    pub encoding: Encoding,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            snapshot_every: 0,
            encoding: Encoding::Binary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    /// Final time in s.
    pub t_end: f64,
    /// Body force per unit mass in m/s², uniform; one entry per axis or empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gravity: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveConfig>,
    pub material: Material,
    #[serde(default)]
    pub solver: StepConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn parse_value(raw: &str) -> toml::Value {
    // a bare TOML value, else the raw text as a string
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Applies `a.b.c=value` to a parsed tree, creating tables as needed.
pub fn apply_override(tree: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| EvdError::Config(format!("override `{assignment}` is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(EvdError::Config(format!("bad override path `{path}`")));
    }
    let mut node = tree;
    for k in &keys[..keys.len() - 1] {
        let entry = node
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| EvdError::Config(format!("override path `{path}` crosses a non-table at `{k}`")))?;
    }
    node.insert(keys[keys.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

impl ScenarioConfig {
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut tree: toml::Table = text.parse().map_err(|e| EvdError::Config(format!("{e}")))?;
        for o in overrides {
            apply_override(&mut tree, o)?;
        }
        let cfg: ScenarioConfig = toml::Value::Table(tree)
            .try_into()
            .map_err(|e: toml::de::Error| EvdError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EvdError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    /// Everything that can be checked before stepping; violations are
    /// configuration errors.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(EvdError::Config(m));
        if !(self.t_end > 0.0) {
            return bad("t_end must be positive".into());
        }
        self.material.validate().map_err(|e| EvdError::Config(e.to_string()))?;
        self.solver.validate().map_err(|e| EvdError::Config(e.to_string()))?;
        match (&self.grid, &self.drive) {
            (Some(_), Some(_)) | (None, None) => {
                return bad("exactly one of [grid] and [drive] must be given".into());
            }
            (None, Some(d)) => {
                let f = Mat3(d.fe0);
                if !(f.det() > 0.0) {
                    return bad(format!("precondition violated: det Fe0 = {} must be > 0", f.det()));
                }
                if !(0.0..=1.0).contains(&d.alpha0) {
                    return bad("alpha0 must lie in [0, 1]".into());
                }
            }
            (Some(g), None) => {
                if !(g.dim == 2 || g.dim == 3) || g.cells.len() != g.dim || g.length.len() != g.dim {
                    return bad("grid needs dim 2 or 3 and dim entries in cells and length".into());
                }
                let rho_min = self.initial.density.min_value();
                if !(rho_min > 0.0) {
                    return bad(format!("precondition violated: min initial density {rho_min} must be > 0"));
                }
                let f = Mat3(self.initial.fe);
                if !(f.det() > 0.0) {
                    return bad(format!("precondition violated: det Fe0 = {} must be > 0", f.det()));
                }
                let (a0, a1) = (self.initial.alpha.min_value(), self.initial.alpha.max_value());
                if !(a0 >= 0.0 && a1 <= 1.0) {
                    return bad("initial alpha must lie in [0, 1]".into());
                }
                if !(self.gravity.is_empty() || self.gravity.len() == g.dim) {
                    return bad("gravity needs one entry per grid axis".into());
                }
                let (pb, s0) = self.build()?;
                pb.check_initial(&s0, &self.solver)
                    .map_err(|e| EvdError::Config(format!("precondition violated: {e}")))?;
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        let g = self
            .grid
            .as_ref()
            .ok_or_else(|| EvdError::Config("scenario has no [grid]".into()))?;
        let mut n = [1usize; 3];
        let mut h = [1.0; 3];
        for a in 0..g.dim {
            n[a] = g.cells[a];
            h[a] = g.length[a] / g.cells[a] as f64;
        }
        Grid::new(g.dim, n, h, g.boundary).map_err(|e| EvdError::Config(e.to_string()))
    }

    /// The stepping problem and the initial state of a field scenario.
    pub fn build(&self) -> Result<(Problem, State)> {
        let grid = self.grid()?;
        let (n, d) = (grid.len(), grid.dim());
        let gvec = if self.gravity.is_empty() {
            vec![0.0; d]
        } else {
            self.gravity.clone()
        };
        let gravity: Vec<f64> = (0..n).flat_map(|_| gvec.clone()).collect();
        let pb = Problem::new(&grid, self.material.clone(), gravity).map_err(|e| EvdError::Config(e.to_string()))?;
        let mut s = State::rest(&grid, 1.0);
        let len = grid.lengths();
        let init = &self.initial;
        let mut v = vec![0.0; n * d];
        for c in 0..n {
            let x = grid.center(c);
            s.rho[c] = init.density.value(&x);
            s.alpha[c] = init.alpha.value(&x);
            s.fe[c] = Mat3(init.fe);
            let vc = &mut v[c * d..c * d + d];
            match &init.velocity {
                VelocityInit::Zero => {}
                VelocityInit::Uniform { value } => vc.copy_from_slice(&value[..d]),
                VelocityInit::ShearWave { amplitude, wavenumber } => {
                    vc[0] = amplitude * (2.0 * std::f64::consts::PI * wavenumber * x.0[1] / len[1]).sin();
                }
                VelocityInit::Stretch { rate } => vc[0] = rate * (x.0[0] - 0.5 * len[0]),
                VelocityInit::Vortex { amplitude } => {
                    use std::f64::consts::PI;
                    let (a, b) = (PI * x.0[0] / len[0], PI * x.0[1] / len[1]);
                    // v = (∂ψ/∂x₁, −∂ψ/∂x₀)
                    vc[0] = amplitude * a.sin().powi(2) * (2.0 * b).sin() * PI / len[1];
                    vc[1] = -amplitude * (2.0 * a).sin() * b.sin().powi(2) * PI / len[0];
                }
            }
        }
        s.set_velocity(v);
        for c in 0..n {
            s.mu[c] = self.material.d_energy_alpha(&s.material_point(&grid, c), &s.fe[c], s.alpha[c]);
        }
        Ok((pb, s))
    }

    pub fn solver(&self) -> StepConfig {
        self.solver
    }
}
