//! Constitutive subsystem under a prescribed homogeneous velocity gradient.
//!
//! Runs the same Fe/α updates as the full step on a small periodic grid with
//! `v = 0` (so transport drops out) and `∇v(t)` imposed cell by cell.

use alloc::vec;
use alloc::vec::Vec;

use super::transport::LocalInputs;
use super::{constitutive_update, StepConfig};
use crate::error::Result;
use crate::grid::{Boundary, Grid, Operators};
use crate::material::Material;
use crate::math;
use crate::tensor::{Mat3, Vec3};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)
)]
pub enum GradientSchedule {
    Constant {
        gradient: [[f64; 3]; 3],
    },
    /// `gradient · cos(ω t)`.
    Oscillatory {
        gradient: [[f64; 3]; 3],
        omega: f64,
    },
    /// `gradient` for `t < until`, zero afterwards.
    Pulse {
        gradient: [[f64; 3]; 3],
        until: f64,
    },
}

impl GradientSchedule {
    pub fn constant(l: Mat3) -> Self {
        GradientSchedule::Constant { gradient: l.0 }
    }

    pub fn at(&self, t: f64) -> Mat3 {
        match self {
            GradientSchedule::Constant { gradient } => Mat3(*gradient),
            GradientSchedule::Oscillatory { gradient, omega } => Mat3(*gradient) * math::cos(omega * t),
            GradientSchedule::Pulse { gradient, until } => {
                if t <= *until {
                    Mat3(*gradient)
                } else {
                    Mat3::ZERO
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivePoint {
    pub time: f64,
    pub fe: Mat3,
    pub alpha: f64,
    pub stored: f64,
}

/// Backward-Euler trajectory of `(Fe, α)` with `∇v` evaluated at the new
/// time level, including the initial point.
pub fn kinematic_drive(
    material: &Material,
    fe0: Mat3,
    alpha0: f64,
    schedule: &GradientSchedule,
    cfg: &StepConfig,
    t_end: f64,
) -> Result<Vec<DrivePoint>> {
    let grid = Grid::uniform(2, 4, 1.0, Boundary::Periodic)?;
    let ops = Operators::new(&grid);
    let n = grid.len();
    let v = vec![0.0; n * 2];
    let x = Vec3::ZERO;
    let points = vec![x; n];
    let mut fe = vec![fe0; n];
    let mut alpha = vec![alpha0; n];
    let mut mu = vec![material.d_energy_alpha(&x, &fe0, alpha0); n];
    let steps = math::round(t_end / cfg.tau) as usize;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(DrivePoint {
        time: 0.0,
        fe: fe0,
        alpha: alpha0,
        stored: material.energy(&x, &fe0, alpha0),
    });
    for k in 1..=steps {
        let t = k as f64 * cfg.tau;
        let grads = vec![schedule.at(t); n];
        let inp = LocalInputs {
            ops: &ops,
            material,
            v: &v,
            grad_v: &grads,
            points: &points,
        };
        let cu = constitutive_update(&inp, &fe, &alpha, &mu, cfg)?;
        fe = cu.fe;
        alpha = cu.alpha;
        mu = cu.mu;
        out.push(DrivePoint {
            time: t,
            fe: fe[0],
            alpha: alpha[0],
            stored: material.energy(&x, &fe[0], alpha[0]),
        });
    }
    Ok(out)
}
