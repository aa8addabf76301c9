use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::tensor::{Mat3, Vec3};

/// All fields at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub time: f64,
    /// Density, one per cell.
    pub rho: Vec<f64>,
    /// Velocity, `d` per cell.
    pub v: Vec<f64>,
    /// Momentum `ρv`, `d` per cell.
    pub p: Vec<f64>,
    pub fe: Vec<Mat3>,
    /// Material coordinates (return mapping), `d` per cell.
    pub xi: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Chemical potential; only evolved when diffusion is enabled.
    pub mu: Vec<f64>,
}

impl State {
    /// Uniform density, zero velocity, `Fe = I`, `α = 1`, `ξ = x`.
    pub fn rest(grid: &Grid, rho: f64) -> Self {
        let n = grid.len();
        let d = grid.dim();
        let mut xi = vec![0.0; n * d];
        for c in 0..n {
            let x = grid.center(c);
            xi[c * d..c * d + d].copy_from_slice(&x.0[..d]);
        }
        State {
            time: 0.0,
            rho: vec![rho; n],
            v: vec![0.0; n * d],
            p: vec![0.0; n * d],
            fe: vec![Mat3::identity(); n],
            xi,
            alpha: vec![1.0; n],
            mu: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// Material coordinate of a cell as a 3-vector.
    pub fn material_point(&self, grid: &Grid, cell: usize) -> Vec3 {
        let d = grid.dim();
        let mut x = Vec3::ZERO;
        x.0[..d].copy_from_slice(&self.xi[cell * d..cell * d + d]);
        x
    }

    pub fn set_velocity(&mut self, v: Vec<f64>) {
        let d = v.len() / self.rho.len();
        self.p = v
            .iter()
            .enumerate()
            .map(|(k, vk)| self.rho[k / d] * vk)
            .collect();
        self.v = v;
    }

    pub fn total_mass(&self, grid: &Grid) -> f64 {
        grid.integrate(&self.rho, 1, 0)
    }

    /// Checks the invariants a state must satisfy to be stepped.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let n = grid.len();
        let d = grid.dim();
        if self.rho.len() != n
            || self.v.len() != n * d
            || self.p.len() != n * d
            || self.fe.len() != n
            || self.xi.len() != n * d
            || self.alpha.len() != n
            || self.mu.len() != n
        {
            return Err(Error::invalid("state fields do not match the grid"));
        }
        for (c, &r) in self.rho.iter().enumerate() {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::NonPositiveDensity { cell: c, value: r });
            }
        }
        for (c, f) in self.fe.iter().enumerate() {
            let j = f.det();
            if !(j > 0.0) || !f.is_finite() {
                return Err(Error::NonPositiveDeterminant { cell: c, value: j });
            }
        }
        for &a in &self.alpha {
            if !(-1e-10..=1.0 + 1e-10).contains(&a) {
                return Err(Error::BoundViolation { value: a });
            }
        }
        for k in 0..n * d {
            let pk = self.rho[k / d] * self.v[k];
            if (pk - self.p[k]).abs() > 1e-12 * (1.0 + pk.abs()) {
                return Err(Error::invalid("momentum does not equal rho * v"));
            }
        }
        Ok(())
    }
}
