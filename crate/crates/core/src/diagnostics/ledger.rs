//! Energy–dissipation ledger of one step.
//!
//! `R = (E_new − E_prev) + τ·(dissipation rates) − τ·power`, all evaluated at
//! the new time level (the scheme is implicit in everything but the
//! conservative stress). `R > 0` means the step dissipated less than the
//! continuous balance demands.

use alloc::vec::Vec;

use crate::error::Result;
use crate::grid::Operators;
use crate::material::Material;
use crate::stepper::{velocity_gradients, State};
use crate::tensor::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyLedger {
    pub kinetic: f64,
    pub stored: f64,
    pub diss_stokes: f64,
    pub diss_hyper: f64,
    pub diss_plastic: f64,
    pub diss_damage: f64,
    pub diss_diffusion: f64,
    pub power: f64,
    pub residual: f64,
    pub cum_residual: f64,
}

impl EnergyLedger {
    pub fn total(&self) -> f64 {
        self.kinetic + self.stored
    }

    pub fn dissipation(&self) -> f64 {
        self.diss_stokes + self.diss_hyper + self.diss_plastic + self.diss_damage + self.diss_diffusion
    }
}

fn points(ops: &Operators, s: &State) -> Vec<Vec3> {
    let g = ops.grid();
    (0..g.len()).map(|c| s.material_point(g, c)).collect()
}

/// `(kinetic, stored)` energies of a state.
pub fn energies(ops: &Operators, material: &Material, s: &State) -> (f64, f64) {
    let g = ops.grid();
    let d = g.dim();
    let vol = g.volume();
    let mut kin = 0.0;
    let mut sto = 0.0;
    for c in 0..g.len() {
        let v2: f64 = s.v[c * d..c * d + d].iter().map(|x| x * x).sum();
        kin += 0.5 * s.rho[c] * v2;
        sto += material.energy(&s.material_point(g, c), &s.fe[c], s.alpha[c]);
    }
    (kin * vol, sto * vol)
}

/// Dissipation rates and power of a state; energy and residual fields are
/// left at zero.
pub fn rates(ops: &Operators, material: &Material, s: &State, gravity: &[f64]) -> Result<EnergyLedger> {
    let g = ops.grid();
    let d = g.dim();
    let vol = g.volume();
    let pts = points(ops, s);
    let grads = velocity_gradients(ops, &s.v);
    let mut l = EnergyLedger::default();
    for c in 0..g.len() {
        let eps = grads[c].sym();
        l.diss_stokes += material.viscosity.apply(&eps).ddot(&eps);
        if !material.viscoplastic.is_rigid() {
            let lp = material.plastic_rate(&pts[c], &s.fe[c], s.alpha[c])?;
            let m = material.mandel(&pts[c], &s.fe[c], s.alpha[c]);
            l.diss_plastic += lp.ddot(&m);
        }
        if let Some(dm) = &material.damage {
            let r = material.damage_rate(&pts[c], &s.fe[c], s.alpha[c]);
            l.diss_damage += dm.dissipation(r);
        }
        for a in 0..d {
            l.power += s.rho[c] * gravity[c * d + a] * s.v[c * d + a];
        }
    }
    l.diss_stokes *= vol;
    l.diss_plastic *= vol;
    l.diss_damage *= vol;
    l.power *= vol;
    let h = material.hyperviscosity;
    if h.nu > 0.0 {
        l.diss_hyper = ops.hyper_dissipation(&s.v, h.nu, h.exponent);
    }
    l.diss_diffusion = crate::stepper::diffusion_dissipation(g, material, &pts, &s.alpha, &s.mu);
    Ok(l)
}

pub fn ledger(
    ops: &Operators,
    material: &Material,
    prev: &State,
    new: &State,
    gravity: &[f64],
    tau: f64,
    cum_prev: f64,
) -> Result<EnergyLedger> {
    let (k0, s0) = energies(ops, material, prev);
    let (k1, s1) = energies(ops, material, new);
    let mut l = rates(ops, material, new, gravity)?;
    l.kinetic = k1;
    l.stored = s1;
    l.residual = (k1 + s1) - (k0 + s0) + tau * l.dissipation() - tau * l.power;
    l.cum_residual = cum_prev + l.residual;
    Ok(l)
}
