//! Spatial consistency of the mass–momentum residual against smooth
//! periodic fields on the unit square.
//!
//! With `ρ⁰ = ρ` and `p⁰ = ρv` the time-difference terms cancel exactly, so
//! what remains is the truncation error of the discrete
//! `div(ρv)`, `div(ρv⊗v)`, `div 𝒯`, `div 𝔻ε(v)` and `Δ²v`. Velocity and
//! density derivatives are analytic; `div 𝒯(Fe(x))` uses a sixth-order
//! difference of the closed-form composition.

use alloc::vec;

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid, Operators};
use crate::material::Material;
use crate::math::{self, PI};
use crate::stepper::momentum::{residual, MomentumProblem};
use crate::tensor::{Mat3, Vec3};

const TWO_PI: f64 = 2.0 * PI;

/// `amp · sin(2π k·x + phase)`.
#[derive(Clone, Copy)]
struct Mode {
    amp: f64,
    k: [f64; 2],
    phase: f64,
}

impl Mode {
    fn theta(&self, x: &[f64; 2]) -> f64 {
        TWO_PI * (self.k[0] * x[0] + self.k[1] * x[1]) + self.phase
    }
    fn value(&self, x: &[f64; 2]) -> f64 {
        self.amp * math::sin(self.theta(x))
    }
    fn grad(&self, x: &[f64; 2]) -> [f64; 2] {
        let c = self.amp * TWO_PI * math::cos(self.theta(x));
        [c * self.k[0], c * self.k[1]]
    }
    fn hess(&self, x: &[f64; 2]) -> [[f64; 2]; 2] {
        let s = -self.amp * TWO_PI * TWO_PI * math::sin(self.theta(x));
        let k = self.k;
        [[s * k[0] * k[0], s * k[0] * k[1]], [s * k[1] * k[0], s * k[1] * k[1]]]
    }
    fn bilaplacian(&self, x: &[f64; 2]) -> f64 {
        let k2 = self.k[0] * self.k[0] + self.k[1] * self.k[1];
        self.amp * (TWO_PI * TWO_PI * k2) * (TWO_PI * TWO_PI * k2) * math::sin(self.theta(x))
    }
}

const RHO: [Mode; 2] = [
    Mode { amp: 0.2, k: [1.0, 0.0], phase: 0.3 },
    Mode { amp: 0.1, k: [1.0, 1.0], phase: 1.1 },
];
const V0: [Mode; 2] = [
    Mode { amp: 0.3, k: [0.0, 1.0], phase: 0.0 },
    Mode { amp: 0.1, k: [1.0, 0.0], phase: 0.7 },
];
const V1: [Mode; 2] = [
    Mode { amp: 0.2, k: [1.0, 0.0], phase: 0.5 },
    Mode { amp: 0.15, k: [1.0, -1.0], phase: 2.0 },
];

fn sum(modes: &[Mode], x: &[f64; 2]) -> f64 {
    modes.iter().map(|m| m.value(x)).sum()
}

fn sum_grad(modes: &[Mode], x: &[f64; 2]) -> [f64; 2] {
    modes.iter().fold([0.0; 2], |g, m| {
        let d = m.grad(x);
        [g[0] + d[0], g[1] + d[1]]
    })
}

fn sum_hess(modes: &[Mode], x: &[f64; 2]) -> [[f64; 2]; 2] {
    modes.iter().fold([[0.0; 2]; 2], |h, m| {
        let d = m.hess(x);
        [[h[0][0] + d[0][0], h[0][1] + d[0][1]], [h[1][0] + d[1][0], h[1][1] + d[1][1]]]
    })
}

fn fe_at(x: &[f64; 2]) -> Mat3 {
    let (s, c) = (math::sin(TWO_PI * x[0]), math::cos(TWO_PI * x[1]));
    let m = math::sin(TWO_PI * (x[0] + x[1]) + 0.4);
    Mat3::from_rows([
        [1.0 + 0.1 * s, 0.05 * c, 0.0],
        [0.04 * m, 1.0 - 0.08 * c, 0.0],
        [0.0, 0.0, 1.0 + 0.03 * m],
    ])
}

/// Discrete L² norms of (discrete − exact) residuals on an `n × n` grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedError {
    pub cells: usize,
    pub continuity: f64,
    pub momentum: f64,
}

/// Requires a quadratic hyperviscosity (or none); the `p > 2` operator is
/// not covered by the closed form used here.
pub fn manufactured_residual(material: &Material, cells: usize) -> Result<ManufacturedError> {
    let hyp = material.hyperviscosity;
    if hyp.nu > 0.0 && hyp.exponent != 2.0 {
        return Err(Error::invalid("manufactured residual needs hyperviscosity exponent 2"));
    }
    let grid = Grid::uniform(2, cells, 1.0, Boundary::Periodic)?;
    let ops = Operators::new(&grid);
    let n = grid.len();
    let alpha = 0.5;
    let x_of = |c: usize| {
        let p = grid.center(c);
        [p.0[0], p.0[1]]
    };
    let stress_at = |x: &[f64; 2]| material.stress(&Vec3::new(x[0], x[1], 0.0), &fe_at(x), alpha);

    let mut rho = vec![0.0; n];
    let mut v = vec![0.0; 2 * n];
    let mut q = vec![0.0; 2 * n];
    let mut stress = vec![0.0; 4 * n];
    for c in 0..n {
        let x = x_of(c);
        rho[c] = 1.0 + sum(&RHO, &x);
        v[2 * c] = sum(&V0, &x);
        v[2 * c + 1] = sum(&V1, &x);
        q[2 * c] = rho[c] * v[2 * c];
        q[2 * c + 1] = rho[c] * v[2 * c + 1];
        let t = stress_at(&x);
        for i in 0..2 {
            for a in 0..2 {
                stress[4 * c + 2 * i + a] = t.0[i][a];
            }
        }
    }
    let gravity = vec![0.0; 2 * n];
    let pb = MomentumProblem {
        ops: &ops,
        material,
        rho0: &rho,
        p0: &q,
        stress: &stress,
        gravity: &gravity,
        tau: 1.0,
    };
    let (r_rho, r_v) = residual(&pb, &rho, &v);

    let (es, eb) = (material.viscosity.shear, material.viscosity.bulk);
    let dl = 1e-3;
    let w = [-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0];
    let (mut e_rho, mut e_v) = (0.0, 0.0);
    for c in 0..n {
        let x = x_of(c);
        let r = 1.0 + sum(&RHO, &x);
        let gr = sum_grad(&RHO, &x);
        let vv = [sum(&V0, &x), sum(&V1, &x)];
        let gv = [sum_grad(&V0, &x), sum_grad(&V1, &x)];
        let hv = [sum_hess(&V0, &x), sum_hess(&V1, &x)];
        let bl = [
            V0.iter().map(|m| m.bilaplacian(&x)).sum::<f64>(),
            V1.iter().map(|m| m.bilaplacian(&x)).sum::<f64>(),
        ];
        let divv = gv[0][0] + gv[1][1];
        let exact_rho = gr[0] * vv[0] + gr[1] * vv[1] + r * divv;
        let er = r_rho[c] - exact_rho;
        e_rho += er * er;

        // ∂_a 𝒯_ia
        let mut div_t = [0.0; 2];
        for a in 0..2 {
            for (s, wk) in w.iter().enumerate() {
                if *wk == 0.0 {
                    continue;
                }
                let mut xs = x;
                xs[a] += (s as f64 - 3.0) * dl;
                let t = stress_at(&xs);
                for (i, dt) in div_t.iter_mut().enumerate() {
                    *dt += wk * t.0[i][a] / (60.0 * dl);
                }
            }
        }
        for i in 0..2 {
            let conv: f64 = (0..2)
                .map(|a| vv[i] * vv[a] * gr[a] + r * vv[a] * gv[i][a] + r * vv[i] * gv[a][a])
                .sum();
            let lap = hv[i][0][0] + hv[i][1][1];
            let grad_div = hv[0][0][i] + hv[1][1][i];
            let visc = es * (lap + grad_div) + (eb - 2.0 * es / 3.0) * grad_div;
            let exact = conv - div_t[i] - visc + hyp.nu * bl[i];
            let ev = r_v[2 * c + i] - exact;
            e_v += ev * ev;
        }
    }
    let vol = grid.volume();
    Ok(ManufacturedError {
        cells,
        continuity: math::sqrt(e_rho * vol),
        momentum: math::sqrt(e_v * vol),
    })
}
