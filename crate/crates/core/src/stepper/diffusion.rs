//! Bound-constrained diffusion of α by semismooth Newton.
//!
//! Per cell the unknowns are `(α, μ)` and the equations, in this order,
//!
//! ```text
//! E₂ = α − P_[0,1](α + γ(μ − [φ_λ]′_α(α)))           (μ ∈ [φ_λ]′_α + N_[0,1](α))
//! E₁ = (α − α⁰)/τ + v·∇α + Σ_faces m_f(μ − μ_nb)/h²   (div(m∇μ) in flux form)
//! ```
//!
//! Putting E₂ first keeps a non-zero diagonal in both the active and the
//! inactive case.

use alloc::vec;
use alloc::vec::Vec;

use super::StepConfig;
use super::transport::LocalInputs;
use crate::error::{Error, Result};
use crate::grid::{Grid, Kind};
use crate::material::{complementarity_residual, Material};
use crate::sparse::{self, GmresOptions, Triplets};
use crate::tensor::{Mat3, Vec3};

#[derive(Debug, Clone)]
pub(crate) struct DiffusionSolution {
    pub alpha: Vec<f64>,
    pub mu: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub complementarity: f64,
}

/// Face list `(cell, neighbour, 1/h²)`, each interior face once. Slip walls
/// carry no flux.
pub(crate) fn faces(grid: &Grid) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    let n = grid.cells();
    for c in 0..grid.len() {
        let ijk = grid.coords(c);
        for a in 0..grid.dim() {
            if ijk[a] + 1 == n[a] && grid.boundary() == crate::grid::Boundary::SlipBox {
                continue;
            }
            let mut off = [0isize; 3];
            off[a] = 1;
            let (nb, _) = grid.shifted(c, off);
            let h = grid.spacing()[a];
            out.push((c, nb, 1.0 / (h * h)));
        }
    }
    out
}

/// `Σ vol m_f |Δμ|²/h²`.
pub(crate) fn dissipation(grid: &Grid, material: &Material, points: &[Vec3], alpha: &[f64], mu: &[f64]) -> f64 {
    let Some(mob) = &material.diffusion else {
        return 0.0;
    };
    let mut s = 0.0;
    for (c, nb, w) in faces(grid) {
        let m = 0.5 * (mob.value(&points[c], alpha[c]) + mob.value(&points[nb], alpha[nb]));
        let dm = mu[c] - mu[nb];
        s += m * dm * dm * w;
    }
    s * grid.volume()
}

pub(crate) fn update_diffusion(
    inp: &LocalInputs,
    fe: &[Mat3],
    alpha0: &[f64],
    mu_guess: &[f64],
    cfg: &StepConfig,
) -> Result<DiffusionSolution> {
    let m = inp.material;
    let mob = m
        .diffusion
        .as_ref()
        .ok_or_else(|| Error::invalid("diffusion update without a mobility law"))?;
    let grid = inp.ops.grid();
    let n = grid.len();
    let tau = cfg.tau;
    let pts = inp.points;
    let fl = faces(grid);
    let adv = inp.ops.advection(inp.v, Kind::Scalar, cfg.scheme);
    // γ balances the two terms inside the projection
    let mut curv: f64 = 0.0;
    for c in 0..n {
        curv = curv.max(m.d2_energy_alpha(&pts[c], &fe[c], alpha0[c].clamp(0.0, 1.0)).abs());
    }
    let gamma = 1.0 / curv.max(1e-12);

    let residual = |alpha: &[f64], mu: &[f64]| -> Vec<f64> {
        let aa = adv.matvec(alpha);
        let mut r = vec![0.0; 2 * n];
        for c in 0..n {
            let dual = mu[c] - m.d_energy_alpha(&pts[c], &fe[c], alpha[c]);
            r[2 * c] = alpha[c] - (alpha[c] + gamma * dual).clamp(0.0, 1.0);
            r[2 * c + 1] = (alpha[c] - alpha0[c]) / tau + aa[c];
        }
        for &(c, nb, w) in &fl {
            let mf = 0.5 * (mob.value(&pts[c], alpha[c]) + mob.value(&pts[nb], alpha[nb]));
            let flux = mf * w * (mu[c] - mu[nb]);
            r[2 * c + 1] += flux;
            r[2 * nb + 1] -= flux;
        }
        r
    };
    let jacobian = |alpha: &[f64], mu: &[f64]| {
        let mut t = Triplets::with_capacity(2 * n, 2 * n, 16 * n);
        t.push_matrix(&adv, 1.0, |r| 2 * r + 1, |c| 2 * c);
        for c in 0..n {
            let dphi = m.d_energy_alpha(&pts[c], &fe[c], alpha[c]);
            let arg = alpha[c] + gamma * (mu[c] - dphi);
            if arg > 0.0 && arg < 1.0 {
                let d2 = m.d2_energy_alpha(&pts[c], &fe[c], alpha[c]);
                t.push(2 * c, 2 * c, gamma * d2);
                t.push(2 * c, 2 * c + 1, -gamma);
            } else {
                t.push(2 * c, 2 * c, 1.0);
            }
            t.push(2 * c + 1, 2 * c, 1.0 / tau);
        }
        for &(c, nb, w) in &fl {
            let mf = 0.5 * (mob.value(&pts[c], alpha[c]) + mob.value(&pts[nb], alpha[nb]));
            let dmu = mu[c] - mu[nb];
            let dc = 0.5 * mob.d_alpha(&pts[c], alpha[c]) * w * dmu;
            let dn = 0.5 * mob.d_alpha(&pts[nb], alpha[nb]) * w * dmu;
            for (row, s) in [(c, 1.0), (nb, -1.0)] {
                t.push(2 * row + 1, 2 * c + 1, s * mf * w);
                t.push(2 * row + 1, 2 * nb + 1, -s * mf * w);
                t.push(2 * row + 1, 2 * c, s * dc);
                t.push(2 * row + 1, 2 * nb, s * dn);
            }
        }
        t.build()
    };

    let mut alpha = alpha0.to_vec();
    let mut mu: Vec<f64> = mu_guess.to_vec();
    let scale = 1.0 + alpha0.iter().fold(0.0f64, |a, b| a.max(b.abs())) / tau;
    let tol = cfg.transport_tol * scale;
    let opts = GmresOptions {
        rtol: 1e-13,
        ..GmresOptions::default()
    };
    let norm_inf = |x: &[f64]| x.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let mut r = residual(&alpha, &mu);
    let mut rn = norm_inf(&r);
    let mut it = 0;
    while rn > tol {
        if it >= cfg.max_newton {
            return Err(Error::NewtonDiverged {
                stage: "diffusion update",
                residual: rn,
                iterations: it,
            });
        }
        let jac = jacobian(&alpha, &mu);
        let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
        let (dz, _) = sparse::solve(&jac, &rhs, &opts)?;
        // full semismooth steps; damped only if the residual grows a lot
        let mut step = 1.0;
        loop {
            let a_t: Vec<f64> = (0..n).map(|c| alpha[c] + step * dz[2 * c]).collect();
            let m_t: Vec<f64> = (0..n).map(|c| mu[c] + step * dz[2 * c + 1]).collect();
            let r_t = residual(&a_t, &m_t);
            let rn_t = norm_inf(&r_t);
            if rn_t.is_finite() && (rn_t < rn || step < 1.0 / 64.0) {
                alpha = a_t;
                mu = m_t;
                r = r_t;
                rn = rn_t;
                break;
            }
            step *= 0.5;
        }
        it += 1;
    }
    let mut comp: f64 = 0.0;
    for c in 0..n {
        let dual = mu[c] - m.d_energy_alpha(&pts[c], &fe[c], alpha[c]);
        comp = comp.max(complementarity_residual(alpha[c], dual));
    }
    Ok(DiffusionSolution {
        alpha,
        mu,
        iterations: it,
        residual: rn,
        complementarity: comp,
    })
}
