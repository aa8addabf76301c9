//! Implicit transport-with-reaction updates for ξ, Fe and α:
//! `(y − y⁰)/τ + (v·∇)y = r(y)`, solved by Newton with a cell-local
//! finite-difference Jacobian of the reaction term.

use alloc::vec;
use alloc::vec::Vec;

use super::StepConfig;
use crate::error::{Error, Result};
use crate::grid::{Grid, Kind, Operators};
use crate::material::Material;
use crate::math;
use crate::sparse::{self, CsrMatrix, GmresOptions, Triplets};
use crate::tensor::{Mat3, Vec3};

fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn norm2(x: &[f64]) -> f64 {
    math::sqrt(x.iter().map(|v| v * v).sum())
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct TransportStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Solves `(y − y0)/τ + A y = r(cell, y_cell)` for `nc` components per cell.
pub(crate) fn solve_transport<F>(
    nc: usize,
    advection: &CsrMatrix,
    y0: &[f64],
    tau: f64,
    rate: F,
    cfg: &StepConfig,
    stage: &'static str,
) -> Result<(Vec<f64>, TransportStats)>
where
    F: Fn(usize, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y0.len() / nc;
    let tol = cfg.transport_tol * (1.0 + norm_inf(y0) / tau);
    let residual = |y: &[f64]| -> Result<Vec<f64>> {
        let ay = advection.matvec(y);
        let mut r = vec![0.0; y.len()];
        let mut buf = vec![0.0; nc];
        for c in 0..n {
            rate(c, &y[c * nc..(c + 1) * nc], &mut buf)?;
            for k in 0..nc {
                let i = c * nc + k;
                r[i] = (y[i] - y0[i]) / tau + ay[i] - buf[k];
            }
        }
        Ok(r)
    };
    let opts = GmresOptions {
        rtol: 1e-13,
        ..GmresOptions::default()
    };
    let mut y = y0.to_vec();
    let mut r = residual(&y)?;
    let mut rn = norm_inf(&r);
    let mut it = 0;
    while rn > tol {
        if it >= cfg.max_newton {
            return Err(Error::NewtonDiverged {
                stage,
                residual: rn,
                iterations: it,
            });
        }
        let mut t = Triplets::with_capacity(y.len(), y.len(), advection.nnz() + n * nc * (nc + 1));
        t.push_matrix(advection, 1.0, |r| r, |c| c);
        let mut rp = vec![0.0; nc];
        let mut rm = vec![0.0; nc];
        for c in 0..n {
            let base = c * nc;
            let mut yc = y[base..base + nc].to_vec();
            for k in 0..nc {
                t.push(base + k, base + k, 1.0 / tau);
                let h = 1e-7 * (1.0 + yc[k].abs());
                let orig = yc[k];
                yc[k] = orig + h;
                rate(c, &yc, &mut rp)?;
                yc[k] = orig - h;
                rate(c, &yc, &mut rm)?;
                yc[k] = orig;
                for j in 0..nc {
                    t.push(base + j, base + k, -(rp[j] - rm[j]) / (2.0 * h));
                }
            }
        }
        let jac = t.build();
        let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
        let (dy, _) = sparse::solve(&jac, &rhs, &opts)?;
        let r2 = norm2(&r);
        let mut step = 1.0;
        loop {
            let y_t: Vec<f64> = y.iter().zip(&dy).map(|(a, b)| a + step * b).collect();
            let r_t = residual(&y_t);
            if let Ok(r_t) = r_t {
                let r2_t = norm2(&r_t);
                if r2_t.is_finite() && (r2_t <= (1.0 - 1e-4 * step) * r2 || norm_inf(&r_t) <= tol) {
                    y = y_t;
                    r = r_t;
                    rn = norm_inf(&r);
                    break;
                }
            }
            step *= 0.5;
            if step < 1.0 / 256.0 {
                // round-off floor: accept if already near tolerance
                if rn <= 10.0 * tol {
                    return Ok((
                        y,
                        TransportStats {
                            iterations: it + 1,
                            residual: rn,
                        },
                    ));
                }
                return Err(Error::NewtonDiverged {
                    stage,
                    residual: rn,
                    iterations: it + 1,
                });
            }
        }
        it += 1;
    }
    Ok((
        y,
        TransportStats {
            iterations: it,
            residual: rn,
        },
    ))
}

/// `ξ = x + u`; u is transported with `(u − u⁰)/τ + (v·∇)u = −v`, which is
/// exact for affine ξ because the identity part is differentiated analytically.
pub(crate) fn update_xi(
    ops: &Operators,
    xi0: &[f64],
    v: &[f64],
    cfg: &StepConfig,
) -> Result<(Vec<f64>, TransportStats)> {
    let g = ops.grid();
    let d = g.dim();
    let n = g.len();
    let tau = cfg.tau;
    let mut u0 = xi0.to_vec();
    for c in 0..n {
        let x = g.center(c);
        for a in 0..d {
            u0[c * d + a] -= x.0[a];
        }
    }
    let adv = ops.advection(v, Kind::Vector, cfg.scheme);
    let mut t = Triplets::new(n * d, n * d);
    t.push_matrix(&adv, 1.0, |r| r, |c| c);
    for k in 0..n * d {
        t.push(k, k, 1.0 / tau);
    }
    let a = t.build();
    let rhs: Vec<f64> = (0..n * d).map(|k| u0[k] / tau - v[k]).collect();
    let opts = GmresOptions {
        rtol: 1e-14,
        ..GmresOptions::default()
    };
    let (mut u, stats) = sparse::solve(&a, &rhs, &opts)?;
    for c in 0..n {
        let x = g.center(c);
        for a in 0..d {
            u[c * d + a] += x.0[a];
        }
    }
    Ok((
        u,
        TransportStats {
            iterations: stats.iterations,
            residual: stats.relative_residual,
        },
    ))
}

pub(crate) fn material_points(grid: &Grid, xi: &[f64]) -> Vec<Vec3> {
    let d = grid.dim();
    (0..grid.len())
        .map(|c| {
            let mut x = Vec3::ZERO;
            x.0[..d].copy_from_slice(&xi[c * d..c * d + d]);
            x
        })
        .collect()
}

/// Per-cell velocity gradients embedded in 3×3.
pub fn velocity_gradients(ops: &Operators, v: &[f64]) -> Vec<Mat3> {
    let d = ops.grid().dim();
    let gv = ops.grad_v.matvec(v);
    gv.chunks(d * d)
        .map(|b| {
            let mut m = Mat3::ZERO;
            for i in 0..d {
                for a in 0..d {
                    m.0[i][a] = b[i * d + a];
                }
            }
            m
        })
        .collect()
}

fn fe_rate(material: &Material, x: &Vec3, l: &Mat3, fe: &Mat3, alpha: f64) -> Result<Mat3> {
    let lp = material.plastic_rate(x, fe, alpha)?;
    Ok(*l * *fe - *fe * lp)
}

pub(crate) struct LocalInputs<'a> {
    pub ops: &'a Operators,
    pub material: &'a Material,
    pub v: &'a [f64],
    pub grad_v: &'a [Mat3],
    pub points: &'a [Vec3],
}

/// `(Fe − Fe⁰)/τ + (v·∇)Fe = (∇v)Fe − Fe ℒ_λ(ξ, Fe, α)`.
pub(crate) fn update_fe(
    inp: &LocalInputs,
    fe0: &[Mat3],
    alpha: &[f64],
    cfg: &StepConfig,
) -> Result<(Vec<Mat3>, TransportStats)> {
    let adv = inp.ops.advection(inp.v, Kind::Tensor, cfg.scheme);
    let y0: Vec<f64> = fe0.iter().flat_map(|f| f.to_array()).collect();
    let rate = |c: usize, y: &[f64], out: &mut [f64]| -> Result<()> {
        let r = fe_rate(inp.material, &inp.points[c], &inp.grad_v[c], &Mat3::from_slice(y), alpha[c])?;
        out.copy_from_slice(&r.to_array());
        Ok(())
    };
    let (y, stats) = solve_transport(9, &adv, &y0, cfg.tau, rate, cfg, "Fe update")?;
    let fe: Vec<Mat3> = y.chunks(9).map(Mat3::from_slice).collect();
    for (c, f) in fe.iter().enumerate() {
        let j = f.det();
        if !(j > 0.0) {
            return Err(Error::NonPositiveDeterminant { cell: c, value: j });
        }
    }
    Ok((fe, stats))
}

/// `(α − α⁰)/τ + v·∇α = 𝒟_λ(ξ, Fe, α)`.
pub(crate) fn update_damage(
    inp: &LocalInputs,
    fe: &[Mat3],
    alpha0: &[f64],
    cfg: &StepConfig,
) -> Result<(Vec<f64>, TransportStats)> {
    let adv = inp.ops.advection(inp.v, Kind::Scalar, cfg.scheme);
    let rate = |c: usize, y: &[f64], out: &mut [f64]| -> Result<()> {
        out[0] = inp.material.damage_rate(&inp.points[c], &fe[c], y[0]);
        Ok(())
    };
    solve_transport(1, &adv, alpha0, cfg.tau, rate, cfg, "damage update")
}

/// Joint (Fe, α) solve.
pub(crate) fn update_fe_damage_monolithic(
    inp: &LocalInputs,
    fe0: &[Mat3],
    alpha0: &[f64],
    cfg: &StepConfig,
) -> Result<(Vec<Mat3>, Vec<f64>, TransportStats)> {
    let n = fe0.len();
    let a_t = inp.ops.advection(inp.v, Kind::Tensor, cfg.scheme);
    let a_s = inp.ops.advection(inp.v, Kind::Scalar, cfg.scheme);
    let mut t = Triplets::new(n * 10, n * 10);
    t.push_matrix(&a_t, 1.0, |r| (r / 9) * 10 + r % 9, |c| (c / 9) * 10 + c % 9);
    t.push_matrix(&a_s, 1.0, |r| r * 10 + 9, |c| c * 10 + 9);
    let adv = t.build();
    let mut y0 = Vec::with_capacity(n * 10);
    for c in 0..n {
        y0.extend_from_slice(&fe0[c].to_array());
        y0.push(alpha0[c]);
    }
    let rate = |c: usize, y: &[f64], out: &mut [f64]| -> Result<()> {
        let f = Mat3::from_slice(&y[..9]);
        let r = fe_rate(inp.material, &inp.points[c], &inp.grad_v[c], &f, y[9])?;
        out[..9].copy_from_slice(&r.to_array());
        out[9] = inp.material.damage_rate(&inp.points[c], &f, y[9]);
        Ok(())
    };
    let (y, stats) = solve_transport(10, &adv, &y0, cfg.tau, rate, cfg, "Fe-damage update")?;
    let fe: Vec<Mat3> = y.chunks(10).map(|b| Mat3::from_slice(&b[..9])).collect();
    let alpha: Vec<f64> = y.chunks(10).map(|b| b[9]).collect();
    for (c, f) in fe.iter().enumerate() {
        let j = f.det();
        if !(j > 0.0) {
            return Err(Error::NonPositiveDeterminant { cell: c, value: j });
        }
    }
    Ok((fe, alpha, stats))
}
