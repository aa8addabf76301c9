//! Implicit mass–momentum solve with the conservative stress lagged.
//!
//! Unknowns are `(ρ, v)` per cell, interleaved as `[ρ, v_0, .., v_{d−1}]`.
//! The residuals, in weak form with test functions equal to grid functions,
//!
//! ```text
//! R_ρ = (ρ − ρ⁰)/τ + div(ρv)
//! R_v = (ρv − p⁰)/τ + C(ρv, v) − div 𝒯⁰ + Gᵀ𝔻G v + Hᵀ𝔥(Hv) − ρg
//! ```
//!
//! where `C(q, v) = ½[div(v⊗q) + (∇v)q + v div q]` is the skew-symmetric form
//! of `div(ρv⊗v)`, so that testing with v reproduces the kinetic energy
//! balance up to a non-negative numerical dissipation.

use alloc::vec;
use alloc::vec::Vec;

use super::StepConfig;
use crate::error::{Error, Result};
use crate::grid::Operators;
use crate::material::Material;
use crate::math;
use crate::sparse::{self, CsrMatrix, GmresOptions, Triplets};

pub(crate) struct MomentumProblem<'a> {
    pub ops: &'a Operators,
    pub material: &'a Material,
    pub rho0: &'a [f64],
    pub p0: &'a [f64],
    /// Lagged Cauchy stress, `d²` per cell, `(i, a)` row-major.
    pub stress: &'a [f64],
    pub gravity: &'a [f64],
    pub tau: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct MomentumSolution {
    pub rho: Vec<f64>,
    pub v: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub continuation_stages: usize,
}

#[derive(Clone, Copy)]
struct Regularization {
    epsilon: f64,
    delta: f64,
    r: f64,
}

struct Ctx<'a> {
    pb: &'a MomentumProblem<'a>,
    n: usize,
    d: usize,
    stress_div: Vec<f64>,
    viscous: CsrMatrix,
    hyper_linear: Option<CsrMatrix>,
}

fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn norm2(x: &[f64]) -> f64 {
    math::sqrt(x.iter().map(|v| v * v).sum())
}

/// Per-cell `d²×d²` Stokes block for plane strain or 3D.
fn viscous_matrix(ops: &Operators, m: &Material) -> CsrMatrix {
    let g = ops.grid();
    let d = g.dim();
    let n = g.len();
    let (es, eb) = (m.viscosity.shear, m.viscosity.bulk);
    let mut t = Triplets::new(n * d * d, n * d * d);
    for c in 0..n {
        for i in 0..d {
            for a in 0..d {
                for j in 0..d {
                    for b in 0..d {
                        let mut val = 0.0;
                        if i == j && a == b {
                            val += es;
                        }
                        if i == b && a == j {
                            val += es;
                        }
                        if i == a && j == b {
                            val += eb - 2.0 * es / 3.0;
                        }
                        t.push(c * d * d + i * d + a, c * d * d + j * d + b, val);
                    }
                }
            }
        }
    }
    let dblk = t.build();
    ops.grad_v.transpose().mul(&dblk.mul(&ops.grad_v))
}

impl<'a> Ctx<'a> {
    fn new(pb: &'a MomentumProblem<'a>) -> Self {
        let g = pb.ops.grid();
        let hv = pb.material.hyperviscosity;
        let hyper_linear = if hv.exponent == 2.0 && hv.nu > 0.0 {
            Some(pb.ops.hess_t.mul(&pb.ops.hess).scaled(hv.nu))
        } else {
            None
        };
        Ctx {
            pb,
            n: g.len(),
            d: g.dim(),
            stress_div: pb.ops.div_t.matvec(pb.stress),
            viscous: viscous_matrix(pb.ops, pb.material),
            hyper_linear,
        }
    }

    fn scale(&self) -> f64 {
        let pb = self.pb;
        let mut s = norm_inf(pb.rho0) / pb.tau;
        s = s.max(norm_inf(pb.p0) / pb.tau);
        s = s.max(norm_inf(&self.stress_div));
        let mut rg: f64 = 0.0;
        for k in 0..self.n * self.d {
            rg = rg.max((pb.rho0[k / self.d] * pb.gravity[k]).abs());
        }
        s.max(rg)
    }

    #[cfg(test)]
    fn split(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (n, d) = (self.n, self.d);
        let mut rho = vec![0.0; n];
        let mut v = vec![0.0; n * d];
        for c in 0..n {
            rho[c] = z[c * (d + 1)];
            v[c * d..c * d + d].copy_from_slice(&z[c * (d + 1) + 1..(c + 1) * (d + 1)]);
        }
        (rho, v)
    }

    fn join(&self, rho: &[f64], v: &[f64]) -> Vec<f64> {
        let (n, d) = (self.n, self.d);
        let mut z = vec![0.0; n * (d + 1)];
        for c in 0..n {
            z[c * (d + 1)] = rho[c];
            z[c * (d + 1) + 1..(c + 1) * (d + 1)].copy_from_slice(&v[c * d..c * d + d]);
        }
        z
    }

    fn residual(&self, rho: &[f64], v: &[f64], reg: Option<Regularization>) -> Vec<f64> {
        let pb = self.pb;
        let ops = pb.ops;
        let (n, d) = (self.n, self.d);
        let tau = pb.tau;
        let q: Vec<f64> = (0..n * d).map(|k| rho[k / d] * v[k]).collect();
        let divq = ops.div_v.matvec(&q);
        let mut r_rho: Vec<f64> = (0..n).map(|c| (rho[c] - pb.rho0[c]) / tau + divq[c]).collect();

        let gv = ops.grad_v.matvec(v);
        let mut s = vec![0.0; n * d * d];
        for c in 0..n {
            for i in 0..d {
                for a in 0..d {
                    s[c * d * d + i * d + a] = v[c * d + i] * q[c * d + a];
                }
            }
        }
        let divs = ops.div_t.matvec(&s);
        let kv = self.viscous.matvec(v);
        let hv = match &self.hyper_linear {
            Some(m) => m.matvec(v),
            None => {
                let h = pb.material.hyperviscosity;
                if h.nu > 0.0 {
                    ops.hyperstress_apply(v, h.nu, h.exponent)
                } else {
                    vec![0.0; n * d]
                }
            }
        };
        let mut r_v = vec![0.0; n * d];
        for c in 0..n {
            for i in 0..d {
                let k = c * d + i;
                let mut gq = 0.0;
                for a in 0..d {
                    gq += gv[c * d * d + i * d + a] * q[c * d + a];
                }
                r_v[k] = (q[k] - pb.p0[k]) / tau + 0.5 * (divs[k] + gq + v[k] * divq[c])
                    - self.stress_div[k]
                    + kv[k]
                    + hv[k]
                    - rho[c] * pb.gravity[k];
            }
        }
        if let Some(reg) = reg {
            let p = pb.material.hyperviscosity.exponent;
            let gr = ops.grad_s.matvec(rho);
            let mut flux = vec![0.0; n * d];
            for c in 0..n {
                let g = &gr[c * d..c * d + d];
                let w = math::powf(norm2(g), reg.r - 2.0);
                let vn = norm2(&v[c * d..c * d + d]);
                for i in 0..d {
                    flux[c * d + i] = w * g[i];
                    let mut gvg = 0.0;
                    for a in 0..d {
                        gvg += gv[c * d * d + i * d + a] * g[a];
                    }
                    r_v[c * d + i] += reg.epsilon * math::pow_pm2(vn, p) * v[c * d + i]
                        + reg.delta * w * gvg;
                }
            }
            // δ Gsᵀ(|∇ρ|^{r−2}∇ρ) = −δ div(|∇ρ|^{r−2}∇ρ)
            let dflux = ops.div_v.matvec(&flux);
            for c in 0..n {
                r_rho[c] -= reg.delta * dflux[c];
            }
        }
        self.join(&r_rho, &r_v)
    }

    fn jacobian(&self, rho: &[f64], v: &[f64], reg: Option<Regularization>) -> CsrMatrix {
        let pb = self.pb;
        let ops = pb.ops;
        let (n, d) = (self.n, self.d);
        let tau = pb.tau;
        let q: Vec<f64> = (0..n * d).map(|k| rho[k / d] * v[k]).collect();
        let divq = ops.div_v.matvec(&q);
        let gv = ops.grad_v.matvec(v);

        let mut t_pv = Triplets::new(n * d, n);
        let mut t_prho = Triplets::new(n * d, n * d);
        let mut t_bq = Triplets::new(n * d * d, n * d);
        let mut t_bv = Triplets::new(n * d * d, n * d);
        let mut t_gblk = Triplets::new(n * d, n * d);
        let mut t_qm = Triplets::new(n * d, n * d * d);
        let mut t_diag = Triplets::new(n * d, n * d);
        let mut t_grav = Triplets::new(n * d, n);
        for c in 0..n {
            for i in 0..d {
                let k = c * d + i;
                t_pv.push(k, c, v[k]);
                t_prho.push(k, k, rho[c]);
                t_diag.push(k, k, 0.5 * divq[c]);
                t_grav.push(k, c, -pb.gravity[k]);
                for a in 0..d {
                    let row = c * d * d + i * d + a;
                    t_bq.push(row, c * d + a, v[k]);
                    t_bv.push(row, k, q[c * d + a]);
                    t_gblk.push(k, c * d + a, 0.5 * gv[row]);
                    t_qm.push(k, row, 0.5 * q[c * d + a]);
                }
            }
        }
        let pv = t_pv.build();
        let prho = t_prho.build();
        let cq = ops
            .div_t
            .mul(&t_bq.build())
            .scaled(0.5)
            .add(&t_gblk.build(), 1.0, 1.0)
            .add(&pv.mul(&ops.div_v), 1.0, 0.5);
        let mut cv = ops
            .div_t
            .mul(&t_bv.build())
            .scaled(0.5)
            .add(&t_qm.build().mul(&ops.grad_v), 1.0, 1.0)
            .add(&t_diag.build(), 1.0, 1.0)
            .add(&self.viscous, 1.0, 1.0);
        let hvp = pb.material.hyperviscosity;
        if let Some(m) = &self.hyper_linear {
            cv = cv.add(m, 1.0, 1.0);
        } else if hvp.nu > 0.0 {
            let d3 = d * d * d;
            let hv = ops.hessian(v);
            let p = hvp.exponent;
            let mut tb = Triplets::new(n * d3, n * d3);
            for c in 0..n {
                let blk = &hv[c * d3..(c + 1) * d3];
                let nh = norm2(blk);
                let a = hvp.nu * math::pow_pm2(nh, p);
                let b = if nh > 0.0 {
                    hvp.nu * (p - 2.0) * math::powf(nh, p - 4.0)
                } else {
                    0.0
                };
                for x in 0..d3 {
                    tb.push(c * d3 + x, c * d3 + x, a);
                    for y in 0..d3 {
                        tb.push(c * d3 + x, c * d3 + y, b * blk[x] * blk[y]);
                    }
                }
            }
            cv = cv.add(&ops.hess_t.mul(&tb.build().mul(&ops.hess)), 1.0, 1.0);
        }

        let mut j_rr = CsrMatrix::identity(n).scaled(1.0 / tau).add(&ops.div_v.mul(&pv), 1.0, 1.0);
        let j_rv = ops.div_v.mul(&prho);
        let mut j_vr = pv.scaled(1.0 / tau).add(&cq.mul(&pv), 1.0, 1.0).add(&t_grav.build(), 1.0, 1.0);
        let mut j_vv = prho.scaled(1.0 / tau).add(&cq.mul(&prho), 1.0, 1.0).add(&cv, 1.0, 1.0);

        if let Some(reg) = reg {
            let p = hvp.exponent;
            let gr = ops.grad_s.matvec(rho);
            let mut t_b = Triplets::new(n * d, n * d);
            let mut t_qg = Triplets::new(n * d, n * d * d);
            let mut t_gb = Triplets::new(n * d, n * d);
            let mut t_eps = Triplets::new(n * d, n * d);
            for c in 0..n {
                let g = &gr[c * d..c * d + d];
                let gn = norm2(g);
                let w = math::powf(gn, reg.r - 2.0);
                let w2 = if gn > 0.0 {
                    (reg.r - 2.0) * math::powf(gn, reg.r - 4.0)
                } else {
                    0.0
                };
                let vc = &v[c * d..c * d + d];
                let vn = norm2(vc);
                let e1 = reg.epsilon * math::pow_pm2(vn, p);
                let e2 = if vn > 0.0 && p != 2.0 {
                    reg.epsilon * (p - 2.0) * math::powf(vn, p - 4.0)
                } else {
                    0.0
                };
                for i in 0..d {
                    t_eps.push(c * d + i, c * d + i, e1);
                    for a in 0..d {
                        let bia = if i == a { w } else { 0.0 } + w2 * g[i] * g[a];
                        t_b.push(c * d + i, c * d + a, bia);
                        t_qg.push(c * d + i, c * d * d + i * d + a, reg.delta * w * g[a]);
                        t_eps.push(c * d + i, c * d + a, e2 * vc[i] * vc[a]);
                        // ((∇v)B)_ia
                        let mut gb = 0.0;
                        for b in 0..d {
                            let bba = if b == a { w } else { 0.0 } + w2 * g[b] * g[a];
                            gb += gv[c * d * d + i * d + b] * bba;
                        }
                        t_gb.push(c * d + i, c * d + a, reg.delta * gb);
                    }
                }
            }
            let bm = t_b.build();
            let lap = ops.grad_s.transpose().mul(&bm.mul(&ops.grad_s));
            j_rr = j_rr.add(&lap, 1.0, reg.delta);
            j_vv = j_vv.add(&t_eps.build(), 1.0, 1.0).add(&t_qg.build().mul(&ops.grad_v), 1.0, 1.0);
            j_vr = j_vr.add(&t_gb.build().mul(&ops.grad_s), 1.0, 1.0);
        }

        let nb = d + 1;
        let mut t = Triplets::with_capacity(
            n * nb,
            n * nb,
            j_rr.nnz() + j_rv.nnz() + j_vr.nnz() + j_vv.nnz(),
        );
        let rmap = |r: usize| r * nb;
        let vmap = |k: usize| (k / d) * nb + 1 + k % d;
        t.push_matrix(&j_rr, 1.0, rmap, rmap);
        t.push_matrix(&j_rv, 1.0, rmap, vmap);
        t.push_matrix(&j_vr, 1.0, vmap, rmap);
        t.push_matrix(&j_vv, 1.0, vmap, vmap);
        t.build()
    }

    /// Newton with backtracking on the residual norm; mass is kept exact by
    /// projecting every density increment onto zero mean defect.
    fn newton(
        &self,
        rho: &mut Vec<f64>,
        v: &mut Vec<f64>,
        reg: Option<Regularization>,
        tol: f64,
        max_iter: usize,
        stage: &'static str,
    ) -> Result<(usize, f64)> {
        let (n, d) = (self.n, self.d);
        let nb = d + 1;
        let mass0: f64 = self.pb.rho0.iter().sum();
        let mut r = self.residual(rho, v, reg);
        let mut rn = norm_inf(&r);
        let opts = GmresOptions {
            rtol: 1e-12,
            ..GmresOptions::default()
        };
        for it in 0..max_iter {
            if rn <= tol {
                return Ok((it, rn));
            }
            let jac = self.jacobian(rho, v, reg);
            let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
            let (mut dz, _) = sparse::solve(&jac, &rhs, &opts)?;
            let defect: f64 = rho.iter().sum::<f64>() - mass0;
            let shift = (defect + (0..n).map(|c| dz[c * nb]).sum::<f64>()) / n as f64;
            for c in 0..n {
                dz[c * nb] -= shift;
            }
            let r2 = norm2(&r);
            let mut t = 1.0;
            loop {
                let mut rho_t = rho.clone();
                let mut v_t = v.clone();
                for c in 0..n {
                    rho_t[c] += t * dz[c * nb];
                    for a in 0..d {
                        v_t[c * d + a] += t * dz[c * nb + 1 + a];
                    }
                }
                if rho_t.iter().all(|x| *x > 0.0) {
                    let r_t = self.residual(&rho_t, &v_t, reg);
                    let r2_t = norm2(&r_t);
                    if r2_t.is_finite() && (r2_t <= (1.0 - 1e-4 * t) * r2 || norm_inf(&r_t) <= tol) {
                        *rho = rho_t;
                        *v = v_t;
                        r = r_t;
                        rn = norm_inf(&r);
                        break;
                    }
                }
                t *= 0.5;
                if t < 1.0 / 256.0 {
                    return Err(Error::NewtonDiverged {
                        stage,
                        residual: rn,
                        iterations: it + 1,
                    });
                }
            }
        }
        if rn <= tol {
            Ok((max_iter, rn))
        } else {
            Err(Error::NewtonDiverged {
                stage,
                residual: rn,
                iterations: max_iter,
            })
        }
    }
}

/// The unregularized discrete residual `(R_ρ, R_v)` at a given `(ρ, v)`.
pub(crate) fn residual(pb: &MomentumProblem, rho: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let ctx = Ctx::new(pb);
    let z = ctx.residual(rho, v, None);
    let (n, d) = (ctx.n, ctx.d);
    let mut r_rho = vec![0.0; n];
    let mut r_v = vec![0.0; n * d];
    for c in 0..n {
        r_rho[c] = z[c * (d + 1)];
        r_v[c * d..c * d + d].copy_from_slice(&z[c * (d + 1) + 1..(c + 1) * (d + 1)]);
    }
    (r_rho, r_v)
}

pub(crate) fn solve(pb: &MomentumProblem, v_guess: &[f64], cfg: &StepConfig) -> Result<MomentumSolution> {
    let ctx = Ctx::new(pb);
    let tol = cfg.momentum_tol * ctx.scale().max(1e-300);
    if !cfg.force_continuation {
        let mut rho = pb.rho0.to_vec();
        let mut v = v_guess.to_vec();
        let first = ctx.newton(&mut rho, &mut v, None, tol, cfg.max_newton, "momentum");
        match first {
            Ok((iterations, residual)) => {
                return Ok(MomentumSolution {
                    rho,
                    v,
                    iterations,
                    residual,
                    continuation_stages: 0,
                })
            }
            Err(Error::NewtonDiverged { .. }) | Err(Error::LinearSolve { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    // (ε, δ)-continuation: regularized solves driven geometrically to zero,
    // then a final unregularized solve from the last iterate
    let cont = &cfg.continuation;
    let mut rho = pb.rho0.to_vec();
    let mut v = v_guess.to_vec();
    let mut total = 0;
    for s in 0..cont.stages {
        let f = math::powf(cont.factor, s as f64);
        let reg = Regularization {
            epsilon: cont.epsilon * f,
            delta: cont.delta * f,
            r: cont.exponent,
        };
        let (it, _) = ctx.newton(&mut rho, &mut v, Some(reg), tol, cfg.max_newton, "continuation")?;
        total += it;
    }
    let (it, residual) = ctx.newton(&mut rho, &mut v, None, tol, cfg.max_newton, "continuation")?;
    Ok(MomentumSolution {
        rho,
        v,
        iterations: total + it,
        residual,
        continuation_stages: cont.stages,
    })
}
