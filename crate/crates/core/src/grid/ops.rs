use alloc::vec::Vec;

use super::{Grid, Kind};
use crate::math;
use crate::sparse::{CsrMatrix, Triplets};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "kebab-case")
)]
pub enum Scheme {
    #[default]
    Upwind,
    Central,
}

/// The linear difference operators of one grid, assembled once.
///
/// Every divergence is the negative transpose of the matching gradient, so
/// `⟨grad f, g⟩ + ⟨f, div g⟩ = 0` holds exactly (up to round-off) in both
/// boundary modes, and `Σ div g = 0` because gradients annihilate constants.
#[derive(Debug, Clone)]
pub struct Operators {
    grid: Grid,
    /// Scalar gradient, `n·d × n`.
    pub grad_s: CsrMatrix,
    /// Vector divergence, `n × n·d`.
    pub div_v: CsrMatrix,
    /// Vector gradient `(∇v)_ia = ∂_a v_i`, `n·d² × n·d`.
    pub grad_v: CsrMatrix,
    /// Row divergence of a d×d tensor field, `n·d × n·d²`.
    pub div_t: CsrMatrix,
    /// Second gradient `(∇²v)_iab = ∂_a ∂_b v_i`, `n·d³ × n·d`.
    pub hess: CsrMatrix,
    pub hess_t: CsrMatrix,
}

fn unit(a: usize, s: isize) -> [isize; 3] {
    let mut o = [0isize; 3];
    o[a] = s;
    o
}

impl Operators {
    pub fn new(grid: &Grid) -> Self {
        let grad_s = build_grad(grid, Kind::Scalar);
        let grad_v = build_grad(grid, Kind::Vector);
        let hess = build_hessian(grid);
        Operators {
            grid: grid.clone(),
            div_v: grad_s.transpose().scaled(-1.0),
            div_t: grad_v.transpose().scaled(-1.0),
            hess_t: hess.transpose(),
            grad_s,
            grad_v,
            hess,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `(v·∇)f` as a matrix acting on a field of the given kind.
    pub fn advection(&self, v: &[f64], kind: Kind, scheme: Scheme) -> CsrMatrix {
        let g = &self.grid;
        let d = g.dim();
        let nc = g.ncomp(kind);
        let n = g.len();
        let mut t = Triplets::with_capacity(n * nc, n * nc, n * nc * (2 * d + 1));
        for c in 0..n {
            for a in 0..d {
                let va = v[c * d + a];
                if va == 0.0 {
                    continue;
                }
                let h = g.spacing()[a];
                match scheme {
                    Scheme::Upwind => {
                        let s = if va > 0.0 { -1 } else { 1 };
                        let (nb, refl) = g.shifted(c, unit(a, s));
                        let coef = math::abs(va) / h;
                        for k in 0..nc {
                            t.push(c * nc + k, c * nc + k, coef);
                            t.push(c * nc + k, nb * nc + k, -coef * g.parity(kind, k, refl));
                        }
                    }
                    Scheme::Central => {
                        let coef = va / (2.0 * h);
                        let (p, rp) = g.shifted(c, unit(a, 1));
                        let (m, rm) = g.shifted(c, unit(a, -1));
                        for k in 0..nc {
                            t.push(c * nc + k, p * nc + k, coef * g.parity(kind, k, rp));
                            t.push(c * nc + k, m * nc + k, -coef * g.parity(kind, k, rm));
                        }
                    }
                }
            }
        }
        t.build()
    }

    /// Pointwise second gradients.
    pub fn hessian(&self, v: &[f64]) -> Vec<f64> {
        self.hess.matvec(v)
    }

    /// Residual contribution `r` of the hyperstress, with
    /// `⟨r, w⟩ = Σ vol ν|∇²v|^{p−2}∇²v ⋮ ∇²w` for every discrete w
    /// (the cell volume cancels against the inner product's weight).
    pub fn hyperstress_apply(&self, v: &[f64], nu: f64, p: f64) -> Vec<f64> {
        let hv = self.hyperstress(v, nu, p);
        self.hess_t.matvec(&hv)
    }

    /// `𝔥 = ν|∇²v|^{p−2}∇²v` per cell.
    pub fn hyperstress(&self, v: &[f64], nu: f64, p: f64) -> Vec<f64> {
        let d3 = self.grid.dim().pow(3);
        let mut hv = self.hess.matvec(v);
        for blk in hv.chunks_mut(d3) {
            let norm = math::sqrt(blk.iter().map(|x| x * x).sum());
            let f = nu * math::pow_pm2(norm, p);
            blk.iter_mut().for_each(|x| *x *= f);
        }
        hv
    }

    /// `Σ vol ν|∇²v|^p`.
    pub fn hyper_dissipation(&self, v: &[f64], nu: f64, p: f64) -> f64 {
        let d3 = self.grid.dim().pow(3);
        let hv = self.hess.matvec(v);
        let s: f64 = hv
            .chunks(d3)
            .map(|blk| {
                let n2: f64 = blk.iter().map(|x| x * x).sum();
                math::powf(n2, p / 2.0)
            })
            .sum();
        nu * s * self.grid.volume()
    }
}

fn build_grad(g: &Grid, kind: Kind) -> CsrMatrix {
    let d = g.dim();
    let nc = g.ncomp(kind);
    let n = g.len();
    let mut t = Triplets::with_capacity(n * nc * d, n * nc, 2 * n * nc * d);
    for c in 0..n {
        for a in 0..d {
            let w = 1.0 / (2.0 * g.spacing()[a]);
            let (p, rp) = g.shifted(c, unit(a, 1));
            let (m, rm) = g.shifted(c, unit(a, -1));
            for k in 0..nc {
                let row = (c * nc + k) * d + a;
                t.push(row, p * nc + k, w * g.parity(kind, k, rp));
                t.push(row, m * nc + k, -w * g.parity(kind, k, rm));
            }
        }
    }
    t.build()
}

fn build_hessian(g: &Grid) -> CsrMatrix {
    let d = g.dim();
    let n = g.len();
    let h = g.spacing();
    let mut t = Triplets::with_capacity(n * d * d * d, n * d, n * d * d * d * 4);
    for c in 0..n {
        for i in 0..d {
            for a in 0..d {
                for b in 0..d {
                    let row = c * d * d * d + i * d * d + a * d + b;
                    let mut put = |off: [isize; 3], w: f64| {
                        let (nb, refl) = g.shifted(c, off);
                        t.push(row, nb * d + i, w * g.parity(Kind::Vector, i, refl));
                    };
                    if a == b {
                        let w = 1.0 / (h[a] * h[a]);
                        put(unit(a, 1), w);
                        put([0; 3], -2.0 * w);
                        put(unit(a, -1), w);
                    } else {
                        let w = 1.0 / (4.0 * h[a] * h[b]);
                        for (sa, sb, s) in [(1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)] {
                            let mut off = [0isize; 3];
                            off[a] = sa;
                            off[b] = sb;
                            put(off, s * w);
                        }
                    }
                }
            }
        }
    }
    t.build()
}

#[cfg(test)]
mod tests {
    use super::super::Boundary;
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        for bc in [Boundary::Periodic, Boundary::SlipBox] {
            let g = Grid::uniform(2, 6, 1.0, bc).unwrap();
            let ops = Operators::new(&g);
            let f = vec![3.5; g.len()];
            assert!(ops.grad_s.matvec(&f).iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn adjointness_and_zero_divergence_sum() {
        let mut seed = 7;
        for bc in [Boundary::Periodic, Boundary::SlipBox] {
            for dim in [2, 3] {
                let g = Grid::uniform(dim, 5, 1.0, bc).unwrap();
                let ops = Operators::new(&g);
                let f: Vec<f64> = (0..g.len()).map(|_| lcg(&mut seed)).collect();
                let q: Vec<f64> = (0..g.len() * dim).map(|_| lcg(&mut seed)).collect();
                let lhs = dot(&ops.grad_s.matvec(&f), &q) + dot(&f, &ops.div_v.matvec(&q));
                assert!(lhs.abs() < 1e-12);
                let s: f64 = ops.div_v.matvec(&q).iter().sum();
                assert!(s.abs() < 1e-12);
                let tt: Vec<f64> = (0..g.len() * dim * dim).map(|_| lcg(&mut seed)).collect();
                let lhs = dot(&ops.grad_v.matvec(&q), &tt) + dot(&q, &ops.div_t.matvec(&tt));
                assert!(lhs.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_field_is_advected_exactly() {
        let g = Grid::uniform(2, 8, 1.0, Boundary::Periodic).unwrap();
        let ops = Operators::new(&g);
        let v: Vec<f64> = (0..g.len()).flat_map(|_| [0.3, -0.2]).collect();
        // a constant perturbation on top of the exact linear map x ↦ c·x
        let f: Vec<f64> = vec![1.0; g.len()];
        let a = ops.advection(&v, Kind::Scalar, Scheme::Central);
        assert!(a.matvec(&f).iter().all(|x| x.abs() < 1e-14));
        let zero = ops.advection(&vec![0.0; 2 * g.len()], Kind::Tensor, Scheme::Upwind);
        assert_eq!(zero.nnz(), 0);
    }

    #[test]
    fn affine_velocity_has_no_hyperstress() {
        let g = Grid::uniform(2, 8, 1.0, Boundary::Periodic).unwrap();
        let ops = Operators::new(&g);
        let v: Vec<f64> = (0..g.len()).flat_map(|_| [0.4, 1.0]).collect();
        let r = ops.hyperstress_apply(&v, 1.0, 4.0);
        assert!(r.iter().all(|x| x.abs() < 1e-12));
    }
}
