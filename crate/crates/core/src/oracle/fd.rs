//! Central finite-difference check of `[φ_λ]′_F`, `𝒯_λ` and `[φ_λ]′_α`,
//! reported per truncation branch so a broken branch can be located.

use alloc::vec::Vec;

use crate::material::{Branch, Material, Truncation};
use crate::math;
use crate::tensor::{Mat3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub x: Vec3,
    pub f: Mat3,
    pub alpha: f64,
    pub branch: Branch,
}

/// splitmix64; enough for reproducible sampling without a dependency.
struct Rng(u64);

impl Rng {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64
    }

    fn range(&mut self, a: f64, b: f64) -> f64 {
        a + (b - a) * self.next()
    }

    /// Proper rotation from Gram–Schmidt on a random matrix.
    fn rotation(&mut self) -> Mat3 {
        loop {
            let mut r = [[0.0; 3]; 3];
            for row in r.iter_mut() {
                for v in row.iter_mut() {
                    *v = self.range(-1.0, 1.0);
                }
            }
            let mut q = [Vec3::ZERO; 3];
            let mut ok = true;
            for i in 0..3 {
                let mut u = Vec3(r[i]);
                for qj in q.iter().take(i) {
                    u = u - *qj * u.dot(qj);
                }
                let n = u.norm();
                if n < 1e-3 {
                    ok = false;
                    break;
                }
                q[i] = u * (1.0 / n);
            }
            if !ok {
                continue;
            }
            let m = Mat3::from_rows([q[0].0, q[1].0, q[2].0]);
            if m.det() > 0.0 {
                return m;
            }
        }
    }
}

/// Relative distance of `F` to the four seams `|F| = λ, 2λ`, `det F = 1/λ, 1/(2λ)`.
fn seam_distance(lambda: f64, f: &Mat3) -> f64 {
    let n = f.frob();
    let j = f.det();
    let dn = ((n - lambda).abs() / lambda).min((n - 2.0 * lambda).abs() / (2.0 * lambda));
    let dj = ((j * lambda - 1.0).abs()).min((2.0 * j * lambda - 1.0).abs());
    dn.min(dj)
}

/// Random deformations covering the untruncated region, both halves of the
/// blend zone and both dead regions, `per_kind` of each, kept at relative
/// distance ≥ 1e-2 from the seams. `F = I` is always included.
pub fn sample_deformations(lambda: f64, per_kind: usize, seed: u64) -> Vec<Sample> {
    let t = Truncation::new(lambda);
    let mut rng = Rng(seed);
    let mut out = Vec::new();
    let push = |rng: &mut Rng, f: Mat3, out: &mut Vec<Sample>| {
        let x = Vec3::new(rng.next(), rng.next(), rng.next());
        let alpha = rng.range(0.1, 0.9);
        out.push(Sample {
            x,
            f,
            alpha,
            branch: t.branch(&f),
        });
    };
    push(&mut rng, Mat3::identity(), &mut out);
    for kind in 0..5 {
        let mut got = 0;
        while got < per_kind {
            let mut s = [rng.range(0.5, 1.5), rng.range(0.5, 1.5), rng.range(0.5, 1.5)];
            match kind {
                // untruncated
                0 => {}
                // norm blend
                1 => {
                    let target = rng.range(1.0, 2.0) * lambda;
                    let k = target / math::sqrt(s.iter().map(|v| v * v).sum());
                    s.iter_mut().for_each(|v| *v *= k);
                }
                // det blend
                2 => {
                    let target = rng.range(0.5, 1.0) / lambda;
                    s[2] = target / (s[0] * s[1]);
                }
                // dead by norm
                3 => {
                    let target = rng.range(2.0, 3.0) * lambda;
                    let k = target / math::sqrt(s.iter().map(|v| v * v).sum());
                    s.iter_mut().for_each(|v| *v *= k);
                }
                // dead by det
                _ => {
                    let target = rng.range(0.1, 0.5) / lambda;
                    s[2] = target / (s[0] * s[1]);
                }
            }
            let f = rng.rotation() * Mat3::diag(s[0], s[1], s[2]) * rng.rotation();
            let want = match kind {
                0 => Branch::Untruncated,
                1 | 2 => Branch::Blend,
                _ => Branch::Dead,
            };
            if t.branch(&f) != want || seam_distance(lambda, &f) < 1e-2 {
                continue;
            }
            push(&mut rng, f, &mut out);
            got += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchError {
    pub branch: Branch,
    pub samples: usize,
    pub d_f: f64,
    pub stress: f64,
    pub d_alpha: f64,
}

impl BranchError {
    pub fn worst(&self) -> f64 {
        self.d_f.max(self.stress).max(self.d_alpha)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub samples: usize,
    pub branches: [BranchError; 3],
}

impl FdReport {
    pub fn worst(&self) -> f64 {
        self.branches.iter().fold(0.0, |m, b| m.max(b.worst()))
    }

    /// Branches whose worst error exceeds `tol`.
    pub fn failing(&self, tol: f64) -> Vec<Branch> {
        self.branches
            .iter()
            .filter(|b| !(b.worst() <= tol))
            .map(|b| b.branch)
            .collect()
    }
}

fn rel(diff: f64, a: f64, b: f64, scale: f64) -> f64 {
    diff / a.max(b).max(scale)
}

/// Generic check. Errors are `|analytic − fd| / max(|analytic|, |fd|, scale)`,
/// so values near zero are measured on the absolute `scale`.
pub fn fd_check<E, DF, DA>(energy: E, d_f: DF, d_alpha: DA, samples: &[Sample], scale: f64) -> FdReport
where
    E: Fn(&Vec3, &Mat3, f64) -> f64,
    DF: Fn(&Vec3, &Mat3, f64) -> Mat3,
    DA: Fn(&Vec3, &Mat3, f64) -> f64,
{
    let mut br = [Branch::Untruncated, Branch::Blend, Branch::Dead].map(|branch| BranchError {
        branch,
        samples: 0,
        d_f: 0.0,
        stress: 0.0,
        d_alpha: 0.0,
    });
    for s in samples {
        let b = &mut br[match s.branch {
            Branch::Untruncated => 0,
            Branch::Blend => 1,
            Branch::Dead => 2,
        }];
        b.samples += 1;
        let phi = energy(&s.x, &s.f, s.alpha);
        let mut fd = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                let h = 1e-5 * (1.0 + s.f.0[i][j].abs());
                let (mut fp, mut fm) = (s.f, s.f);
                fp.0[i][j] += h;
                fm.0[i][j] -= h;
                fd.0[i][j] = (energy(&s.x, &fp, s.alpha) - energy(&s.x, &fm, s.alpha)) / (2.0 * h);
            }
        }
        let an = d_f(&s.x, &s.f, s.alpha);
        b.d_f = b.d_f.max(rel((an - fd).frob(), an.frob(), fd.frob(), scale));
        let t_an = an * s.f.transpose() + Mat3::identity() * phi;
        let t_fd = fd * s.f.transpose() + Mat3::identity() * phi;
        b.stress = b.stress.max(rel((t_an - t_fd).frob(), t_an.frob(), t_fd.frob(), scale));
        let h = 1e-5;
        let da_fd = (energy(&s.x, &s.f, s.alpha + h) - energy(&s.x, &s.f, s.alpha - h)) / (2.0 * h);
        let da = d_alpha(&s.x, &s.f, s.alpha);
        b.d_alpha = b.d_alpha.max(rel((da - da_fd).abs(), da.abs(), da_fd.abs(), scale));
    }
    FdReport {
        samples: samples.len(),
        branches: br,
    }
}

/// [`fd_check`] on a material; the absolute scale is the derivative magnitude
/// at a moderate stretch.
pub fn fd_stress_check(material: &Material, samples: &[Sample]) -> FdReport {
    let probe = material.d_energy_f(&Vec3::ZERO, &Mat3::diag(1.2, 1.0, 1.0), 0.5).frob();
    let scale = if probe > 0.0 { probe } else { 1.0 };
    fd_check(
        |x, f, a| material.energy(x, f, a),
        |x, f, a| material.d_energy_f(x, f, a),
        |x, f, a| material.d_energy_alpha(x, f, a),
        samples,
        scale,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_cover_every_branch() {
        let s = sample_deformations(3.0, 10, 7);
        assert_eq!(s.len(), 51);
        for b in [Branch::Untruncated, Branch::Blend, Branch::Dead] {
            assert!(s.iter().filter(|x| x.branch == b).count() >= 10);
        }
    }
}
