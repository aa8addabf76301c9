//! C¹ cutoff of the stored energy at large distortions.
//!
//! `φ_λ = b_det(det F) · b_norm(|F|) · φ`, where both blends equal 1 on the
//! untruncated region (`|F| <= λ`, `det F >= 1/λ`) and the product vanishes for
//! `|F| >= 2λ` or `det F <= 1/(2λ)`.
//!
//! The norm blend uses the decreasing smoothstep `1 − (3s² − 2s³)`,
//! `s = |F|/λ − 1`; the increasing orientation would be discontinuous at both
//! seams.

use super::energy::EnergyDensity;
use crate::tensor::{Mat3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Untruncated,
    Blend,
    Dead,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub lambda: f64,
}

/// Weight `w(F)` and `∂w/∂F`.
#[derive(Debug, Clone, Copy)]
pub struct Weight {
    pub value: f64,
    pub d_f: Mat3,
    pub branch: Branch,
}

impl Truncation {
    pub fn new(lambda: f64) -> Self {
        Truncation { lambda }
    }

    /// Blend in det F and its derivative.
    pub fn det_blend(&self, j: f64) -> (f64, f64) {
        let l = self.lambda;
        if j >= 1.0 / l {
            (1.0, 0.0)
        } else if j <= 0.5 / l {
            (0.0, 0.0)
        } else {
            let u = 2.0 * j - 1.0 / l;
            let b = 3.0 * l * l * u * u - 2.0 * l * l * l * u * u * u;
            (b, 12.0 * l * l * u * (1.0 - l * u))
        }
    }

    /// Blend in |F| and its derivative.
    pub fn norm_blend(&self, n: f64) -> (f64, f64) {
        let l = self.lambda;
        if n <= l {
            (1.0, 0.0)
        } else if n >= 2.0 * l {
            (0.0, 0.0)
        } else {
            let s = n / l - 1.0;
            (1.0 - (3.0 * s * s - 2.0 * s * s * s), (-6.0 * s + 6.0 * s * s) / l)
        }
    }

    pub fn branch(&self, f: &Mat3) -> Branch {
        let l = self.lambda;
        let n = f.frob();
        let j = f.det();
        if n >= 2.0 * l || j <= 0.5 / l {
            Branch::Dead
        } else if n <= l && j >= 1.0 / l {
            Branch::Untruncated
        } else {
            Branch::Blend
        }
    }

    pub fn weight(&self, f: &Mat3) -> Weight {
        let branch = self.branch(f);
        match branch {
            Branch::Untruncated => Weight {
                value: 1.0,
                d_f: Mat3::ZERO,
                branch,
            },
            Branch::Dead => Weight {
                value: 0.0,
                d_f: Mat3::ZERO,
                branch,
            },
            Branch::Blend => {
                let n = f.frob();
                let (bd, dbd) = self.det_blend(f.det());
                let (bn, dbn) = self.norm_blend(n);
                let d_f = f.cof() * (bn * dbd) + *f * (bd * dbn / n);
                Weight {
                    value: bd * bn,
                    d_f,
                    branch,
                }
            }
        }
    }

    pub fn energy<E: EnergyDensity + ?Sized>(&self, e: &E, x: &Vec3, f: &Mat3, alpha: f64) -> f64 {
        let w = self.weight(f);
        if w.branch == Branch::Dead {
            0.0
        } else {
            w.value * e.energy(x, f, alpha)
        }
    }

    /// `∂φ_λ/∂F = w φ′ + φ w′`.
    pub fn d_f<E: EnergyDensity + ?Sized>(&self, e: &E, x: &Vec3, f: &Mat3, alpha: f64) -> Mat3 {
        let w = self.weight(f);
        match w.branch {
            Branch::Dead => Mat3::ZERO,
            Branch::Untruncated => e.d_f(x, f, alpha),
            Branch::Blend => e.d_f(x, f, alpha) * w.value + w.d_f * e.energy(x, f, alpha),
        }
    }

    pub fn d_alpha<E: EnergyDensity + ?Sized>(&self, e: &E, x: &Vec3, f: &Mat3, alpha: f64) -> f64 {
        let w = self.weight(f);
        if w.branch == Branch::Dead {
            0.0
        } else {
            w.value * e.d_alpha(x, f, alpha)
        }
    }

    pub fn d2_alpha<E: EnergyDensity + ?Sized>(&self, e: &E, x: &Vec3, f: &Mat3, alpha: f64) -> f64 {
        let w = self.weight(f);
        if w.branch == Branch::Dead {
            0.0
        } else {
            w.value * e.d2_alpha(x, f, alpha)
        }
    }

    /// Upper bound of `|∂w/∂F|` over the support of `w`.
    pub fn weight_derivative_bound(&self) -> f64 {
        let l = self.lambda;
        let cof_max = 4.0 * l * l / crate::math::sqrt(3.0);
        3.0 * l * cof_max + 1.5 / l
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_blend_reference_value() {
        let t = Truncation::new(2.0);
        let (b, _) = t.det_blend(0.375);
        assert!((b - 0.5).abs() < 1e-15);
    }

    #[test]
    fn norm_blend_reference_value() {
        let t = Truncation::new(4.0);
        let f = Mat3::diag(6.0, 0.5, 0.5);
        let n = f.frob();
        let s = n / 4.0 - 1.0;
        let (b, _) = t.norm_blend(n);
        assert!((b - (1.0 - 3.0 * s * s + 2.0 * s * s * s)).abs() < 1e-15);
        assert!((b - 0.4844).abs() < 1e-3);
        assert_eq!(t.branch(&f), Branch::Blend);
        assert_eq!(t.det_blend(f.det()).0, 1.0);
    }

    #[test]
    fn blends_are_c1_at_seams() {
        let t = Truncation::new(3.0);
        for &n in &[3.0, 6.0] {
            let (a, da) = t.norm_blend(n - 1e-9);
            let (b, db) = t.norm_blend(n + 1e-9);
            assert!((a - b).abs() < 1e-8 && (da - db).abs() < 1e-7);
        }
        for &j in &[1.0 / 6.0, 1.0 / 3.0] {
            let (a, da) = t.det_blend(j - 1e-10);
            let (b, db) = t.det_blend(j + 1e-10);
            assert!((a - b).abs() < 1e-8 && (da - db).abs() < 1e-7);
        }
    }

    #[test]
    fn branches() {
        let t = Truncation::new(4.0);
        assert_eq!(t.branch(&Mat3::identity()), Branch::Untruncated);
        assert_eq!(t.branch(&Mat3::diag(9.0, 1.0, 1.0)), Branch::Dead);
        assert_eq!(t.branch(&Mat3::diag(0.1, 1.0, 1.0)), Branch::Dead);
        assert_eq!(t.branch(&Mat3::diag(0.2, 1.0, 1.0)), Branch::Blend);
    }
}
