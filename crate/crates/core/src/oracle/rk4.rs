//! Classical RK4 on the continuous 0D system
//! `Ḟe = L(t)Fe − Fe ℒ_λ(Fe, α)`, `α̇ = 𝒟_λ(Fe, α)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::material::Material;
use crate::math;
use crate::stepper::{DrivePoint, GradientSchedule};
use crate::tensor::{Mat3, Vec3};

fn rhs(m: &Material, sched: &GradientSchedule, t: f64, f: &Mat3, a: f64) -> Result<(Mat3, f64)> {
    let x = Vec3::ZERO;
    let l = sched.at(t);
    let lp = m.plastic_rate(&x, f, a)?;
    Ok((l * *f - *f * lp, m.damage_rate(&x, f, a)))
}

/// RK4 trajectory with step `tau`, including the initial point. Fails with
/// [`Error::Collapse`] when det Fe stops being positive.
pub fn reference_0d(
    material: &Material,
    fe0: Mat3,
    alpha0: f64,
    schedule: &GradientSchedule,
    tau: f64,
    t_end: f64,
) -> Result<Vec<DrivePoint>> {
    if !(tau > 0.0) {
        return Err(Error::invalid("tau must be positive"));
    }
    let x = Vec3::ZERO;
    let steps = math::round(t_end / tau) as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let (mut f, mut a) = (fe0, alpha0);
    out.push(DrivePoint {
        time: 0.0,
        fe: f,
        alpha: a,
        stored: material.energy(&x, &f, a),
    });
    for k in 0..steps {
        let t = k as f64 * tau;
        let h = tau;
        let (k1f, k1a) = rhs(material, schedule, t, &f, a)?;
        let (k2f, k2a) = rhs(material, schedule, t + 0.5 * h, &(f + k1f * (0.5 * h)), a + 0.5 * h * k1a)?;
        let (k3f, k3a) = rhs(material, schedule, t + 0.5 * h, &(f + k2f * (0.5 * h)), a + 0.5 * h * k2a)?;
        let (k4f, k4a) = rhs(material, schedule, t + h, &(f + k3f * h), a + h * k3a)?;
        f = f + (k1f + k2f * 2.0 + k3f * 2.0 + k4f) * (h / 6.0);
        a += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        let t1 = (k + 1) as f64 * tau;
        if !(f.det() > 0.0) || !f.is_finite() {
            return Err(Error::Collapse { time: t1 });
        }
        out.push(DrivePoint {
            time: t1,
            fe: f,
            alpha: a,
            stored: material.energy(&x, &f, a),
        });
    }
    Ok(out)
}

/// Largest end-point difference between RK4 at `tau` and at `tau/2`; a
/// measure of how far the reference itself is from the exact flow.
pub fn rk4_self_consistency(
    material: &Material,
    fe0: Mat3,
    alpha0: f64,
    schedule: &GradientSchedule,
    tau: f64,
    t_end: f64,
) -> Result<f64> {
    let a = reference_0d(material, fe0, alpha0, schedule, tau, t_end)?;
    let b = reference_0d(material, fe0, alpha0, schedule, 0.5 * tau, t_end)?;
    let (pa, pb) = (a.last().unwrap(), b.last().unwrap());
    Ok((pa.fe - pb.fe).max_abs().max((pa.alpha - pb.alpha).abs()))
}
