//! Backward Euler on the 0D system with dense Newton, staggered like the
//! full step: Fe with the old α, α with that Fe, then Fe again with the new α.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::material::Material;
use crate::math;
use crate::sparse::solve_dense;
use crate::stepper::{DrivePoint, GradientSchedule};
use crate::tensor::{Mat3, Vec3};

fn solve_fe(m: &Material, l: &Mat3, f0: &Mat3, a: f64, tau: f64) -> Result<Mat3> {
    let x = Vec3::ZERO;
    let g = |f: &Mat3| -> Result<[f64; 9]> {
        let lp = m.plastic_rate(&x, f, a)?;
        Ok(((*f - *f0) * (1.0 / tau) - (*l * *f - *f * lp)).to_array())
    };
    let tol = 1e-14 * (1.0 + f0.max_abs() / tau);
    let mut f = *f0;
    for _ in 0..50 {
        let r = g(&f)?;
        let rn = r.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        if rn <= tol {
            return Ok(f);
        }
        let mut jac = vec![0.0; 81];
        let y = f.to_array();
        for k in 0..9 {
            let h = 1e-7 * (1.0 + y[k].abs());
            let (mut yp, mut ym) = (y, y);
            yp[k] += h;
            ym[k] -= h;
            let (rp, rm) = (g(&Mat3::from_slice(&yp))?, g(&Mat3::from_slice(&ym))?);
            for j in 0..9 {
                jac[j * 9 + k] = (rp[j] - rm[j]) / (2.0 * h);
            }
        }
        let mut dy: Vec<f64> = r.iter().map(|v| -v).collect();
        solve_dense(9, &mut jac, &mut dy)?;
        let mut yn = y;
        for k in 0..9 {
            yn[k] += dy[k];
        }
        f = Mat3::from_slice(&yn);
    }
    let rn = g(&f)?.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if rn <= 10.0 * tol {
        return Ok(f);
    }
    Err(Error::NewtonDiverged {
        stage: "0D Fe oracle",
        residual: rn,
        iterations: 50,
    })
}

/// Scalar α update by bisection-safeguarded secant; g is monotone in α for
/// any convex damage potential.
fn solve_alpha(m: &Material, f: &Mat3, a0: f64, tau: f64) -> Result<f64> {
    let x = Vec3::ZERO;
    let g = |a: f64| (a - a0) / tau - m.damage_rate(&x, f, a);
    let tol = 1e-15 * (1.0 + a0.abs() / tau);
    if g(a0).abs() <= tol {
        return Ok(a0);
    }
    // bracket
    let mut w = 1.0;
    let (mut lo, mut hi) = (a0 - w, a0 + w);
    while g(lo) > 0.0 || g(hi) < 0.0 {
        w *= 2.0;
        lo = a0 - w;
        hi = a0 + w;
        if w > 1e6 {
            return Err(Error::NewtonDiverged {
                stage: "0D damage oracle",
                residual: g(a0).abs(),
                iterations: 0,
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm.abs() <= tol || hi - lo <= 1e-16 * (1.0 + mid.abs()) {
            return Ok(mid);
        }
        if gm > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Backward-Euler trajectory with `∇v` evaluated at the new time level.
pub fn backward_euler_0d(
    material: &Material,
    fe0: Mat3,
    alpha0: f64,
    schedule: &GradientSchedule,
    tau: f64,
    t_end: f64,
) -> Result<Vec<DrivePoint>> {
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
    for k in 1..=steps {
        let t = k as f64 * tau;
        let l = schedule.at(t);
        let f_lag = solve_fe(material, &l, &f, a, tau)?;
        let a_new = if material.damage.is_some() {
            solve_alpha(material, &f_lag, a, tau)?
        } else {
            a
        };
        f = if material.energy.depends_on_alpha() && a_new != a {
            solve_fe(material, &l, &f, a_new, tau)?
        } else {
            f_lag
        };
        a = a_new;
        out.push(DrivePoint {
            time: t,
            fe: f,
            alpha: a,
            stored: material.energy(&x, &f, a),
        });
    }
    Ok(out)
}
