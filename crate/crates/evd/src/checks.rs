//! Front-ends to the oracles: material self-checks and 0D comparisons.

use std::fmt;

use evd_core::material::{Branch, EnergyDensity, Material, Truncation, ViscoplasticPotential};
use evd_core::oracle::{
    backward_euler_0d, fd_check, fd_stress_check, reference_0d, rk4_self_consistency, sample_deformations,
    FdReport,
};
use evd_core::stepper::{kinematic_drive, DrivePoint, GradientSchedule, StepConfig};
use evd_core::{Mat3, Vec3};

use crate::config::ScenarioConfig;
use crate::error::{EvdError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Max(f64),
    Range(f64, f64),
    Info,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
    pub detail: String,
}

impl CheckLine {
    pub fn new(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self::with_bound(name, value, Bound::Max(tol))
    }

    pub fn with_bound(name: impl Into<String>, value: f64, bound: Bound) -> Self {
        CheckLine {
            name: name.into(),
            value,
            bound,
            detail: String::new(),
        }
    }

    pub fn info(name: impl Into<String>, value: f64, detail: impl Into<String>) -> Self {
        Self::with_bound(name, value, Bound::Info).with_detail(detail)
    }

    pub fn with_detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }

    pub fn passed(&self) -> bool {
        match self.bound {
            Bound::Max(t) => self.value <= t,
            Bound::Range(a, b) => (a..=b).contains(&self.value),
            Bound::Info => true,
        }
    }
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.passed() { "PASS" } else { "FAIL" };
        match self.bound {
            Bound::Max(t) => write!(f, "{s} {:<48} {:.3e} (tol {:.1e})", self.name, self.value, t)?,
            Bound::Range(a, b) => write!(f, "{s} {:<48} {:.3} (range [{a}, {b}])", self.name, self.value)?,
            Bound::Info => write!(f, "INFO {:<48} {:.3e}", self.name, self.value)?,
        }
        if !self.detail.is_empty() {
            write!(f, "  {}", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckReport {
    pub lines: Vec<CheckLine>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(CheckLine::passed)
    }

    pub fn push(&mut self, l: CheckLine) {
        self.lines.push(l);
    }

    /// `Err(Tolerance)` naming the failed lines.
    pub fn into_result(self) -> Result<Self> {
        if self.passed() {
            return Ok(self);
        }
        let failed: Vec<String> = self
            .lines
            .iter()
            .filter(|l| !l.passed())
            .map(|l| l.name.clone())
            .collect();
        Err(EvdError::Tolerance(failed.join(", ")))
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            writeln!(f, "{l}")?;
        }
        Ok(())
    }
}

pub const FD_TOL: f64 = 1e-6;
pub const SEAM_TOL: f64 = 1e-6;
pub const CONJUGATE_TOL: f64 = 1e-10;

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Untruncated => "untruncated",
        Branch::Blend => "blend",
        Branch::Dead => "dead",
    }
}

fn fd_lines(rep: &FdReport, out: &mut CheckReport) {
    for b in &rep.branches {
        out.push(
            CheckLine::new(format!("derivatives, {} branch", branch_name(b.branch)), b.worst(), FD_TOL).with_detail(
                format!(
                    "{} samples; dF {:.1e}, stress {:.1e}, dalpha {:.1e}",
                    b.samples, b.d_f, b.stress, b.d_alpha
                ),
            ),
        );
    }
}

/// A stand-in for a material whose blend-zone derivative forgets the weight
/// gradient: exact where the weight is flat, wrong in between.
pub fn broken_blend_report(m: &Material, samples: &[evd_core::oracle::Sample]) -> FdReport {
    let t = m.truncation();
    fd_check(
        |x, f, a| m.energy(x, f, a),
        |x, f, a| {
            let w = t.weight(f).value;
            if w == 0.0 {
                Mat3::ZERO
            } else {
                m.energy.d_f(x, f, a) * w
            }
        },
        |x, f, a| m.d_energy_alpha(x, f, a),
        samples,
        1.0,
    )
}

/// Largest `|φ_λ(F(1+ε)) − φ_λ(F(1−ε))|` (and the same for `[φ_λ]′_F`)
/// over points on the four seams, relative to the untruncated energy there.
pub fn seam_jumps(m: &Material) -> (f64, f64) {
    let l = m.lambda;
    let x = Vec3::new(0.3, 0.6, 0.0);
    let a = 0.5;
    let trunc = Truncation::new(l);
    let mut seams = Vec::new();
    // |F| seams with det well inside
    for target in [l, 2.0 * l] {
        for shape in [[1.0, 1.0, 1.0], [1.4, 0.9, 0.8], [2.0, 0.7, 1.0]] {
            let n = (shape.iter().map(|s: &f64| s * s).sum::<f64>()).sqrt();
            let k = target / n;
            seams.push(Mat3::diag(shape[0] * k, shape[1] * k, shape[2] * k));
        }
    }
    // det seams with |F| well inside
    for target in [1.0 / l, 0.5 / l] {
        for (p, q) in [(1.0, 1.0), (1.2, 0.9), (0.8, 1.1)] {
            seams.push(Mat3::diag(p, q, target / (p * q)));
        }
    }
    let eps = 1e-9;
    let (mut je, mut jd): (f64, f64) = (0.0, 0.0);
    for f in seams {
        // straddle along the direction that crosses this seam
        let (fp, fm) = if (f.frob() - l).abs() < 1e-9 * l || (f.frob() - 2.0 * l).abs() < 1e-9 * l {
            (f * (1.0 + eps), f * (1.0 - eps))
        } else {
            let s = Mat3::diag(1.0, 1.0, 1.0 + eps);
            let t = Mat3::diag(1.0, 1.0, 1.0 - eps);
            (f * s, f * t)
        };
        let scale = m.energy.energy(&x, &f, a).abs().max(m.energy.d_f(&x, &f, a).frob()).max(1e-300);
        je = je.max((trunc.energy(&m.energy, &x, &fp, a) - trunc.energy(&m.energy, &x, &fm, a)).abs() / scale);
        jd = jd.max((trunc.d_f(&m.energy, &x, &fp, a) - trunc.d_f(&m.energy, &x, &fm, a)).frob() / scale);
    }
    (je, jd)
}

/// `max |ζ′([ζ*]′(M)) − M| / (1 + |M|)` over random deviatoric M.
pub fn conjugate_round_trip(p: &ViscoplasticPotential, count: usize, seed: u64) -> Result<f64> {
    let mut state = seed;
    let mut rnd = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    let x = Vec3::new(0.2, 0.4, 0.0);
    let mut worst: f64 = 0.0;
    for k in 0..count {
        let mut a = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                a.0[i][j] = rnd();
            }
        }
        let scale = [0.01, 1.0, 30.0][k % 3];
        let m = a.dev() * scale;
        let l = p.conjugate_rate(&x, &m)?;
        let back = p.d_zeta(&x, &l);
        worst = worst.max((back - m).frob() / (1.0 + m.frob()));
    }
    Ok(worst)
}

/// FD derivative check per branch, seam continuity and conjugate round trips.
/// With `fault`, the derivative under test is the broken fixture.
pub fn check_material(m: &Material, per_kind: usize, seed: u64, fault: bool) -> Result<CheckReport> {
    m.validate().map_err(|e| EvdError::Config(e.to_string()))?;
    let samples = sample_deformations(m.lambda, per_kind, seed);
    let fd = if fault {
        broken_blend_report(m, &samples)
    } else {
        fd_stress_check(m, &samples)
    };
    let mut out = CheckReport::default();
    out.push(CheckLine::info("samples", samples.len() as f64, ""));
    fd_lines(&fd, &mut out);
    if fault {
        let failing: Vec<&str> = fd.failing(FD_TOL).into_iter().map(branch_name).collect();
        out.push(CheckLine::info("located", failing.len() as f64, format!("failing branch: {}", failing.join(", "))));
    }
    let (je, jd) = seam_jumps(m);
    out.push(CheckLine::new("seam jump, energy", je, SEAM_TOL));
    out.push(CheckLine::new("seam jump, derivative", jd, SEAM_TOL));
    let quad = ViscoplasticPotential::quadratic(0.7);
    let quart = ViscoplasticPotential::quartic(0.7, 0.3);
    out.push(CheckLine::new("conjugate round trip, quadratic", conjugate_round_trip(&quad, 60, seed)?, CONJUGATE_TOL));
    out.push(CheckLine::new("conjugate round trip, quartic", conjugate_round_trip(&quart, 60, seed + 1)?, CONJUGATE_TOL));
    if !m.viscoplastic.is_rigid() {
        out.push(CheckLine::new(
            "conjugate round trip, configured",
            conjugate_round_trip(&m.viscoplastic, 60, seed + 2)?,
            CONJUGATE_TOL,
        ));
    }
    Ok(out)
}

fn schedule_is_skew(s: &GradientSchedule, t_end: f64) -> bool {
    (0..=8).all(|k| s.at(t_end * k as f64 / 8.0).sym().max_abs() == 0.0)
}

/// `Some(a)` if tr ∇v is the same constant at all probe times.
fn constant_divergence(s: &GradientSchedule, t_end: f64) -> Option<f64> {
    let a = s.at(0.0).tr();
    (0..=8).all(|k| (s.at(t_end * k as f64 / 8.0).tr() - a).abs() == 0.0).then_some(a)
}

fn end_error(a: &[DrivePoint], b: &DrivePoint) -> f64 {
    let p = a.last().unwrap();
    (p.fe - b.fe).max_abs().max((p.alpha - b.alpha).abs())
}

pub const SELF_CONSISTENCY_TOL: f64 = 1e-10;
pub const ROTATION_DRIFT_TOL: f64 = 1e-10;
pub const DET_LAW_TOL: f64 = 1e-9;
pub const DAMAGE_ORACLE_TOL: f64 = 1e-8;
pub const ORDER_RANGE: (f64, f64) = (0.8, 1.2);

/// Stepper against the RK4 reference (at `τ/100`) on a 0D drive scenario.
pub fn oracle0d(cfg: &ScenarioConfig, levels: usize) -> Result<CheckReport> {
    let d = cfg
        .drive
        .as_ref()
        .ok_or_else(|| EvdError::Config("oracle0d needs a scenario with [drive]".into()))?;
    let m = &cfg.material;
    let fe0 = Mat3(d.fe0);
    let tau = cfg.solver.tau;
    let tau_fine = tau / 100.0;
    let t_end = cfg.t_end;
    let mut out = CheckReport::default();
    let reference = reference_0d(m, fe0, d.alpha0, &d.schedule, tau_fine, t_end)?;
    let rend = *reference.last().unwrap();
    let sc = rk4_self_consistency(m, fe0, d.alpha0, &d.schedule, tau_fine, t_end)?;
    out.push(CheckLine::new("RK4 step-halving consistency", sc, SELF_CONSISTENCY_TOL));

    let rotation = schedule_is_skew(&d.schedule, t_end) && m.viscoplastic.is_rigid() && m.damage.is_none();
    if rotation {
        // frame indifference: along the exact flow Fe(t) = R(t)Fe(0)
        let rk = reference_0d(m, fe0, d.alpha0, &d.schedule, tau, t_end)?;
        let e0 = rk[0].stored;
        let drift = rk.iter().fold(0.0f64, |w, p| w.max((p.stored - e0).abs())) / t_end;
        out.push(CheckLine::new(format!("rotation energy drift per unit time, RK4 at tau={tau:e}"), drift, ROTATION_DRIFT_TOL));
        let be = kinematic_drive(m, fe0, d.alpha0, &d.schedule, &cfg.solver, t_end)?;
        let drift_be = be.iter().fold(0.0f64, |w, p| w.max((p.stored - e0).abs())) / t_end;
        out.push(CheckLine::info(
            "rotation energy drift per unit time, stepper",
            drift_be,
            "backward Euler does not preserve rotations; first order in tau",
        ));
    }
    if let Some(a) = constant_divergence(&d.schedule, t_end) {
        let j0 = fe0.det();
        let err = reference
            .iter()
            .fold(0.0f64, |w, p| w.max((p.fe.det() - j0 * (a * p.time).exp()).abs()));
        out.push(CheckLine::new(format!("det Fe law, RK4 at tau={tau_fine:e}"), err, DET_LAW_TOL));
    }
    if m.damage.is_some() {
        let st = kinematic_drive(m, fe0, d.alpha0, &d.schedule, &cfg.solver, t_end)?;
        let be = backward_euler_0d(m, fe0, d.alpha0, &d.schedule, tau, t_end)?;
        let worst = st.iter().zip(&be).fold(0.0f64, |w, (p, q)| {
            w.max((p.fe - q.fe).max_abs()).max((p.alpha - q.alpha).abs())
        });
        out.push(CheckLine::new("stepper vs independent backward Euler", worst, DAMAGE_ORACLE_TOL));
    }

    let mut errs = Vec::new();
    for k in 0..levels {
        let t = tau / f64::powi(2.0, k as i32);
        let c = StepConfig { tau: t, ..cfg.solver };
        let traj = kinematic_drive(m, fe0, d.alpha0, &d.schedule, &c, t_end)?;
        let e = end_error(&traj, &rend);
        out.push(CheckLine::info(format!("error vs RK4 at tau={t:e}"), e, ""));
        errs.push(e);
    }
    if errs.iter().all(|e| *e <= 1e-12) {
        out.push(CheckLine::info("tau-order", 0.0, "exact"));
    } else {
        for (k, w) in errs.windows(2).enumerate() {
            out.push(CheckLine::with_bound(
                format!("tau-order, levels {}-{}", k, k + 1),
                (w[0] / w[1]).log2(),
                Bound::Range(ORDER_RANGE.0, ORDER_RANGE.1),
            ));
        }
    }
    Ok(out)
}
