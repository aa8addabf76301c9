//! The staggered time step: mass–momentum with the stress lagged, then ξ,
//! then Fe, then α (damage or diffusion).

mod diffusion;
mod kinematic;
pub(crate) mod momentum;
mod state;
mod transport;

pub use kinematic::{kinematic_drive, DrivePoint, GradientSchedule};
pub use state::State;
pub use transport::velocity_gradients;

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::diagnostics::{self, EnergyLedger, Monitors};
use crate::error::{Error, Result};
use crate::grid::{Grid, Operators, Scheme};
use crate::material::Material;
use crate::tensor::{Mat3, Vec3};
use transport::{LocalInputs, TransportStats};

pub(crate) fn diffusion_dissipation(
    grid: &Grid,
    material: &Material,
    points: &[Vec3],
    alpha: &[f64],
    mu: &[f64],
) -> f64 {
    diffusion::dissipation(grid, material, points, alpha, mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "kebab-case")
)]
pub enum DamageCoupling {
    /// Fe with lagged α, then α, then Fe once more with the new α.
    #[default]
    GaussSeidel,
    Monolithic,
}

/// Globalization by (ε, δ)-regularization, driven to zero geometrically.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct Continuation {
    pub epsilon: f64,
    pub delta: f64,
    /// Exponent r of the density-diffusion term.
    pub exponent: f64,
    pub stages: usize,
    pub factor: f64,
}

impl Default for Continuation {
    fn default() -> Self {
        Continuation {
            epsilon: 1e-2,
            delta: 1e-2,
            exponent: 4.0,
            stages: 4,
            factor: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct StepConfig {
    pub tau: f64,
    /// Relative tolerance of the mass–momentum residual.
    pub momentum_tol: f64,
    /// Relative tolerance of the ξ/Fe/α transport residuals.
    pub transport_tol: f64,
    pub max_newton: usize,
    pub continuation: Continuation,
    /// Skip plain Newton and go straight to the continuation path.
    pub force_continuation: bool,
    pub damage_coupling: DamageCoupling,
    pub scheme: Scheme,
    /// Number of τ-halvings allowed per step.
    pub max_retries: usize,
    /// Skip the mass–momentum solve and keep ρ and v; the constitutive
    /// fields still evolve on the frozen flow.
    pub freeze_velocity: bool,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            tau: 1e-2,
            momentum_tol: 1e-11,
            transport_tol: 1e-12,
            max_newton: 30,
            continuation: Continuation::default(),
            force_continuation: false,
            damage_coupling: DamageCoupling::GaussSeidel,
            scheme: Scheme::Upwind,
            max_retries: 4,
            freeze_velocity: false,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::invalid("tau must be positive"));
        }
        if !(self.momentum_tol > 0.0 && self.transport_tol > 0.0) {
            return Err(Error::invalid("solver tolerances must be positive"));
        }
        if self.max_newton == 0 {
            return Err(Error::invalid("max_newton must be at least 1"));
        }
        let c = &self.continuation;
        if !(c.epsilon >= 0.0 && c.delta >= 0.0 && c.exponent >= 2.0 && c.factor > 0.0 && c.factor < 1.0) {
            return Err(Error::invalid("continuation needs eps, delta >= 0, r >= 2, factor in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    pub step: usize,
    pub time: f64,
    pub tau: f64,
    pub newton_momentum: usize,
    pub momentum_residual: f64,
    pub continuation_stages: usize,
    pub newton_transport: usize,
    pub transport_residual: f64,
    /// Largest complementarity residual of the diffusion update.
    pub complementarity: f64,
    pub monitors: Monitors,
    /// `τ · total mass · ‖g‖∞`; must stay below 1.
    pub tau_mass_gravity: f64,
    /// `τ ‖div v‖∞` of the new velocity.
    pub tau_div_v: f64,
    /// True when `τ‖div v‖∞ < 1`.
    pub admissible: bool,
    /// Some cell left the untruncated region; the truncated problem is then
    /// not the original one.
    pub truncation_active: bool,
    /// Largest discrete material rate `(α − α⁰)/τ + v·∇α` under damage;
    /// never positive for unidirectional damage.
    pub damage_growth: f64,
    /// τ-halvings spent on this step.
    pub retries: usize,
    pub ledger: EnergyLedger,
}

/// Everything that stays fixed over a run.
#[derive(Debug, Clone)]
pub struct Problem {
    pub ops: Operators,
    pub material: Material,
    /// Body force per unit mass, `d` per cell.
    pub gravity: Vec<f64>,
}

impl Problem {
    pub fn new(grid: &Grid, material: Material, gravity: Vec<f64>) -> Result<Self> {
        material.validate()?;
        if gravity.len() != grid.len() * grid.dim() {
            return Err(Error::invalid("gravity field does not match the grid"));
        }
        Ok(Problem {
            ops: Operators::new(grid),
            material,
            gravity,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.ops.grid()
    }

    /// `τ · M · ‖g‖∞` for the state's total mass M.
    pub fn tau_mass_gravity(&self, state: &State, tau: f64) -> f64 {
        let gmax = self.gravity.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        tau * state.total_mass(self.grid()) * gmax
    }

    /// Rejects initial data and step sizes the scheme is not set up for.
    pub fn check_initial(&self, state: &State, cfg: &StepConfig) -> Result<()> {
        cfg.validate()?;
        state.validate(self.grid())?;
        let tm = self.tau_mass_gravity(state, cfg.tau);
        if tm >= 1.0 {
            return Err(Error::invalid(alloc::format!(
                "tau * mass * |g| = {tm} violates the admissibility bound 1"
            )));
        }
        let lam = self.material.lambda;
        for f in &state.fe {
            if f.frob() >= lam || 1.0 / f.det() >= lam {
                return Err(Error::invalid(
                    "initial Fe is not strictly inside the untruncated region; increase lambda",
                ));
            }
        }
        Ok(())
    }
}

pub(crate) struct ConstitutiveUpdate {
    pub fe: Vec<Mat3>,
    pub alpha: Vec<f64>,
    pub mu: Vec<f64>,
    pub stats: TransportStats,
    pub complementarity: f64,
}

/// Fe, then damage or diffusion, on given ξ and v.
pub(crate) fn constitutive_update(
    inp: &LocalInputs,
    fe0: &[Mat3],
    alpha0: &[f64],
    mu0: &[f64],
    cfg: &StepConfig,
) -> Result<ConstitutiveUpdate> {
    let m = inp.material;
    let mut stats = TransportStats::default();
    let mut add = |s: TransportStats| {
        stats.iterations += s.iterations;
        stats.residual = stats.residual.max(s.residual);
    };
    if m.damage.is_some() {
        if cfg.damage_coupling == DamageCoupling::Monolithic {
            let (fe, alpha, s) = transport::update_fe_damage_monolithic(inp, fe0, alpha0, cfg)?;
            add(s);
            return Ok(ConstitutiveUpdate {
                fe,
                alpha,
                mu: mu0.to_vec(),
                stats,
                complementarity: 0.0,
            });
        }
        let (fe_lag, s) = transport::update_fe(inp, fe0, alpha0, cfg)?;
        add(s);
        let (alpha, s) = transport::update_damage(inp, &fe_lag, alpha0, cfg)?;
        add(s);
        let fe = if m.energy.depends_on_alpha() && alpha != alpha0 {
            let (fe, s) = transport::update_fe(inp, fe0, &alpha, cfg)?;
            add(s);
            fe
        } else {
            fe_lag
        };
        for &a in &alpha {
            if !(-1e-10..=1.0 + 1e-10).contains(&a) {
                return Err(Error::BoundViolation { value: a });
            }
        }
        return Ok(ConstitutiveUpdate {
            fe,
            alpha,
            mu: mu0.to_vec(),
            stats,
            complementarity: 0.0,
        });
    }
    let (fe, s) = transport::update_fe(inp, fe0, alpha0, cfg)?;
    add(s);
    if m.diffusion.is_some() {
        let sol = diffusion::update_diffusion(inp, &fe, alpha0, mu0, cfg)?;
        add(TransportStats {
            iterations: sol.iterations,
            residual: sol.residual,
        });
        return Ok(ConstitutiveUpdate {
            fe,
            alpha: sol.alpha,
            mu: sol.mu,
            stats,
            complementarity: sol.complementarity,
        });
    }
    Ok(ConstitutiveUpdate {
        fe,
        alpha: alpha0.to_vec(),
        mu: mu0.to_vec(),
        stats,
        complementarity: 0.0,
    })
}

/// One staggered step of size `cfg.tau`.
pub fn step(pb: &Problem, prev: &State, cfg: &StepConfig) -> Result<(State, StepReport)> {
    let ops = &pb.ops;
    let g = ops.grid();
    let (n, d) = (g.len(), g.dim());
    let m = &pb.material;

    // conservative stress from the previous level
    let mut stress = alloc::vec![0.0; n * d * d];
    for c in 0..n {
        let t = m.stress(&prev.material_point(g, c), &prev.fe[c], prev.alpha[c]);
        for i in 0..d {
            for a in 0..d {
                stress[c * d * d + i * d + a] = t.0[i][a];
            }
        }
    }
    let mp = momentum::MomentumProblem {
        ops,
        material: m,
        rho0: &prev.rho,
        p0: &prev.p,
        stress: &stress,
        gravity: &pb.gravity,
        tau: cfg.tau,
    };
    let mom = if cfg.freeze_velocity {
        momentum::MomentumSolution {
            rho: prev.rho.clone(),
            v: prev.v.clone(),
            iterations: 0,
            residual: 0.0,
            continuation_stages: 0,
        }
    } else {
        momentum::solve(&mp, &prev.v, cfg)?
    };
    for (c, &r) in mom.rho.iter().enumerate() {
        if !(r > 0.0) {
            return Err(Error::NonPositiveDensity { cell: c, value: r });
        }
    }

    let (xi, xs) = transport::update_xi(ops, &prev.xi, &mom.v, cfg)?;
    let points = transport::material_points(g, &xi);
    let grads = velocity_gradients(ops, &mom.v);
    let inp = LocalInputs {
        ops,
        material: m,
        v: &mom.v,
        grad_v: &grads,
        points: &points,
    };
    let cu = constitutive_update(&inp, &prev.fe, &prev.alpha, &prev.mu, cfg)?;
    let damage_growth = if m.damage.is_some() {
        let aa = ops.advection(&mom.v, crate::grid::Kind::Scalar, cfg.scheme).matvec(&cu.alpha);
        (0..n).fold(f64::NEG_INFINITY, |w, c| w.max((cu.alpha[c] - prev.alpha[c]) / cfg.tau + aa[c]))
    } else {
        0.0
    };

    let mut new = State {
        time: prev.time + cfg.tau,
        rho: mom.rho,
        v: Vec::new(),
        p: Vec::new(),
        fe: cu.fe,
        xi,
        alpha: cu.alpha,
        mu: cu.mu,
    };
    new.set_velocity(mom.v);

    let mon = diagnostics::monitors(&new, m.lambda);
    let divv = ops.div_v.matvec(&new.v);
    let tau_div_v = cfg.tau * divv.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let report = StepReport {
        step: 0,
        time: new.time,
        tau: cfg.tau,
        newton_momentum: mom.iterations,
        momentum_residual: mom.residual,
        continuation_stages: mom.continuation_stages,
        newton_transport: cu.stats.iterations + xs.iterations,
        transport_residual: cu.stats.residual,
        complementarity: cu.complementarity,
        monitors: mon,
        tau_mass_gravity: pb.tau_mass_gravity(prev, cfg.tau),
        tau_div_v,
        admissible: tau_div_v < 1.0,
        truncation_active: mon.activation_fraction > 0.0,
        damage_growth,
        retries: 0,
        ledger: EnergyLedger::default(),
    };
    Ok((new, report))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub final_time: f64,
    pub final_tau: f64,
    pub cum_residual: f64,
    pub max_activation_fraction: f64,
}

/// Steps from `initial.time` to `t_end`, halving τ on failure (the reduced τ
/// is kept for the rest of the run). The sink sees every accepted state with
/// its report and ledger.
pub fn run<F>(pb: &Problem, initial: &State, t_end: f64, cfg: &StepConfig, mut sink: F) -> Result<RunSummary>
where
    F: FnMut(&State, &StepReport),
{
    pb.check_initial(initial, cfg)?;
    let mut cfg = *cfg;
    let mut state = initial.clone();
    let mut cum = 0.0;
    let mut k = 0usize;
    let mut max_act: f64 = 0.0;
    let eps = 1e-12 * t_end.abs().max(1.0);
    while state.time < t_end - eps {
        k += 1;
        let mut retries = 0;
        let (new, mut report) = loop {
            let mut c = cfg;
            if state.time + c.tau > t_end - eps {
                c.tau = t_end - state.time;
            }
            match step(pb, &state, &c) {
                Ok(r) => break r,
                Err(e) => {
                    if retries >= cfg.max_retries {
                        return Err(Error::RetryBudgetExhausted {
                            step: k,
                            tau: c.tau,
                            last: Box::new(Error::StepFailed {
                                step: k,
                                time: state.time,
                                source: Box::new(e),
                            }),
                        });
                    }
                    retries += 1;
                    cfg.tau *= 0.5;
                }
            }
        };
        report.step = k;
        report.retries = retries;
        report.ledger = diagnostics::ledger(&pb.ops, &pb.material, &state, &new, &pb.gravity, report.tau, cum)?;
        cum = report.ledger.cum_residual;
        max_act = max_act.max(report.monitors.activation_fraction);
        sink(&new, &report);
        state = new;
    }
    Ok(RunSummary {
        steps: k,
        final_time: state.time,
        final_tau: cfg.tau,
        cum_residual: cum,
        max_activation_fraction: max_act,
    })
}
