//! Time loops for field scenarios and 0D drives, with output streaming.

use std::path::Path;
use std::sync::Arc;

use evd_core::diagnostics::{self, EnergyLedger, Monitors};
use evd_core::material::Material;
use evd_core::stepper::{kinematic_drive, run, DrivePoint, GradientSchedule, RunSummary, State, StepConfig};
use evd_core::{Mat3, Vec3};

use crate::config::ScenarioConfig;
use crate::error::{EvdError, Result};
use crate::ledger::LedgerRow;
use crate::writer::{OutputWriter, WriterStats};

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub rows: Vec<LedgerRow>,
    /// Final state of a field run.
    pub state: Option<State>,
    /// Trajectory of a 0D drive.
    pub drive: Option<Vec<DrivePoint>>,
    pub summary: Option<RunSummary>,
    pub output: Option<WriterStats>,
}

/// Runs a scenario; with `out` set, streams the ledger and snapshots there.
/// Rows written before a step failure stay on disk.
pub fn run_scenario(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<RunOutcome> {
    if cfg.drive.is_some() {
        run_drive(cfg, out)
    } else {
        run_field(cfg, out)
    }
}

fn run_field(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<RunOutcome> {
    let (pb, s0) = cfg.build()?;
    let grid = pb.grid().clone();
    let writer = match out {
        Some(dir) => Some(OutputWriter::spawn(dir, Some(grid.clone()), cfg.output.encoding)?),
        None => None,
    };
    let every = cfg.output.snapshot_every;
    let (k, s) = diagnostics::energies(&pb.ops, &pb.material, &s0);
    let mut l0 = diagnostics::rates(&pb.ops, &pb.material, &s0, &pb.gravity)?;
    l0.kinetic = k;
    l0.stored = s;
    let mut row0 = LedgerRow::from_parts(&l0, &diagnostics::monitors(&s0, pb.material.lambda));
    row0.t = s0.time;
    let mut rows = vec![row0];
    if let Some(w) = &writer {
        w.row(row0);
        if every > 0 {
            w.snapshot(Arc::new(s0.clone()), 0);
        }
    }
    let mut last: Option<Arc<State>> = None;
    let mut last_step = 0;
    let res = run(&pb, &s0, cfg.t_end, &cfg.solver, |st, rep| {
        let row = LedgerRow::from_report(rep);
        rows.push(row);
        let shared = Arc::new(st.clone());
        if let Some(w) = &writer {
            w.row(row);
            if every > 0 && rep.step % every == 0 {
                w.snapshot(shared.clone(), rep.step);
            }
        }
        last = Some(shared);
        last_step = rep.step;
    });
    if let (Some(w), Some(st)) = (&writer, &last) {
        if every > 0 && last_step % every != 0 {
            w.snapshot(st.clone(), last_step);
        }
    }
    let output = writer.map(OutputWriter::finish).transpose()?;
    let summary = res?;
    Ok(RunOutcome {
        rows,
        state: Some(last.map_or(s0, |s| (*s).clone())),
        drive: None,
        summary: Some(summary),
        output,
    })
}

/// Ledger terms of one drive step, per unit volume: stress power
/// `(φ′Feᵀ):L`, plastic `M:ℒ`, damage `−φ′_α α̇`.
fn drive_row(m: &Material, l: &Mat3, prev: &DrivePoint, p: &DrivePoint, tau: f64, cum: f64) -> Result<LedgerRow> {
    let x = Vec3::ZERO;
    let f = &p.fe;
    let power = (m.d_energy_f(&x, f, p.alpha) * f.transpose()).ddot(l);
    let diss_plastic = if m.viscoplastic.is_rigid() {
        0.0
    } else {
        m.mandel(&x, f, p.alpha).ddot(&m.plastic_rate(&x, f, p.alpha)?)
    };
    let diss_damage = match &m.damage {
        Some(d) => d.dissipation(m.damage_rate(&x, f, p.alpha)),
        None => 0.0,
    };
    let residual = p.stored - prev.stored + tau * (diss_plastic + diss_damage) - tau * power;
    let led = EnergyLedger {
        stored: p.stored,
        diss_plastic,
        diss_damage,
        power,
        residual,
        cum_residual: cum + residual,
        ..EnergyLedger::default()
    };
    let mut row = LedgerRow::from_parts(&led, &point_monitors(m, p));
    row.t = p.time;
    row.tau = tau;
    Ok(row)
}

fn point_monitors(m: &Material, p: &DrivePoint) -> Monitors {
    let j = p.fe.det();
    let n = p.fe.frob();
    Monitors {
        min_rho: f64::NAN,
        max_sparsity: f64::NAN,
        min_det_fe: j,
        max_fe_norm: n,
        max_inv_det_fe: 1.0 / j,
        margin_norm: m.lambda - n,
        margin_det: m.lambda - 1.0 / j,
        margin_norm_2: 2.0 * m.lambda - n,
        margin_det_2: 2.0 * m.lambda - 1.0 / j,
        activation_fraction: if m.branch(&p.fe) == evd_core::material::Branch::Untruncated {
            0.0
        } else {
            1.0
        },
    }
}

/// Backward-Euler 0D drive with its ledger rows.
pub fn drive_trajectory(
    m: &Material,
    fe0: Mat3,
    alpha0: f64,
    schedule: &GradientSchedule,
    solver: &StepConfig,
    t_end: f64,
) -> Result<(Vec<DrivePoint>, Vec<LedgerRow>)> {
    let traj = kinematic_drive(m, fe0, alpha0, schedule, solver, t_end)?;
    let mut rows = Vec::with_capacity(traj.len());
    let mut r0 = LedgerRow::from_parts(
        &EnergyLedger {
            stored: traj[0].stored,
            ..EnergyLedger::default()
        },
        &point_monitors(m, &traj[0]),
    );
    r0.t = traj[0].time;
    rows.push(r0);
    let mut cum = 0.0;
    for (k, w) in traj.windows(2).enumerate() {
        let mut row = drive_row(m, &schedule.at(w[1].time), &w[0], &w[1], solver.tau, cum)?;
        row.step = k + 1;
        cum = row.cum_residual;
        rows.push(row);
    }
    Ok((traj, rows))
}

fn run_drive(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<RunOutcome> {
    let d = cfg.drive.as_ref().ok_or_else(|| EvdError::Config("no [drive]".into()))?;
    let writer = match out {
        Some(dir) => Some(OutputWriter::spawn(dir, None, cfg.output.encoding)?),
        None => None,
    };
    let res = drive_trajectory(&cfg.material, Mat3(d.fe0), d.alpha0, &d.schedule, &cfg.solver, cfg.t_end);
    if let (Some(w), Ok((_, rows))) = (&writer, &res) {
        for r in rows {
            w.row(*r);
        }
    }
    let output = writer.map(OutputWriter::finish).transpose()?;
    let (traj, rows) = res?;
    Ok(RunOutcome {
        rows,
        state: None,
        drive: Some(traj),
        summary: None,
        output,
    })
}
