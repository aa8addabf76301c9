//! Ledger CSV: one row per accepted step, plus a step-0 row for the initial
//! state. The column list is a frozen contract; see [`COLUMNS`].

use std::io::{Read, Write};

use evd_core::diagnostics::{EnergyLedger, Monitors};
use evd_core::stepper::StepReport;
use serde::{Deserialize, Serialize};

use crate::error::{EvdError, Result};

/// Column order of the ledger CSV.
pub const COLUMNS: [&str; 24] = [
    "step",
    "t",
    "tau",
    "kinetic",
    "stored",
    "total",
    "diss_stokes",
    "diss_hyper",
    "diss_plastic",
    "diss_damage",
    "diss_diffusion",
    "power",
    "residual",
    "cum_residual",
    "min_rho",
    "min_det_fe",
    "max_fe_norm",
    "max_inv_det_fe",
    "activation_fraction",
    "newton_momentum",
    "newton_transport",
    "continuation",
    "complementarity",
    "damage_growth",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct LedgerRow {
    pub step: usize,
    pub t: f64,
    pub tau: f64,
    pub kinetic: f64,
    pub stored: f64,
    pub total: f64,
    /// Dissipation rates (W), not integrated over the step.
    pub diss_stokes: f64,
    pub diss_hyper: f64,
    pub diss_plastic: f64,
    pub diss_damage: f64,
    pub diss_diffusion: f64,
    pub power: f64,
    pub residual: f64,
    pub cum_residual: f64,
    pub min_rho: f64,
    pub min_det_fe: f64,
    pub max_fe_norm: f64,
    pub max_inv_det_fe: f64,
    pub activation_fraction: f64,
    pub newton_momentum: usize,
    pub newton_transport: usize,
    pub continuation: usize,
    pub complementarity: f64,
    pub damage_growth: f64,
}

impl LedgerRow {
    pub fn from_report(r: &StepReport) -> Self {
        let l = &r.ledger;
        let m = &r.monitors;
        LedgerRow {
            step: r.step,
            t: r.time,
            tau: r.tau,
            newton_momentum: r.newton_momentum,
            newton_transport: r.newton_transport,
            continuation: r.continuation_stages,
            complementarity: r.complementarity,
            damage_growth: r.damage_growth,
            ..Self::from_parts(l, m)
        }
    }

    /// A row without solver statistics, e.g. for the initial state.
    pub fn from_parts(l: &EnergyLedger, m: &Monitors) -> Self {
        LedgerRow {
            kinetic: l.kinetic,
            stored: l.stored,
            total: l.total(),
            diss_stokes: l.diss_stokes,
            diss_hyper: l.diss_hyper,
            diss_plastic: l.diss_plastic,
            diss_damage: l.diss_damage,
            diss_diffusion: l.diss_diffusion,
            power: l.power,
            residual: l.residual,
            cum_residual: l.cum_residual,
            min_rho: m.min_rho,
            min_det_fe: m.min_det_fe,
            max_fe_norm: m.max_fe_norm,
            max_inv_det_fe: m.max_inv_det_fe,
            activation_fraction: m.activation_fraction,
            ..Default::default()
        }
    }
}

pub struct LedgerWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> LedgerWriter<W> {
    pub fn new(w: W) -> Self {
        LedgerWriter {
            inner: csv::Writer::from_writer(w),
        }
    }

    pub fn write(&mut self, row: &LedgerRow) -> Result<()> {
        self.inner.serialize(row).map_err(csv_err)
    }

    pub fn flush(&mut self) -> Result<()> {
        Ok(self.inner.flush()?)
    }
}

fn csv_err(e: csv::Error) -> EvdError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => EvdError::Io(io),
            _ => unreachable!(),
        }
    } else {
        EvdError::Format(e.to_string())
    }
}

/// Reads a ledger, rejecting any header that is not exactly [`COLUMNS`].
pub fn read_ledger<R: Read>(r: R) -> Result<Vec<LedgerRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let header: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header != COLUMNS {
        return Err(EvdError::Format(format!("ledger header mismatch: {}", header.join(","))));
    }
    let mut rows = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for rec in rd.deserialize() {
        let row: LedgerRow = rec.map_err(csv_err)?;
        if !(row.t >= last_t) {
            return Err(EvdError::Format(format!("time column not monotone at step {}", row.step)));
        }
        last_t = row.t;
        rows.push(row);
    }
    Ok(rows)
}
