//! τ-refinement study: runs τ, τ/2, τ/4, … and reports the observed order
//! `log₂(‖u_τ − u_{τ/2}‖ / ‖u_{τ/2} − u_{τ/4}‖)` per field.

use std::fmt;
use std::io::Write;

use evd_core::stepper::StepConfig;

use crate::config::ScenarioConfig;
use crate::error::{EvdError, Result};
use crate::runner::run_scenario;

/// Differences below this (relative to the field norm) count as round-off.
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldOrder {
    pub field: String,
    /// `‖u_k − u_{k+1}‖` for consecutive levels.
    pub differences: Vec<f64>,
    pub orders: Vec<f64>,
    /// All differences at round-off.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeReport {
    pub taus: Vec<f64>,
    pub fields: Vec<FieldOrder>,
    /// First level that failed to run, with the error.
    pub failure: Option<(usize, String)>,
}

impl ConvergeReport {
    pub fn field(&self, name: &str) -> Option<&FieldOrder> {
        self.fields.iter().find(|f| f.field == name)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["field", "level", "tau", "difference", "order"])
            .map_err(|e| EvdError::Format(e.to_string()))?;
        for f in &self.fields {
            for (k, d) in f.differences.iter().enumerate() {
                let order = if f.exact {
                    "exact".to_string()
                } else if k > 0 {
                    format!("{}", f.orders[k - 1])
                } else {
                    String::new()
                };
                wr.write_record([f.field.clone(), k.to_string(), format!("{}", self.taus[k]), format!("{d}"), order])
                    .map_err(|e| EvdError::Format(e.to_string()))?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

impl fmt::Display for ConvergeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>12} {:>14} {:>8}", "field", "tau", "difference", "order")?;
        for fo in &self.fields {
            for (k, d) in fo.differences.iter().enumerate() {
                let o = if fo.exact {
                    "exact".to_string()
                } else if k > 0 {
                    format!("{:.3}", fo.orders[k - 1])
                } else {
                    "-".to_string()
                };
                writeln!(f, "{:<10} {:>12.4e} {:>14.6e} {:>8}", fo.field, self.taus[k], d, o)?;
            }
        }
        if let Some((k, e)) = &self.failure {
            writeln!(f, "FAILED at level {k} (tau {:e}): {e}", self.taus[*k])?;
        }
        Ok(())
    }
}

fn final_fields(cfg: &ScenarioConfig) -> Result<(Vec<(String, Vec<f64>)>, f64)> {
    let out = run_scenario(cfg, None)?;
    if let Some(traj) = out.drive {
        let p = traj.last().unwrap();
        return Ok((
            vec![
                ("fe".into(), p.fe.to_array().to_vec()),
                ("alpha".into(), vec![p.alpha]),
            ],
            1.0,
        ));
    }
    let s = out.state.unwrap();
    let g = cfg.grid()?;
    Ok((
        vec![
            ("rho".into(), s.rho),
            ("v".into(), s.v),
            ("fe".into(), s.fe.iter().flat_map(|m| m.to_array()).collect()),
            ("xi".into(), s.xi),
            ("alpha".into(), s.alpha),
        ],
        g.volume(),
    ))
}

fn l2(a: &[f64], b: Option<&[f64]>, vol: f64) -> f64 {
    let s: f64 = match b {
        Some(b) => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
        None => a.iter().map(|x| x * x).sum(),
    };
    (s * vol).sqrt()
}

pub fn converge(cfg: &ScenarioConfig, levels: usize) -> Result<ConvergeReport> {
    if levels < 3 {
        return Err(EvdError::Config("converge needs at least 3 levels".into()));
    }
    let taus: Vec<f64> = (0..levels).map(|k| cfg.solver.tau / f64::powi(2.0, k as i32)).collect();
    let mut results = Vec::new();
    let mut failure = None;
    for (k, &tau) in taus.iter().enumerate() {
        let c = ScenarioConfig {
            solver: StepConfig { tau, ..cfg.solver },
            ..cfg.clone()
        };
        match final_fields(&c) {
            Ok(r) => results.push(r),
            Err(e) => {
                failure = Some((k, e.to_string()));
                break;
            }
        }
    }
    let mut fields = Vec::new();
    if let Some((first, vol)) = results.first() {
        let vol = *vol;
        let mut names: Vec<String> = first.iter().map(|(n, _)| n.clone()).collect();
        names.push("state".into());
        for (i, name) in names.iter().enumerate() {
            let get = |r: &Vec<(String, Vec<f64>)>| -> Vec<f64> {
                if i < r.len() {
                    r[i].1.clone()
                } else {
                    r.iter().flat_map(|(_, v)| v.clone()).collect()
                }
            };
            let mut diffs = Vec::new();
            let mut norm: f64 = 0.0;
            for w in results.windows(2) {
                let (a, b) = (get(&w[0].0), get(&w[1].0));
                norm = norm.max(l2(&b, None, vol));
                diffs.push(l2(&a, Some(&b), vol));
            }
            let exact = diffs.iter().all(|d| *d <= EXACT_TOL * (1.0 + norm));
            let orders = diffs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
            fields.push(FieldOrder {
                field: name.clone(),
                differences: diffs,
                orders,
                exact,
            });
        }
    }
    Ok(ConvergeReport { taus, fields, failure })
}
