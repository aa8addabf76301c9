//! Snapshot files: a text header, then the fields in order, each as
//! row-major cells (x fastest) with the components of a cell contiguous.
//!
//! ```text
//! EVD-SNAPSHOT 1
//! dim 2
//! cells 16 16 1
//! spacing 0.0625 0.0625 1
//! time 0.25
//! step 25
//! encoding binary-le-f64
//! field rho 1
//! field v 2
//! ...
//! end
//! ```
//!
//! Binary payloads are little-endian f64; ASCII payloads are one value per
//! line in shortest round-trip form. Both read back bit-exactly.

use std::io::{BufRead, BufReader, Read, Write};

use evd_core::grid::Grid;
use evd_core::stepper::State;
use evd_core::Mat3;

use crate::config::Encoding;
use crate::error::{EvdError, Result};

const MAGIC: &str = "EVD-SNAPSHOT 1";

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub name: String,
    pub ncomp: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub dim: usize,
    pub cells: [usize; 3],
    pub spacing: [f64; 3],
    pub time: f64,
    pub step: usize,
    pub fields: Vec<Field>,
}

impl Snapshot {
    pub fn from_state(grid: &Grid, state: &State, step: usize) -> Self {
        let d = grid.dim();
        let f = |name: &str, ncomp: usize, data: Vec<f64>| Field {
            name: name.to_string(),
            ncomp,
            data,
        };
        Snapshot {
            dim: d,
            cells: grid.cells(),
            spacing: grid.spacing(),
            time: state.time,
            step,
            fields: vec![
                f("rho", 1, state.rho.clone()),
                f("v", d, state.v.clone()),
                f("p", d, state.p.clone()),
                f("fe", 9, state.fe.iter().flat_map(|m| m.to_array()).collect()),
                f("xi", d, state.xi.clone()),
                f("alpha", 1, state.alpha.clone()),
                f("mu", 1, state.mu.clone()),
            ],
        }
    }

    pub fn field(&self, name: &str) -> Option<&Field> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn to_state(&self) -> Result<State> {
        let get = |n: &str| {
            self.field(n)
                .map(|f| f.data.clone())
                .ok_or_else(|| EvdError::Format(format!("snapshot lacks field {n}")))
        };
        Ok(State {
            time: self.time,
            rho: get("rho")?,
            v: get("v")?,
            p: get("p")?,
            fe: get("fe")?.chunks(9).map(Mat3::from_slice).collect(),
            xi: get("xi")?,
            alpha: get("alpha")?,
            mu: get("mu")?,
        })
    }

    fn ncells(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn write<W: Write>(&self, mut w: W, encoding: Encoding) -> Result<()> {
        let [n0, n1, n2] = self.cells;
        let [h0, h1, h2] = self.spacing;
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "dim {}", self.dim)?;
        writeln!(w, "cells {n0} {n1} {n2}")?;
        writeln!(w, "spacing {h0:?} {h1:?} {h2:?}")?;
        writeln!(w, "time {:?}", self.time)?;
        writeln!(w, "step {}", self.step)?;
        let enc = match encoding {
            Encoding::Binary => "binary-le-f64",
            Encoding::Ascii => "ascii",
        };
        writeln!(w, "encoding {enc}")?;
        for f in &self.fields {
            writeln!(w, "field {} {}", f.name, f.ncomp)?;
        }
        writeln!(w, "end")?;
        for f in &self.fields {
            match encoding {
                Encoding::Binary => {
                    let mut buf = Vec::with_capacity(f.data.len() * 8);
                    for x in &f.data {
                        buf.extend_from_slice(&x.to_le_bytes());
                    }
                    w.write_all(&buf)?;
                }
                Encoding::Ascii => {
                    for x in &f.data {
                        writeln!(w, "{x:?}")?;
                    }
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(r: R) -> Result<Self> {
        let mut rd = BufReader::new(r);
        let bad = |m: &str| EvdError::Format(format!("snapshot: {m}"));
        let mut line = String::new();
        let mut next = |rd: &mut BufReader<R>| -> Result<String> {
            line.clear();
            if rd.read_line(&mut line)? == 0 {
                return Err(bad("unexpected end of header"));
            }
            Ok(line.trim_end().to_string())
        };
        if next(&mut rd)? != MAGIC {
            return Err(bad("missing magic line"));
        }
        let mut s = Snapshot {
            dim: 0,
            cells: [1; 3],
            spacing: [1.0; 3],
            time: 0.0,
            step: 0,
            fields: Vec::new(),
        };
        let mut encoding = None;
        loop {
            let l = next(&mut rd)?;
            let parts: Vec<&str> = l.split_whitespace().collect();
            let num = |i: usize| -> Result<f64> {
                parts
                    .get(i)
                    .and_then(|p| p.parse().ok())
                    .ok_or_else(|| bad(&format!("bad header line `{l}`")))
            };
            match parts.first().copied() {
                Some("end") => break,
                Some("dim") => s.dim = num(1)? as usize,
                Some("cells") => s.cells = [num(1)? as usize, num(2)? as usize, num(3)? as usize],
                Some("spacing") => s.spacing = [num(1)?, num(2)?, num(3)?],
                Some("time") => s.time = num(1)?,
                Some("step") => s.step = num(1)? as usize,
                Some("encoding") => {
                    encoding = Some(match parts.get(1).copied() {
                        Some("binary-le-f64") => Encoding::Binary,
                        Some("ascii") => Encoding::Ascii,
                        _ => return Err(bad("unknown encoding")),
                    })
                }
                Some("field") if parts.len() == 3 => s.fields.push(Field {
                    name: parts[1].to_string(),
                    ncomp: num(2)? as usize,
                    data: Vec::new(),
                }),
                _ => return Err(bad(&format!("bad header line `{l}`"))),
            }
        }
        let encoding = encoding.ok_or_else(|| bad("no encoding"))?;
        let n = s.ncells();
        match encoding {
            Encoding::Binary => {
                for f in &mut s.fields {
                    let mut buf = vec![0u8; n * f.ncomp * 8];
                    rd.read_exact(&mut buf)?;
                    f.data = buf
                        .chunks_exact(8)
                        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                        .collect();
                }
            }
            Encoding::Ascii => {
                let mut rest = String::new();
                rd.read_to_string(&mut rest)?;
                let mut vals = rest.lines().map(|l| l.trim().parse::<f64>());
                for f in &mut s.fields {
                    for _ in 0..n * f.ncomp {
                        let v = vals
                            .next()
                            .ok_or_else(|| bad("truncated data"))?
                            .map_err(|_| bad("bad number"))?;
                        f.data.push(v);
                    }
                }
            }
        }
        Ok(s)
    }
}
