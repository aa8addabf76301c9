//! Dedicated output thread. The time loop hands over immutable states and
//! ledger rows through an unbounded channel and never waits on disk.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::mpsc::{channel, Sender};
use std::sync::Arc;
use std::thread::JoinHandle;

use evd_core::grid::Grid;
use evd_core::stepper::State;

use crate::config::Encoding;
use crate::error::{EvdError, Result};
use crate::ledger::{LedgerRow, LedgerWriter};
use crate::snapshot::Snapshot;

enum Message {
    Row(LedgerRow),
    Snapshot(Arc<State>, usize),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WriterStats {
    pub rows: usize,
    pub snapshots: Vec<PathBuf>,
}

pub struct OutputWriter {
    tx: Sender<Message>,
    handle: JoinHandle<Result<WriterStats>>,
}

pub fn snapshot_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("snapshot_{step:06}.evd"))
}

impl OutputWriter {
    /// Creates `dir` and `dir/ledger.csv`.
    pub fn spawn(dir: &Path, grid: Option<Grid>, encoding: Encoding) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let ledger = File::create(dir.join("ledger.csv"))?;
        let dir = dir.to_path_buf();
        let (tx, rx) = channel::<Message>();
        let handle = std::thread::Builder::new()
            .name("evd-writer".into())
            .spawn(move || -> Result<WriterStats> {
                let mut lw = LedgerWriter::new(BufWriter::new(ledger));
                let mut stats = WriterStats::default();
                for msg in rx {
                    match msg {
                        Message::Row(r) => {
                            lw.write(&r)?;
                            stats.rows += 1;
                        }
                        Message::Snapshot(state, step) => {
                            let g = grid
                                .as_ref()
                                .ok_or_else(|| EvdError::Config("snapshots need a grid".into()))?;
                            let path = snapshot_path(&dir, step);
                            let snap = Snapshot::from_state(g, &state, step);
                            snap.write(BufWriter::new(File::create(&path)?), encoding)?;
                            stats.snapshots.push(path);
                        }
                    }
                }
                lw.flush()?;
                Ok(stats)
            })?;
        Ok(OutputWriter { tx, handle })
    }

    pub fn row(&self, row: LedgerRow) {
        // a closed channel means the writer already failed; finish() reports it
        let _ = self.tx.send(Message::Row(row));
    }

    pub fn snapshot(&self, state: Arc<State>, step: usize) {
        let _ = self.tx.send(Message::Snapshot(state, step));
    }

    /// Closes the channel and waits for everything to hit the disk.
    pub fn finish(self) -> Result<WriterStats> {
        drop(self.tx);
        self.handle
            .join()
            .map_err(|_| EvdError::Io(std::io::Error::other("writer thread panicked")))?
    }
}
