//! Energy ledger, a-priori-estimate monitors and the discrete Gronwall bound.

mod gronwall;
mod ledger;
mod monitors;

pub use gronwall::{check_sequence, gronwall_bound, GronwallCertificate};
pub use ledger::{energies, ledger, rates, EnergyLedger};
pub use monitors::{monitors, Monitors};
