//! Batch front-end for the torus HJB laboratory.
//!
//! The library half hosts everything the binary does — configuration
//! parsing/validation, CSV emission, the command runners, and the full
//! verdict suite — so integration tests drive the exact production code
//! paths without shelling out.

pub mod config;
pub mod csvout;
pub mod runner;
pub mod suite;

/// Process exit codes shared by the binary and the tests.
pub mod exit {
    /// Everything ran and every asserted property held.
    pub const PASS: u8 = 0;
    /// A run completed but an asserted invariant failed.
    pub const VIOLATION: u8 = 1;
    /// The configuration was rejected before any run started.
    pub const CONFIG: u8 = 2;
    /// A solver failed to converge or blew up.
    pub const DIVERGED: u8 = 3;
}

/// Map a core error to its exit code.
pub fn exit_code_for(err: &hjb_core::Error) -> u8 {
    match err {
        hjb_core::Error::Config(_) | hjb_core::Error::Usage(_) | hjb_core::Error::Domain(_) => {
            exit::CONFIG
        }
        hjb_core::Error::NonConvergence { .. } | hjb_core::Error::BlowUp { .. } => exit::DIVERGED,
    }
}
