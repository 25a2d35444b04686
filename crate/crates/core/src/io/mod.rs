//! Input formats and machine-readable output.
//!
//! * [`pnml`]: the place/transition subset of PNML (places, transitions,
//!   arcs, initial markings);
//! * [`documents`]: JSON annotations, strategy profiles and correlation
//!   devices;
//! * [`report`]: game export and analysis reports with exact and decimal
//!   renderings of every number.

pub mod documents;
pub mod pnml;
pub mod report;

pub use documents::{
    parse_annotations, parse_device, parse_profile, write_annotations, write_device, write_profile,
};
pub use pnml::{parse_pnml, write_pnml};
pub use report::{emit_report, export_game, Format, Report};

use sha2::{Digest, Sha256};

/// Hex SHA-256 of an input file.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
