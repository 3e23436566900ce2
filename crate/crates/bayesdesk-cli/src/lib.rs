//! Experiment registry and report plumbing behind the `bayesdesk` binary.

pub mod experiments;
pub mod report;

use bayesdesk::Error;

pub const DEFAULT_SEED: u64 = 20090516;

pub const EXIT_PARAMETER: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_UNKNOWN: i32 = 64;
pub const EXIT_IO: i32 = 74;

/// Exit status for a library error: caller mistakes get 2, numerical guards 3.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parameter(_)
        | Error::Pairing(_)
        | Error::Dimension(_)
        | Error::Empty(_)
        | Error::Support(_)
        | Error::Incompatible(_) => EXIT_PARAMETER,
        _ => EXIT_NUMERIC,
    }
}
