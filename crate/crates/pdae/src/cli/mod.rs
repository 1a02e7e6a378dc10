//! Command-line surface: configuration, command implementations, file
//! formats, and the verification/convergence harnesses they drive.

pub mod commands;
pub mod config;
pub mod converge;
pub mod io;
pub mod verify;

pub use commands::{cmd_converge, cmd_solve, cmd_verify};
pub use config::{BcKind, IcPreset, NonlinearityKind, RunConfig, SchemeKind, Session};
