//! Command implementations behind the `armlab` binary and the websocket
//! bridge used by `armlab serve`.

pub mod commands;
pub mod serve;

pub use commands::CliError;
