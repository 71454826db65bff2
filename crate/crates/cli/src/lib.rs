//! Front ends for the engine: an interactive REPL, a batch runner and an
//! HTTP/WebSocket server.

pub mod repl;
pub mod server;
