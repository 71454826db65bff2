//! In-situ visual text analytics engine.
//!
//! A [`VitaFrame`] holds typed columns with typed per-column metadata. Operators
//! arrive as JSON or command lines ([`spec`]), are compiled into fully
//! defaulted [`compiler::Plan`]s, executed by the native text-analytics engine
//! ([`ops`]), rendered as Vega-Lite charts ([`viz`]), linked through view
//! coordination ([`coord`]) and checkpointed per operation ([`version`]).

pub mod digest;
pub mod error;
pub mod frame;
pub mod load;
pub mod ops;
pub mod spec;
pub mod types;
pub mod viz;
pub mod coord;
pub mod compiler;
pub mod state;
pub mod version;
pub mod session;

pub use digest::Digest;
pub use error::*;
pub use frame::{Column, MetaEntry, RowId, VitaFrame};
pub use types::{infer_type, DomainType, Value};
