//! Deterministic 2D grid-world engine for decentralized multi-agent
//! coordination benchmarks.
//!
//! The crate is `no_std` + `alloc`: everything in here is pure computation
//! over snapshots. IO, file formats, the HTTP gateway and the CLI live in
//! the companion `gridswarm-cli` crate.
//!
//! Module map:
//! - [`grid`]: world representation, cell lookup, ASCII rendering
//! - [`gen`]: seeded procedural instance generation
//! - [`physics`]: contact graph -> SCC condensation -> exact movement
//!   resolution -> position commit
//! - [`tasks`]: the five task definitions and their scoring
//! - [`agent`]: observations, prompt rendering, response parsing, local
//!   broadcast messaging, scripted policies
//! - [`metrics`]: per-round and run-averaged group-dynamics metrics
//! - [`episode`]: the round loop with its decide/commit barrier

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod agent;
pub mod assignment;
pub mod episode;
pub mod gen;
pub mod grid;
pub mod metrics;
pub mod physics;
pub mod tasks;

pub use episode::Episode;
pub use gen::{generate_environment, EnvConfig, TaskKind};
pub use grid::{CellContent, Coord, Direction, EnvironmentState, Mesh, MeshKind};
