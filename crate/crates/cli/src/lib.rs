//! IO half of the benchmark: run configuration, the model HTTP gateway,
//! JSON run logs, the episode runner, metric export, and replay tooling.
//! All simulation logic lives in `gridswarm-core`; this crate only moves
//! bytes in and out of it.

pub mod config;
pub mod export;
pub mod gateway;
pub mod replay;
pub mod runlog;
pub mod runner;
