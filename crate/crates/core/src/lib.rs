//! A laboratory for random k-XORSAT.
//!
//! The crate is organised bottom-up:
//!
//! * [`instance`]: instances, assignments, the random ensemble and the text format.
//! * [`graph`]: the bipartite factor graph, neighbourhoods and influence ranges.
//! * [`gf2`]: exact Gaussian elimination over GF(2); the ground-truth oracle.
//! * [`peeling`]: reduction to the 2-core and back-substitution.
//! * [`decimation`]: sequential local algorithms driven by ordering/internal vectors.
//! * [`theory`]: closed-form thresholds and freeness constants.
//! * [`experiments`]: batch drivers that tie simulation to theory.

pub mod decimation;
pub mod error;
pub mod experiments;
pub mod gf2;
pub mod graph;
pub mod instance;
pub mod peeling;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
pub use instance::{Assignment, Clause, Instance, VarId};
