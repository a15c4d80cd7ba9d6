//! Design-space optimization of dual active bridge (DAB) converter modules
//! for a high-power DC fast charger.
//!
//! The pipeline evaluates every (module count, switching frequency, turns
//! ratio) triple across an output-voltage × load grid, sizes the
//! semiconductors, cooling, transformer and output capacitor of one module,
//! and reduces the results to a cost-versus-loss Pareto front plus an
//! efficiency-filtered recommendation.

pub mod capbank;
pub mod cooling;
pub mod datastore;
pub mod electrical;
pub mod error;
pub mod magnetics;
pub mod report;
pub mod semis;
pub mod synthesis;

pub use error::{Error, Result};
