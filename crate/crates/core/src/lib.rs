pub mod active_set;
pub mod analysis;
pub mod assembly;
pub mod cli;
pub mod control_vi;
pub mod error;
pub mod field;
pub mod linsolve;
pub mod mesh;
pub mod options;
pub mod oracle;
pub mod output;
pub mod problem;
pub mod quadrature;
pub mod recovery;
pub mod sparse;
pub mod state_vi;
pub mod targets;
pub mod unconstrained;

pub use error::{Error, Result};
