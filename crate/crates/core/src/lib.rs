//! Covariant POVMs: seed constraints, extremality tests and the
//! seed optimization for covariant state estimation.

pub mod covariant;
pub mod extremality;
pub mod error;
pub mod grouprep;
pub mod numerics;
pub mod optimize;
pub mod sampling;
pub mod scenarios;

pub use covariant::{ConstraintReport, Seed, SeedBlock, SeedBlocks, SeedSpace};
pub use error::{Error, Result};
pub use grouprep::{GroupModel, GroupPoint, IsotypicClass, IsotypicDecomposition, ModelKind};
pub use numerics::{CMatrix, Tolerances, C64};
pub use scenarios::{Scenario, Stabilizer};
