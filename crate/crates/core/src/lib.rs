//! Rooted trees, Runge-Kutta order conditions and exact verification of
//! Butcher tableaux, with a truncated Taylor series oracle that checks the
//! tree expansions of the exact and discrete flows directly.

pub mod algebra;
pub mod cli;
pub mod conditions;
pub mod document;
pub mod oracle;
pub mod trees;
pub mod verify;

pub use trees::RootedTree;
pub use verify::ButcherTableau;

/// Version tag carried by every JSON output.
pub const SCHEMA: &str = "butcher-kit/1";
