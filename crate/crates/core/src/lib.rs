//! Self-similar tilings generated by graph-directed iterated function systems.
//!
//! A [`system::GraphIfs`] bundles contractive similitudes indexed by the edges of a
//! strongly connected graph. From it the crate builds symbolic addresses
//! ([`symbolic`]), attractor samples ([`attractor`]), tilings ([`tiling`]) and the
//! deflation and equivalence machinery in [`rigidity`].

pub mod attractor;
pub mod geometry;
pub mod io;
pub mod rigidity;
pub mod symbolic;
pub mod system;
pub mod tiling;

pub use geometry::{Region, Similitude, DEFAULT_TOL};
pub use symbolic::{DaggerPath, Word};
pub use system::{load_system, GraphIfs};
