//! Signed distance persistent homology (SDPH) for voxelized 3D shapes.
//!
//! The pipeline turns a binary shape into its signed distance field, filters
//! the cubical complex of the grid by sublevel sets of that field, and reads
//! off persistence diagrams in dimensions 0, 1 and 2. Each birth-death pair is
//! then typed by the signs of its endpoints, which summarizes the texture of
//! the shape: components, tunnels and cavities, and how thick or thin they are.

pub mod classify;
pub mod cubical;
pub mod error;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod plot;
pub mod sdt;
pub mod synth;

pub use error::{Error, Result};
