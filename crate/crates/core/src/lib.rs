//! Lattice orbit counting on boundaries of SL(n,R), Haar volumes of norm
//! balls in the Borel group, and ergodic averages on SL(2,Z)\SL(2,R).

// Range checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod boundary;
pub mod config;
pub mod ergodic;
pub mod error;
pub mod experiment;
pub mod group;
pub mod haar;
pub mod lattice;
pub mod modular;
pub mod quadrature;
pub mod report;

pub use boundary::{Arc, BoundaryPoint, Cap, CirclePoint, MeasureValue, ProjectivePoint, RationalPoint, Region};
pub use error::{Error, Result};
pub use experiment::{Basepoint, CountRow, CountTable, ExperimentConfig, NamedRegion};
pub use group::{BorelCoords, GroupElement, IwasawaCoords, Matrix};
pub use haar::{Chirality, HaarBallSampler, VolumeResult};
pub use lattice::{LatticeElement, SubgroupSpec};
