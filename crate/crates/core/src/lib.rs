//! Exact lattice computations for the Beauville-Bogomolov-Fujiki lattice of
//! K3^[n]-type hyperkähler manifolds.
//!
//! - [`lattice`]: Gram pairings, divisibility, discriminant groups, rank 2 definiteness.
//! - [`orbit`]: reflections, orbit invariants, canonical orbit representatives.
//! - [`mbm`]: MBM class tables for n = 2, 3, curve classes from pencils, walls and chambers.
//! - [`verify`]: bounded verification of negative (semi)definite conjugates of `e`.
//! - [`cli`]: the `k3n` command-line front end.

pub mod cli;
pub mod error;
pub mod lattice;
pub mod mbm;
pub mod orbit;
mod snf;
pub mod verify;

pub use error::{LatticeError, Result};
pub use lattice::{
    Definiteness, DiscGroup, DiscImage, LatVec, LatVecJson, LatticeSpec, disc_image,
    discriminant_group, divisibility, is_primitive, make_lambda_n, make_reduced_lambda_n, pairing,
    rank2_definiteness, square,
};
pub use orbit::{OrbitInvariant, OrbitRep, orbit_invariant, orbit_representative, reflect};
