//! Height-function / circle-spin duality on finite graphs.
//!
//! Integer height one-forms `n` with weights `e^{-V(n_e)}` and circle-valued
//! spin one-forms `J` with weights `e^{-U(J_e)}` are Fourier dual when the
//! coefficients of `e^{-U}` are `e^{-V}`. This crate provides the discrete
//! calculus, the potential bridge, exact small-graph oracles for the duality
//! identities, graph transforms, Metropolis samplers and torus observables.

pub mod calculus;
pub mod error;
pub mod forms;
pub mod gauge;
pub mod graph;
pub mod mcmc;
pub mod observables;
pub mod oracle;
pub mod potentials;
pub mod transforms;

pub use calculus::{d, d_star, green_solve, hodge_project, laplacian_matrix, Green, Sector};
pub use error::{Error, Result};
pub use forms::{wrap_angle, OneForm, ZeroForm};
pub use gauge::TreeGauge;
pub use graph::{Edge, EdgeId, FiniteGraph, VertexId};
pub use potentials::{HeightPotential, PotentialPair, PotentialRegistry, Provenance, SpinPotential};
