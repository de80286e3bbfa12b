//! Numerical laboratory for the spatial Λ-Fleming-Viot process in a
//! quenched random environment on the torus (d = 1, 2).
//!
//! The crate provides, in rough dependency order:
//!
//! - [`grid`], [`field`], [`fft`]: torus grids and real fields with a
//!   spectral twin representation;
//! - [`spectral`]: the ball-average operator Πₙ, the semidiscrete
//!   Laplacian 𝒜ₙ = n²(Πₙ⁴ − Id), cutoffs, resolvents and semigroups as
//!   Fourier multipliers;
//! - [`besov`]: Littlewood-Paley blocks, Besov/Hölder norms, Bony
//!   paraproducts and the commutators used in the spectral analysis;
//! - [`env`]: quenched selection environments (white-noise and smooth
//!   regimes), the renormalization constant cₙ and enhanced-noise
//!   diagnostics;
//! - [`hamiltonian`]: the matrix-free Anderson Hamiltonian
//!   ℋₙ = 𝒜ₙ + Πₙ²(ξⁿ − cₙ)Πₙ² with a block-Krylov eigensolver;
//! - [`slfv`]: exact event-driven simulation of the particle system under
//!   the sparse and diffusive scalings;
//! - [`limits`]: the dual PDE of the measure-valued limit, Laplace-duality
//!   and moment checks, and the Fisher-KPP solvers;
//! - [`io`]: flat binary field containers and deterministic CSV output.

pub mod besov;
pub mod checks;
pub mod diagnostics;
pub mod env;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod hamiltonian;
pub mod io;
pub mod limits;
pub mod rng;
pub mod slfv;
pub mod spectral;
pub mod synth;

pub use error::CoreError;
pub use field::Field;
pub use grid::TorusGrid;
