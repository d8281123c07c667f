//! Entanglement evolution under multipartite separable operations.
//!
//! The crate evaluates SL-invariant entanglement measures (concurrence,
//! G-concurrence, square root of the three-tangle, user polynomials),
//! extends them to mixed states by convex-roof optimization, and checks the
//! determinant-product law that governs their average decay under separable
//! Kraus operations. On top of that it searches for entanglement resilience
//! factors over Kraus mixings and classifies entanglement-breaking channels.
//!
//! Modules, bottom-up:
//! - [`linalg`], [`random`], [`state`]: dense tensor-product algebra and sampling
//! - [`measures`]: pure-state invariants, the Wootters closed form, convex roofs
//! - [`channels`]: separable channels, outcome ensembles, decay factors
//! - [`erf`]: resilience-factor search and its bounds
//! - [`breaking`]: Schmidt numbers, PPT tests, partial entanglement breaking
//! - [`cli`]: experiment runners behind the `sepent` binary

pub mod breaking;
pub mod channels;
pub mod cli;
pub mod erf;
pub mod error;
pub mod io;
pub mod linalg;
pub mod random;
pub mod state;
pub mod measures;
pub(crate) mod stiefel;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, ComplexVector, LocalDims, C64};
pub use random::RandomStream;
pub use state::{DensityMatrix, PureState, State};
