//! Constructive tools for thick laminations: exact hyperbolic graph backends,
//! train-track splitting, mapping classes, Markov-graph limit sets and a
//! flat-surface expansion harness.

pub mod error;
pub mod flatsurf;
pub mod hypgraph;
pub mod manifest;
pub mod markov;
pub mod mcg;
pub mod modular;
pub mod numeric;
pub mod splitting;
pub mod thickpath;
pub mod traintrack;
pub mod word;

pub use error::{Error, Result};
