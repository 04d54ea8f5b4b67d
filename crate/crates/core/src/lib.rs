//! Penalized finite element solver for frictional contact problems with a
//! convex potential and a nonconvex boundary energy, plus tools to study
//! convergence as the mesh size and penalty parameter go to zero.

pub mod cli;
pub mod error;
pub mod fem;
pub mod lab;
pub mod linalg;
pub mod mesh;
pub mod model;
pub mod solver;

pub use error::{Error, Result};
