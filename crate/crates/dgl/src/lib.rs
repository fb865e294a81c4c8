//! Exact symbolic computation with differential graded Lie algebras over Q:
//! free graded Lie algebras in tensor normal form, degree-bounded homology,
//! product / diagonal / fat-wedge model constructions, and a certifier for
//! sectional category upper bounds (including LS category and topological
//! complexity).

pub mod dgl;
pub mod error;
pub mod lie;
pub mod linalg;
pub mod modelfile;
pub mod models;
pub mod parser;
pub mod rational;
pub mod secat;

pub use error::{Error, Result};
