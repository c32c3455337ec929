//! Simulation library for decoherence-free subspaces generated by dynamical
//! decoupling: dense state-vector and density-matrix kernels, Pauli-operator
//! algebra, system–bath noise models, the DFS2/DFS3 codes, decoupling sequences,
//! the experiment engine and the fidelity-analysis stack.

pub mod analysis;
pub mod circuit;
pub mod codes;
pub mod engine;
pub mod error;
pub mod noise;
pub mod pauli;
pub mod sequences;
pub mod tensor;

pub use error::{DfsError, Result};
