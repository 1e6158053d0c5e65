pub mod error;
pub mod circuit;
pub mod statevector;
pub mod operators;
pub mod trotter;
pub mod protocol;
pub mod analysis;
pub mod noise;
pub mod cli;
