pub mod continuation;
pub mod domain;
pub mod error;
pub mod fields;
pub mod harmonic;
pub mod oracles;
pub mod solver;
pub mod verify;
