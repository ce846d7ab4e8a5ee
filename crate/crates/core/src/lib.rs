pub mod error;
pub mod export;
pub mod format;
pub mod holes;
pub mod ifs;
pub mod lattice;
pub mod neighbor;
pub mod search;
pub mod spectral;
pub mod topology;
