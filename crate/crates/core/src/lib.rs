//! Numerical toolkit for Jaynes-Cummings-Hubbard lattices of superconducting
//! circuits.

pub mod circuit_quantize;
pub mod hilbert;
pub mod integrate;
pub mod jc_site;
pub mod jchm_lattice;
pub mod linalg;
pub mod lindblad;
pub mod meanfield;
pub mod resonator;
pub mod stats;
