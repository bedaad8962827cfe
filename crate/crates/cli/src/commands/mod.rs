pub mod lattice;
pub mod maxwell;
pub mod qm;
