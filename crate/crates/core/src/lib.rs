//! Quantum-enhanced lattice density functional theory for Fermi-Hubbard
//! models.
//!
//! The pipeline has two halves. First, ground-state energies of a small
//! homogeneous lattice are computed at every filling, either exactly
//! ([`exact`]) or with an emulated variational eigensolver ([`vqe`]). Those
//! energies become a local exchange-correlation functional ([`functional`]).
//! Second, the functional drives a Kohn-Sham loop ([`ksdft`]) on a much
//! larger inhomogeneous lattice. [`workbench`] wires both halves to config
//! files, output tables and the command line.

pub mod error;
pub mod exact;
pub mod functional;
pub mod hamiltonian;
pub mod ksdft;
pub mod lattice;
pub mod scan;
pub mod vqe;
pub mod workbench;

pub use error::{Error, Result};
