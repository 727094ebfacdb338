//! Noise-free statevector emulation of the Hamiltonian variational ansatz.
//!
//! States live in one `(N↑, N↓)` sector, never the full `2^{2L}` qubit
//! space; the ansatz generators conserve both numbers.

mod ansatz;
mod initial;
mod optimize;

pub use ansatz::{apply_ansatz, commuting_groups, energy_and_gradient, expectation, AnsatzSpec};
pub use initial::{prepare_initial_state, InitialState};
pub use optimize::{
    vqe_filling_scan, vqe_minimize, vqe_minimize_from, OptimizerConfig, TracePoint, VqeEmulator,
    VqeResult, VqeScanConfig,
};
