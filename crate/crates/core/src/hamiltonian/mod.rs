//! The Fermi-Hubbard model: fixed-particle-number sectors, sector matrices,
//! and the Jordan-Wigner qubit encoding used to cross-check them.

mod basis;
mod compressed;
mod jordan_wigner;
mod sector;

pub use basis::{binomial, build_sector_basis, SectorBasis, SpinConfigs};
pub use compressed::dimer_compressed_hamiltonian;
pub use jordan_wigner::{jordan_wigner_encode, PauliHamiltonian, PauliString};
pub use sector::{assemble_sector_matrix, HopPair, SectorMatrix};

use faer::Mat;

use crate::error::{Error, Result};
use crate::lattice::{ExternalPotential, SiteGraph};

/// Hopping `t`, on-site repulsion `U` and external potential on a lattice.
///
/// Each bond carries its own hopping amplitude; all equal `t` unless
/// overridden with [`HubbardModel::with_bond_hopping`].
#[derive(Debug, Clone, PartialEq)]
pub struct HubbardModel {
    lattice: SiteGraph,
    t: f64,
    u: f64,
    potential: ExternalPotential,
    bond_hopping: Vec<f64>,
}

impl HubbardModel {
    pub fn new(lattice: SiteGraph, t: f64, u: f64, potential: ExternalPotential) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::Model(format!(
                "hopping t must be positive and finite, got {t}"
            )));
        }
        if !u.is_finite() {
            return Err(Error::Model(format!(
                "interaction U must be finite, got {u}"
            )));
        }
        if potential.len() != lattice.num_sites() {
            return Err(Error::Mismatch(format!(
                "potential has {} entries for {} sites",
                potential.len(),
                lattice.num_sites()
            )));
        }
        if potential.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Model("external potential must be finite".into()));
        }
        let bond_hopping = vec![t; lattice.edges().len()];
        Ok(HubbardModel {
            lattice,
            t,
            u,
            potential,
            bond_hopping,
        })
    }

    pub fn homogeneous(lattice: SiteGraph, t: f64, u: f64) -> Result<Self> {
        let potential = ExternalPotential::zero(lattice.num_sites());
        Self::new(lattice, t, u, potential)
    }

    /// Override the hopping amplitude of bond `edge` (index into
    /// [`SiteGraph::edges`]). Zero disconnects the bond.
    pub fn with_bond_hopping(mut self, edge: usize, value: f64) -> Result<Self> {
        if edge >= self.bond_hopping.len() || !value.is_finite() || value < 0.0 {
            return Err(Error::Model(format!(
                "invalid bond override {edge} -> {value}"
            )));
        }
        self.bond_hopping[edge] = value;
        Ok(self)
    }

    /// Same model with a different interaction strength.
    pub fn with_interaction(&self, u: f64) -> Self {
        HubbardModel { u, ..self.clone() }
    }

    /// Same lattice and couplings without the external potential.
    pub fn without_potential(&self) -> Self {
        HubbardModel {
            potential: ExternalPotential::zero(self.num_sites()),
            ..self.clone()
        }
    }

    pub fn lattice(&self) -> &SiteGraph {
        &self.lattice
    }

    pub fn num_sites(&self) -> usize {
        self.lattice.num_sites()
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn potential(&self) -> &ExternalPotential {
        &self.potential
    }

    pub fn bond_hopping(&self) -> &[f64] {
        &self.bond_hopping
    }

    pub fn is_homogeneous(&self) -> bool {
        self.potential.is_zero() && self.bond_hopping.iter().all(|&h| h == self.t)
    }

    /// One-body matrix `−t` on bonds plus `v_i` on the diagonal.
    pub fn single_particle_matrix(&self) -> Mat<f64> {
        let n = self.num_sites();
        let mut h = Mat::<f64>::zeros(n, n);
        for (i, v) in self.potential.values.iter().enumerate() {
            h[(i, i)] = *v;
        }
        for (&(i, j), &amp) in self.lattice.edges().iter().zip(&self.bond_hopping) {
            h[(i, j)] = -amp;
            h[(j, i)] = -amp;
        }
        h
    }
}

/// Ascending eigenvalues and column eigenvectors of a dense symmetric matrix.
pub(crate) fn symmetric_eigen(m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let eig = m
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let values = eig.S().column_vector().iter().copied().collect();
    Ok((values, eig.U().to_owned()))
}

/// Single-particle orbital energies of the model, ascending.
pub fn single_particle_spectrum(model: &HubbardModel) -> Result<(Vec<f64>, Mat<f64>)> {
    symmetric_eigen(&model.single_particle_matrix())
}

/// Total-spin-resolved split of `ne` electrons: `(⌈ne/2⌉, ⌊ne/2⌋)`.
pub fn sz_split(ne: usize) -> (usize, usize) {
    (ne.div_ceil(2), ne / 2)
}
