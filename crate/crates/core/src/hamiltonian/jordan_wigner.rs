//! Jordan-Wigner encoding of the Hubbard model.
//!
//! Spin-orbital `p` maps to qubit `p`: up orbitals `0..L` in snake order,
//! then down orbitals `L..2L`. A qubit in `|1⟩` is occupied and
//! `n_p = (I − Z_p)/2`.

use std::collections::BTreeMap;
use std::fmt;

use faer::{c64, Mat};

use super::basis::SectorBasis;
use super::HubbardModel;
use crate::error::{Error, Result};

/// A Pauli string stored as X and Z bitmasks; `Y = i X Z` where both are set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    pub x: u64,
    pub z: u64,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0 };

    pub fn z(q: usize) -> Self {
        PauliString { x: 0, z: 1 << q }
    }

    pub fn zz(p: usize, q: usize) -> Self {
        PauliString {
            x: 0,
            z: (1 << p) | (1 << q),
        }
    }

    /// `P|b⟩ = phase · |b ⊕ x⟩`.
    pub fn apply_to_basis(&self, b: u64) -> (c64, u64) {
        let ys = (self.x & self.z).count_ones();
        let mut phase = match ys % 4 {
            0 => c64::new(1.0, 0.0),
            1 => c64::new(0.0, 1.0),
            2 => c64::new(-1.0, 0.0),
            _ => c64::new(0.0, -1.0),
        };
        if (b & self.z).count_ones() % 2 == 1 {
            phase = -phase;
        }
        (phase, b ^ self.x)
    }

    pub fn label(&self, n_qubits: usize) -> String {
        (0..n_qubits)
            .map(|q| match ((self.x >> q) & 1, (self.z >> q) & 1) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (1, 1) => 'Y',
                _ => 'Z',
            })
            .collect()
    }
}

/// `Σ_α λ_α P_α` with real coefficients and distinct strings.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliHamiltonian {
    n_qubits: usize,
    terms: Vec<(f64, PauliString)>,
}

impl fmt::Display for PauliHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (c, p) in &self.terms {
            writeln!(f, "{c:+.12} {}", p.label(self.n_qubits))?;
        }
        Ok(())
    }
}

/// `c†_p c_q + c†_q c_p ↦ ½ (X_p X_q + Y_p Y_q) Z_{p+1} ⋯ Z_{q−1}`.
pub fn hopping_terms(p: usize, q: usize) -> [(f64, PauliString); 2] {
    let (p, q) = (p.min(q), p.max(q));
    let ends = (1u64 << p) | (1u64 << q);
    let string = ((1u64 << q) - 1) & !((1u64 << (p + 1)) - 1);
    [
        (0.5, PauliString { x: ends, z: string }),
        (
            0.5,
            PauliString {
                x: ends,
                z: string | ends,
            },
        ),
    ]
}

/// `n_p n_q ↦ ¼ (I − Z_p)(I − Z_q)`.
pub fn number_product_terms(p: usize, q: usize) -> [(f64, PauliString); 4] {
    [
        (0.25, PauliString::IDENTITY),
        (-0.25, PauliString::z(p)),
        (-0.25, PauliString::z(q)),
        (0.25, PauliString::zz(p, q)),
    ]
}

/// `n_p ↦ ½ (I − Z_p)`.
pub fn number_terms(p: usize) -> [(f64, PauliString); 2] {
    [(0.5, PauliString::IDENTITY), (-0.5, PauliString::z(p))]
}

pub fn jordan_wigner_encode(model: &HubbardModel) -> Result<PauliHamiltonian> {
    let l = model.num_sites();
    if 2 * l > 64 {
        return Err(Error::Model(format!("{l} sites need more than 64 qubits")));
    }
    let mut acc: BTreeMap<PauliString, f64> = BTreeMap::new();
    let mut add = |c: f64, p: PauliString| *acc.entry(p).or_insert(0.0) += c;

    for (&(i, j), &t) in model.lattice().edges().iter().zip(model.bond_hopping()) {
        for offset in [0, l] {
            for (c, p) in hopping_terms(i + offset, j + offset) {
                add(-t * c, p);
            }
        }
    }
    for i in 0..l {
        for (c, p) in number_product_terms(i, i + l) {
            add(model.u() * c, p);
        }
        let v = model.potential().values[i];
        for offset in [0, l] {
            for (c, p) in number_terms(i + offset) {
                add(v * c, p);
            }
        }
    }

    let terms = acc
        .into_iter()
        .filter(|(_, c)| *c != 0.0)
        .map(|(p, c)| (c, p))
        .collect();
    Ok(PauliHamiltonian {
        n_qubits: 2 * l,
        terms,
    })
}

impl PauliHamiltonian {
    pub fn from_terms(
        n_qubits: usize,
        terms: impl IntoIterator<Item = (f64, PauliString)>,
    ) -> Self {
        let mut acc: BTreeMap<PauliString, f64> = BTreeMap::new();
        for (c, p) in terms {
            *acc.entry(p).or_insert(0.0) += c;
        }
        PauliHamiltonian {
            n_qubits,
            terms: acc
                .into_iter()
                .filter(|(_, c)| *c != 0.0)
                .map(|(p, c)| (c, p))
                .collect(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn coefficient(&self, p: &PauliString) -> f64 {
        self.terms
            .iter()
            .find(|(_, q)| q == p)
            .map_or(0.0, |(c, _)| *c)
    }

    /// Dense matrix of the operator on the computational states with
    /// `n_up` ones among the first half of the qubits and `n_down` among
    /// the second half, in the order of [`SectorBasis`].
    pub fn sector_matrix(&self, n_up: usize, n_down: usize) -> Result<Mat<c64>> {
        let l = self.n_qubits / 2;
        let basis = SectorBasis::new(l, n_up, n_down)?;
        let dim = basis.dimension();
        let mut m = Mat::<c64>::zeros(dim, dim);
        let low = (1u64 << l) - 1;
        for (col, (u, d)) in basis.states().enumerate() {
            let b = u | (d << l);
            for (c, p) in &self.terms {
                let (phase, out) = p.apply_to_basis(b);
                if let Some(row) = basis.index_of(out & low, out >> l) {
                    m[(row, col)] += phase * *c;
                }
            }
        }
        Ok(m)
    }

    /// Ascending eigenvalues of [`Self::sector_matrix`].
    pub fn sector_spectrum(&self, n_up: usize, n_down: usize) -> Result<Vec<f64>> {
        let m = self.sector_matrix(n_up, n_down)?;
        let eig = m
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        Ok(eig.S().column_vector().iter().map(|z| z.re).collect())
    }
}
