use std::ops::{AddAssign, Mul};

use faer::Mat;

use super::basis::{SectorBasis, SpinConfigs};
use super::HubbardModel;
use crate::error::{Error, Result};

/// Two configurations of one spin species connected by a single hop across
/// a bond, with the fermionic sign of `c†_j c_i + c†_i c_j` between them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopPair {
    pub from: u32,
    pub to: u32,
    pub sign: f64,
}

/// Pairs for every bond, for one spin species.
fn hop_pairs(configs: &SpinConfigs, edges: &[(usize, usize)]) -> Vec<Vec<HopPair>> {
    edges
        .iter()
        .map(|&(i, j)| {
            let (bi, bj) = (1u64 << i, 1u64 << j);
            // Orbitals strictly between i and j carry the Jordan-Wigner string.
            let between = (bj - 1) & !((bi << 1) - 1);
            configs
                .states()
                .iter()
                .enumerate()
                .filter(|(_, &s)| s & bi != 0 && s & bj == 0)
                .map(|(a, &s)| {
                    let target = s ^ bi ^ bj;
                    let b = configs.index_of(target).expect("hop stays in sector");
                    let sign = if (s & between).count_ones() % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    };
                    HopPair {
                        from: a as u32,
                        to: b as u32,
                        sign,
                    }
                })
                .collect()
        })
        .collect()
}

/// The Hubbard Hamiltonian restricted to one `(N↑, N↓)` sector.
///
/// Storage is factorized: the hopping part is `T↑ ⊗ 1 + 1 ⊗ T↓` kept as
/// per-bond pair lists, the rest is a diagonal. Spin-down hops never cross
/// an up orbital in the "all up, then all down" ordering, so the Kronecker
/// form carries no extra sign.
#[derive(Debug, Clone)]
pub struct SectorMatrix {
    basis: SectorBasis,
    /// `−t_e` per bond.
    amplitudes: Vec<f64>,
    up_hops: Vec<Vec<HopPair>>,
    down_hops: Vec<Vec<HopPair>>,
    diagonal: Vec<f64>,
    /// Double occupancy `Σ_i n_i↑ n_i↓` of each basis state.
    double_occupancy: Vec<u8>,
}

pub fn assemble_sector_matrix(model: &HubbardModel, basis: &SectorBasis) -> Result<SectorMatrix> {
    if basis.num_sites() != model.num_sites() {
        return Err(Error::Mismatch(format!(
            "basis built for {} sites, model has {}",
            basis.num_sites(),
            model.num_sites()
        )));
    }
    let edges = model.lattice().edges();
    let up_hops = hop_pairs(basis.up(), edges);
    let down_hops = hop_pairs(basis.down(), edges);

    let v = &model.potential().values;
    let onsite = |mask: u64| -> f64 {
        let mut m = mask;
        let mut acc = 0.0;
        while m != 0 {
            acc += v[m.trailing_zeros() as usize];
            m &= m - 1;
        }
        acc
    };
    let up_v: Vec<f64> = basis.up().states().iter().map(|&s| onsite(s)).collect();
    let down_v: Vec<f64> = basis.down().states().iter().map(|&s| onsite(s)).collect();

    let dim = basis.dimension();
    let mut diagonal = Vec::with_capacity(dim);
    let mut double_occupancy = Vec::with_capacity(dim);
    for (a, &su) in basis.up().states().iter().enumerate() {
        for (b, &sd) in basis.down().states().iter().enumerate() {
            let docc = (su & sd).count_ones();
            double_occupancy.push(docc as u8);
            diagonal.push(up_v[a] + down_v[b] + model.u() * docc as f64);
        }
    }

    Ok(SectorMatrix {
        basis: basis.clone(),
        amplitudes: model.bond_hopping().iter().map(|t| -t).collect(),
        up_hops,
        down_hops,
        diagonal,
        double_occupancy,
    })
}

impl SectorMatrix {
    pub fn basis(&self) -> &SectorBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn double_occupancy(&self) -> &[u8] {
        &self.double_occupancy
    }

    pub fn num_edges(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn up_hops(&self, edge: usize) -> &[HopPair] {
        &self.up_hops[edge]
    }

    pub fn down_hops(&self, edge: usize) -> &[HopPair] {
        &self.down_hops[edge]
    }

    /// `y = H x`.
    pub fn apply<T>(&self, x: &[T], y: &mut [T])
    where
        T: Copy + AddAssign + Mul<f64, Output = T>,
    {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        for ((yk, &xk), &d) in y.iter_mut().zip(x).zip(&self.diagonal) {
            *yk = xk * d;
        }
        let nd = self.basis.down().len();
        for (pairs, &amp) in self.up_hops.iter().zip(&self.amplitudes) {
            for p in pairs {
                let c = amp * p.sign;
                let (ra, rb) = (p.from as usize * nd, p.to as usize * nd);
                for k in 0..nd {
                    let xa = x[ra + k];
                    let xb = x[rb + k];
                    y[ra + k] += xb * c;
                    y[rb + k] += xa * c;
                }
            }
        }
        for (row_x, row_y) in x.chunks_exact(nd).zip(y.chunks_exact_mut(nd)) {
            for (pairs, &amp) in self.down_hops.iter().zip(&self.amplitudes) {
                for p in pairs {
                    let c = amp * p.sign;
                    let (a, b) = (p.from as usize, p.to as usize);
                    row_y[a] += row_x[b] * c;
                    row_y[b] += row_x[a] * c;
                }
            }
        }
    }

    /// Nonzero entries `(row, col, value)`, row-major, duplicates summed.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let nd = self.basis.down().len();
        let mut out: Vec<(usize, usize, f64)> = self
            .diagonal
            .iter()
            .enumerate()
            .filter(|(_, &d)| d != 0.0)
            .map(|(k, &d)| (k, k, d))
            .collect();
        for (pairs, &amp) in self.up_hops.iter().zip(&self.amplitudes) {
            for p in pairs {
                for k in 0..nd {
                    let (r, c) = (p.from as usize * nd + k, p.to as usize * nd + k);
                    out.push((r, c, amp * p.sign));
                    out.push((c, r, amp * p.sign));
                }
            }
        }
        for a in 0..self.basis.up().len() {
            for (pairs, &amp) in self.down_hops.iter().zip(&self.amplitudes) {
                for p in pairs {
                    let (r, c) = (a * nd + p.from as usize, a * nd + p.to as usize);
                    out.push((r, c, amp * p.sign));
                    out.push((c, r, amp * p.sign));
                }
            }
        }
        out.sort_by_key(|x| (x.0, x.1));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(out.len());
        for (r, c, v) in out {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| e.2 != 0.0);
        merged
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let n = self.dim();
        let mut m = Mat::<f64>::zeros(n, n);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }
}
