use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{single_particle_spectrum, sz_split, HubbardModel};
use crate::lattice::{LatticeSpec, SiteGraph};
use crate::scan::{FillingScan, Source};

/// Where a curve came from and which model it describes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub source: Source,
    pub u: f64,
    pub t: f64,
    /// Generating lattice, when there is one.
    pub lattice: Option<LatticeSpec>,
}

/// Values on the density grid `n_k = k / L`, `k = 0..=2L`.
///
/// The grid splits at `n = 1` into a left piece (`k ≤ L`) and a right piece
/// (`k ≥ L`). Both pieces share the node `n = 1`; a curve may carry a
/// separate right-piece value there, which is how potentials keep their
/// jump.
#[derive(Debug, Clone, PartialEq)]
pub struct FillingCurve {
    pub meta: CurveMeta,
    resolution: usize,
    values: Vec<f64>,
    right_at_one: Option<f64>,
}

impl FillingCurve {
    pub fn new(meta: CurveMeta, resolution: usize, values: Vec<f64>) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::Curve("grid resolution must be positive".into()));
        }
        if values.len() != 2 * resolution + 1 {
            return Err(Error::Curve(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                2 * resolution + 1
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Curve("curve values must be finite".into()));
        }
        Ok(FillingCurve {
            meta,
            resolution,
            values,
            right_at_one: None,
        })
    }

    /// Give the right piece its own value at `n = 1`.
    pub fn with_right_at_one(mut self, value: f64) -> Self {
        self.right_at_one = Some(value);
        self
    }

    /// Intervals per unit density; the generating system size `L`.
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn density(&self, k: usize) -> f64 {
        k as f64 / self.resolution as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.values.len()).map(|k| self.density(k)).collect()
    }

    /// Values with the left-piece value at `n = 1`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn right_at_one(&self) -> Option<f64> {
        self.right_at_one
    }

    /// Nodes and values of the piece on `[0, 1]`.
    pub fn left(&self) -> (Vec<f64>, Vec<f64>) {
        let l = self.resolution;
        (
            (0..=l).map(|k| self.density(k)).collect(),
            self.values[..=l].to_vec(),
        )
    }

    /// Nodes and values of the piece on `[1, 2]`.
    pub fn right(&self) -> (Vec<f64>, Vec<f64>) {
        let l = self.resolution;
        let mut v = self.values[l..].to_vec();
        if let Some(r) = self.right_at_one {
            v[0] = r;
        }
        ((l..=2 * l).map(|k| self.density(k)).collect(), v)
    }

    /// Left nodes then right nodes, `2L + 2` values with `n = 1` twice.
    pub fn split_values(&self) -> Vec<f64> {
        let mut v = self.left().1;
        v.extend(self.right().1);
        v
    }
}

/// `ε(Ne/L) = E(Ne)/L` from a scan covering every filling `0..=2L`.
pub fn qelda_curve(scan: &FillingScan) -> Result<FillingCurve> {
    let l = scan.num_sites();
    let missing: Vec<usize> = (0..=2 * l)
        .filter(|&ne| scan.energy(ne).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Curve(format!(
            "scan lacks energies for Ne = {missing:?}"
        )));
    }
    let values = (0..=2 * l)
        .map(|ne| scan.energy(ne).unwrap_or(0.0) / l as f64)
        .collect();
    let meta = CurveMeta {
        source: scan.source.clone(),
        u: scan.u,
        t: scan.t,
        lattice: Some(scan.lattice),
    };
    FillingCurve::new(meta, l, values)
}

/// Non-interacting kinetic energies `T(Ne)` of the open lattice, filling the
/// lowest hopping-matrix orbitals with the `(⌈Ne/2⌉, ⌊Ne/2⌋)` split.
pub fn noninteracting_energies(lattice: &SiteGraph, t: f64) -> Result<Vec<f64>> {
    let model = HubbardModel::homogeneous(lattice.clone(), t, 0.0)?;
    let (eps, _) = single_particle_spectrum(&model)?;
    let l = eps.len();
    let mut prefix = vec![0.0; l + 1];
    for k in 0..l {
        prefix[k + 1] = prefix[k] + eps[k];
    }
    Ok((0..=2 * l)
        .map(|ne| {
            let (a, b) = sz_split(ne);
            prefix[a] + prefix[b]
        })
        .collect())
}

/// `ε_HF(n) = T(Ne)/L + U n²/4` on the generating lattice.
pub fn hf_reference_curve(lattice: &SiteGraph, t: f64, u: f64) -> Result<FillingCurve> {
    let l = lattice.num_sites();
    let kinetic = noninteracting_energies(lattice, t)?;
    let values = kinetic
        .iter()
        .enumerate()
        .map(|(ne, k)| {
            let n = ne as f64 / l as f64;
            k / l as f64 + 0.25 * u * n * n
        })
        .collect();
    let meta = CurveMeta {
        source: Source::Hf,
        u,
        t,
        lattice: Some(lattice.spec()),
    };
    FillingCurve::new(meta, l, values)
}

/// `ε_XC = ε_QELDA − ε_HF` node by node.
pub fn xc_curve(qelda: &FillingCurve, hf: &FillingCurve) -> Result<FillingCurve> {
    if qelda.resolution != hf.resolution {
        return Err(Error::Mismatch(format!(
            "grids differ: L = {} vs {}",
            qelda.resolution, hf.resolution
        )));
    }
    if qelda.meta.u != hf.meta.u || qelda.meta.t != hf.meta.t {
        return Err(Error::Mismatch(format!(
            "couplings differ: (U, t) = ({}, {}) vs ({}, {})",
            qelda.meta.u, qelda.meta.t, hf.meta.u, hf.meta.t
        )));
    }
    if let (Some(a), Some(b)) = (qelda.meta.lattice, hf.meta.lattice) {
        if a != b {
            return Err(Error::Mismatch(format!("lattices differ: {a} vs {b}")));
        }
    }
    let values = qelda
        .values
        .iter()
        .zip(&hf.values)
        .map(|(a, b)| a - b)
        .collect();
    FillingCurve::new(qelda.meta.clone(), qelda.resolution, values)
}

/// Second-order derivative of one piece with spacing `h`.
fn differentiate_piece(f: &[f64], h: f64) -> Vec<f64> {
    let m = f.len();
    (0..m)
        .map(|k| {
            if k == 0 {
                (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
            } else if k == m - 1 {
                (3.0 * f[m - 1] - 4.0 * f[m - 2] + f[m - 3]) / (2.0 * h)
            } else {
                (f[k + 1] - f[k - 1]) / (2.0 * h)
            }
        })
        .collect()
}

/// `V_XC = dε_XC/dn` on the same grid, each side of `n = 1` differenced on
/// its own so the jump at `n = 1` survives.
pub fn differentiate_xc(xc: &FillingCurve) -> Result<FillingCurve> {
    let l = xc.resolution;
    if l < 2 {
        return Err(Error::Curve(format!(
            "need at least 3 nodes per side of n = 1, grid has {}",
            l + 1
        )));
    }
    let h = 1.0 / l as f64;
    let left = differentiate_piece(&xc.left().1, h);
    let right = differentiate_piece(&xc.right().1, h);
    let mut values = left;
    values.extend_from_slice(&right[1..]);
    Ok(FillingCurve::new(xc.meta.clone(), l, values)?.with_right_at_one(right[0]))
}
