//! Exact diagonalization in fixed `(N↑, N↓)` sectors.
//!
//! Small sectors are diagonalized densely, larger ones with restarted
//! Lanczos on the factorized sector matrix.

mod lanczos;

pub use lanczos::{lowest_eigenpair, Eigenpair, LanczosConfig};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::hamiltonian::{
    assemble_sector_matrix, symmetric_eigen, sz_split, HubbardModel, SectorBasis, SectorMatrix,
};
use crate::scan::{FillingScan, ScanPoint, Source};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdConfig {
    /// Sectors up to this dimension are diagonalized densely.
    pub dense_max: usize,
    /// Largest sector dimension attempted at all.
    pub max_dim: usize,
    /// Eigenvalues closer than this to the ground energy count as degenerate.
    pub degeneracy_tol: f64,
    pub lanczos: LanczosConfig,
    /// In filling scans, take `E(Ne > L)` from the particle-hole partner,
    /// `E(N↑, N↓) = E(L−N↑, L−N↓) + U (N − L)`, exact on bipartite lattices
    /// without external potential.
    pub particle_hole_mirror: bool,
}

impl Default for EdConfig {
    fn default() -> Self {
        EdConfig {
            dense_max: 400,
            max_dim: 4_000_000,
            degeneracy_tol: 1e-10,
            lanczos: LanczosConfig::default(),
            particle_hole_mirror: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub n_up: usize,
    pub n_down: usize,
    pub ground_energy: f64,
    /// Normalized amplitudes over [`SectorBasis`] order.
    pub ground_vector: Vec<f64>,
    /// `⟨n_i↑ + n_i↓⟩`, averaged over the ground subspace when degenerate.
    pub site_densities: Vec<f64>,
    /// Dimension of the ground subspace found (1 when non-degenerate).
    pub degeneracy: usize,
    /// `‖Hψ − Eψ‖ / max(1, |E|)`.
    pub residual: f64,
}

impl SpectrumResult {
    pub fn is_degenerate(&self) -> bool {
        self.degeneracy > 1
    }
}

fn check_budget(basis: &SectorBasis, cfg: &EdConfig) -> Result<()> {
    if basis.dimension() > cfg.max_dim {
        return Err(Error::Budget {
            dim: basis.dimension(),
            budget: cfg.max_dim,
        });
    }
    Ok(())
}

fn residual(h: &SectorMatrix, x: &[f64], e: f64) -> f64 {
    let mut y = vec![0.0; x.len()];
    h.apply(x, &mut y);
    let r: f64 = y.iter().zip(x).map(|(a, b)| (a - e * b).powi(2)).sum();
    r.sqrt() / e.abs().max(1.0)
}

/// Lowest eigenvalue with up to `keep` orthonormal vectors of the ground
/// subspace (only the first is guaranteed when `keep == 1`).
fn ground_subspace(h: &SectorMatrix, cfg: &EdConfig, keep: usize) -> Result<(f64, Vec<Vec<f64>>)> {
    let dim = h.dim();
    if dim <= cfg.dense_max {
        let (vals, vecs) = symmetric_eigen(&h.to_dense())?;
        let e0 = vals[0];
        let count = vals
            .iter()
            .take_while(|&&v| v - e0 < cfg.degeneracy_tol)
            .count();
        let vectors = (0..count.min(keep))
            .map(|k| (0..dim).map(|i| vecs[(i, k)]).collect())
            .collect();
        return Ok((e0, vectors));
    }

    let apply = |x: &[f64], y: &mut [f64]| h.apply(x, y);
    let first = lowest_eigenpair(dim, apply, &[], &cfg.lanczos)?;
    let e0 = first.value;
    let mut vectors = vec![first.vector];
    while vectors.len() < keep && vectors.len() < dim {
        let next = lowest_eigenpair(dim, apply, &vectors, &cfg.lanczos)?;
        if next.value - e0 >= cfg.degeneracy_tol {
            break;
        }
        vectors.push(next.vector);
    }
    Ok((e0, vectors))
}

/// Ground state of `model` with `n_up` up and `n_down` down electrons.
pub fn ed_ground_state(model: &HubbardModel, n_up: usize, n_down: usize) -> Result<SpectrumResult> {
    ed_ground_state_with(model, n_up, n_down, &EdConfig::default())
}

pub fn ed_ground_state_with(
    model: &HubbardModel,
    n_up: usize,
    n_down: usize,
    cfg: &EdConfig,
) -> Result<SpectrumResult> {
    let basis = SectorBasis::new(model.num_sites(), n_up, n_down)?;
    check_budget(&basis, cfg)?;
    let h = assemble_sector_matrix(model, &basis)?;
    // Eight covers the largest degeneracies seen on small open lattices.
    let (e0, vectors) = ground_subspace(&h, cfg, 8)?;

    let k = vectors.len() as f64;
    let densities = basis.site_densities(|i| vectors.iter().map(|v| v[i] * v[i]).sum::<f64>() / k);
    let res = vectors
        .iter()
        .map(|v| residual(&h, v, e0))
        .fold(0.0, f64::max);
    let mut ground_vector = vectors.into_iter().next().expect("ground vector");
    fix_sign(&mut ground_vector);

    Ok(SpectrumResult {
        n_up,
        n_down,
        ground_energy: e0,
        ground_vector,
        site_densities: densities,
        degeneracy: k as usize,
        residual: res,
    })
}

/// Ground energy only; skips the degeneracy search.
pub fn ed_ground_energy(
    model: &HubbardModel,
    n_up: usize,
    n_down: usize,
    cfg: &EdConfig,
) -> Result<f64> {
    let basis = SectorBasis::new(model.num_sites(), n_up, n_down)?;
    check_budget(&basis, cfg)?;
    let h = assemble_sector_matrix(model, &basis)?;
    Ok(ground_subspace(&h, cfg, 1)?.0)
}

/// Make the largest-magnitude amplitude positive, so vectors are reproducible.
fn fix_sign(v: &mut [f64]) {
    let pivot = v
        .iter()
        .copied()
        .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

pub(crate) fn check_scan_inputs(model: &HubbardModel, ne_list: &[usize]) -> Result<()> {
    if !model.potential().is_zero() {
        return Err(Error::Model(
            "filling scans need a model without external potential".into(),
        ));
    }
    let max = 2 * model.num_sites();
    if let Some(ne) = ne_list.iter().find(|&&ne| ne > max) {
        return Err(Error::Sector(format!("Ne = {ne} exceeds 2L = {max}")));
    }
    Ok(())
}

/// Exact ground energies `E(Ne)` of a homogeneous model, one sector per
/// filling chosen by [`sz_split`]. A failed filling is recorded in its
/// [`ScanPoint`] and the scan continues.
pub fn ed_filling_scan(model: &HubbardModel, ne_list: &[usize]) -> Result<FillingScan> {
    ed_filling_scan_with(model, ne_list, &EdConfig::default())
}

pub fn ed_filling_scan_with(
    model: &HubbardModel,
    ne_list: &[usize],
    cfg: &EdConfig,
) -> Result<FillingScan> {
    check_scan_inputs(model, ne_list)?;
    let l = model.num_sites();
    // Spin-flip partners share energies; solve each sector once.
    let mut solved: HashMap<(usize, usize), std::result::Result<f64, String>> = HashMap::new();
    let points = ne_list
        .iter()
        .map(|&ne| {
            let (n_up, n_down) = sz_split(ne);
            let (mut a, mut b, mut shift) = (n_up, n_down, 0.0);
            if cfg.particle_hole_mirror && ne > l {
                (a, b, shift) = (l - n_up, l - n_down, model.u() * (ne - l) as f64);
            }
            let key = (a.max(b), a.min(b));
            let outcome = solved
                .entry(key)
                .or_insert_with(|| {
                    ed_ground_energy(model, key.0, key.1, cfg).map_err(|e| e.to_string())
                })
                .clone()
                .map(|e| e + shift);
            ScanPoint {
                ne,
                n_up,
                n_down,
                energy: outcome.as_ref().ok().copied(),
                converged: outcome.is_ok(),
                error: outcome.err(),
            }
        })
        .collect();
    Ok(FillingScan {
        lattice: model.lattice().spec(),
        t: model.t(),
        u: model.u(),
        source: Source::Ed,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_potential, PotentialDescriptor, SiteGraph};

    fn chain(l: usize, u: f64) -> HubbardModel {
        HubbardModel::homogeneous(SiteGraph::chain(l).unwrap(), 1.0, u).unwrap()
    }

    #[test]
    fn dimer_ground_state() {
        let r = ed_ground_state(&chain(2, 4.0), 1, 1).unwrap();
        assert!((r.ground_energy + 0.828_427_124_746_19).abs() < 1e-12);
        assert!((r.site_densities[0] - 1.0).abs() < 1e-12);
        assert!((r.site_densities[1] - 1.0).abs() < 1e-12);
        assert!(!r.is_degenerate());
    }

    #[test]
    fn vacuum_and_full_band() {
        let g = SiteGraph::chain(5).unwrap();
        let p = build_potential(
            &PotentialDescriptor::Disorder {
                seed: 2,
                amplitude: 1.0,
            },
            &g,
        )
        .unwrap();
        let m = HubbardModel::new(g, 1.0, 3.0, p.clone()).unwrap();
        let r = ed_ground_state(&m, 0, 0).unwrap();
        assert_eq!(r.ground_energy, 0.0);
        assert!(r.site_densities.iter().all(|&n| n == 0.0));
        let full = ed_ground_state(&m, 5, 5).unwrap();
        let expect = 3.0 * 5.0 + 2.0 * p.values.iter().sum::<f64>();
        assert!((full.ground_energy - expect).abs() < 1e-12);
    }

    #[test]
    fn lanczos_path_agrees_with_dense() {
        let g = SiteGraph::chain(7).unwrap();
        let p = build_potential(
            &PotentialDescriptor::Disorder {
                seed: 4,
                amplitude: 0.5,
            },
            &g,
        )
        .unwrap();
        let m = HubbardModel::new(g, 1.0, 4.0, p).unwrap();
        let dense = EdConfig {
            dense_max: 10_000,
            ..Default::default()
        };
        let sparse = EdConfig {
            dense_max: 0,
            ..Default::default()
        };
        let a = ed_ground_state_with(&m, 3, 3, &dense).unwrap();
        let b = ed_ground_state_with(&m, 3, 3, &sparse).unwrap();
        assert!((a.ground_energy - b.ground_energy).abs() < 1e-10);
        assert!(b.residual <= 1e-8);
        for (x, y) in a.site_densities.iter().zip(&b.site_densities) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn degenerate_ground_is_flagged_and_averaged() {
        // Two decoupled dimers share one electron.
        let m = chain(4, 2.0).with_bond_hopping(1, 0.0).unwrap();
        for cfg in [
            EdConfig::default(),
            EdConfig {
                dense_max: 0,
                ..Default::default()
            },
        ] {
            let r = ed_ground_state_with(&m, 1, 0, &cfg).unwrap();
            assert_eq!(r.degeneracy, 2);
            for n in &r.site_densities {
                assert!((n - 0.25).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let cfg = EdConfig {
            max_dim: 10,
            ..Default::default()
        };
        let err = ed_ground_state_with(&chain(6, 1.0), 3, 3, &cfg).unwrap_err();
        assert!(matches!(
            err,
            Error::Budget {
                dim: 400,
                budget: 10
            }
        ));
    }

    #[test]
    fn reflection_symmetric_densities() {
        let r = ed_ground_state(&chain(7, 5.0), 3, 2).unwrap();
        for i in 0..7 {
            assert!((r.site_densities[i] - r.site_densities[6 - i]).abs() < 1e-9);
        }
        let total: f64 = r.site_densities.iter().sum();
        assert!((total - 5.0).abs() < 1e-10);
    }

    #[test]
    fn filling_scan_endpoints() {
        let l = 6;
        let u = 3.5;
        let scan = ed_filling_scan(&chain(l, u), &(0..=2 * l).collect::<Vec<_>>()).unwrap();
        assert_eq!(scan.energy(0), Some(0.0));
        assert!((scan.energy(2 * l).unwrap() - u * l as f64).abs() < 1e-12);
        let e1 = -2.0 * (std::f64::consts::PI / (l as f64 + 1.0)).cos();
        assert!((scan.energy(1).unwrap() - e1).abs() < 1e-12);
        assert!(!scan.is_partial());
    }

    #[test]
    fn mirrored_scan_matches_direct_solves() {
        let m = chain(5, 2.5);
        let all: Vec<usize> = (0..=10).collect();
        let mirrored = ed_filling_scan(&m, &all).unwrap();
        let cfg = EdConfig {
            particle_hole_mirror: false,
            ..Default::default()
        };
        let direct = ed_filling_scan_with(&m, &all, &cfg).unwrap();
        for ne in all {
            assert!(
                (mirrored.energy(ne).unwrap() - direct.energy(ne).unwrap()).abs() < 1e-10,
                "Ne = {ne}"
            );
        }
    }

    #[test]
    fn filling_scan_records_failures() {
        let cfg = EdConfig {
            max_dim: 100,
            ..Default::default()
        };
        let scan = ed_filling_scan_with(&chain(6, 1.0), &[0, 2, 6], &cfg).unwrap();
        assert!(scan.is_partial());
        assert_eq!(scan.failures().map(|p| p.ne).collect::<Vec<_>>(), vec![6]);
        assert!(scan.energy(2).is_some());
    }

    #[test]
    fn filling_scan_rejects_potential() {
        let g = SiteGraph::chain(4).unwrap();
        let p = build_potential(
            &PotentialDescriptor::Disorder {
                seed: 1,
                amplitude: 1.0,
            },
            &g,
        )
        .unwrap();
        let m = HubbardModel::new(g, 1.0, 1.0, p).unwrap();
        assert!(ed_filling_scan(&m, &[2]).is_err());
        assert!(ed_filling_scan(&chain(4, 1.0), &[9]).is_err());
    }
}
