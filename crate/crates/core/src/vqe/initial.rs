use faer::{c64, Mat};

use crate::error::Result;
use crate::hamiltonian::{single_particle_spectrum, HubbardModel, SectorBasis, SpinConfigs};

/// Orbital levels closer than this count as degenerate at the Fermi level.
const FERMI_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub amplitudes: Vec<c64>,
    /// The last filled and first empty orbital of some spin species had the
    /// same energy; the lower-indexed orbital was filled.
    pub fermi_degenerate: bool,
}

/// Determinant amplitudes `det Φ[occupied sites, 0..N]` of one spin species.
fn slater_amplitudes(configs: &SpinConfigs, orbitals: &Mat<f64>) -> Vec<f64> {
    let n = configs.count();
    configs
        .states()
        .iter()
        .map(|&mask| {
            if n == 0 {
                return 1.0;
            }
            let sites: Vec<usize> = (0..64).filter(|i| mask >> i & 1 == 1).collect();
            Mat::<f64>::from_fn(n, n, |r, m| orbitals[(sites[r], m)]).determinant()
        })
        .collect()
}

/// Ground state of the one-body part of `model` (its interaction is
/// ignored): a product of up and down Slater determinants filling the
/// lowest single-particle orbitals.
pub fn prepare_initial_state(
    model: &HubbardModel,
    n_up: usize,
    n_down: usize,
) -> Result<InitialState> {
    let basis = SectorBasis::new(model.num_sites(), n_up, n_down)?;
    let (eps, orbitals) = single_particle_spectrum(model)?;
    let l = eps.len();
    let at_fermi = |n: usize| n > 0 && n < l && eps[n] - eps[n - 1] < FERMI_TOL;

    let up = slater_amplitudes(basis.up(), &orbitals);
    let down = slater_amplitudes(basis.down(), &orbitals);
    let mut amplitudes: Vec<c64> = up
        .iter()
        .flat_map(|&a| down.iter().map(move |&b| c64::new(a * b, 0.0)))
        .collect();
    let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    amplitudes.iter_mut().for_each(|z| *z /= norm);

    Ok(InitialState {
        amplitudes,
        fermi_degenerate: at_fermi(n_up) || at_fermi(n_down),
    })
}
