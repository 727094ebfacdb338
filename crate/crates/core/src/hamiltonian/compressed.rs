use faer::Mat;

use super::HubbardModel;
use crate::error::{Error, Result};

/// Two-qubit form of the half-filled dimer,
/// `−t (X⊗I + I⊗X) + (U/2)(I + Z⊗Z)`.
///
/// Basis order is `|q0 q1⟩` with index `2·q0 + q1`.
pub fn dimer_compressed_hamiltonian(model: &HubbardModel) -> Result<Mat<f64>> {
    if model.num_sites() != 2 {
        return Err(Error::Model(format!(
            "compressed form exists only for the dimer, got {} sites",
            model.num_sites()
        )));
    }
    let (t, u) = (model.t(), model.u());
    Ok(Mat::from_fn(4, 4, |r, c| {
        if r == c {
            let parity = ((r >> 1) ^ r) & 1;
            let zz = if parity == 0 { 1.0 } else { -1.0 };
            0.5 * u * (1.0 + zz)
        } else if (r ^ c).count_ones() == 1 {
            -t
        } else {
            0.0
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::symmetric_eigen;
    use crate::lattice::SiteGraph;

    fn ground(u: f64) -> f64 {
        let m = HubbardModel::homogeneous(SiteGraph::chain(2).unwrap(), 1.0, u).unwrap();
        symmetric_eigen(&dimer_compressed_hamiltonian(&m).unwrap())
            .unwrap()
            .0[0]
    }

    #[test]
    fn free_spectrum() {
        let m = HubbardModel::homogeneous(SiteGraph::chain(2).unwrap(), 1.0, 0.0).unwrap();
        let (e, _) = symmetric_eigen(&dimer_compressed_hamiltonian(&m).unwrap()).unwrap();
        let expected = [-2.0, 0.0, 0.0, 2.0];
        for (a, b) in e.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_sector_ground_energy() {
        for u in [0.5, 2.0, 4.0, 8.0] {
            let exact = u / 2.0 - ((u / 2.0) * (u / 2.0) + 4.0f64).sqrt();
            assert!((ground(u) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn mott_limit_approaches_zero_from_below() {
        let e = ground(1e6);
        assert!(e < 0.0 && e > -1e-5);
    }

    #[test]
    fn only_dimer() {
        let m = HubbardModel::homogeneous(SiteGraph::chain(3).unwrap(), 1.0, 1.0).unwrap();
        assert!(dimer_compressed_hamiltonian(&m).is_err());
    }
}
