//! Hamiltonian variational ansatz emulated in a fixed `(N↑, N↓)` sector.
//!
//! One layer is `∏_g exp(iθ_g K_g) · exp(iφ D)`: first the on-site
//! interaction step generated by the double occupancy `D = Σ_i n_i↑ n_i↓`,
//! then one hopping step per commuting group, where
//! `K_g = Σ_{⟨ij⟩∈g} Σ_σ (c†_iσ c_jσ + h.c.)`. Both generators conserve
//! `N↑` and `N↓`, so the state never leaves the sector.

use faer::c64;

use crate::error::{Error, Result};
use crate::hamiltonian::SectorMatrix;
use crate::lattice::SiteGraph;

/// Layer count and the partition of bonds into commuting hopping groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnsatzSpec {
    depth: usize,
    groups: Vec<Vec<usize>>,
}

/// Greedy edge coloring in lattice edge order: each bond joins the first
/// group that has no bond touching either of its sites.
pub fn commuting_groups(lattice: &SiteGraph) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut touched: Vec<Vec<bool>> = Vec::new();
    for (e, &(i, j)) in lattice.edges().iter().enumerate() {
        let slot = touched.iter().position(|t| !t[i] && !t[j]);
        let g = slot.unwrap_or_else(|| {
            groups.push(Vec::new());
            touched.push(vec![false; lattice.num_sites()]);
            groups.len() - 1
        });
        groups[g].push(e);
        touched[g][i] = true;
        touched[g][j] = true;
    }
    groups
}

impl AnsatzSpec {
    pub fn new(lattice: &SiteGraph, depth: usize) -> Result<Self> {
        Self::from_groups(lattice, depth, commuting_groups(lattice))
    }

    /// Use a caller-supplied grouping; every bond must appear exactly once
    /// and no group may contain two bonds sharing a site.
    pub fn from_groups(lattice: &SiteGraph, depth: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Model("ansatz depth must be at least 1".into()));
        }
        let edges = lattice.edges();
        let mut seen = vec![false; edges.len()];
        for g in &groups {
            let mut sites = vec![false; lattice.num_sites()];
            for &e in g {
                let &(i, j) = edges
                    .get(e)
                    .ok_or_else(|| Error::Model(format!("group refers to missing bond {e}")))?;
                if seen[e] {
                    return Err(Error::Model(format!(
                        "bond {e} appears in more than one group"
                    )));
                }
                if sites[i] || sites[j] {
                    return Err(Error::Model(format!(
                        "bond {e} shares a site within its group"
                    )));
                }
                seen[e] = true;
                sites[i] = true;
                sites[j] = true;
            }
        }
        if let Some(e) = seen.iter().position(|s| !s) {
            return Err(Error::Model(format!("bond {e} is in no group")));
        }
        let groups = groups.into_iter().filter(|g| !g.is_empty()).collect();
        Ok(AnsatzSpec { depth, groups })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn params_per_layer(&self) -> usize {
        1 + self.groups.len()
    }

    pub fn num_parameters(&self) -> usize {
        self.depth * self.params_per_layer()
    }

    /// Same grouping with another depth.
    pub fn with_depth(&self, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Model("ansatz depth must be at least 1".into()));
        }
        Ok(AnsatzSpec {
            depth,
            groups: self.groups.clone(),
        })
    }

    /// Extend `params` of a shallower ansatz with zero layers. The padded
    /// circuit prepares the same state.
    pub fn pad_parameters(&self, params: &[f64]) -> Result<Vec<f64>> {
        let per = self.params_per_layer();
        if !params.len().is_multiple_of(per) || params.len() > self.num_parameters() {
            return Err(Error::Parameters {
                expected: self.num_parameters(),
                got: params.len(),
            });
        }
        let mut out = params.to_vec();
        out.resize(self.num_parameters(), 0.0);
        Ok(out)
    }

    fn check(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_parameters() {
            return Err(Error::Parameters {
                expected: self.num_parameters(),
                got: params.len(),
            });
        }
        Ok(())
    }

    /// Gate sequence in application order.
    fn gates(&self) -> impl Iterator<Item = Gate<'_>> + '_ {
        (0..self.depth).flat_map(move |_| {
            std::iter::once(Gate::Interaction).chain(self.groups.iter().map(|g| Gate::Hopping(g)))
        })
    }
}

#[derive(Debug, Clone, Copy)]
enum Gate<'a> {
    Interaction,
    Hopping(&'a [usize]),
}

/// `(x, y) ← (cos θ x + i s sin θ y, cos θ y + i s sin θ x)`, the action of
/// `exp(iθ s σ_x)` on one connected pair.
#[inline]
fn rotate(x: &mut c64, y: &mut c64, c: f64, s: f64) {
    let (a, b) = (*x, *y);
    *x = c64::new(c * a.re - s * b.im, c * a.im + s * b.re);
    *y = c64::new(c * b.re - s * a.im, c * b.im + s * a.re);
}

fn apply_gate(psi: &mut [c64], gate: Gate<'_>, angle: f64, h: &SectorMatrix) {
    match gate {
        Gate::Interaction => {
            // exp(iφ d) for d = 0..=L, tabulated once.
            let phases: Vec<c64> = (0..=64).map(|d| c64::cis(angle * d as f64)).collect();
            for (x, &d) in psi.iter_mut().zip(h.double_occupancy()) {
                *x *= phases[d as usize];
            }
        }
        Gate::Hopping(edges) => {
            let (c, s) = (angle.cos(), angle.sin());
            let nd = h.basis().down().len();
            for &e in edges {
                for p in h.up_hops(e) {
                    let (ra, rb) = (p.from as usize * nd, p.to as usize * nd);
                    let (lo, hi) = psi.split_at_mut(ra.max(rb));
                    let (row_a, row_b) = if ra < rb {
                        (&mut lo[ra..ra + nd], &mut hi[..nd])
                    } else {
                        (&mut hi[..nd], &mut lo[rb..rb + nd])
                    };
                    let sp = s * p.sign;
                    for (x, y) in row_a.iter_mut().zip(row_b.iter_mut()) {
                        rotate(x, y, c, sp);
                    }
                }
            }
            for row in psi.chunks_exact_mut(nd) {
                for &e in edges {
                    for p in h.down_hops(e) {
                        let (a, b) = (p.from as usize, p.to as usize);
                        let (mut x, mut y) = (row[a], row[b]);
                        rotate(&mut x, &mut y, c, s * p.sign);
                        row[a] = x;
                        row[b] = y;
                    }
                }
            }
        }
    }
}

/// `⟨λ| G |φ⟩` for the generator `G` of `gate`.
fn generator_overlap(lambda: &[c64], phi: &[c64], gate: Gate<'_>, h: &SectorMatrix) -> c64 {
    match gate {
        Gate::Interaction => lambda
            .iter()
            .zip(phi)
            .zip(h.double_occupancy())
            .map(|((l, p), &d)| l.conj() * p * d as f64)
            .sum(),
        Gate::Hopping(edges) => {
            let nd = h.basis().down().len();
            let mut acc = c64::new(0.0, 0.0);
            for &e in edges {
                for p in h.up_hops(e) {
                    let (ra, rb) = (p.from as usize * nd, p.to as usize * nd);
                    let mut part = c64::new(0.0, 0.0);
                    for k in 0..nd {
                        part += lambda[ra + k].conj() * phi[rb + k]
                            + lambda[rb + k].conj() * phi[ra + k];
                    }
                    acc += part * p.sign;
                }
            }
            for (lrow, prow) in lambda.chunks_exact(nd).zip(phi.chunks_exact(nd)) {
                for &e in edges {
                    for p in h.down_hops(e) {
                        let (a, b) = (p.from as usize, p.to as usize);
                        acc += (lrow[a].conj() * prow[b] + lrow[b].conj() * prow[a]) * p.sign;
                    }
                }
            }
            acc
        }
    }
}

/// `U(params) |initial⟩`.
pub fn apply_ansatz(
    initial: &[c64],
    ansatz: &AnsatzSpec,
    params: &[f64],
    h: &SectorMatrix,
) -> Result<Vec<c64>> {
    ansatz.check(params)?;
    if initial.len() != h.dim() {
        return Err(Error::Mismatch(format!(
            "state has {} amplitudes, sector has {}",
            initial.len(),
            h.dim()
        )));
    }
    let mut psi = initial.to_vec();
    for (gate, &angle) in ansatz.gates().zip(params) {
        apply_gate(&mut psi, gate, angle, h);
    }
    Ok(psi)
}

/// `Re ⟨ψ|H|ψ⟩` for any state.
pub fn expectation(psi: &[c64], h: &SectorMatrix) -> f64 {
    let mut hpsi = vec![c64::new(0.0, 0.0); psi.len()];
    h.apply(psi, &mut hpsi);
    psi.iter().zip(&hpsi).map(|(a, b)| (a.conj() * b).re).sum()
}

/// Energy of the ansatz state and its gradient in the parameters,
/// by one forward pass and one adjoint backward pass.
pub fn energy_and_gradient(
    initial: &[c64],
    ansatz: &AnsatzSpec,
    params: &[f64],
    h: &SectorMatrix,
) -> Result<(f64, Vec<f64>)> {
    let mut phi = apply_ansatz(initial, ansatz, params, h)?;
    let mut lambda = vec![c64::new(0.0, 0.0); phi.len()];
    h.apply(&phi, &mut lambda);
    let energy: f64 = phi
        .iter()
        .zip(&lambda)
        .map(|(a, b)| (a.conj() * b).re)
        .sum();

    // With φ_k the state after gate k and λ_k = G_{k+1}† ⋯ G_P† H ψ,
    // ∂E/∂θ_k = 2 Re ⟨λ_k| i K_k |φ_k⟩ = −2 Im ⟨λ_k|K_k|φ_k⟩.
    let gates: Vec<Gate<'_>> = ansatz.gates().collect();
    let mut grad = vec![0.0; params.len()];
    for k in (0..gates.len()).rev() {
        grad[k] = -2.0 * generator_overlap(&lambda, &phi, gates[k], h).im;
        if k > 0 {
            apply_gate(&mut phi, gates[k], -params[k], h);
            apply_gate(&mut lambda, gates[k], -params[k], h);
        }
    }
    Ok((energy, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{assemble_sector_matrix, HubbardModel, SectorBasis};
    use crate::vqe::prepare_initial_state;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(g: SiteGraph, u: f64, nu: usize, nd: usize) -> (SectorMatrix, Vec<c64>) {
        let m = HubbardModel::homogeneous(g, 1.0, u).unwrap();
        let h =
            assemble_sector_matrix(&m, &SectorBasis::new(m.num_sites(), nu, nd).unwrap()).unwrap();
        let psi0 = prepare_initial_state(&m, nu, nd).unwrap().amplitudes;
        (h, psi0)
    }

    fn norm2(v: &[c64]) -> f64 {
        v.iter().map(|z| z.norm_sqr()).sum()
    }

    #[test]
    fn chain_coloring_is_even_odd() {
        let g = SiteGraph::chain(6).unwrap();
        assert_eq!(commuting_groups(&g), vec![vec![0, 2, 4], vec![1, 3]]);
        let a = AnsatzSpec::new(&g, 2).unwrap();
        assert_eq!(a.params_per_layer(), 3);
        assert_eq!(a.num_parameters(), 6);
    }

    #[test]
    fn grid_coloring_is_valid() {
        let g = SiteGraph::grid(3, 4).unwrap();
        let groups = commuting_groups(&g);
        assert!(AnsatzSpec::from_groups(&g, 1, groups.clone()).is_ok());
        assert_eq!(groups.iter().map(Vec::len).sum::<usize>(), g.edges().len());
    }

    #[test]
    fn bad_groupings_rejected() {
        let g = SiteGraph::chain(4).unwrap();
        assert!(AnsatzSpec::from_groups(&g, 1, vec![vec![0, 1], vec![2]]).is_err());
        assert!(AnsatzSpec::from_groups(&g, 1, vec![vec![0, 2]]).is_err());
        assert!(AnsatzSpec::from_groups(&g, 1, vec![vec![0, 2], vec![1, 1]]).is_err());
        assert!(AnsatzSpec::from_groups(&g, 0, vec![vec![0, 2], vec![1]]).is_err());
    }

    #[test]
    fn zero_parameters_are_identity() {
        let g = SiteGraph::chain(4).unwrap();
        let (h, psi0) = setup(g.clone(), 3.0, 2, 1);
        let a = AnsatzSpec::new(&g, 2).unwrap();
        let psi = apply_ansatz(&psi0, &a, &vec![0.0; a.num_parameters()], &h).unwrap();
        assert_eq!(psi, psi0);
    }

    #[test]
    fn parameter_length_checked() {
        let g = SiteGraph::chain(3).unwrap();
        let (h, psi0) = setup(g.clone(), 1.0, 1, 1);
        let a = AnsatzSpec::new(&g, 1).unwrap();
        assert!(matches!(
            apply_ansatz(&psi0, &a, &[0.1], &h),
            Err(Error::Parameters {
                expected: 3,
                got: 1
            })
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (g, nu, nd) in [
            (SiteGraph::chain(2).unwrap(), 1, 1),
            (SiteGraph::chain(4).unwrap(), 2, 2),
            (SiteGraph::grid(2, 2).unwrap(), 2, 1),
        ] {
            let (h, psi0) = setup(g.clone(), 4.0, nu, nd);
            let a = AnsatzSpec::new(&g, 2).unwrap();
            for _ in 0..5 {
                let p: Vec<f64> = (0..a.num_parameters())
                    .map(|_| rng.gen_range(-1.5..1.5))
                    .collect();
                let (_, grad) = energy_and_gradient(&psi0, &a, &p, &h).unwrap();
                for k in 0..p.len() {
                    let mut plus = p.clone();
                    let mut minus = p.clone();
                    plus[k] += 1e-5;
                    minus[k] -= 1e-5;
                    let ep = expectation(&apply_ansatz(&psi0, &a, &plus, &h).unwrap(), &h);
                    let em = expectation(&apply_ansatz(&psi0, &a, &minus, &h).unwrap(), &h);
                    assert!((grad[k] - (ep - em) / 2e-5).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn unitary_and_number_conserving() {
        let g = SiteGraph::grid(2, 3).unwrap();
        let (h, psi0) = setup(g.clone(), 2.0, 3, 2);
        let a = AnsatzSpec::new(&g, 3).unwrap();
        let p: Vec<f64> = (0..a.num_parameters())
            .map(|k| 0.3 * k as f64 - 1.0)
            .collect();
        let psi = apply_ansatz(&psi0, &a, &p, &h).unwrap();
        assert!((norm2(&psi) - 1.0).abs() < 1e-12);
        let n = h.basis().site_densities(|k| psi[k].norm_sqr());
        assert!((n.iter().sum::<f64>() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn padding_keeps_the_state() {
        let g = SiteGraph::chain(4).unwrap();
        let (h, psi0) = setup(g.clone(), 3.0, 2, 2);
        let a1 = AnsatzSpec::new(&g, 1).unwrap();
        let a2 = a1.with_depth(2).unwrap();
        let p1 = vec![0.2, -0.4, 0.7];
        let p2 = a2.pad_parameters(&p1).unwrap();
        let s1 = apply_ansatz(&psi0, &a1, &p1, &h).unwrap();
        let s2 = apply_ansatz(&psi0, &a2, &p2, &h).unwrap();
        assert_eq!(s1, s2);
        assert!(a1.pad_parameters(&[0.0; 4]).is_err());
    }
}
