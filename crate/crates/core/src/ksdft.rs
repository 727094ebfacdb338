//! Self-consistent Kohn-Sham loop for lattice DFT.
//!
//! Spin-unpolarized: every KS orbital holds two electrons, so only even
//! electron numbers are accepted.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::XcFunctional;
use crate::hamiltonian::{symmetric_eigen, HubbardModel};

/// Orbitals closer than this to the highest occupied one share its
/// occupation.
const DEGENERACY_TOL: f64 = 1e-12;

/// Allowed drift of `Σ n_i` before mixing refuses its inputs.
const SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitRule {
    /// `n_i ∝ max(v) − v_i + offset`: deeper sites start fuller.
    Proportional,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KsConfig {
    /// Weight of the previous density in linear mixing.
    pub alpha: f64,
    pub max_iterations: usize,
    /// Stop once successive energies differ by at most this.
    pub tolerance: f64,
    pub init: InitRule,
    /// Offset of the proportional rule as a fraction of the potential's
    /// range; keeps the highest sites from starting empty.
    pub offset_fraction: f64,
}

impl Default for KsConfig {
    fn default() -> Self {
        KsConfig {
            alpha: 0.95,
            max_iterations: 500,
            tolerance: 1e-10,
            init: InitRule::Proportional,
            offset_fraction: 0.1,
        }
    }
}

impl KsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::Scf(format!(
                "alpha must lie in [0, 1), got {}",
                self.alpha
            )));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::Scf(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Scf("max_iterations must be at least 1".into()));
        }
        if !(self.offset_fraction >= 0.0 && self.offset_fraction.is_finite()) {
            return Err(Error::Scf(format!(
                "offset_fraction must be ≥ 0, got {}",
                self.offset_fraction
            )));
        }
        Ok(())
    }
}

fn check_filling(ne: usize, l: usize) -> Result<()> {
    if ne % 2 == 1 {
        return Err(Error::Scf(format!(
            "Ne = {ne} is odd; KS orbitals are doubly occupied"
        )));
    }
    if ne > 2 * l {
        return Err(Error::Scf(format!("Ne = {ne} exceeds 2L = {}", 2 * l)));
    }
    Ok(())
}

/// Starting density summing to `ne`. A flat potential under the
/// proportional rule gives the uniform density.
pub fn init_density(
    potential: &[f64],
    ne: usize,
    rule: InitRule,
    offset_fraction: f64,
) -> Result<Vec<f64>> {
    let l = potential.len();
    if l == 0 {
        return Err(Error::Scf("empty lattice".into()));
    }
    check_filling(ne, l)?;
    let uniform = vec![ne as f64 / l as f64; l];
    let max = potential.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = potential.iter().copied().fold(f64::INFINITY, f64::min);
    if rule == InitRule::Uniform || max - min == 0.0 || ne == 0 {
        return Ok(uniform);
    }
    let offset = offset_fraction * (max - min);
    let weights: Vec<f64> = potential.iter().map(|v| max - v + offset).collect();
    Ok(cap_and_normalize(&weights, ne as f64))
}

/// Scale `weights` to sum to `total` with no entry above 2; the excess of
/// capped sites goes to the rest in proportion to their weights.
fn cap_and_normalize(weights: &[f64], total: f64) -> Vec<f64> {
    let mut n = vec![0.0; weights.len()];
    let mut free: Vec<usize> = (0..weights.len()).collect();
    let mut remaining = total;
    loop {
        let w: f64 = free.iter().map(|&i| weights[i]).sum();
        if w == 0.0 {
            // Only zero-weight sites are left; spread evenly.
            let share = remaining / free.len() as f64;
            free.iter().for_each(|&i| n[i] = share);
            return n;
        }
        let (over, under): (Vec<usize>, Vec<usize>) = free
            .iter()
            .partition(|&&i| weights[i] * remaining / w > 2.0);
        if over.is_empty() {
            free.iter().for_each(|&i| n[i] = weights[i] * remaining / w);
            return n;
        }
        for &i in &over {
            n[i] = 2.0;
        }
        remaining -= 2.0 * over.len() as f64;
        free = under;
    }
}

/// KS matrix `h + diag(v_ext + (U/2) n + V_XC(n))` and the number of
/// density entries clamped into `[0, 2]` to evaluate it.
pub fn build_ks_matrix(
    model: &HubbardModel,
    density: &[f64],
    functional: &XcFunctional,
) -> Result<(Mat<f64>, usize)> {
    let l = model.num_sites();
    if density.len() != l {
        return Err(Error::Mismatch(format!(
            "density has {} sites, model {l}",
            density.len()
        )));
    }
    let mut h = model.single_particle_matrix();
    let mut clamped = 0;
    for (i, &raw) in density.iter().enumerate() {
        if !raw.is_finite() {
            return Err(Error::Scf(format!("density at site {i} is {raw}")));
        }
        let n = raw.clamp(0.0, 2.0);
        if n != raw {
            clamped += 1;
        }
        h[(i, i)] += 0.5 * model.u() * n + functional.potential(n)?;
    }
    Ok((h, clamped))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KsDensity {
    pub density: Vec<f64>,
    /// The highest occupied level was degenerate with an empty one and its
    /// electrons were spread over the whole shell.
    pub degenerate_frontier: bool,
}

/// `n_i = 2 Σ_{j ≤ Ne/2} |φ_j(i)|²` from ascending eigenpairs (columns).
pub fn density_from_eigenvectors(
    eigenvalues: &[f64],
    vectors: &Mat<f64>,
    ne: usize,
) -> Result<KsDensity> {
    let l = vectors.nrows();
    if eigenvalues.len() != vectors.ncols() {
        return Err(Error::Mismatch(format!(
            "{} eigenvalues for {} vectors",
            eigenvalues.len(),
            vectors.ncols()
        )));
    }
    check_filling(ne, eigenvalues.len())?;
    let occ = ne / 2;
    let mut density = vec![0.0; l];
    if occ == 0 {
        return Ok(KsDensity {
            density,
            degenerate_frontier: false,
        });
    }
    let frontier = eigenvalues[occ - 1];
    let shell_lo = eigenvalues[..occ]
        .iter()
        .position(|e| (e - frontier).abs() < DEGENERACY_TOL)
        .unwrap_or(occ - 1);
    let shell_hi = occ
        + eigenvalues[occ..]
            .iter()
            .take_while(|e| (*e - frontier).abs() < DEGENERACY_TOL)
            .count();
    let degenerate = shell_hi > occ;
    // Fraction of each shell orbital that is filled.
    let weight = if degenerate {
        (occ - shell_lo) as f64 / (shell_hi - shell_lo) as f64
    } else {
        1.0
    };
    for j in 0..shell_hi {
        let w = if j < shell_lo { 2.0 } else { 2.0 * weight };
        for (i, d) in density.iter_mut().enumerate() {
            let c = vectors[(i, j)];
            *d += w * c * c;
        }
    }
    Ok(KsDensity {
        density,
        degenerate_frontier: degenerate,
    })
}

/// `α·previous + (1−α)·candidate`.
pub fn mix_density(previous: &[f64], candidate: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if previous.len() != candidate.len() {
        return Err(Error::Mismatch(format!(
            "densities have {} and {} sites",
            previous.len(),
            candidate.len()
        )));
    }
    let (a, b): (f64, f64) = (previous.iter().sum(), candidate.iter().sum());
    if (a - b).abs() > SUM_TOL {
        return Err(Error::Scf(format!("particle numbers differ: {a} vs {b}")));
    }
    Ok(previous
        .iter()
        .zip(candidate)
        .map(|(p, c)| alpha * p + (1.0 - alpha) * c)
        .collect())
}

/// `2 Σ_{j ≤ Ne/2} ε_j − Σ V_XC(n_i) n_i − (U/4) Σ n_i² + Σ ε_XC(n_i)`,
/// with `n` the density the KS matrix was built from. Using the input
/// density keeps `V_XC` on the same side of `n = 1` in the band term and
/// the correction.
pub fn dft_energy(
    eigenvalues: &[f64],
    density: &[f64],
    functional: &XcFunctional,
    model: &HubbardModel,
) -> Result<f64> {
    let ne = density.iter().sum::<f64>().round() as usize;
    check_filling(ne, eigenvalues.len())?;
    let band = 2.0 * eigenvalues[..ne / 2].iter().sum::<f64>();
    let mut correction = 0.0;
    for &raw in density {
        let n = raw.clamp(0.0, 2.0);
        correction +=
            functional.energy(n)? - functional.potential(n)? * n - 0.25 * model.u() * n * n;
    }
    Ok(band + correction)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DftResult {
    /// SCF density after the reported step: the mixed iterate
    /// `α·n_in + (1 − α)·n_KS`.
    pub density: Vec<f64>,
    /// KS output density of the reported step.
    pub ks_density: Vec<f64>,
    /// Density the reported step's KS matrix was built from.
    pub input_density: Vec<f64>,
    pub energy: f64,
    /// KS eigenvalues of the reported step, ascending.
    pub eigenvalues: Vec<f64>,
    pub converged: bool,
    /// Iterations run.
    pub iterations: usize,
    /// Step the state above comes from: the last one on convergence,
    /// otherwise the one with the smallest `|ΔE|`.
    pub reported_iteration: usize,
    pub energy_trace: Vec<f64>,
    /// `max_i |n_KS − n_in|` per iteration.
    pub density_change_trace: Vec<f64>,
    /// Density entries clamped into `[0, 2]`, summed over the run.
    pub clamp_count: usize,
    /// Iterations whose frontier level was degenerate.
    pub degenerate_iterations: usize,
    /// Largest `|Σ n_i − Ne|` seen on any iteration's densities.
    pub max_sum_error: f64,
    /// Largest excursion of any density entry outside `[0, 2]`.
    pub max_bound_violation: f64,
}

fn audit(density: &[f64], ne: usize, sum_err: &mut f64, bound: &mut f64) {
    let s: f64 = density.iter().sum();
    *sum_err = sum_err.max((s - ne as f64).abs());
    for &n in density {
        *bound = bound.max(-n).max(n - 2.0);
    }
}

/// Algorithm: build KS matrix, diagonalize, occupy, evaluate the energy,
/// test `|ΔE| ≤ δ`, mix, repeat.
///
/// Without convergence the state of the step with the smallest `|ΔE|` is
/// returned, flagged unconverged, with the full traces.
pub fn scf_solve(
    model: &HubbardModel,
    functional: &XcFunctional,
    ne: usize,
    config: &KsConfig,
) -> Result<DftResult> {
    config.validate()?;
    let l = model.num_sites();
    let mut n_in = init_density(
        &model.potential().values,
        ne,
        config.init,
        config.offset_fraction,
    )?;
    let mut result = DftResult {
        density: n_in.clone(),
        ks_density: n_in.clone(),
        input_density: n_in.clone(),
        energy: f64::NAN,
        eigenvalues: Vec::new(),
        converged: false,
        iterations: 0,
        reported_iteration: 0,
        energy_trace: Vec::with_capacity(config.max_iterations),
        density_change_trace: Vec::with_capacity(config.max_iterations),
        clamp_count: 0,
        degenerate_iterations: 0,
        max_sum_error: 0.0,
        max_bound_violation: 0.0,
    };
    audit(
        &n_in,
        ne,
        &mut result.max_sum_error,
        &mut result.max_bound_violation,
    );
    let mut best_step = f64::INFINITY;
    for it in 1..=config.max_iterations {
        let (h, clamped) = build_ks_matrix(model, &n_in, functional)?;
        let (eps, vecs) =
            symmetric_eigen(&h).map_err(|e| Error::Scf(format!("iteration {it}, L = {l}: {e}")))?;
        let out = density_from_eigenvectors(&eps, &vecs, ne)?;
        let energy = dft_energy(&eps, &n_in, functional, model)?;
        audit(
            &out.density,
            ne,
            &mut result.max_sum_error,
            &mut result.max_bound_violation,
        );

        let change = out
            .density
            .iter()
            .zip(&n_in)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let step = result
            .energy_trace
            .last()
            .map_or(f64::INFINITY, |p| (energy - p).abs());
        result.clamp_count += clamped;
        result.degenerate_iterations += usize::from(out.degenerate_frontier);
        result.energy_trace.push(energy);
        result.density_change_trace.push(change);
        result.iterations = it;

        let next = mix_density(&n_in, &out.density, config.alpha)?;
        audit(
            &next,
            ne,
            &mut result.max_sum_error,
            &mut result.max_bound_violation,
        );
        let converged = step <= config.tolerance;
        // The first step has no |ΔE|; keep it only until a real one arrives.
        if converged || step < best_step || it == 1 {
            best_step = step;
            result.energy = energy;
            result.eigenvalues = eps;
            result.input_density = std::mem::replace(&mut n_in, next);
            result.ks_density = out.density;
            result.density = n_in.clone();
            result.reported_iteration = it;
        } else {
            n_in = next;
        }
        if converged {
            result.converged = true;
            break;
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::exact::ed_filling_scan;
    use crate::functional::{functional_from_scan, hf_functional, pseudo_functional, PseudoKind};
    use crate::lattice::{build_potential, PotentialDescriptor, SiteGraph};

    fn chain(l: usize, u: f64) -> HubbardModel {
        HubbardModel::homogeneous(SiteGraph::chain(l).unwrap(), 1.0, u).unwrap()
    }

    fn trapped(l: usize, u: f64) -> HubbardModel {
        let g = SiteGraph::chain(l).unwrap();
        let v = build_potential(&PotentialDescriptor::centered_trap(l), &g).unwrap();
        HubbardModel::new(g, 1.0, u, v).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(KsConfig::default().validate().is_ok());
        for bad in [
            KsConfig {
                alpha: 1.0,
                ..KsConfig::default()
            },
            KsConfig {
                tolerance: 0.0,
                ..KsConfig::default()
            },
            KsConfig {
                max_iterations: 0,
                ..KsConfig::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn initial_densities() {
        let flat = vec![0.0; 12];
        assert_eq!(
            init_density(&flat, 6, InitRule::Uniform, 0.1).unwrap(),
            vec![0.5; 12]
        );
        assert_eq!(
            init_density(&flat, 6, InitRule::Proportional, 0.1).unwrap(),
            vec![0.5; 12]
        );
        assert!(init_density(&flat, 5, InitRule::Uniform, 0.1).is_err());
        assert!(init_density(&flat, 26, InitRule::Uniform, 0.1).is_err());

        let m = trapped(12, 4.0);
        let v = &m.potential().values;
        let n = init_density(v, 6, InitRule::Proportional, 0.1).unwrap();
        assert!((n.iter().sum::<f64>() - 6.0).abs() < 1e-12);
        let centre = v
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(n[centre], n.iter().copied().fold(0.0, f64::max));
        assert!(n[0] < n[centre]);
    }

    #[test]
    fn initial_density_never_exceeds_two() {
        let mut v = vec![10.0; 8];
        v[3] = 0.0;
        let n = init_density(&v, 14, InitRule::Proportional, 0.0).unwrap();
        assert!(n.iter().all(|x| (0.0..=2.0).contains(x)));
        assert!((n.iter().sum::<f64>() - 14.0).abs() < 1e-12);
    }

    #[test]
    fn ks_matrix_structure() {
        let m = trapped(6, 4.0);
        let n = vec![0.5, 0.8, 1.2, 1.0, 0.3, 0.2];
        let (h, clamped) = build_ks_matrix(&m, &n, &hf_functional(4.0, 1.0)).unwrap();
        assert_eq!(clamped, 0);
        for i in 0..6 {
            assert_eq!(h[(i, i)], m.potential().values[i] + 2.0 * n[i]);
            for j in 0..6 {
                let expect = if i.abs_diff(j) == 1 {
                    -1.0
                } else if i == j {
                    h[(i, i)]
                } else {
                    0.0
                };
                assert_eq!(h[(i, j)], expect);
                assert_eq!(h[(i, j)].to_bits(), h[(j, i)].to_bits());
            }
        }
        let p = pseudo_functional(PseudoKind::OneD, 4.0, 1.0);
        let (h, clamped) = build_ks_matrix(&m, &[2.3, 0.0, 1.0, -0.1, 0.0, 0.0], &p).unwrap();
        assert_eq!(clamped, 2);
        assert_eq!(h[(0, 0)], m.potential().values[0] + 4.0 + 4.0);
    }

    #[test]
    fn free_chain_density() {
        let l = 4;
        let m = chain(l, 0.0);
        let (eps, vecs) = symmetric_eigen(&m.single_particle_matrix()).unwrap();
        let d = density_from_eigenvectors(&eps, &vecs, 2).unwrap();
        assert!(!d.degenerate_frontier);
        for (i, n) in d.density.iter().enumerate() {
            let s = ((i + 1) as f64 * PI / (l as f64 + 1.0)).sin();
            assert!((n - 2.0 * s * s * 2.0 / 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dimer_half_filling_is_uniform() {
        let m = chain(2, 0.0);
        let (eps, vecs) = symmetric_eigen(&m.single_particle_matrix()).unwrap();
        let d = density_from_eigenvectors(&eps, &vecs, 2).unwrap();
        assert!((d.density[0] - 1.0).abs() < 1e-14 && (d.density[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_frontier_is_averaged() {
        // Two decoupled dimers: bonding levels at −1 twice; Ne = 2 fills half the shell.
        let mut h = Mat::<f64>::zeros(4, 4);
        h[(0, 1)] = -1.0;
        h[(1, 0)] = -1.0;
        h[(2, 3)] = -1.0;
        h[(3, 2)] = -1.0;
        let (eps, vecs) = symmetric_eigen(&h).unwrap();
        let d = density_from_eigenvectors(&eps, &vecs, 2).unwrap();
        assert!(d.degenerate_frontier);
        for n in &d.density {
            assert!((n - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn mixing() {
        let a = [1.0, 0.5, 0.5];
        let b = [0.0, 1.0, 1.0];
        assert_eq!(mix_density(&a, &b, 1.0).unwrap(), a.to_vec());
        assert_eq!(mix_density(&a, &b, 0.0).unwrap(), b.to_vec());
        let m = mix_density(&a, &b, 0.3).unwrap();
        assert!((m.iter().sum::<f64>() - 2.0).abs() < 1e-15);
        assert!(mix_density(&a, &[1.0, 1.0, 1.0], 0.5).is_err());
        assert!(mix_density(&a, &[1.0], 0.5).is_err());
    }

    #[test]
    fn free_energy_is_band_energy() {
        let m = trapped(8, 0.0);
        let (eps, vecs) = symmetric_eigen(&m.single_particle_matrix()).unwrap();
        let n = density_from_eigenvectors(&eps, &vecs, 4).unwrap().density;
        let e = dft_energy(&eps, &n, &hf_functional(0.0, 1.0), &m).unwrap();
        assert_eq!(e, 2.0 * (eps[0] + eps[1]));
    }

    #[test]
    fn exact_functional_reproduces_dimer() {
        let m = chain(2, 4.0);
        let scan = ed_filling_scan(&m, &[0, 1, 2, 3, 4]).unwrap();
        let f = functional_from_scan(&scan).unwrap();
        let r = scf_solve(&m, &f, 2, &KsConfig::default()).unwrap();
        assert!(r.converged);
        assert!(
            (r.energy + 0.828_427_124_746_19).abs() < 1e-6,
            "{}",
            r.energy
        );
    }

    #[test]
    fn hf_matches_hand_written_loop() {
        let m = trapped(10, 4.0);
        let cfg = KsConfig {
            max_iterations: 60,
            ..KsConfig::default()
        };
        let r = scf_solve(&m, &hf_functional(4.0, 1.0), 4, &cfg).unwrap();

        let mut n = init_density(&m.potential().values, 4, cfg.init, cfg.offset_fraction).unwrap();
        let mut trace = Vec::new();
        for _ in 0..r.iterations {
            let mut h = m.single_particle_matrix();
            for i in 0..10 {
                h[(i, i)] += 2.0 * n[i];
            }
            let (eps, vecs) = symmetric_eigen(&h).unwrap();
            let out = density_from_eigenvectors(&eps, &vecs, 4).unwrap().density;
            let hartree = n.iter().fold(0.0, |acc, x| acc + -(0.25 * 4.0 * x * x));
            trace.push(2.0 * (eps[0] + eps[1]) + hartree);
            n = n
                .iter()
                .zip(&out)
                .map(|(p, c)| 0.95 * p + (1.0 - 0.95) * c)
                .collect();
        }
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&r.energy_trace), bits(&trace));
    }

    #[test]
    fn conservation_and_bounds_hold() {
        let m = trapped(12, 8.0);
        let f = pseudo_functional(PseudoKind::Dft, 8.0, 1.0);
        let r = scf_solve(&m, &f, 6, &KsConfig::default()).unwrap();
        assert!(r.max_sum_error < 1e-10, "{}", r.max_sum_error);
        assert!(r.max_bound_violation < 1e-9);
        assert_eq!(r.energy_trace.len(), r.iterations);
    }

    #[test]
    fn converged_state_is_a_fixed_point() {
        let m = trapped(12, 4.0);
        let scan = ed_filling_scan(&chain(8, 4.0), &(0..=16).collect::<Vec<_>>()).unwrap();
        let f = functional_from_scan(&scan).unwrap();
        let cfg = KsConfig::default();
        let r = scf_solve(&m, &f, 6, &cfg).unwrap();
        assert!(r.converged);
        assert_eq!(
            r.density,
            mix_density(&r.input_density, &r.ks_density, cfg.alpha).unwrap()
        );
        let (h, _) = build_ks_matrix(&m, &r.density, &f).unwrap();
        let (eps, _) = symmetric_eigen(&h).unwrap();
        let again = dft_energy(&eps, &r.density, &f, &m).unwrap();
        assert!(
            (again - r.energy).abs() <= cfg.tolerance,
            "{}",
            again - r.energy
        );
    }

    #[test]
    fn unconverged_run_is_flagged() {
        let m = trapped(8, 4.0);
        let cfg = KsConfig {
            max_iterations: 3,
            ..KsConfig::default()
        };
        let r = scf_solve(&m, &hf_functional(4.0, 1.0), 4, &cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
        // Reported state is the step with the smallest energy change.
        let steps: Vec<f64> = r
            .energy_trace
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .collect();
        let best = if steps[1] < steps[0] { 3 } else { 2 };
        assert_eq!(r.reported_iteration, best);
        assert_eq!(r.energy, r.energy_trace[best - 1]);
        assert!(scf_solve(&m, &hf_functional(4.0, 1.0), 3, &cfg).is_err());
    }
}
