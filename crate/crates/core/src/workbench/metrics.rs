use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Errors of an approximate density and energy against a reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// `sqrt(Σ_i (n_i − n_i^ref)²)`.
    pub delta_n: f64,
    /// `|E − E^ref|`.
    pub delta_e: f64,
    /// `|E − E^ref| / L`.
    pub delta_e_per_site: f64,
    /// `|n_i − n_i^ref| / n_i^ref`; `None` where the reference density is 0.
    pub per_site: Vec<Option<f64>>,
    pub reference: String,
}

pub fn compute_metrics(
    density: &[f64],
    energy: f64,
    reference_density: &[f64],
    reference_energy: f64,
    reference: &str,
) -> Result<MetricsReport> {
    if density.len() != reference_density.len() {
        return Err(Error::Mismatch(format!(
            "density has {} sites, reference {}",
            density.len(),
            reference_density.len()
        )));
    }
    let delta_n = density
        .iter()
        .zip(reference_density)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let delta_e = (energy - reference_energy).abs();
    let per_site = density
        .iter()
        .zip(reference_density)
        .map(|(a, b)| (*b != 0.0).then(|| (a - b).abs() / b))
        .collect();
    Ok(MetricsReport {
        delta_n,
        delta_e,
        delta_e_per_site: delta_e / density.len() as f64,
        per_site,
        reference: reference.to_string(),
    })
}

/// Fraction of the sites, centred on the middle of the chain, searched for
/// a Mott plateau.
pub const PLATEAU_WINDOW: f64 = 0.5;

/// Largest allowed `|n_i − 1|` on a plateau site.
pub const PLATEAU_TOL: f64 = 0.01;

/// Longest contiguous run of sites with `|n_i − 1| < tol` inside the central
/// `window` fraction of the chain.
pub fn mott_plateau(density: &[f64], window: f64, tol: f64) -> usize {
    let l = density.len();
    let width = ((l as f64 * window).round() as usize).min(l);
    let start = (l - width) / 2;
    let mut best = 0;
    let mut run = 0;
    for n in &density[start..start + width] {
        run = if (n - 1.0).abs() < tol { run + 1 } else { 0 };
        best = best.max(run);
    }
    best
}
