//! Local exchange-correlation functionals of the site density `n ∈ [0, 2]`.
//!
//! A functional is a per-site XC energy `ε_XC(n)` and potential `V_XC(n)`,
//! each split at `n = 1` into independently interpolated pieces so that the
//! potential can jump there. Tabulated functionals come from filling scans
//! ([`qelda_curve`] → [`xc_curve`] → [`differentiate_xc`] →
//! [`build_functional`]) or from the Bethe-ansatz expression
//! ([`balda_functional`]); the Hartree-Fock and pseudo functionals are
//! closed forms.

mod balda;
mod curve;
mod file;
mod spline;

pub use balda::{
    balda_beta, balda_energy, balda_functional, bessel_j0_j1_integral, BALDA_RESOLUTION,
};
pub use curve::{
    differentiate_xc, hf_reference_curve, noninteracting_energies, qelda_curve, xc_curve,
    CurveMeta, FillingCurve,
};
pub use file::{
    load_functional, save_functional, FunctionalFile, FunctionalRecord, SCHEMA_VERSION,
};
pub use spline::CubicSpline;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::build_lattice;
use crate::scan::{FillingScan, Source};

/// Slack allowed when checking `n ∈ [0, 2]`.
const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PseudoKind {
    /// `ε = 2^{−4/3} U n^{4/3}`.
    Dft,
    /// `ε = U n² / 4`.
    OneD,
}

#[derive(Debug, Clone, PartialEq)]
struct Pieces {
    energy: FillingCurve,
    potential: FillingCurve,
    e_left: CubicSpline,
    e_right: CubicSpline,
    v_left: CubicSpline,
    v_right: CubicSpline,
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Zero,
    Tabulated(Box<Pieces>),
    Pseudo(PseudoKind),
}

#[derive(Debug, Clone, PartialEq)]
pub struct XcFunctional {
    source: Source,
    u: f64,
    t: f64,
    repr: Repr,
    /// Ground energies `E(Ne)` the curves were built from, if any.
    total_energies: Option<Vec<f64>>,
    provenance: String,
}

/// `log10 ‖ΔV‖`, or `Exact` when the grids agree to below `1e−15`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorNorm {
    Exact,
    Log10(f64),
}

impl ErrorNorm {
    /// `−∞` for `Exact`, so norms order naturally.
    pub fn value(&self) -> f64 {
        match self {
            ErrorNorm::Exact => f64::NEG_INFINITY,
            ErrorNorm::Log10(v) => *v,
        }
    }
}

impl fmt::Display for ErrorNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorNorm::Exact => write!(f, "exact"),
            ErrorNorm::Log10(v) => write!(f, "{v:.6}"),
        }
    }
}

fn check_domain(n: f64) -> Result<f64> {
    if !(-DOMAIN_SLACK..=2.0 + DOMAIN_SLACK).contains(&n) {
        return Err(Error::Domain(format!("density {n} outside [0, 2]")));
    }
    Ok(n.clamp(0.0, 2.0))
}

/// Interpolate an energy curve and its potential.
///
/// A Hartree-Fock source yields the zero functional whatever the curves
/// hold.
pub fn build_functional(energy: FillingCurve, potential: FillingCurve) -> Result<XcFunctional> {
    if energy.resolution() != potential.resolution() {
        return Err(Error::Mismatch(format!(
            "energy grid L = {} but potential grid L = {}",
            energy.resolution(),
            potential.resolution()
        )));
    }
    let meta = energy.meta.clone();
    if meta.source == Source::Hf {
        return Ok(hf_functional(meta.u, meta.t));
    }
    let spline = |(x, y): (Vec<f64>, Vec<f64>)| CubicSpline::natural(&x, &y);
    let pieces = Pieces {
        e_left: spline(energy.left())?,
        e_right: spline(energy.right())?,
        v_left: spline(potential.left())?,
        v_right: spline(potential.right())?,
        energy,
        potential,
    };
    Ok(XcFunctional {
        source: meta.source,
        u: meta.u,
        t: meta.t,
        repr: Repr::Tabulated(Box::new(pieces)),
        total_energies: None,
        provenance: String::new(),
    })
}

/// The complete QELDA pipeline: per-site energies, Hartree-Fock subtraction
/// on the scan's lattice, differencing, interpolation.
pub fn functional_from_scan(scan: &FillingScan) -> Result<XcFunctional> {
    let lattice = build_lattice(scan.lattice)?;
    let qelda = qelda_curve(scan)?;
    let hf = hf_reference_curve(&lattice, scan.t, scan.u)?;
    let xc = xc_curve(&qelda, &hf)?;
    let v = differentiate_xc(&xc)?;
    let energies = (0..=2 * scan.num_sites())
        .map(|ne| scan.energy(ne).unwrap_or(0.0))
        .collect();
    Ok(build_functional(xc, v)?.with_total_energies(energies))
}

/// Zero XC energy and potential: Kohn-Sham with Hartree only.
pub fn hf_functional(u: f64, t: f64) -> XcFunctional {
    XcFunctional {
        source: Source::Hf,
        u,
        t,
        repr: Repr::Zero,
        total_energies: None,
        provenance: String::new(),
    }
}

pub fn pseudo_functional(kind: PseudoKind, u: f64, t: f64) -> XcFunctional {
    XcFunctional {
        source: match kind {
            PseudoKind::Dft => Source::PseudoDft,
            PseudoKind::OneD => Source::Pseudo1d,
        },
        u,
        t,
        repr: Repr::Pseudo(kind),
        total_energies: None,
        provenance: String::new(),
    }
}

impl XcFunctional {
    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn with_provenance(mut self, note: impl Into<String>) -> Self {
        self.provenance = note.into();
        self
    }

    pub fn with_total_energies(mut self, energies: Vec<f64>) -> Self {
        self.total_energies = Some(energies);
        self
    }

    pub fn total_energies(&self) -> Option<&[f64]> {
        self.total_energies.as_deref()
    }

    /// Grid size `L` of a tabulated functional.
    pub fn resolution(&self) -> Option<usize> {
        match &self.repr {
            Repr::Tabulated(p) => Some(p.energy.resolution()),
            _ => None,
        }
    }

    /// Energy and potential grid data of a tabulated functional.
    pub fn curves(&self) -> Option<(&FillingCurve, &FillingCurve)> {
        match &self.repr {
            Repr::Tabulated(p) => Some((&p.energy, &p.potential)),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero)
    }

    /// `ε_XC(n)`: left piece for `n ≤ 1`, right piece above.
    pub fn energy(&self, n: f64) -> Result<f64> {
        let n = check_domain(n)?;
        Ok(if n <= 1.0 {
            self.energy_left(n)
        } else {
            self.energy_right(n)
        })
    }

    /// `V_XC(n)`: left piece for `n ≤ 1`, right piece above.
    pub fn potential(&self, n: f64) -> Result<f64> {
        let n = check_domain(n)?;
        Ok(if n <= 1.0 {
            self.potential_left(n)
        } else {
            self.potential_right(n)
        })
    }

    pub fn energy_left(&self, n: f64) -> f64 {
        match &self.repr {
            Repr::Zero => 0.0,
            Repr::Tabulated(p) => p.e_left.eval(n),
            Repr::Pseudo(k) => pseudo_energy(*k, self.u, n),
        }
    }

    pub fn energy_right(&self, n: f64) -> f64 {
        match &self.repr {
            Repr::Zero => 0.0,
            Repr::Tabulated(p) => p.e_right.eval(n),
            Repr::Pseudo(k) => pseudo_energy(*k, self.u, n),
        }
    }

    /// Left piece evaluated at any `n`, including `n = 1`.
    pub fn potential_left(&self, n: f64) -> f64 {
        match &self.repr {
            Repr::Zero => 0.0,
            Repr::Tabulated(p) => p.v_left.eval(n),
            Repr::Pseudo(k) => pseudo_potential(*k, self.u, n),
        }
    }

    /// Right piece evaluated at any `n`, including `n = 1`.
    pub fn potential_right(&self, n: f64) -> f64 {
        match &self.repr {
            Repr::Zero => 0.0,
            Repr::Tabulated(p) => p.v_right.eval(n),
            Repr::Pseudo(k) => pseudo_potential(*k, self.u, n),
        }
    }

    /// `V_XC(1⁺) − V_XC(1⁻)`.
    pub fn derivative_discontinuity(&self) -> f64 {
        self.potential_right(1.0) - self.potential_left(1.0)
    }

    /// Potential values on the nodes of a grid with resolution `l`: left
    /// piece at `k/l` for `k = 0..=l`, then right piece for `k = l..=2l`.
    /// Tabulated functionals on their own grid return their stored data.
    pub fn potential_nodes(&self, l: usize) -> Vec<f64> {
        if let Repr::Tabulated(p) = &self.repr {
            if p.potential.resolution() == l {
                return p.potential.split_values();
            }
        }
        let left = (0..=l).map(|k| self.potential_left(k as f64 / l as f64));
        let right = (l..=2 * l).map(|k| self.potential_right(k as f64 / l as f64));
        left.chain(right).collect()
    }
}

fn pseudo_energy(kind: PseudoKind, u: f64, n: f64) -> f64 {
    match kind {
        PseudoKind::Dft => 2f64.powf(-4.0 / 3.0) * u * n.powf(4.0 / 3.0),
        PseudoKind::OneD => 0.25 * u * n * n,
    }
}

fn pseudo_potential(kind: PseudoKind, u: f64, n: f64) -> f64 {
    match kind {
        PseudoKind::Dft => 4.0 / 3.0 * 2f64.powf(-4.0 / 3.0) * u * n.powf(1.0 / 3.0),
        PseudoKind::OneD => 0.5 * u * n,
    }
}

/// `log10` of the Euclidean distance between the potentials of `f` and
/// `reference` on the reference grid (both sides of `n = 1`).
pub fn functional_error_norm(f: &XcFunctional, reference: &XcFunctional) -> Result<ErrorNorm> {
    let l = reference
        .resolution()
        .or(f.resolution())
        .ok_or_else(|| Error::Mismatch("neither functional has a grid".into()))?;
    if let Some(lf) = f.resolution() {
        if lf != l {
            return Err(Error::Mismatch(format!("grids differ: L = {lf} vs {l}")));
        }
    }
    let a = f.potential_nodes(l);
    let b = reference.potential_nodes(l);
    let norm = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(if norm < 1e-15 {
        ErrorNorm::Exact
    } else {
        ErrorNorm::Log10(norm.log10())
    })
}
