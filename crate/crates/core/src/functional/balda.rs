//! Bethe-ansatz local density approximation for the 1D Hubbard chain.
//!
//! The homogeneous per-site energy for `n ≤ 1` is interpolated as
//! `e(n) = −(2tβ/π) sin(πn/β)`, with `β(U/t) ∈ [1, 2]` fixed by matching
//! the exact half-filled Lieb-Wu energy,
//!
//! `−(2β/π) sin(π/β) = −4 ∫₀^∞ J₀(x) J₁(x) / (x (1 + exp(Ux/2t))) dx`.
//!
//! Above half filling `e(n) = e(2−n) + U(n−1)`. The XC part subtracts the
//! infinite-chain Hartree-Fock energy `−(4t/π) sin(πn/2) + Un²/4`.

use std::f64::consts::PI;

use gauss_quad::GaussLegendre;
use puruspe::bessel::Jn;

use super::curve::{differentiate_xc, CurveMeta, FillingCurve};
use super::{build_functional, XcFunctional};
use crate::error::{Error, Result};
use crate::scan::Source;

/// Grid intervals per unit density for the BALDA tables.
pub const BALDA_RESOLUTION: usize = 200;

/// Upper cut of the Bessel integral. The remaining tail oscillates like
/// `cos(2x)/x²` and contributes below `1e−7`.
const X_MAX: f64 = 2000.0;

/// `∫₀^∞ J₀(x) J₁(x) / (x (1 + exp(u x / 2))) dx` with `u = U/t ≥ 0`.
pub fn bessel_j0_j1_integral(u: f64) -> f64 {
    let rule = GaussLegendre::new(24).expect("degree above one");
    // Beyond x = 80/u the Fermi factor is below e^{−40}.
    let upper = if u > 0.0 {
        (80.0 / u).min(X_MAX)
    } else {
        X_MAX
    };
    let integrand = |x: f64| {
        let y = 0.5 * u * x;
        let fermi = if y > 0.0 {
            (-y).exp() / (1.0 + (-y).exp())
        } else {
            1.0 / (1.0 + y.exp())
        };
        Jn(0, x) * Jn(1, x) / x * fermi
    };
    let panels = upper.ceil() as usize;
    let width = upper / panels as f64;
    (0..panels)
        .map(|k| rule.integrate(k as f64 * width, (k + 1) as f64 * width, integrand))
        .sum()
}

/// `β(U/t)`; exactly 2 at `U = 0`, tending to 1 as `U → ∞`.
pub fn balda_beta(u_over_t: f64) -> Result<f64> {
    if !(u_over_t >= 0.0 && u_over_t.is_finite()) {
        return Err(Error::RootFind(format!(
            "β needs finite U/t ≥ 0, got {u_over_t}"
        )));
    }
    if u_over_t == 0.0 {
        return Ok(2.0);
    }
    let target = 4.0 * bessel_j0_j1_integral(u_over_t);
    // g(β) = (2β/π) sin(π/β) rises monotonically from 0 at β=1 to 4/π at β=2.
    let g = |b: f64| 2.0 * b / PI * (PI / b).sin();
    if target >= g(2.0) {
        return Ok(2.0);
    }
    if target <= 0.0 {
        return Err(Error::RootFind(format!(
            "no β for U/t = {u_over_t}: integral {target}"
        )));
    }
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Homogeneous per-site energy `e(n)` on `[0, 2]` for a given `β`.
pub fn balda_energy(n: f64, u: f64, t: f64, beta: f64) -> f64 {
    let below = |m: f64| -2.0 * t * beta / PI * (PI * m / beta).sin();
    if n <= 1.0 {
        below(n)
    } else {
        below(2.0 - n) + u * (n - 1.0)
    }
}

/// Infinite-chain Hartree-Fock energy per site.
fn hf_infinite(n: f64, u: f64, t: f64) -> f64 {
    -4.0 * t / PI * (PI * n / 2.0).sin() + 0.25 * u * n * n
}

/// BALDA XC functional tabulated on `resolution` intervals per unit density.
pub fn balda_functional(u: f64, t: f64, resolution: usize) -> Result<XcFunctional> {
    if u < 0.0 {
        return Err(Error::Model(format!("BALDA needs U ≥ 0, got {u}")));
    }
    let beta = balda_beta(u / t)?;
    let l = resolution;
    let values = (0..=2 * l)
        .map(|k| {
            let n = k as f64 / l as f64;
            balda_energy(n, u, t, beta) - hf_infinite(n, u, t)
        })
        .collect();
    let meta = CurveMeta {
        source: Source::Balda,
        u,
        t,
        lattice: None,
    };
    let xc = FillingCurve::new(meta, l, values)?;
    let v = differentiate_xc(&xc)?;
    Ok(build_functional(xc, v)?.with_provenance(format!("beta = {beta:.15}")))
}
