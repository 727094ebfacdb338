//! Rectangular lattices with open boundaries and the external potentials
//! placed on them.
//!
//! A lattice is `rows × cols`; a chain of length `L` is `1 × L`. Sites are
//! numbered in snake order: row 0 left to right, row 1 right to left, and so
//! on. The same numbering is used for the Jordan-Wigner spin-orbital order,
//! so horizontal bonds always connect consecutive indices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of an open-boundary rectangular lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub rows: usize,
    pub cols: usize,
}

impl LatticeSpec {
    pub fn chain(len: usize) -> Self {
        LatticeSpec { rows: 1, cols: len }
    }

    pub fn grid(rows: usize, cols: usize) -> Self {
        LatticeSpec { rows, cols }
    }

    pub fn num_sites(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_chain(&self) -> bool {
        self.rows == 1 || self.cols == 1
    }
}

impl std::fmt::Display for LatticeSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

/// Ordered sites and nearest-neighbour bonds of a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteGraph {
    spec: LatticeSpec,
    /// `coords[k]` is the `(row, col)` of site `k`.
    coords: Vec<(usize, usize)>,
    /// Bonds `(i, j)` with `i < j`, sorted lexicographically.
    edges: Vec<(usize, usize)>,
}

/// Snake index of `(row, col)`.
fn snake_index(spec: &LatticeSpec, row: usize, col: usize) -> usize {
    let offset = if row.is_multiple_of(2) {
        col
    } else {
        spec.cols - 1 - col
    };
    row * spec.cols + offset
}

pub fn build_lattice(spec: LatticeSpec) -> Result<SiteGraph> {
    if spec.rows == 0 || spec.cols == 0 {
        return Err(Error::Lattice(format!("zero-size lattice {spec}")));
    }
    let n = spec.num_sites();
    if n < 2 {
        return Err(Error::Lattice(format!(
            "lattice {spec} has a single site; at least two are required"
        )));
    }
    if n > 64 * 64 {
        return Err(Error::Lattice(format!("lattice {spec} is too large")));
    }

    let mut coords = vec![(0, 0); n];
    for row in 0..spec.rows {
        for col in 0..spec.cols {
            coords[snake_index(&spec, row, col)] = (row, col);
        }
    }

    let mut edges = Vec::with_capacity(spec.rows * (spec.cols - 1) + spec.cols * (spec.rows - 1));
    for row in 0..spec.rows {
        for col in 0..spec.cols {
            let here = snake_index(&spec, row, col);
            if col + 1 < spec.cols {
                let right = snake_index(&spec, row, col + 1);
                edges.push((here.min(right), here.max(right)));
            }
            if row + 1 < spec.rows {
                let below = snake_index(&spec, row + 1, col);
                edges.push((here.min(below), here.max(below)));
            }
        }
    }
    edges.sort_unstable();

    Ok(SiteGraph {
        spec,
        coords,
        edges,
    })
}

impl SiteGraph {
    pub fn chain(len: usize) -> Result<Self> {
        build_lattice(LatticeSpec::chain(len))
    }

    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        build_lattice(LatticeSpec::grid(rows, cols))
    }

    pub fn spec(&self) -> LatticeSpec {
        self.spec
    }

    pub fn num_sites(&self) -> usize {
        self.coords.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        self.coords[site]
    }

    pub fn index_of(&self, row: usize, col: usize) -> Option<usize> {
        (row < self.spec.rows && col < self.spec.cols).then(|| snake_index(&self.spec, row, col))
    }

    /// Sites in snake order, i.e. `0..L`.
    pub fn ordering(&self) -> impl Iterator<Item = usize> {
        0..self.num_sites()
    }
}

/// Closed-form description of an external potential.
///
/// Coordinates are `(row, col)`; on a chain the row is always 0 and the
/// column is the site index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialDescriptor {
    None,
    /// `scale · ((col − center)² + (row − center_row)²)`.
    Quadratic {
        center: f64,
        scale: f64,
        #[serde(default)]
        center_row: f64,
    },
    /// `strength` added on each listed site.
    Impurity {
        sites: Vec<(usize, usize)>,
        strength: f64,
    },
    /// Uniform on `[−amplitude, +amplitude]`, one draw per site in snake order.
    Disorder {
        seed: u64,
        amplitude: f64,
    },
    /// Sum of the parts.
    Composite {
        parts: Vec<PotentialDescriptor>,
    },
    /// `strength · ((col − c)² + (row − r)²) / L` centred on the middle of
    /// the lattice, `c = (cols − 1)/2`, `r = (rows − 1)/2`.
    CenteredTrap {
        #[serde(default = "unit")]
        strength: f64,
    },
}

fn unit() -> f64 {
    1.0
}

impl PotentialDescriptor {
    /// `(i − c)² / L` on a chain with `c = (L − 1)/2`, so the trap is
    /// mirror symmetric about the middle of the chain.
    pub fn centered_trap(len: usize) -> Self {
        PotentialDescriptor::Quadratic {
            center: (len as f64 - 1.0) / 2.0,
            scale: 1.0 / len as f64,
            center_row: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalPotential {
    pub values: Vec<f64>,
    pub descriptor: PotentialDescriptor,
}

impl ExternalPotential {
    pub fn zero(num_sites: usize) -> Self {
        ExternalPotential {
            values: vec![0.0; num_sites],
            descriptor: PotentialDescriptor::None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn build_potential(
    descriptor: &PotentialDescriptor,
    lattice: &SiteGraph,
) -> Result<ExternalPotential> {
    let mut values = vec![0.0; lattice.num_sites()];
    accumulate(descriptor, lattice, &mut values)?;
    if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Potential(format!("non-finite value at site {bad}")));
    }
    Ok(ExternalPotential {
        values,
        descriptor: descriptor.clone(),
    })
}

fn accumulate(
    descriptor: &PotentialDescriptor,
    lattice: &SiteGraph,
    values: &mut [f64],
) -> Result<()> {
    match descriptor {
        PotentialDescriptor::None => {}
        PotentialDescriptor::Quadratic {
            center,
            scale,
            center_row,
        } => {
            if !(center.is_finite() && scale.is_finite() && center_row.is_finite()) {
                return Err(Error::Potential(
                    "quadratic parameters must be finite".into(),
                ));
            }
            for (site, v) in values.iter_mut().enumerate() {
                let (row, col) = lattice.coords(site);
                let dc = col as f64 - center;
                let dr = row as f64 - center_row;
                *v += scale * (dc * dc + dr * dr);
            }
        }
        PotentialDescriptor::Impurity { sites, strength } => {
            if !strength.is_finite() {
                return Err(Error::Potential("impurity strength must be finite".into()));
            }
            for &(row, col) in sites {
                let site = lattice.index_of(row, col).ok_or_else(|| {
                    Error::Potential(format!(
                        "impurity site ({row}, {col}) is outside the {} lattice",
                        lattice.spec()
                    ))
                })?;
                values[site] += strength;
            }
        }
        PotentialDescriptor::Disorder { seed, amplitude } => {
            if !amplitude.is_finite() || *amplitude < 0.0 {
                return Err(Error::Potential(format!(
                    "disorder amplitude must be finite and non-negative, got {amplitude}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for v in values.iter_mut() {
                let draw: f64 = rng.gen_range(-1.0..=1.0);
                *v += amplitude * draw;
            }
        }
        PotentialDescriptor::CenteredTrap { strength } => {
            let spec = lattice.spec();
            let quad = PotentialDescriptor::Quadratic {
                center: (spec.cols as f64 - 1.0) / 2.0,
                scale: strength / spec.num_sites() as f64,
                center_row: (spec.rows as f64 - 1.0) / 2.0,
            };
            accumulate(&quad, lattice, values)?;
        }
        PotentialDescriptor::Composite { parts } => {
            for part in parts {
                accumulate(part, lattice, values)?;
            }
        }
    }
    Ok(())
}
