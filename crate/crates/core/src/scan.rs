//! Ground energies of a homogeneous model across fillings `Ne = 0..=2L`.

use serde::{Deserialize, Serialize};

use crate::lattice::LatticeSpec;

/// Where a set of energies, and the functional built from them, came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Ed,
    Vqe { depth: usize },
    Hardware { file_id: String },
    Balda,
    Hf,
    PseudoDft,
    Pseudo1d,
}

impl std::fmt::Display for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Source::Ed => write!(f, "ED"),
            Source::Vqe { depth } => write!(f, "VQE(depth {depth})"),
            Source::Hardware { file_id } => write!(f, "HARDWARE({file_id})"),
            Source::Balda => write!(f, "BALDA"),
            Source::Hf => write!(f, "HF"),
            Source::PseudoDft => write!(f, "PSEUDO_DFT"),
            Source::Pseudo1d => write!(f, "PSEUDO_1D"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub ne: usize,
    pub n_up: usize,
    pub n_down: usize,
    /// `None` when the solve for this filling failed; see `error`.
    pub energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// False when the solver stopped without meeting its tolerance.
    #[serde(default = "yes")]
    pub converged: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FillingScan {
    pub lattice: LatticeSpec,
    pub t: f64,
    pub u: f64,
    pub source: Source,
    pub points: Vec<ScanPoint>,
}

impl FillingScan {
    pub fn num_sites(&self) -> usize {
        self.lattice.num_sites()
    }

    pub fn energy(&self, ne: usize) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.ne == ne)
            .and_then(|p| p.energy)
    }

    /// True when some filling has no energy.
    pub fn is_partial(&self) -> bool {
        self.points.iter().any(|p| p.energy.is_none())
    }

    pub fn failures(&self) -> impl Iterator<Item = &ScanPoint> {
        self.points.iter().filter(|p| p.energy.is_none())
    }
}
