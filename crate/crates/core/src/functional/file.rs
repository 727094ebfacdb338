//! JSON functional files.
//!
//! One document per functional: header fields, then one record per filling
//! `Ne = 0..=2L`. Floats are written with shortest round-trip formatting and
//! parsed exactly, so a save/load cycle is bit-exact.
//!
//! On load the stored `epsilon_xc` and `v_xc` columns are used when present.
//! A file carrying only `E_total` (the hardware import case) is rebuilt
//! through the same Hartree-Fock subtraction and differencing as an
//! emulated scan.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::curve::{differentiate_xc, hf_reference_curve, xc_curve, CurveMeta, FillingCurve};
use super::{build_functional, hf_functional, pseudo_functional, PseudoKind, XcFunctional};
use crate::error::{Error, Result};
use crate::lattice::{build_lattice, LatticeSpec};
use crate::scan::Source;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalRecord {
    #[serde(rename = "Ne")]
    pub ne: usize,
    pub n: f64,
    #[serde(rename = "E_total", default, skip_serializing_if = "Option::is_none")]
    pub e_total: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_xc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_xc: Option<f64>,
    /// Right-piece potential; only on the `n = 1` record.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_xc_right: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalFile {
    pub schema_version: u32,
    pub source: Source,
    #[serde(rename = "L")]
    pub l: usize,
    /// Generating lattice; a chain of `L` sites when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeSpec>,
    pub t: f64,
    #[serde(rename = "U")]
    pub u: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default)]
    pub provenance: String,
    #[serde(default)]
    pub records: Vec<FunctionalRecord>,
}

impl FunctionalFile {
    pub fn from_functional(f: &XcFunctional) -> FunctionalFile {
        let depth = match f.source() {
            Source::Vqe { depth } => Some(*depth),
            _ => None,
        };
        let mut file = FunctionalFile {
            schema_version: SCHEMA_VERSION,
            source: f.source().clone(),
            l: 0,
            lattice: None,
            t: f.t(),
            u: f.u(),
            depth,
            provenance: f.provenance().to_string(),
            records: Vec::new(),
        };
        if let Some((e, v)) = f.curves() {
            let l = e.resolution();
            file.l = l;
            file.lattice = e.meta.lattice;
            file.records = (0..=2 * l)
                .map(|k| FunctionalRecord {
                    ne: k,
                    n: e.density(k),
                    e_total: f.total_energies().map(|te| te[k]),
                    epsilon_xc: Some(e.values()[k]),
                    v_xc: Some(v.values()[k]),
                    v_xc_right: if k == l { v.right_at_one() } else { None },
                })
                .collect();
        }
        file
    }

    /// Rebuild the functional, checking the grid along the way.
    pub fn to_functional(&self) -> Result<XcFunctional> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Curve(format!(
                "schema version {} not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if let (Source::Vqe { depth }, Some(d)) = (&self.source, self.depth) {
            if *depth != d {
                return Err(Error::Curve(format!(
                    "source depth {depth} disagrees with depth field {d}"
                )));
            }
        }
        let closed = match self.source {
            Source::Hf => Some(hf_functional(self.u, self.t)),
            Source::PseudoDft => Some(pseudo_functional(PseudoKind::Dft, self.u, self.t)),
            Source::Pseudo1d => Some(pseudo_functional(PseudoKind::OneD, self.u, self.t)),
            _ => None,
        };
        if let Some(f) = closed {
            return Ok(f.with_provenance(self.provenance.clone()));
        }
        self.tabulated()
    }

    fn tabulated(&self) -> Result<XcFunctional> {
        let l = self.l;
        if l == 0 {
            return Err(Error::Domain("L must be positive".into()));
        }
        let recs = &self.records;
        for (k, r) in recs.iter().enumerate() {
            if r.ne != k || (r.n - k as f64 / l as f64).abs() > 1e-12 {
                return Err(Error::Domain(format!(
                    "record {k} has Ne = {}, n = {}; expected Ne = {k}, n = {}",
                    r.ne,
                    r.n,
                    k as f64 / l as f64
                )));
            }
        }
        if recs.len() != 2 * l + 1 {
            let top = recs.last().map_or(0.0, |r| r.n);
            return Err(Error::Domain(format!(
                "grid spans [0, {top}] with {} records; need Ne = 0..={} covering [0, 2]",
                recs.len(),
                2 * l
            )));
        }
        let meta = CurveMeta {
            source: self.source.clone(),
            u: self.u,
            t: self.t,
            lattice: self.lattice,
        };
        let column = |get: fn(&FunctionalRecord) -> Option<f64>| {
            recs.iter().map(get).collect::<Option<Vec<f64>>>()
        };
        let totals = column(|r| r.e_total);
        let xc = match (column(|r| r.epsilon_xc), &totals) {
            (Some(eps), _) => FillingCurve::new(meta.clone(), l, eps)?,
            (None, Some(te)) => {
                let spec = self.lattice.unwrap_or(LatticeSpec::chain(l));
                if spec.num_sites() != l {
                    return Err(Error::Mismatch(format!(
                        "lattice {spec} has {} sites, L = {l}",
                        spec.num_sites()
                    )));
                }
                let qelda =
                    FillingCurve::new(meta.clone(), l, te.iter().map(|e| e / l as f64).collect())?;
                let hf = hf_reference_curve(&build_lattice(spec)?, self.t, self.u)?;
                let mut xc = xc_curve(&qelda, &hf)?;
                xc.meta = meta.clone();
                xc
            }
            (None, None) => {
                return Err(Error::Curve(
                    "records carry neither epsilon_xc nor E_total".into(),
                ))
            }
        };
        let v = match column(|r| r.v_xc) {
            Some(v) => {
                let curve = FillingCurve::new(meta, l, v)?;
                match recs[l].v_xc_right {
                    Some(r) => curve.with_right_at_one(r),
                    None => curve,
                }
            }
            None => differentiate_xc(&xc)?,
        };
        let mut f = build_functional(xc, v)?.with_provenance(self.provenance.clone());
        if let Some(te) = totals {
            f = f.with_total_energies(te);
        }
        Ok(f)
    }
}

pub fn save_functional(f: &XcFunctional, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&FunctionalFile::from_functional(f)).map_err(|e| {
        Error::FunctionalFile {
            path: path.to_path_buf(),
            msg: e.to_string(),
        }
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_functional(path: impl AsRef<Path>) -> Result<XcFunctional> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let fail = |msg: String| Error::FunctionalFile {
        path: path.to_path_buf(),
        msg,
    };
    let file: FunctionalFile = serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?;
    match file.to_functional() {
        Ok(f) => Ok(f),
        Err(Error::Domain(m)) => Err(Error::Domain(format!("{}: {m}", path.display()))),
        Err(e) => Err(fail(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ed_filling_scan;
    use crate::functional::{balda_functional, functional_from_scan};
    use crate::hamiltonian::HubbardModel;
    use crate::lattice::SiteGraph;

    fn ed_functional(l: usize, u: f64) -> XcFunctional {
        let m = HubbardModel::homogeneous(SiteGraph::chain(l).unwrap(), 1.0, u).unwrap();
        functional_from_scan(&ed_filling_scan(&m, &(0..=2 * l).collect::<Vec<_>>()).unwrap())
            .unwrap()
    }

    fn bits(f: &XcFunctional) -> Vec<u64> {
        let (e, v) = f.curves().unwrap();
        e.values()
            .iter()
            .chain(v.split_values().iter())
            .chain(f.total_energies().unwrap_or(&[]))
            .map(|x| x.to_bits())
            .collect()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        for f in [
            ed_functional(5, 3.7),
            balda_functional(6.0, 1.0, 50).unwrap(),
        ] {
            let f = f.with_provenance("bench run 7");
            let p = dir.path().join("f.json");
            save_functional(&f, &p).unwrap();
            let g = load_functional(&p).unwrap();
            assert_eq!(bits(&f), bits(&g));
            assert_eq!(f, g);
        }
    }

    #[test]
    fn closed_forms_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.json");
        let f = pseudo_functional(PseudoKind::Dft, 4.0, 1.0);
        save_functional(&f, &p).unwrap();
        assert_eq!(load_functional(&p).unwrap(), f);
        let h = hf_functional(2.0, 1.0);
        save_functional(&h, &p).unwrap();
        assert!(load_functional(&p).unwrap().is_zero());
    }

    #[test]
    fn truncated_grid_is_a_domain_error() {
        let mut file = FunctionalFile::from_functional(&ed_functional(4, 2.0));
        file.records.pop();
        assert!(matches!(file.to_functional(), Err(Error::Domain(_))));
        file.records.remove(3);
        assert!(matches!(file.to_functional(), Err(Error::Domain(_))));
    }

    #[test]
    fn hardware_energies_rebuild_like_emulated() {
        let f = ed_functional(6, 4.0);
        let mut file = FunctionalFile::from_functional(&f);
        file.source = Source::Hardware {
            file_id: "dev-a".into(),
        };
        file.lattice = None;
        for r in &mut file.records {
            r.epsilon_xc = None;
            r.v_xc = None;
            r.v_xc_right = None;
        }
        let g = file.to_functional().unwrap();
        for k in 0..=60 {
            let n = k as f64 / 30.0;
            assert!((f.potential(n).unwrap() - g.potential(n).unwrap()).abs() < 1e-12);
        }
        assert!((f.derivative_discontinuity() - g.derivative_discontinuity()).abs() < 1e-12);
    }

    #[test]
    fn corrupt_and_mismatched_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.json");
        fs::write(&p, "{ not json").unwrap();
        assert!(matches!(
            load_functional(&p),
            Err(Error::FunctionalFile { .. })
        ));

        let mut file = FunctionalFile::from_functional(&ed_functional(3, 1.0));
        file.schema_version = 2;
        fs::write(&p, serde_json::to_string(&file).unwrap()).unwrap();
        assert!(matches!(
            load_functional(&p),
            Err(Error::FunctionalFile { .. })
        ));

        assert!(matches!(
            load_functional(dir.path().join("missing.json")),
            Err(Error::Io { .. })
        ));
    }
}
