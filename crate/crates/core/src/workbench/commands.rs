use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{FunctionalConfig, FunctionalSource, Reference, RunConfig};
use super::metrics::{compute_metrics, mott_plateau, MetricsReport, PLATEAU_TOL, PLATEAU_WINDOW};
use super::output::{RunDir, RunManifest, Table};
use crate::error::{Error, Result};
use crate::exact::{ed_filling_scan, ed_ground_state};
use crate::functional::{
    balda_functional, functional_error_norm, functional_from_scan, hf_functional, load_functional,
    pseudo_functional, save_functional, ErrorNorm, PseudoKind, XcFunctional,
};
use crate::hamiltonian::{sz_split, HubbardModel};
use crate::ksdft::{scf_solve, DftResult};
use crate::lattice::{build_lattice, build_potential, LatticeSpec};
use crate::scan::FillingScan;
use crate::vqe::{
    vqe_filling_scan, vqe_minimize, AnsatzSpec, VqeEmulator, VqeResult, VqeScanConfig,
};

/// The inhomogeneous model a run works on.
pub fn build_model(cfg: &RunConfig) -> Result<HubbardModel> {
    let lattice = build_lattice(cfg.model.lattice.0)?;
    let potential = build_potential(&cfg.potential, &lattice)?;
    HubbardModel::new(lattice, cfg.model.t, cfg.model.u, potential)
}

fn all_fillings(lattice: LatticeSpec) -> Vec<usize> {
    (0..=2 * lattice.num_sites()).collect()
}

fn complete(scan: FillingScan) -> Result<FillingScan> {
    let failed: Vec<String> = scan
        .failures()
        .map(|p| {
            format!(
                "Ne = {}: {}",
                p.ne,
                p.error.as_deref().unwrap_or("no energy")
            )
        })
        .collect();
    if failed.is_empty() {
        Ok(scan)
    } else {
        Err(Error::Curve(format!(
            "filling scan incomplete; {}",
            failed.join("; ")
        )))
    }
}

/// Filling scan behind an `ed` or `vqe` functional request.
pub fn generating_scan(
    f: &FunctionalConfig,
    u: f64,
    t: f64,
    scan_cfg: &VqeScanConfig,
) -> Result<Option<FillingScan>> {
    let spec = match (f.source, f.lattice) {
        (FunctionalSource::Ed | FunctionalSource::Vqe, Some(l)) => l.0,
        (FunctionalSource::Ed | FunctionalSource::Vqe, None) => {
            return Err(Error::Config {
                location: "functional.lattice".into(),
                msg: "missing generating lattice".into(),
            })
        }
        _ => return Ok(None),
    };
    let lattice = build_lattice(spec)?;
    let model = HubbardModel::homogeneous(lattice.clone(), t, u)?;
    let scan = match f.source {
        FunctionalSource::Ed => ed_filling_scan(&model, &all_fillings(spec))?,
        _ => {
            let ansatz = AnsatzSpec::new(&lattice, f.depth.unwrap_or(1))?;
            vqe_filling_scan(&model, &ansatz, &all_fillings(spec), scan_cfg)?
        }
    };
    complete(scan).map(Some)
}

/// Build or load the functional a config asks for, at coupling `(u, t)`.
pub fn resolve_functional(
    f: &FunctionalConfig,
    u: f64,
    t: f64,
    scan_cfg: &VqeScanConfig,
) -> Result<XcFunctional> {
    Ok(match f.source {
        FunctionalSource::Ed | FunctionalSource::Vqe => {
            let scan = generating_scan(f, u, t, scan_cfg)?.expect("ed and vqe sources scan");
            functional_from_scan(&scan)?
        }
        FunctionalSource::Balda => balda_functional(u, t, f.resolution)?,
        FunctionalSource::Hf => hf_functional(u, t),
        FunctionalSource::PseudoDft => pseudo_functional(PseudoKind::Dft, u, t),
        FunctionalSource::Pseudo1d => pseudo_functional(PseudoKind::OneD, u, t),
        FunctionalSource::File => {
            let path = f.path.as_ref().ok_or_else(|| Error::Config {
                location: "functional.path".into(),
                msg: "missing".into(),
            })?;
            let func = load_functional(path)?;
            if func.u() != u || func.t() != t {
                return Err(Error::Mismatch(format!(
                    "{} was built for (U, t) = ({}, {}), model has ({u}, {t})",
                    path.display(),
                    func.u(),
                    func.t()
                )));
            }
            func
        }
    })
}

/// `ε_XC` and `V_XC` on both pieces of the grid. Closed forms are sampled
/// with 200 intervals per unit density.
pub fn functional_table(f: &XcFunctional) -> Table {
    let l = f.resolution().unwrap_or(200);
    let mut t = Table::new(
        "exchange-correlation functional",
        &[
            ("n", "electrons/site"),
            ("side", "-1 left, +1 right"),
            ("eps_xc", "t"),
            ("v_xc", "t"),
        ],
    )
    .meta("source", f.source())
    .meta("U", f.u())
    .meta("t", f.t())
    .meta("derivative_discontinuity", f.derivative_discontinuity());
    for k in 0..=l {
        let n = k as f64 / l as f64;
        t.push(vec![n, -1.0, f.energy_left(n), f.potential_left(n)]);
    }
    for k in l..=2 * l {
        let n = k as f64 / l as f64;
        t.push(vec![n, 1.0, f.energy_right(n), f.potential_right(n)]);
    }
    t
}

fn config_text(cfg: &RunConfig) -> String {
    cfg.to_toml_string()
}

fn out_dir(cfg: &RunConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("qedft-out"))
}

pub const FUNCTIONAL_FILE: &str = "functional.json";

pub fn cmd_generate_functional(
    cfg: &RunConfig,
    out: Option<&Path>,
) -> Result<(XcFunctional, RunManifest)> {
    let (u, t) = (cfg.model.u, cfg.model.t);
    let scan_cfg = cfg.scan_config();
    let scan = generating_scan(&cfg.functional, u, t, &scan_cfg)?;
    let f = match &scan {
        Some(s) => functional_from_scan(s)?,
        None => resolve_functional(&cfg.functional, u, t, &scan_cfg)?,
    };
    let mut run = RunDir::create(out_dir(cfg, out), "generate-functional", &config_text(cfg))?;
    if let Some(path) = cfg
        .functional
        .path
        .as_ref()
        .filter(|_| cfg.functional.source == FunctionalSource::File)
    {
        run.note_functional(path)?;
    }
    run.write("config.toml", config_text(cfg).as_bytes())?;
    if let Some(s) = &scan {
        run.write_json("scan.json", s)?;
        let mut tab = Table::new("filling scan", &[("Ne", "electrons"), ("E", "t")])
            .meta("source", &s.source)
            .meta("lattice", s.lattice)
            .meta("U", s.u);
        for p in &s.points {
            tab.push(vec![p.ne as f64, p.energy.unwrap_or(f64::NAN)]);
        }
        run.write_table("scan.tsv", &tab)?;
    }
    save_functional(&f, run.path(FUNCTIONAL_FILE))?;
    run.record(FUNCTIONAL_FILE)?;
    run.write_table("functional.tsv", &functional_table(&f))?;
    let manifest = run.finish()?;
    Ok((f, manifest))
}

/// Energy and density a run is measured against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub command: String,
    pub energy: f64,
    pub density: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

pub fn reference_state(
    cfg: &RunConfig,
    model: &HubbardModel,
) -> Result<Option<(Vec<f64>, f64, String)>> {
    let ne = cfg.model.ne;
    Ok(match &cfg.reference {
        Reference::None => None,
        Reference::Ed => {
            let (nu, nd) = sz_split(ne);
            let r = ed_ground_state(model, nu, nd)?;
            Some((r.site_densities, r.ground_energy, "ED".into()))
        }
        Reference::Balda => {
            let f = balda_functional(model.u(), model.t(), cfg.functional.resolution)?;
            let r = scf_solve(model, &f, ne, &cfg.scf)?;
            Some((r.density, r.energy, "BALDA-DFT".into()))
        }
        Reference::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let s: RunSummary = serde_json::from_str(&text).map_err(|e| Error::Config {
                location: format!("reference {}", path.display()),
                msg: e.to_string(),
            })?;
            Some((s.density, s.energy, format!("file:{}", path.display())))
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DftOutcome {
    pub functional: XcFunctional,
    pub result: DftResult,
    pub metrics: Option<MetricsReport>,
    /// Longest run of sites with `|n − 1| < 0.01` in the central half.
    pub plateau: usize,
}

pub fn run_dft(cfg: &RunConfig, functional: Option<XcFunctional>) -> Result<DftOutcome> {
    let model = build_model(cfg)?;
    let f = match functional {
        Some(f) => f,
        None => resolve_functional(
            &cfg.functional,
            cfg.model.u,
            cfg.model.t,
            &cfg.scan_config(),
        )?,
    };
    let result = scf_solve(&model, &f, cfg.model.ne, &cfg.scf)?;
    let metrics = reference_state(cfg, &model)?
        .map(|(n, e, tag)| compute_metrics(&result.density, result.energy, &n, e, &tag))
        .transpose()?;
    let plateau = mott_plateau(&result.density, PLATEAU_WINDOW, PLATEAU_TOL);
    Ok(DftOutcome {
        functional: f,
        result,
        metrics,
        plateau,
    })
}

fn density_table(
    title: &str,
    cfg: &RunConfig,
    density: &[f64],
    reference: Option<&[f64]>,
) -> Table {
    let mut cols = vec![("site", "index"), ("n", "electrons/site")];
    if reference.is_some() {
        cols.push(("n_ref", "electrons/site"));
    }
    let mut t = Table::new(title, &cols)
        .meta("lattice", cfg.model.lattice)
        .meta("U", cfg.model.u)
        .meta("Ne", cfg.model.ne);
    for (i, n) in density.iter().enumerate() {
        let mut row = vec![i as f64, *n];
        if let Some(r) = reference {
            row.push(r[i]);
        }
        t.push(row);
    }
    t
}

pub fn cmd_run_dft(cfg: &RunConfig, out: Option<&Path>) -> Result<(DftOutcome, RunManifest)> {
    let outcome = run_dft(cfg, None)?;
    let mut run = RunDir::create(out_dir(cfg, out), "run-dft", &config_text(cfg))?;
    if let (FunctionalSource::File, Some(p)) = (cfg.functional.source, &cfg.functional.path) {
        run.note_functional(p)?;
    }
    run.write("config.toml", config_text(cfg).as_bytes())?;
    let r = &outcome.result;
    let reference = match &outcome.metrics {
        Some(_) => reference_state(cfg, &build_model(cfg)?)?.map(|x| x.0),
        None => None,
    };
    run.write_table(
        "density.tsv",
        &density_table("KS density", cfg, &r.density, reference.as_deref()),
    )?;
    let mut trace = Table::new(
        "SCF convergence",
        &[
            ("iteration", "index"),
            ("E", "t"),
            ("E_per_site", "t"),
            ("max_dn", "electrons/site"),
        ],
    )
    .meta("functional", outcome.functional.source())
    .meta("converged", r.converged)
    .meta("alpha", cfg.scf.alpha);
    let l = r.density.len() as f64;
    for (i, (e, dn)) in r
        .energy_trace
        .iter()
        .zip(&r.density_change_trace)
        .enumerate()
    {
        trace.push(vec![(i + 1) as f64, *e, e / l, *dn]);
    }
    run.write_table("energy_trace.tsv", &trace)?;
    run.write_json(
        "result.json",
        &RunSummary {
            command: "run-dft".into(),
            energy: r.energy,
            density: r.density.clone(),
            converged: r.converged,
            iterations: r.iterations,
        },
    )?;
    run.write_json("dft.json", r)?;
    if let Some(m) = &outcome.metrics {
        run.write_json("metrics.json", m)?;
    }
    let manifest = run.finish()?;
    Ok((outcome, manifest))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureVqeOutcome {
    pub vqe: VqeResult,
    pub density: Vec<f64>,
    pub metrics: Option<MetricsReport>,
}

/// VQE directly on the inhomogeneous model, depth from `functional.depth`.
pub fn pure_vqe(cfg: &RunConfig) -> Result<PureVqeOutcome> {
    let model = build_model(cfg)?;
    let ansatz = AnsatzSpec::new(model.lattice(), cfg.functional.depth.unwrap_or(1))?;
    let (nu, nd) = sz_split(cfg.model.ne);
    let opt = cfg.scan_config().optimizer;
    let vqe = vqe_minimize(&model, nu, nd, &ansatz, &opt)?;
    let emu = VqeEmulator::new(&model, nu, nd, ansatz, opt.max_dim)?;
    let density = emu.densities(&vqe.params)?;
    let metrics = reference_state(cfg, &model)?
        .map(|(n, e, tag)| compute_metrics(&density, vqe.energy, &n, e, &tag))
        .transpose()?;
    Ok(PureVqeOutcome {
        vqe,
        density,
        metrics,
    })
}

pub fn cmd_pure_vqe(cfg: &RunConfig, out: Option<&Path>) -> Result<(PureVqeOutcome, RunManifest)> {
    let outcome = pure_vqe(cfg)?;
    let mut run = RunDir::create(out_dir(cfg, out), "pure-vqe", &config_text(cfg))?;
    run.write("config.toml", config_text(cfg).as_bytes())?;
    run.write_table(
        "density.tsv",
        &density_table("VQE density", cfg, &outcome.density, None),
    )?;
    let mut trace = Table::new(
        "VQE optimization",
        &[("iteration", "index"), ("E", "t"), ("grad_norm", "t")],
    )
    .meta("restart", outcome.vqe.restart)
    .meta("converged", outcome.vqe.converged);
    for (i, p) in outcome.vqe.trace.iter().enumerate() {
        trace.push(vec![i as f64, p.energy, p.gradient_norm]);
    }
    run.write_table("vqe_trace.tsv", &trace)?;
    run.write_json(
        "result.json",
        &RunSummary {
            command: "pure-vqe".into(),
            energy: outcome.vqe.energy,
            density: outcome.density.clone(),
            converged: outcome.vqe.converged,
            iterations: outcome.vqe.iterations as usize,
        },
    )?;
    if let Some(m) = &outcome.metrics {
        run.write_json("metrics.json", m)?;
    }
    let manifest = run.finish()?;
    Ok((outcome, manifest))
}

/// One cell of the functional-error matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub size: usize,
    pub u: f64,
    pub depth: usize,
    /// `log10 ‖V_XC^VQE − V_XC^ED‖`.
    pub error_norm: Option<ErrorNorm>,
    pub derivative_discontinuity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// VQE functionals against ED functionals on chains, every size × U × depth.
/// Failed cells are recorded and the sweep continues.
pub fn sweep(cfg: &RunConfig) -> Result<Vec<SweepCell>> {
    let grid = cfg.sweep.clone().unwrap_or_default();
    let scan_cfg = cfg.scan_config();
    let t = cfg.model.t;
    let mut cells = Vec::new();
    for &size in &grid.sizes {
        for &u in &grid.u {
            let lattice = LatticeSpec::chain(size);
            let reference = resolve_functional(
                &FunctionalConfig {
                    source: FunctionalSource::Ed,
                    lattice: Some(super::config::LatticeText(lattice)),
                    ..FunctionalConfig::default()
                },
                u,
                t,
                &scan_cfg,
            );
            for &depth in &grid.depths {
                let fc = FunctionalConfig {
                    source: FunctionalSource::Vqe,
                    lattice: Some(super::config::LatticeText(lattice)),
                    depth: Some(depth),
                    ..FunctionalConfig::default()
                };
                let cell = reference.as_ref().map_err(|e| e.to_string()).and_then(|r| {
                    let f = resolve_functional(&fc, u, t, &scan_cfg).map_err(|e| e.to_string())?;
                    let norm = functional_error_norm(&f, r).map_err(|e| e.to_string())?;
                    Ok((norm, f.derivative_discontinuity()))
                });
                cells.push(match cell {
                    Ok((norm, dd)) => SweepCell {
                        size,
                        u,
                        depth,
                        error_norm: Some(norm),
                        derivative_discontinuity: Some(dd),
                        error: None,
                    },
                    Err(msg) => SweepCell {
                        size,
                        u,
                        depth,
                        error_norm: None,
                        derivative_discontinuity: None,
                        error: Some(msg),
                    },
                });
            }
        }
    }
    Ok(cells)
}

pub fn cmd_sweep(cfg: &RunConfig, out: Option<&Path>) -> Result<(Vec<SweepCell>, RunManifest)> {
    let cells = sweep(cfg)?;
    let mut run = RunDir::create(out_dir(cfg, out), "sweep", &config_text(cfg))?;
    run.write("config.toml", config_text(cfg).as_bytes())?;
    let mut tab = Table::new(
        "functional error matrix",
        &[
            ("L", "sites"),
            ("U", "t"),
            ("depth", "layers"),
            ("log10_error", "log10 t"),
            ("dd", "t"),
        ],
    )
    .meta("reference", "ED functional on the same chain")
    .meta("exact_sentinel", "-inf");
    for c in &cells {
        tab.push(vec![
            c.size as f64,
            c.u,
            c.depth as f64,
            c.error_norm.map_or(f64::NAN, |n| n.value()),
            c.derivative_discontinuity.unwrap_or(f64::NAN),
        ]);
    }
    run.write_table("error_matrix.tsv", &tab)?;
    run.write_json("sweep.json", &cells)?;
    let manifest = run.finish()?;
    Ok((cells, manifest))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub functional: String,
    pub reference: String,
    pub error_norm: ErrorNorm,
    pub derivative_discontinuity: f64,
    pub reference_derivative_discontinuity: f64,
}

/// Error norm of the configured functional against `reference`: the ED
/// functional on the same generating lattice, BALDA, or a functional file.
pub fn compare(cfg: &RunConfig) -> Result<(XcFunctional, XcFunctional, Comparison)> {
    let (u, t) = (cfg.model.u, cfg.model.t);
    let scan_cfg = cfg.scan_config();
    let f = resolve_functional(&cfg.functional, u, t, &scan_cfg)?;
    let r = match &cfg.reference {
        Reference::Ed => resolve_functional(
            &FunctionalConfig {
                source: FunctionalSource::Ed,
                ..cfg.functional.clone()
            },
            u,
            t,
            &scan_cfg,
        )?,
        Reference::Balda => {
            balda_functional(u, t, f.resolution().unwrap_or(cfg.functional.resolution))?
        }
        Reference::File(p) => load_functional(p)?,
        Reference::None => {
            return Err(Error::Config {
                location: "reference".into(),
                msg: "compare needs a reference".into(),
            })
        }
    };
    let c = Comparison {
        functional: f.source().to_string(),
        reference: r.source().to_string(),
        error_norm: functional_error_norm(&f, &r)?,
        derivative_discontinuity: f.derivative_discontinuity(),
        reference_derivative_discontinuity: r.derivative_discontinuity(),
    };
    Ok((f, r, c))
}

pub fn cmd_compare(cfg: &RunConfig, out: Option<&Path>) -> Result<(Comparison, RunManifest)> {
    let (f, r, c) = compare(cfg)?;
    let mut run = RunDir::create(out_dir(cfg, out), "compare", &config_text(cfg))?;
    run.write("config.toml", config_text(cfg).as_bytes())?;
    let l = r.resolution().or(f.resolution()).unwrap_or(200);
    let (vf, vr) = (f.potential_nodes(l), r.potential_nodes(l));
    let mut tab = Table::new(
        "potential comparison",
        &[
            ("n", "electrons/site"),
            ("side", "-1 left, +1 right"),
            ("v_xc", "t"),
            ("v_xc_ref", "t"),
        ],
    )
    .meta("functional", &c.functional)
    .meta("reference", &c.reference)
    .meta("log10_error", c.error_norm);
    for (k, (a, b)) in vf.iter().zip(&vr).enumerate() {
        let (node, side) = if k <= l { (k, -1.0) } else { (k - 1, 1.0) };
        tab.push(vec![node as f64 / l as f64, side, *a, *b]);
    }
    run.write_table("comparison.tsv", &tab)?;
    run.write_json("comparison.json", &c)?;
    let manifest = run.finish()?;
    Ok((c, manifest))
}

/// Validate an external functional file, rebuild it locally and store the
/// normalized copy.
pub fn cmd_import_functional(path: &Path, out: &Path) -> Result<(XcFunctional, RunManifest)> {
    let f = load_functional(path)?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut run = RunDir::create(out, "import-functional", &text)?;
    run.note_functional(path)?;
    save_functional(&f, run.path(FUNCTIONAL_FILE))?;
    run.record(FUNCTIONAL_FILE)?;
    run.write_table("functional.tsv", &functional_table(&f))?;
    let manifest = run.finish()?;
    Ok((f, manifest))
}
