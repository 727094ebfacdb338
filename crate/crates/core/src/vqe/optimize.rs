use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use argmin::core::observers::{Observe, ObserverMode};
use argmin::core::{CostFunction, Executor, Gradient, IterState, State, TerminationStatus, KV};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use faer::c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ansatz::{apply_ansatz, energy_and_gradient, expectation, AnsatzSpec};
use super::initial::{prepare_initial_state, InitialState};
use crate::error::{Error, Result};
use crate::exact::check_scan_inputs;
use crate::hamiltonian::{
    assemble_sector_matrix, single_particle_spectrum, sz_split, HubbardModel, SectorBasis,
    SectorMatrix,
};
use crate::scan::{FillingScan, ScanPoint, Source};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Converged when the gradient norm drops to this.
    pub gtol: f64,
    /// Also stop when one iteration lowers the energy by less than this.
    pub ftol: f64,
    pub max_iterations: u64,
    /// Independent starts; the lowest final energy wins.
    pub restarts: usize,
    pub seed: u64,
    /// Half-width of the uniform noise added to the starting parameters.
    pub perturbation: f64,
    /// L-BFGS history length.
    pub memory: usize,
    /// Largest sector dimension attempted.
    pub max_dim: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            gtol: 1e-8,
            ftol: 1e-12,
            max_iterations: 500,
            restarts: 3,
            seed: 0,
            perturbation: 1e-2,
            memory: 10,
            max_dim: 4_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub energy: f64,
    pub gradient_norm: f64,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VqeResult {
    pub params: Vec<f64>,
    pub energy: f64,
    pub gradient_norm: f64,
    pub converged: bool,
    /// Optimizer iterations of the winning start.
    pub iterations: u64,
    /// Index of the winning start.
    pub restart: usize,
    /// One point per iteration of the winning start, initial point first.
    pub trace: Vec<TracePoint>,
    /// Why the winning start stopped.
    pub termination: String,
    pub fermi_degenerate: bool,
}

/// A sector Hamiltonian, an initial state and an ansatz, ready to evaluate.
#[derive(Debug, Clone)]
pub struct VqeEmulator {
    h: SectorMatrix,
    initial: InitialState,
    ansatz: AnsatzSpec,
}

impl VqeEmulator {
    pub fn new(
        model: &HubbardModel,
        n_up: usize,
        n_down: usize,
        ansatz: AnsatzSpec,
        max_dim: usize,
    ) -> Result<Self> {
        Self::with_reference(model, model, n_up, n_down, ansatz, max_dim)
    }

    /// Like [`VqeEmulator::new`], with the initial Slater determinant taken
    /// from the one-body part of `reference` instead of `model`.
    pub fn with_reference(
        model: &HubbardModel,
        reference: &HubbardModel,
        n_up: usize,
        n_down: usize,
        ansatz: AnsatzSpec,
        max_dim: usize,
    ) -> Result<Self> {
        if reference.lattice() != model.lattice() {
            return Err(Error::Mismatch(
                "reference model lives on another lattice".into(),
            ));
        }
        let basis = SectorBasis::new(model.num_sites(), n_up, n_down)?;
        if basis.dimension() > max_dim {
            return Err(Error::Budget {
                dim: basis.dimension(),
                budget: max_dim,
            });
        }
        let h = assemble_sector_matrix(model, &basis)?;
        let initial = prepare_initial_state(reference, n_up, n_down)?;
        Ok(VqeEmulator { h, initial, ansatz })
    }

    pub fn ansatz(&self) -> &AnsatzSpec {
        &self.ansatz
    }

    pub fn sector(&self) -> &SectorMatrix {
        &self.h
    }

    pub fn initial(&self) -> &InitialState {
        &self.initial
    }

    pub fn state(&self, params: &[f64]) -> Result<Vec<c64>> {
        apply_ansatz(&self.initial.amplitudes, &self.ansatz, params, &self.h)
    }

    pub fn energy(&self, params: &[f64]) -> Result<f64> {
        Ok(expectation(&self.state(params)?, &self.h))
    }

    pub fn energy_and_gradient(&self, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        energy_and_gradient(&self.initial.amplitudes, &self.ansatz, params, &self.h)
    }

    /// Site densities `⟨n_i↑ + n_i↓⟩` of the ansatz state.
    pub fn densities(&self, params: &[f64]) -> Result<Vec<f64>> {
        let psi = self.state(params)?;
        Ok(self.h.basis().site_densities(|k| psi[k].norm_sqr()))
    }
}

/// Parameters, energy and gradient of one evaluation.
type Evaluation = (Vec<f64>, f64, Vec<f64>);

/// Cost and gradient share one simulation; the last point is cached since
/// the line search asks for both at the same parameters.
struct Objective<'a> {
    emu: &'a VqeEmulator,
    last: RefCell<Option<Evaluation>>,
}

impl Objective<'_> {
    fn eval(&self, p: &[f64]) -> std::result::Result<(f64, Vec<f64>), argmin::core::Error> {
        if let Some((q, e, g)) = self.last.borrow().as_ref() {
            if q.as_slice() == p {
                return Ok((*e, g.clone()));
            }
        }
        let (e, g) = self.emu.energy_and_gradient(p)?;
        *self.last.borrow_mut() = Some((p.to_vec(), e, g.clone()));
        Ok((e, g))
    }
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.eval(p)?.0)
    }
}

impl Gradient for Objective<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, p: &Self::Param) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        Ok(self.eval(p)?.1)
    }
}

type Iter = IterState<Vec<f64>, Vec<f64>, (), (), (), f64>;

struct Recorder(Rc<RefCell<Vec<TracePoint>>>);

impl Recorder {
    fn record(&self, state: &Iter) {
        if let (Some(p), Some(g)) = (state.get_param(), state.get_gradient()) {
            self.0.borrow_mut().push(TracePoint {
                energy: state.get_cost(),
                gradient_norm: norm(g),
                params: p.clone(),
            });
        }
    }
}

impl Observe<Iter> for Recorder {
    fn observe_init(
        &mut self,
        _: &str,
        state: &Iter,
        _: &KV,
    ) -> std::result::Result<(), argmin::core::Error> {
        self.record(state);
        Ok(())
    }

    fn observe_iter(
        &mut self,
        state: &Iter,
        _: &KV,
    ) -> std::result::Result<(), argmin::core::Error> {
        self.record(state);
        Ok(())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct Run {
    params: Vec<f64>,
    energy: f64,
    gradient_norm: f64,
    iterations: u64,
    trace: Vec<TracePoint>,
    termination: String,
}

fn optimize_once(emu: &VqeEmulator, start: Vec<f64>, cfg: &OptimizerConfig) -> Result<Run> {
    let objective = Objective {
        emu,
        last: RefCell::new(None),
    };
    let trace = Rc::new(RefCell::new(Vec::new()));
    let solver = LBFGS::new(MoreThuenteLineSearch::new(), cfg.memory.max(1))
        .with_tolerance_grad(cfg.gtol)
        .and_then(|s| s.with_tolerance_cost(cfg.ftol))
        .map_err(|e| Error::Model(e.to_string()))?;
    let outcome = Executor::new(objective, solver)
        .configure(|s| s.param(start.clone()).max_iters(cfg.max_iterations))
        .add_observer(Recorder(trace.clone()), ObserverMode::Always)
        .ctrlc(false)
        .run();

    let (params, iterations, termination) = match outcome {
        Ok(mut res) => {
            let iters = res.state.get_iter();
            let why = match &res.state.termination_status {
                TerminationStatus::Terminated(r) => r.text().to_string(),
                TerminationStatus::NotTerminated => "not terminated".to_string(),
            };
            let best = res
                .state
                .take_best_param()
                .or_else(|| res.state.take_param());
            (best.unwrap_or(start), iters, why)
        }
        Err(e) => {
            // Keep the lowest point seen before the failure.
            let best = trace
                .borrow()
                .iter()
                .min_by(|a, b| a.energy.total_cmp(&b.energy))
                .map(|t| t.params.clone());
            (
                best.unwrap_or(start),
                trace.borrow().len() as u64,
                e.to_string(),
            )
        }
    };
    let (energy, grad) = emu.energy_and_gradient(&params)?;
    let trace = trace.take();
    Ok(Run {
        params,
        energy,
        gradient_norm: norm(&grad),
        iterations,
        trace,
        termination,
    })
}

/// Minimize the ansatz energy on a prepared emulator.
///
/// Start `r` is `initial_params` (zeros when `None`) plus uniform noise of
/// half-width `cfg.perturbation` drawn from stream `r` of a generator seeded
/// with `cfg.seed`. A supplied `initial_params` is used unperturbed for the
/// first start, so a warm start can never end above its own energy.
pub fn vqe_minimize_from(
    emu: &VqeEmulator,
    cfg: &OptimizerConfig,
    initial_params: Option<&[f64]>,
) -> Result<VqeResult> {
    let np = emu.ansatz().num_parameters();
    let base = match initial_params {
        Some(p) if p.len() != np => {
            return Err(Error::Parameters {
                expected: np,
                got: p.len(),
            })
        }
        Some(p) => p.to_vec(),
        None => vec![0.0; np],
    };

    let mut best: Option<(usize, Run)> = None;
    for r in 0..cfg.restarts.max(1) {
        let start = if r == 0 && initial_params.is_some() {
            base.clone()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(r as u64);
            base.iter()
                .map(|x| x + cfg.perturbation * rng.gen_range(-1.0..=1.0))
                .collect()
        };
        let run = optimize_once(emu, start, cfg)?;
        if best.as_ref().is_none_or(|(_, b)| run.energy < b.energy) {
            best = Some((r, run));
        }
    }
    let (restart, run) = best.expect("at least one start");
    Ok(VqeResult {
        converged: run.gradient_norm <= cfg.gtol,
        params: run.params,
        energy: run.energy,
        gradient_norm: run.gradient_norm,
        iterations: run.iterations,
        restart,
        trace: run.trace,
        termination: run.termination,
        fermi_degenerate: emu.initial().fermi_degenerate,
    })
}

pub fn vqe_minimize(
    model: &HubbardModel,
    n_up: usize,
    n_down: usize,
    ansatz: &AnsatzSpec,
    cfg: &OptimizerConfig,
) -> Result<VqeResult> {
    let emu = VqeEmulator::new(model, n_up, n_down, ansatz.clone(), cfg.max_dim)?;
    vqe_minimize_from(&emu, cfg, None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VqeScanConfig {
    #[serde(flatten)]
    pub optimizer: OptimizerConfig,
    /// Take `E(Ne > L)` from the particle-hole partner sector,
    /// `E(N↑, N↓) = E(L−N↑, L−N↓) + U (N − L)`. Exact for the ansatz on
    /// any open rectangular lattice without external potential.
    pub particle_hole_mirror: bool,
    /// Solve each depth-`d` point warm-started from the depth-`d−1`
    /// optimum padded with a zero layer, for `d = 1..depth`.
    pub warm_start_depths: bool,
}

impl Default for VqeScanConfig {
    fn default() -> Self {
        VqeScanConfig {
            optimizer: OptimizerConfig::default(),
            particle_hole_mirror: true,
            warm_start_depths: false,
        }
    }
}

/// Solve one sector, warm-starting through the shallower depths if asked.
fn solve_sector(
    model: &HubbardModel,
    ansatz: &AnsatzSpec,
    n_up: usize,
    n_down: usize,
    cfg: &VqeScanConfig,
) -> Result<VqeResult> {
    if !cfg.warm_start_depths || ansatz.depth() == 1 {
        return vqe_minimize(model, n_up, n_down, ansatz, &cfg.optimizer);
    }
    let mut params: Option<Vec<f64>> = None;
    let mut result = None;
    for d in 1..=ansatz.depth() {
        let a = ansatz.with_depth(d)?;
        let emu = VqeEmulator::new(model, n_up, n_down, a.clone(), cfg.optimizer.max_dim)?;
        let start = params.as_ref().map(|p| a.pad_parameters(p)).transpose()?;
        let r = vqe_minimize_from(&emu, &cfg.optimizer, start.as_deref())?;
        params = Some(r.params.clone());
        result = Some(r);
    }
    Ok(result.expect("depth at least 1"))
}

/// VQE ground energies `E(Ne)` of a homogeneous model.
///
/// `Ne = 0` and `Ne = 2L` are one-dimensional sectors. `Ne = 1` and
/// `Ne = 2L − 1` are one particle or one hole in a band and come from the
/// single-particle spectrum. Everything else runs the optimizer.
pub fn vqe_filling_scan(
    model: &HubbardModel,
    ansatz: &AnsatzSpec,
    ne_list: &[usize],
    cfg: &VqeScanConfig,
) -> Result<FillingScan> {
    check_scan_inputs(model, ne_list)?;
    let l = model.num_sites();
    let u = model.u();
    let (eps, _) = single_particle_spectrum(model)?;
    let trace: f64 = eps.iter().sum();

    // Spin-flip partners have equal energies; solve each once.
    let mut solved: HashMap<(usize, usize), std::result::Result<(f64, bool), String>> =
        HashMap::new();
    let mut points = Vec::with_capacity(ne_list.len());
    for &ne in ne_list {
        let (n_up, n_down) = sz_split(ne);
        let classical = if ne == 0 {
            Some(0.0)
        } else if ne == 2 * l {
            Some(u * l as f64)
        } else if ne == 1 {
            Some(eps[0])
        } else if ne == 2 * l - 1 {
            Some(2.0 * trace - eps[l - 1] + u * (l - 1) as f64)
        } else {
            None
        };
        let outcome = match classical {
            Some(e) => Ok((e, true)),
            None => {
                let (mut a, mut b, mut shift) = (n_up, n_down, 0.0);
                if cfg.particle_hole_mirror && ne > l {
                    (a, b, shift) = (l - n_up, l - n_down, u * (ne - l) as f64);
                }
                let key = (a.max(b), a.min(b));
                let r = solved
                    .entry(key)
                    .or_insert_with(|| {
                        solve_sector(model, ansatz, key.0, key.1, cfg)
                            .map(|r| (r.energy, r.converged))
                            .map_err(|e| e.to_string())
                    })
                    .clone();
                r.map(|(e, c)| (e + shift, c))
            }
        };
        points.push(match outcome {
            Ok((e, converged)) => ScanPoint {
                ne,
                n_up,
                n_down,
                energy: Some(e),
                error: None,
                converged,
            },
            Err(msg) => ScanPoint {
                ne,
                n_up,
                n_down,
                energy: None,
                error: Some(msg),
                converged: false,
            },
        });
    }
    Ok(FillingScan {
        lattice: model.lattice().spec(),
        t: model.t(),
        u,
        source: Source::Vqe {
            depth: ansatz.depth(),
        },
        points,
    })
}
