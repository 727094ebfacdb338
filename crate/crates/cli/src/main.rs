use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qedft::error::Error;
use qedft::workbench::{
    cmd_compare, cmd_generate_functional, cmd_import_functional, cmd_pure_vqe, cmd_run_dft,
    cmd_sweep, FunctionalSource, MetricsReport, Reference, RunConfig,
};

/// Quantum-enhanced lattice DFT workbench.
///
/// Every command except `import-functional` reads a TOML run config; the
/// flags below override the matching config fields.
#[derive(Debug, Parser)]
#[command(name = "qedft", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Optimizer seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Functional file; switches `functional.source` to `file`.
    #[arg(long, global = true)]
    functional: Option<PathBuf>,
    /// `ed`, `balda`, `none` or `file:<result.json>`.
    #[arg(long, global = true)]
    reference: Option<Reference>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the configured XC functional and write functional.json.
    GenerateFunctional,
    /// Self-consistent Kohn-Sham run on the configured model.
    RunDft,
    /// VQE directly on the inhomogeneous model.
    PureVqe,
    /// VQE-vs-ED functional errors over the `[sweep]` grid.
    Sweep,
    /// Error norm of the functional against the reference functional.
    Compare,
    /// Validate a functional file and store a normalized copy.
    ImportFunctional {
        /// File to import; defaults to `--functional`.
        path: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config {
        location: "--config".into(),
        msg: "this command needs a run configuration".into(),
    })?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    if let Some(f) = &cli.functional {
        cfg.functional.source = FunctionalSource::File;
        cfg.functional.path = Some(f.clone());
    }
    if let Some(r) = &cli.reference {
        cfg.reference = r.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_metrics(m: Option<&MetricsReport>) {
    if let Some(m) = m {
        println!(
            "against {}: dn = {:.6}, |dE| = {:.6}, |dE|/L = {:.6}",
            m.reference, m.delta_n, m.delta_e, m.delta_e_per_site
        );
    }
}

fn run(cli: &Cli) -> Result<PathBuf, Error> {
    let out = cli.out.as_deref();
    let dir = |cfg: &RunConfig| {
        out.map(Path::to_path_buf)
            .or_else(|| cfg.out.clone())
            .unwrap_or_else(|| PathBuf::from("qedft-out"))
    };
    match &cli.command {
        Command::GenerateFunctional => {
            let cfg = load_config(cli)?;
            let (f, _) = cmd_generate_functional(&cfg, out)?;
            println!(
                "{} functional, U = {}, t = {}, derivative discontinuity {:.6}",
                f.source(),
                f.u(),
                f.t(),
                f.derivative_discontinuity()
            );
            Ok(dir(&cfg))
        }
        Command::RunDft => {
            let cfg = load_config(cli)?;
            let (o, _) = cmd_run_dft(&cfg, out)?;
            let r = &o.result;
            println!(
                "E = {:.10} after {} iterations (converged: {}), Mott plateau {} sites",
                r.energy, r.iterations, r.converged, o.plateau
            );
            print_metrics(o.metrics.as_ref());
            Ok(dir(&cfg))
        }
        Command::PureVqe => {
            let cfg = load_config(cli)?;
            let (o, _) = cmd_pure_vqe(&cfg, out)?;
            println!(
                "E = {:.10} after {} iterations (gradient norm {:.2e}, converged: {})",
                o.vqe.energy, o.vqe.iterations, o.vqe.gradient_norm, o.vqe.converged
            );
            print_metrics(o.metrics.as_ref());
            Ok(dir(&cfg))
        }
        Command::Sweep => {
            let cfg = load_config(cli)?;
            let (cells, _) = cmd_sweep(&cfg, out)?;
            for c in &cells {
                match (&c.error_norm, &c.error) {
                    (Some(n), _) => println!(
                        "L = {:>2}  U = {:<5} depth {}  log10 error {n}",
                        c.size, c.u, c.depth
                    ),
                    (None, e) => println!(
                        "L = {:>2}  U = {:<5} depth {}  failed: {}",
                        c.size,
                        c.u,
                        c.depth,
                        e.as_deref().unwrap_or("unknown")
                    ),
                }
            }
            Ok(dir(&cfg))
        }
        Command::Compare => {
            let cfg = load_config(cli)?;
            let (c, _) = cmd_compare(&cfg, out)?;
            println!(
                "{} vs {}: log10 error {}, DD {:.6} vs {:.6}",
                c.functional,
                c.reference,
                c.error_norm,
                c.derivative_discontinuity,
                c.reference_derivative_discontinuity
            );
            Ok(dir(&cfg))
        }
        Command::ImportFunctional { path } => {
            let src = path
                .as_ref()
                .or(cli.functional.as_ref())
                .ok_or_else(|| Error::Config {
                    location: "import-functional".into(),
                    msg: "give a file path or --functional".into(),
                })?;
            let target = out.map_or_else(|| PathBuf::from("qedft-out"), Path::to_path_buf);
            let (f, _) = cmd_import_functional(src, &target)?;
            println!(
                "imported {} functional, U = {}, derivative discontinuity {:.6}",
                f.source(),
                f.u(),
                f.derivative_discontinuity()
            );
            Ok(target)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(dir) => {
            println!("outputs in {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qedft: {e}");
            ExitCode::from(2)
        }
    }
}
