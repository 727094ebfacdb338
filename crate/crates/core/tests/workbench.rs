use std::fs;
use std::path::Path;

use qedft::functional::{load_functional, save_functional, FunctionalFile};
use qedft::workbench::*;

const BASE: &str = r#"
seed = 5
reference = "ed"

[model]
lattice = "1x8"
U = 4.0
Ne = 4

[potential]
kind = "centered_trap"

[functional]
source = "ed"
lattice = "1x6"
"#;

fn config(text: &str) -> RunConfig {
    RunConfig::from_toml_str(text).unwrap()
}

fn read_manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE)).unwrap()).unwrap()
}

#[test]
fn generate_then_run_from_file() {
    let tmp = tempfile::tempdir().unwrap();
    let gen_dir = tmp.path().join("gen");
    let (f, m) = cmd_generate_functional(&config(BASE), Some(&gen_dir)).unwrap();
    m.verify(&gen_dir).unwrap();
    assert_eq!(read_manifest(&gen_dir), m);
    for name in [
        FUNCTIONAL_FILE,
        "functional.tsv",
        "scan.json",
        "scan.tsv",
        "config.toml",
    ] {
        assert!(
            m.outputs.iter().any(|e| e.path == name),
            "{name} missing from manifest"
        );
    }
    let path = gen_dir.join(FUNCTIONAL_FILE);
    assert_eq!(load_functional(&path).unwrap(), f);

    let mut cfg = config(BASE);
    cfg.functional = FunctionalConfig {
        source: FunctionalSource::File,
        path: Some(path.clone()),
        ..FunctionalConfig::default()
    };
    let run_dir = tmp.path().join("run");
    let (from_file, m) = cmd_run_dft(&cfg, Some(&run_dir)).unwrap();
    m.verify(&run_dir).unwrap();
    assert_eq!(m.functional_hashes.len(), 1);
    let direct = run_dft(&config(BASE), None).unwrap();
    assert_eq!(from_file.result, direct.result);
    let metrics = from_file.metrics.unwrap();
    assert_eq!(metrics.reference, "ED");
    assert!(metrics.delta_n < 0.1, "{}", metrics.delta_n);

    let summary: RunSummary =
        serde_json::from_str(&fs::read_to_string(run_dir.join("result.json")).unwrap()).unwrap();
    assert_eq!(summary.energy, direct.result.energy);
    let density = fs::read_to_string(run_dir.join("density.tsv")).unwrap();
    assert!(density.starts_with("# title: KS density\n"));
    assert!(density.contains("# columns: site [index], n [electrons/site], n_ref [electrons/site]"));
    assert_eq!(
        density.lines().filter(|l| !l.starts_with('#')).count(),
        1 + 8
    );
}

#[test]
fn identical_configs_give_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let text = BASE.replace(
        "source = \"ed\"\nlattice = \"1x6\"",
        "source = \"vqe\"\nlattice = \"1x4\"\ndepth = 1",
    );
    let cfg = config(&text);
    let (_, a) = cmd_run_dft(&cfg, Some(&tmp.path().join("a"))).unwrap();
    let (_, b) = cmd_run_dft(&cfg, Some(&tmp.path().join("b"))).unwrap();
    assert_eq!(a.outputs, b.outputs);
    assert_eq!(a.config_hash, b.config_hash);
    for e in &a.outputs {
        let x = fs::read(tmp.path().join("a").join(&e.path)).unwrap();
        let y = fs::read(tmp.path().join("b").join(&e.path)).unwrap();
        assert_eq!(x, y, "{}", e.path);
    }
}

#[test]
fn reference_file_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config(BASE);
    cfg.functional.source = FunctionalSource::Balda;
    cfg.reference = Reference::None;
    cmd_run_dft(&cfg, Some(&tmp.path().join("ref"))).unwrap();
    cfg.reference = Reference::File(tmp.path().join("ref").join("result.json"));
    let (o, _) = cmd_run_dft(&cfg, Some(&tmp.path().join("again"))).unwrap();
    let m = o.metrics.unwrap();
    assert_eq!(m.delta_n, 0.0);
    assert_eq!(m.delta_e, 0.0);
}

#[test]
fn energy_only_import_drives_a_run() {
    // A hardware-style file: total energies only, no derived columns.
    let tmp = tempfile::tempdir().unwrap();
    let (f, _) = cmd_generate_functional(&config(BASE), Some(&tmp.path().join("gen"))).unwrap();
    let mut file = FunctionalFile::from_functional(&f);
    for r in &mut file.records {
        r.epsilon_xc = None;
        r.v_xc = None;
        r.v_xc_right = None;
    }
    let hw = tmp.path().join("hardware.json");
    fs::write(&hw, serde_json::to_string(&file).unwrap()).unwrap();

    let (imported, m) = cmd_import_functional(&hw, &tmp.path().join("import")).unwrap();
    m.verify(&tmp.path().join("import")).unwrap();
    assert!(m.functional_hashes.contains_key(&hw.display().to_string()));
    let grid = f.resolution().unwrap();
    let (a, b) = (imported.potential_nodes(grid), f.potential_nodes(grid));
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-12);
    }

    let mut cfg = config(BASE);
    cfg.functional = FunctionalConfig {
        source: FunctionalSource::File,
        path: Some(tmp.path().join("import").join(FUNCTIONAL_FILE)),
        ..FunctionalConfig::default()
    };
    cfg.reference = Reference::Balda;
    let (o, _) = cmd_run_dft(&cfg, Some(&tmp.path().join("run"))).unwrap();
    assert!(o.result.converged);
    assert_eq!(o.metrics.unwrap().reference, "BALDA-DFT");
}

#[test]
fn functional_for_other_coupling_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("f.json");
    save_functional(&qedft::functional::hf_functional(2.0, 1.0), &path).unwrap();
    let mut cfg = config(BASE);
    cfg.functional = FunctionalConfig {
        source: FunctionalSource::File,
        path: Some(path),
        ..FunctionalConfig::default()
    };
    assert!(run_dft(&cfg, None).is_err());
}

#[test]
fn pure_vqe_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let text = BASE.replace(
        "source = \"ed\"\nlattice = \"1x6\"",
        "source = \"vqe\"\nlattice = \"1x8\"\ndepth = 1",
    );
    let (o, m) = cmd_pure_vqe(&config(&text), Some(tmp.path())).unwrap();
    m.verify(tmp.path()).unwrap();
    let metrics = o.metrics.unwrap();
    assert_eq!(metrics.reference, "ED");
    assert!(
        metrics.delta_e.is_finite() && metrics.delta_e < 0.5,
        "{}",
        metrics.delta_e
    );
    assert!((o.density.iter().sum::<f64>() - 4.0).abs() < 1e-10);
    assert!(tmp.path().join("vqe_trace.tsv").exists());
}

#[test]
fn sweep_records_every_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{BASE}\n[sweep]\nsizes = [4]\nU = [2.0, 8.0]\ndepths = [1, 2]\n");
    let (cells, m) = cmd_sweep(&config(&text), Some(tmp.path())).unwrap();
    m.verify(tmp.path()).unwrap();
    assert_eq!(cells.len(), 4);
    assert!(cells
        .iter()
        .all(|c| c.error.is_none() && c.error_norm.is_some()));
    let table = fs::read_to_string(tmp.path().join("error_matrix.tsv")).unwrap();
    assert_eq!(table.lines().filter(|l| !l.starts_with('#')).count(), 1 + 4);

    let empty = format!("{BASE}\n[sweep]\nsizes = []\n");
    let (cells, _) = cmd_sweep(&config(&empty), Some(&tmp.path().join("empty"))).unwrap();
    assert!(cells.is_empty());
}

#[test]
fn sweep_keeps_going_past_failures() {
    let mut cfg = config(BASE);
    cfg.sweep = Some(SweepConfig {
        sizes: vec![4],
        u: vec![4.0],
        depths: vec![1],
    });
    // A sector cap below every filling makes each VQE point fail.
    cfg.optimizer.optimizer.max_dim = 1;
    let cells = sweep(&cfg).unwrap();
    assert_eq!(cells.len(), 1);
    assert!(cells[0].error.is_some() && cells[0].error_norm.is_none());
}

#[test]
fn compare_against_ed() {
    let tmp = tempfile::tempdir().unwrap();
    let text = BASE.replace("source = \"ed\"", "source = \"vqe\"\ndepth = 1");
    let (c, m) = cmd_compare(&config(&text), Some(tmp.path())).unwrap();
    m.verify(tmp.path()).unwrap();
    assert!(c.error_norm.value().is_finite());
    assert!(c.reference_derivative_discontinuity > 0.0);
    let (same, _) = cmd_compare(&config(BASE), Some(&tmp.path().join("same"))).unwrap();
    assert_eq!(same.error_norm, qedft::functional::ErrorNorm::Exact);
}
