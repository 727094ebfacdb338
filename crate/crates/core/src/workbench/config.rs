//! TOML run configuration.
//!
//! ```toml
//! seed = 7
//! reference = "ed"
//!
//! [model]
//! lattice = "1x12"
//! t = 1.0
//! U = 4.0
//! Ne = 6
//!
//! [potential]
//! kind = "centered_trap"
//!
//! [functional]
//! source = "vqe"
//! lattice = "1x12"
//! depth = 2
//!
//! [scf]
//! alpha = 0.95
//!
//! [optimizer]
//! restarts = 1
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::functional::BALDA_RESOLUTION;
use crate::ksdft::KsConfig;
use crate::lattice::{LatticeSpec, PotentialDescriptor};
use crate::vqe::VqeScanConfig;

/// Lattice written as `"RxC"`, or `"L"` for a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeText(pub LatticeSpec);

impl FromStr for LatticeText {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parse = |p: &str| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad lattice size {s:?}; expected \"RxC\" or \"L\""))
        };
        let spec = match s.split_once(['x', 'X', '×']) {
            Some((r, c)) => LatticeSpec::grid(parse(r)?, parse(c)?),
            None => LatticeSpec::chain(parse(s)?),
        };
        if spec.num_sites() < 2 {
            return Err(format!("lattice {s:?} has fewer than 2 sites"));
        }
        Ok(LatticeText(spec))
    }
}

impl fmt::Display for LatticeText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for LatticeText {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LatticeText {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub lattice: LatticeText,
    #[serde(default = "unit")]
    pub t: f64,
    #[serde(rename = "U")]
    pub u: f64,
    #[serde(rename = "Ne")]
    pub ne: usize,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalSource {
    Ed,
    Vqe,
    Balda,
    Hf,
    PseudoDft,
    Pseudo1d,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalConfig {
    pub source: FunctionalSource,
    /// Generating lattice for `ed` and `vqe`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeText>,
    /// Circuit depth, for `vqe` functionals and `pure-vqe` runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    /// Functional file for `file`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Grid intervals per unit density for `balda`.
    #[serde(default = "balda_resolution")]
    pub resolution: usize,
}

fn balda_resolution() -> usize {
    BALDA_RESOLUTION
}

impl Default for FunctionalConfig {
    fn default() -> Self {
        FunctionalConfig {
            source: FunctionalSource::Hf,
            lattice: None,
            depth: None,
            path: None,
            resolution: BALDA_RESOLUTION,
        }
    }
}

/// What run results are measured against.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Reference {
    #[default]
    None,
    /// Exact diagonalization of the full model.
    Ed,
    /// Kohn-Sham with the BALDA functional.
    Balda,
    /// A `result.json` from an earlier run.
    File(PathBuf),
}

impl FromStr for Reference {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(Reference::None),
            "ed" => Ok(Reference::Ed),
            "balda" => Ok(Reference::Balda),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(Reference::File(PathBuf::from(p))),
                _ => Err(format!(
                    "unknown reference {s:?}; expected ed, balda, none or file:<path>"
                )),
            },
        }
    }
}

impl fmt::Display for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reference::None => write!(f, "none"),
            Reference::Ed => write!(f, "ed"),
            Reference::Balda => write!(f, "balda"),
            Reference::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl Serialize for Reference {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Reference {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Grid for `sweep`: every size × U × depth.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Chain lengths.
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(rename = "U", default)]
    pub u: Vec<f64>,
    #[serde(default)]
    pub depths: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Overrides `optimizer.seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub reference: Reference,
    pub model: ModelConfig,
    #[serde(default = "no_potential")]
    pub potential: PotentialDescriptor,
    #[serde(default)]
    pub functional: FunctionalConfig,
    #[serde(default)]
    pub scf: KsConfig,
    #[serde(default)]
    pub optimizer: VqeScanConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn no_potential() -> PotentialDescriptor {
    PotentialDescriptor::None
}

fn config_error(location: impl Into<String>, msg: impl Into<String>) -> Error {
    Error::Config {
        location: location.into(),
        msg: msg.into(),
    }
}

/// `[section] line L, column C` for a byte offset into the source.
fn locate(text: &str, offset: usize) -> String {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    let section = before
        .lines()
        .filter_map(|l| l.trim().strip_prefix('[').and_then(|r| r.strip_suffix(']')))
        .next_back()
        .map(|s| format!("[{}] ", s.trim_matches(['[', ']'])))
        .unwrap_or_default();
    format!("{section}line {line}, column {column}")
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let location = e
                .span()
                .map_or_else(|| "<input>".to_string(), |s| locate(text, s.start));
            config_error(location, e.message().trim().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_toml_str(&text).map_err(|e| match e {
            Error::Config { location, msg } => {
                config_error(format!("{}: {location}", path.display()), msg)
            }
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run configs serialize")
    }

    /// Checks that need more than one field, with `section.key` locations.
    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        let l = m.lattice.0.num_sites();
        if !(m.t.is_finite() && m.t > 0.0) {
            return Err(config_error(
                "model.t",
                format!("hopping must be positive, got {}", m.t),
            ));
        }
        if !(m.u.is_finite() && m.u >= 0.0) {
            return Err(config_error(
                "model.U",
                format!("interaction must be finite and ≥ 0, got {}", m.u),
            ));
        }
        if m.ne > 2 * l {
            return Err(config_error(
                "model.Ne",
                format!("{} electrons exceed 2L = {}", m.ne, 2 * l),
            ));
        }
        let f = &self.functional;
        match f.source {
            FunctionalSource::Ed | FunctionalSource::Vqe if f.lattice.is_none() => {
                return Err(config_error(
                    "functional.lattice",
                    "ed and vqe functionals need a generating lattice",
                ));
            }
            FunctionalSource::Vqe if f.depth.is_none_or(|d| d == 0) => {
                return Err(config_error(
                    "functional.depth",
                    "vqe functionals need depth ≥ 1",
                ));
            }
            FunctionalSource::File if f.path.is_none() => {
                return Err(config_error(
                    "functional.path",
                    "file functionals need a path",
                ));
            }
            FunctionalSource::Balda if f.resolution < 2 => {
                return Err(config_error(
                    "functional.resolution",
                    "need at least 2 intervals per unit density",
                ));
            }
            _ => {}
        }
        if let Some(g) = f.lattice {
            if g.0.num_sites() < 2 {
                return Err(config_error(
                    "functional.lattice",
                    "generating lattice needs ≥ 2 sites",
                ));
            }
        }
        self.scf
            .validate()
            .map_err(|e| config_error("scf", e.to_string()))?;
        let o = &self.optimizer.optimizer;
        if o.gtol.is_nan() || o.gtol <= 0.0 {
            return Err(config_error(
                "optimizer.gtol",
                format!("must be positive, got {}", o.gtol),
            ));
        }
        if o.ftol.is_nan() || o.ftol < 0.0 {
            return Err(config_error(
                "optimizer.ftol",
                format!("must be ≥ 0, got {}", o.ftol),
            ));
        }
        if o.restarts == 0 {
            return Err(config_error(
                "optimizer.restarts",
                "need at least one start",
            ));
        }
        if o.memory == 0 {
            return Err(config_error(
                "optimizer.memory",
                "L-BFGS history must be ≥ 1",
            ));
        }
        if let Some(s) = &self.sweep {
            if let Some(&bad) = s.sizes.iter().find(|&&n| n < 2) {
                return Err(config_error(
                    "sweep.sizes",
                    format!("chain length {bad} below 2"),
                ));
            }
            if s.depths.contains(&0) {
                return Err(config_error("sweep.depths", "depths must be ≥ 1"));
            }
        }
        Ok(())
    }

    /// Optimizer settings with the run seed applied.
    pub fn scan_config(&self) -> VqeScanConfig {
        let mut c = self.optimizer.clone();
        if let Some(seed) = self.seed {
            c.optimizer.seed = seed;
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
seed = 3
reference = "ed"

[model]
lattice = "1x12"
U = 4.0
Ne = 6

[potential]
kind = "centered_trap"

[functional]
source = "vqe"
lattice = "12"
depth = 2

[scf]
alpha = 0.9

[optimizer]
restarts = 1
particle_hole_mirror = false
"#;

    #[test]
    fn parses_full_config() {
        let c = RunConfig::from_toml_str(FULL).unwrap();
        assert_eq!(c.model.lattice.0, LatticeSpec::chain(12));
        assert_eq!(c.model.t, 1.0);
        assert_eq!(c.functional.lattice.unwrap().0, LatticeSpec::chain(12));
        assert_eq!(c.scf.alpha, 0.9);
        assert_eq!(c.scf.max_iterations, 500);
        assert_eq!(c.optimizer.optimizer.restarts, 1);
        assert!(!c.optimizer.particle_hole_mirror);
        assert_eq!(c.scan_config().optimizer.seed, 3);
        assert_eq!(c.reference, Reference::Ed);
        assert_eq!(
            c.potential,
            PotentialDescriptor::CenteredTrap { strength: 1.0 }
        );
    }

    #[test]
    fn round_trips_through_toml() {
        let c = RunConfig::from_toml_str(FULL).unwrap();
        assert_eq!(RunConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
    }

    #[test]
    fn unknown_key_is_located() {
        let text = FULL.replace("alpha = 0.9", "alhpa = 0.9");
        let Err(Error::Config { location, msg }) = RunConfig::from_toml_str(&text) else {
            panic!("typo accepted")
        };
        assert!(
            location.starts_with("[scf] line 19, column 1"),
            "{location}"
        );
        assert!(msg.contains("alhpa"), "{msg}");
    }

    #[test]
    fn unknown_optimizer_key_is_rejected() {
        let text = FULL.replace("restarts = 1", "restart = 1");
        assert!(matches!(
            RunConfig::from_toml_str(&text),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn semantic_errors_name_the_key() {
        let cases = [
            ("Ne = 6", "Ne = 30", "model.Ne"),
            ("depth = 2", "depth = 0", "functional.depth"),
            ("U = 4.0", "U = -1.0", "model.U"),
            ("alpha = 0.9", "alpha = 1.5", "scf"),
            ("restarts = 1", "restarts = 0", "optimizer.restarts"),
        ];
        for (from, to, key) in cases {
            let Err(Error::Config { location, .. }) =
                RunConfig::from_toml_str(&FULL.replace(from, to))
            else {
                panic!("{to} accepted")
            };
            assert_eq!(location, key);
        }
        let bad = FULL.replace("lattice = \"1x12\"", "lattice = \"1xq\"");
        assert!(RunConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn references_parse() {
        assert_eq!("balda".parse::<Reference>().unwrap(), Reference::Balda);
        assert_eq!(
            "file:a/b.json".parse::<Reference>().unwrap(),
            Reference::File("a/b.json".into())
        );
        assert!("file:".parse::<Reference>().is_err());
        assert!("exact".parse::<Reference>().is_err());
    }

    #[test]
    fn lattice_text() {
        assert_eq!(
            "20x20".parse::<LatticeText>().unwrap().0,
            LatticeSpec::grid(20, 20)
        );
        assert_eq!("8".parse::<LatticeText>().unwrap().0, LatticeSpec::chain(8));
        assert!("1".parse::<LatticeText>().is_err());
    }
}
