//! Run configuration: an optional TOML file whose keys mirror the command
//! line flags one-to-one, with flags taking precedence.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use bdlab::forward::Geometry;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{key} = {value} is outside the admissible range {range}")]
    Domain {
        key: &'static str,
        value: String,
        range: &'static str,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Forward,
    Height,
    Convergence,
    PhaseSweep,
    Bbd,
    Moments,
    ContinuousSample,
    RdCheck,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_possible_value().expect("no skipped variants").get_name())
    }
}

/// A scalar or a list in the config file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Values {
    One(f64),
    Many(Vec<f64>),
}

impl Values {
    fn into_vec(self) -> Vec<f64> {
        match self {
            Self::One(v) => vec![v],
            Self::Many(v) => v,
        }
    }
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub experiment: Option<Experiment>,
    pub alpha: Option<f64>,
    pub p: Option<Values>,
    pub zeta: Option<Values>,
    pub sigma: Option<Values>,
    #[serde(rename = "T")]
    pub horizons: Option<Values>,
    pub reps: Option<usize>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub geometry: Option<String>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_owned(),
            source,
        })
    }
}

/// Comma-separated list of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct List(pub Vec<f64>);

impl FromStr for List {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}")))
            .collect::<std::result::Result<_, _>>()
            .map(List)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML file with the same keys as the flags (T for --T)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Tail index of the Pareto heights, in (0, 2) [default: 1.5]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Sticking probability, or a comma list for moments [default: 1]
    #[arg(long)]
    pub p: Option<List>,
    /// Sticking schedule p = T^-zeta; a comma list for phase-sweep [default: 0.2,0.8 for phase-sweep, 0 for bbd]
    #[arg(long)]
    pub zeta: Option<List>,
    /// Bernoulli mark probability for bbd, comma list [default: 0.1,1]
    #[arg(long)]
    pub sigma: Option<List>,
    /// Time horizon(s), comma list [default: 10]
    #[arg(long = "T", value_name = "T")]
    pub horizons: Option<List>,
    /// Replicates per cell [default: 100]
    #[arg(long)]
    pub reps: Option<usize>,
    /// Number of largest weights kept in the continuous model [default: 512]
    #[arg(long)]
    pub k: Option<usize>,
    /// Master seed [default: 0, with a warning]
    #[arg(long)]
    pub seed: Option<u64>,
    /// torus:N or window:LO:HI, for forward [default: torus:400]
    #[arg(long)]
    pub geometry: Option<String>,
    /// Output directory [default: bdlab-out]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Fully resolved configuration, echoed into `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub alpha: f64,
    pub p: Option<Vec<f64>>,
    pub zeta: Option<Vec<f64>>,
    pub sigma: Vec<f64>,
    #[serde(rename = "T")]
    pub horizons: Vec<f64>,
    pub reps: usize,
    pub k: usize,
    pub seed: u64,
    pub geometry: Geometry,
    pub out: PathBuf,
    /// Set when the seed was not given and defaulted to 0.
    #[serde(skip)]
    pub seed_defaulted: bool,
}

pub fn parse_geometry(s: &str) -> Result<Geometry> {
    let bad = || ConfigError::Invalid(format!("geometry {s:?}: expected torus:N or window:LO:HI"));
    let parts: Vec<&str> = s.split(':').collect();
    let geometry = match parts.as_slice() {
        ["torus", n] => Geometry::torus(n.parse().map_err(|_| bad())?),
        ["window", lo, hi] => Geometry::window(lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?),
        _ => return Err(bad()),
    };
    geometry.map_err(|e| ConfigError::Invalid(format!("geometry {s:?}: {e}")))
}

fn check(key: &'static str, value: f64, ok: bool, range: &'static str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::Domain {
            key,
            value: value.to_string(),
            range,
        })
    }
}

fn single(key: &'static str, values: &[f64], experiment: Experiment) -> Result<f64> {
    match values {
        [v] => Ok(*v),
        _ => Err(ConfigError::Invalid(format!("{experiment} takes a single {key}, got {}", values.len()))),
    }
}

impl RunConfig {
    /// Merges `file` and `flags` (flags win) and validates the result for
    /// `experiment`. A subcommand that disagrees with the file is an error.
    pub fn resolve(experiment: Option<Experiment>, file: FileConfig, flags: Flags) -> Result<Self> {
        let experiment = match (experiment, file.experiment) {
            (Some(a), Some(b)) if a != b => {
                return Err(ConfigError::Invalid(format!("subcommand {a} contradicts experiment = {b} in the config")))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(ConfigError::Invalid("no experiment given".into())),
        };
        let p = flags.p.map(|l| l.0).or(file.p.map(Values::into_vec));
        let zeta = flags.zeta.map(|l| l.0).or(file.zeta.map(Values::into_vec));
        let seed = flags.seed.or(file.seed);
        let geometry = match flags.geometry.or(file.geometry) {
            Some(g) => parse_geometry(&g)?,
            None => Geometry::torus(400).expect("valid default"),
        };
        let (p, zeta) = match (p, zeta) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::Invalid("zeta and p are contradictory: p = T^-zeta is implied by zeta".into()))
            }
            (None, None) => match experiment {
                Experiment::PhaseSweep => (None, Some(vec![0.2, 0.8])),
                Experiment::Bbd => (None, Some(vec![0.0])),
                Experiment::RdCheck => (Some(vec![0.0]), None),
                Experiment::ContinuousSample => (None, None),
                _ => (Some(vec![1.0]), None),
            },
            other => other,
        };
        let cfg = Self {
            experiment,
            alpha: flags.alpha.or(file.alpha).unwrap_or(1.5),
            p,
            zeta,
            sigma: flags
                .sigma
                .map(|l| l.0)
                .or(file.sigma.map(Values::into_vec))
                .unwrap_or_else(|| vec![0.1, 1.0]),
            horizons: flags
                .horizons
                .map(|l| l.0)
                .or(file.horizons.map(Values::into_vec))
                .unwrap_or_else(|| vec![10.0]),
            reps: flags.reps.or(file.reps).unwrap_or(100),
            k: flags.k.or(file.k).unwrap_or(512),
            seed: seed.unwrap_or(0),
            geometry,
            out: flags
                .out
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from("bdlab-out")),
            seed_defaulted: seed.is_none(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        check("alpha", self.alpha, self.alpha > 0.0 && self.alpha < 2.0, "(0, 2)")?;
        if self.horizons.is_empty() {
            return Err(ConfigError::Invalid("T list is empty".into()));
        }
        for &t in &self.horizons {
            check("T", t, t > 0.0 && t.is_finite(), "(0, inf)")?;
        }
        check("reps", self.reps as f64, self.reps > 0, "[1, inf)")?;
        check("k", self.k as f64, self.k > 0, "[1, inf)")?;
        for &p in self.p.iter().flatten() {
            check("p", p, (0.0..=1.0).contains(&p), "[0, 1]")?;
        }
        for &z in self.zeta.iter().flatten() {
            check("zeta", z, (0.0..=1.0).contains(&z), "[0, 1]")?;
        }
        for &s in &self.sigma {
            check("sigma", s, s > 0.0 && s <= 1.0, "(0, 1]")?;
        }
        let e = self.experiment;
        match e {
            Experiment::Forward | Experiment::Height | Experiment::Convergence => {
                if e != Experiment::Height && self.zeta.is_some() {
                    return Err(ConfigError::Invalid(format!("{e} takes p, not zeta")));
                }
                if let Some(p) = &self.p {
                    single("p", p, e)?;
                }
                if let Some(z) = &self.zeta {
                    single("zeta", z, e)?;
                }
                if e == Experiment::Forward {
                    single("T", &self.horizons, e)?;
                }
                if e == Experiment::Convergence {
                    let p = single("p", self.p.as_deref().unwrap_or(&[]), e)?;
                    check("p", p, p > 0.0, "(0, 1]")?;
                }
            }
            Experiment::PhaseSweep | Experiment::Bbd => {
                if self.p.is_some() {
                    return Err(ConfigError::Invalid(format!(
                        "{e} is parameterized by zeta (p = T^-zeta); p = 1 is zeta = 0"
                    )));
                }
                if e == Experiment::Bbd {
                    single("zeta", self.zeta.as_deref().unwrap_or(&[]), e)?;
                }
            }
            Experiment::Moments => {
                if self.zeta.is_some() {
                    return Err(ConfigError::Invalid("moments takes p, not zeta".into()));
                }
                for &p in self.p.iter().flatten() {
                    check("p", p, p > 0.0, "(0, 1]")?;
                }
            }
            Experiment::RdCheck => {
                if self.zeta.is_some() || self.p.as_deref() != Some(&[0.0]) {
                    return Err(ConfigError::Invalid("rd-check runs at p = 0 only".into()));
                }
            }
            Experiment::ContinuousSample => {
                if self.p.is_some() || self.zeta.is_some() {
                    return Err(ConfigError::Invalid("continuous-sample takes neither p nor zeta".into()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags() -> Flags {
        Flags {
            seed: Some(1),
            ..Flags::default()
        }
    }

    #[test]
    fn alpha_two_is_rejected_with_interval() {
        let err = RunConfig::resolve(
            Some(Experiment::Height),
            FileConfig::default(),
            Flags {
                alpha: Some(2.0),
                ..flags()
            },
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("alpha") && err.contains("(0, 2)"), "{err}");
    }

    #[test]
    fn zeta_with_p_is_contradictory() {
        let err = RunConfig::resolve(
            Some(Experiment::Height),
            FileConfig {
                zeta: Some(Values::One(0.5)),
                ..FileConfig::default()
            },
            Flags {
                p: Some(List(vec![1.0])),
                ..flags()
            },
        )
        .unwrap_err();
        assert!(err.to_string().contains("contradictory"));
    }

    #[test]
    fn missing_seed_defaults_to_zero() {
        let cfg = RunConfig::resolve(Some(Experiment::Height), FileConfig::default(), Flags::default()).unwrap();
        assert_eq!(cfg.seed, 0);
        assert!(cfg.seed_defaulted);
    }

    #[test]
    fn flags_override_file() {
        let file: FileConfig = toml::from_str("alpha = 0.8\nT = [5, 10]\nreps = 7\nseed = 3").unwrap();
        let cfg = RunConfig::resolve(
            Some(Experiment::Height),
            file,
            Flags {
                alpha: Some(1.2),
                ..Flags::default()
            },
        )
        .unwrap();
        assert_eq!(cfg.alpha, 1.2);
        assert_eq!(cfg.horizons, vec![5.0, 10.0]);
        assert_eq!(cfg.reps, 7);
        assert_eq!(cfg.seed, 3);
        assert!(!cfg.seed_defaulted);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("alpah = 1.5").is_err());
    }

    #[test]
    fn experiment_from_file() {
        let file: FileConfig = toml::from_str("experiment = \"phase-sweep\"").unwrap();
        let cfg = RunConfig::resolve(None, file.clone(), flags()).unwrap();
        assert_eq!(cfg.experiment, Experiment::PhaseSweep);
        assert_eq!(cfg.zeta, Some(vec![0.2, 0.8]));
        assert!(RunConfig::resolve(Some(Experiment::Bbd), file, flags()).is_err());
    }

    #[test]
    fn geometry_strings() {
        assert_eq!(parse_geometry("torus:12").unwrap(), Geometry::torus(12).unwrap());
        assert_eq!(parse_geometry("window:-3:4").unwrap(), Geometry::window(-3, 4).unwrap());
        assert!(parse_geometry("torus").is_err());
        assert!(parse_geometry("window:4:-3").is_err());
        assert!(parse_geometry("disc:3").is_err());
    }

    #[test]
    fn lists_parse() {
        assert_eq!("10, 25,50".parse::<List>().unwrap(), List(vec![10.0, 25.0, 50.0]));
        assert!("10,x".parse::<List>().is_err());
    }

    #[test]
    fn experiment_specific_rules() {
        let run = |e, f: Flags| RunConfig::resolve(Some(e), FileConfig::default(), f);
        assert!(run(Experiment::Forward, Flags { horizons: Some(List(vec![1.0, 2.0])), ..flags() }).is_err());
        assert!(run(Experiment::RdCheck, Flags { p: Some(List(vec![0.5])), ..flags() }).is_err());
        assert!(run(Experiment::Bbd, Flags { p: Some(List(vec![1.0])), ..flags() }).is_err());
        assert!(run(Experiment::Moments, Flags { p: Some(List(vec![0.0])), ..flags() }).is_err());
        assert!(run(Experiment::Bbd, Flags { sigma: Some(List(vec![0.0])), ..flags() }).is_err());
        assert!(run(Experiment::Moments, Flags { p: Some(List(vec![0.5, 1.0])), ..flags() }).is_ok());
    }
}
