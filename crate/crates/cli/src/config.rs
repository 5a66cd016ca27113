//! Flat `key = value` configuration with flag overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use candor_core::{KappaSchedule, ModelParams};

use crate::error::{CliError, CliResult};

const KEYS: &[&str] = &[
    "lambda",
    "sigma",
    "kappa",
    "alpha",
    "beta",
    "kappa_schedule",
    "grid_n",
    "seed",
    "paths",
    "kind",
    "max_switches",
    "out_dir",
    "samples",
    "q_grid",
    "pi_grid",
    "s_grid",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Kind {
    CandidFirst,
    SparingFirst,
    #[default]
    Auto,
}

impl FromStr for Kind {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "candid-first" => Ok(Kind::CandidFirst),
            "sparing-first" => Ok(Kind::SparingFirst),
            "auto" => Ok(Kind::Auto),
            _ => Err(CliError::Config(format!("kind must be candid-first, sparing-first or auto, got {s:?}"))),
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::CandidFirst => "candid-first",
            Kind::SparingFirst => "sparing-first",
            Kind::Auto => "auto",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub grid_n: Option<usize>,
    pub seed: u64,
    pub paths: usize,
    pub kind: Kind,
    pub max_switches: usize,
    pub out_dir: PathBuf,
    pub samples: usize,
    pub q_grid: Vec<f64>,
    pub pi_grid: Vec<f64>,
    pub s_grid: Vec<f64>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub grid_n: Option<usize>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub kind: Option<Kind>,
    pub max_switches: Option<usize>,
}

/// Parses `key = value` lines; `#` starts a comment. Unknown and repeated keys are errors.
pub fn parse_pairs(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
        let key = key.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!("line {}: unknown key {key:?}", n + 1)));
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("line {}: duplicate key {key:?}", n + 1)));
        }
    }
    Ok(out)
}

fn num<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> CliResult<Option<T>> {
    map.get(key)
        .map(|v| v.parse::<T>().map_err(|_| CliError::Config(format!("{key}: cannot parse {v:?}"))))
        .transpose()
}

fn list(map: &BTreeMap<String, String>, key: &str, default: &[f64]) -> CliResult<Vec<f64>> {
    match map.get(key) {
        None => Ok(default.to_vec()),
        Some(v) => v
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|_| CliError::Config(format!("{key}: cannot parse {x:?}"))))
            .collect(),
    }
}

/// `start:kappa` pairs separated by commas, e.g. `0:0.594, 0.175:0.533`.
pub fn parse_schedule(s: &str) -> CliResult<KappaSchedule> {
    let pieces = s
        .split(',')
        .map(|piece| {
            let (a, b) = piece
                .split_once(':')
                .ok_or_else(|| CliError::Config(format!("kappa_schedule: expected start:kappa, got {piece:?}")))?;
            let parse = |x: &str| {
                x.trim().parse::<f64>().map_err(|_| CliError::Config(format!("kappa_schedule: cannot parse {x:?}")))
            };
            Ok((parse(a)?, parse(b)?))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(KappaSchedule::piecewise(pieces)?)
}

impl RunConfig {
    pub fn from_text(text: &str, overrides: &Overrides) -> CliResult<Self> {
        let map = parse_pairs(text)?;
        let lambda: f64 = num(&map, "lambda")?.ok_or_else(|| CliError::Config("missing lambda".into()))?;
        let sigma: f64 = num(&map, "sigma")?.ok_or_else(|| CliError::Config("missing sigma".into()))?;
        let kappa: Option<f64> = num(&map, "kappa")?;
        let alpha: Option<f64> = num(&map, "alpha")?;
        let beta: Option<f64> = num(&map, "beta")?;
        let params = match map.get("kappa_schedule") {
            Some(s) => {
                if kappa.is_some() || alpha.is_some() {
                    return Err(CliError::Config("kappa_schedule excludes kappa and alpha".into()));
                }
                let mut p = ModelParams::with_schedule(lambda, sigma, parse_schedule(s)?)?;
                if let Some(b) = beta {
                    if !(b > 0.0) {
                        return Err(CliError::Config(format!("beta must be positive, got {b}")));
                    }
                    p.beta = b;
                }
                p
            }
            None => ModelParams::from_parts(lambda, sigma, kappa, alpha, beta)?,
        };
        let kind = match overrides.kind {
            Some(k) => k,
            None => map.get("kind").map(|s| s.parse()).transpose()?.unwrap_or_default(),
        };
        let grid_n = overrides.grid_n.or(num(&map, "grid_n")?);
        if let Some(n) = grid_n {
            if n < 2 {
                return Err(CliError::Config(format!("grid_n must be at least 2, got {n}")));
            }
        }
        let paths = overrides.paths.or(num(&map, "paths")?).unwrap_or(10_000);
        if paths == 0 {
            return Err(CliError::Config("paths must be at least 1".into()));
        }
        Ok(Self {
            params,
            grid_n,
            seed: overrides.seed.or(num(&map, "seed")?).unwrap_or(42),
            paths,
            kind,
            max_switches: overrides
                .max_switches
                .or(num(&map, "max_switches")?)
                .unwrap_or(candor_core::cascade::DEFAULT_MAX_SWITCHES),
            out_dir: overrides
                .out_dir
                .clone()
                .or_else(|| map.get("out_dir").map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("out")),
            samples: num(&map, "samples")?.unwrap_or(200),
            q_grid: list(&map, "q_grid", &[0.1, 0.25, 0.5, 0.75, 0.9])?,
            pi_grid: list(&map, "pi_grid", &[0.0, 0.5, 1.0])?,
            s_grid: list(&map, "s_grid", &[0.2, 0.4, 0.8])?,
        })
    }

    pub fn load(path: &Path, overrides: &Overrides) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_text(&text, overrides)
    }

    pub fn grid_or(&self, default: usize) -> usize {
        self.grid_n.unwrap_or(default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_rejects_unknown() {
        let m = parse_pairs("# header\nlambda = 1 # trailing\n\nsigma=4\n").unwrap();
        assert_eq!(m["lambda"], "1");
        assert_eq!(m["sigma"], "4");
        assert!(parse_pairs("lamda = 1").is_err());
        assert!(parse_pairs("lambda = 1\nlambda = 2").is_err());
        assert!(parse_pairs("lambda").is_err());
    }

    #[test]
    fn overrides_win() {
        let o = Overrides { seed: Some(7), kind: Some(Kind::SparingFirst), ..Default::default() };
        let c = RunConfig::from_text("lambda = 1\nsigma = 4\nkappa = 0.8\nseed = 3\nkind = candid-first", &o).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.kind, Kind::SparingFirst);
    }

    #[test]
    fn schedule_and_rewards() {
        let c = RunConfig::from_text("lambda = 3.2\nsigma = 2\nkappa_schedule = 0:0.594, 0.175:0.533", &Overrides::default())
            .unwrap();
        assert_eq!(c.params.kappa_schedule().values(), &[0.594, 0.533]);
        let c = RunConfig::from_text("lambda = 1\nsigma = 2\nalpha = 0.2\nbeta = 1", &Overrides::default()).unwrap();
        assert!((c.params.kappa() - 0.8).abs() < 1e-15);
        assert!(RunConfig::from_text("lambda = 1\nsigma = 2", &Overrides::default()).is_err());
    }
}
