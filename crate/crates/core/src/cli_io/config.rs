//! Settings resolution: command-line flags, then `ABCROOTS_*` environment
//! variables, then a `key = value` config file, then defaults.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;

use super::CliError;
use crate::exact_arith::FactorEffort;

pub const ENV_PREFIX: &str = "ABCROOTS_";
pub const DEFAULT_DEPTH: usize = 30;
pub const DEFAULT_STORE: &str = "abcroots-hits.ndjson";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Ndjson,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Format::from_str_ci(s).ok_or_else(|| CliError::Usage(format!("unknown format {s:?}")))
    }
}

impl Format {
    fn from_str_ci(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "table" => Some(Format::Table),
            "ndjson" => Some(Format::Ndjson),
            _ => None,
        }
    }
}

/// Factoring budget as given on the command line. `None` disables factoring.
///
/// Accepted forms: `none`, `light`, `default`, `heavy`, or a comma list of
/// `trial=N`, `rho=N`, `rounds=N` overriding the defaults.
pub fn parse_effort(text: &str) -> Result<Option<FactorEffort>, CliError> {
    let text = text.trim();
    match text {
        "none" => return Ok(None),
        "light" => return Ok(Some(FactorEffort::light())),
        "default" => return Ok(Some(FactorEffort::default())),
        "heavy" => return Ok(Some(FactorEffort::heavy())),
        _ => {}
    }
    let mut effort = FactorEffort::default();
    for part in text.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("bad factor effort {text:?}")))?;
        let bad = || CliError::Usage(format!("bad factor effort value {part:?}"));
        match key.trim() {
            "trial" => effort.trial_bound = value.trim().parse().map_err(|_| bad())?,
            "rho" => effort.rho_iterations = value.trim().parse().map_err(|_| bad())?,
            "rounds" => effort.mr_rounds = value.trim().parse().map_err(|_| bad())?,
            other => return Err(CliError::Usage(format!("unknown factor effort key {other:?}"))),
        }
    }
    Ok(Some(effort))
}

fn parse_epsilons(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|e| e.is_finite() && *e >= 0.0)
                .ok_or_else(|| CliError::Usage(format!("bad epsilon {s:?}")))
        })
        .collect()
}

/// Reads a `key = value` file; blank lines and `#` comments are skipped and
/// keys are normalized to lowercase with `-` replaced by `_`.
pub fn read_config_file(path: &Path) -> Result<HashMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<HashMap<String, String>, CliError> {
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
        map.insert(normalize_key(key), value.trim().to_string());
    }
    Ok(map)
}

fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

/// Flag values as parsed by clap; `None` means "not given".
#[derive(Debug, Clone, Default)]
pub struct FlagValues {
    pub format: Option<Format>,
    pub depth: Option<usize>,
    pub factor_effort: Option<String>,
    pub epsilons: Vec<f64>,
    pub store: Option<PathBuf>,
    pub fixed_clock: bool,
    pub workers: Option<usize>,
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub format: Format,
    pub depth: usize,
    pub effort: Option<FactorEffort>,
    pub epsilons: Vec<f64>,
    pub store: PathBuf,
    pub fixed_clock: bool,
    pub workers: usize,
}

impl Settings {
    pub fn resolve(flags: &FlagValues, env: &dyn Fn(&str) -> Option<String>) -> Result<Self, CliError> {
        let env_var = |key: &str| env(&format!("{ENV_PREFIX}{}", key.to_ascii_uppercase()));
        let config_path = flags.config.clone().or_else(|| env_var("config").map(PathBuf::from));
        let file = match config_path {
            Some(path) => read_config_file(&path)?,
            None => HashMap::new(),
        };
        // env beats file for every key that is not a flag
        let lookup = |key: &str| env_var(key).or_else(|| file.get(key).cloned());

        let format = match flags.format {
            Some(f) => f,
            None => lookup("format").map(|v| v.parse()).transpose()?.unwrap_or(Format::Table),
        };
        let depth = match flags.depth {
            Some(d) => d,
            None => lookup("depth")
                .map(|v| {
                    v.trim()
                        .parse::<usize>()
                        .map_err(|_| CliError::Usage(format!("bad depth {v:?}")))
                })
                .transpose()?
                .unwrap_or(DEFAULT_DEPTH),
        };
        let effort = match flags.factor_effort.clone().or_else(|| lookup("factor_effort")) {
            Some(text) => parse_effort(&text)?,
            None => Some(FactorEffort::default()),
        };
        let epsilons = if !flags.epsilons.is_empty() {
            if let Some(bad) = flags.epsilons.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
                return Err(CliError::Usage(format!("bad epsilon {bad}")));
            }
            flags.epsilons.clone()
        } else {
            lookup("epsilon").map(|v| parse_epsilons(&v)).transpose()?.unwrap_or_default()
        };
        let store = flags
            .store
            .clone()
            .or_else(|| lookup("store").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_STORE));
        let fixed_clock = flags.fixed_clock
            || lookup("fixed_clock").is_some_and(|v| matches!(v.trim(), "1" | "true" | "yes"));
        let workers = match flags.workers {
            Some(w) => w,
            None => lookup("workers")
                .map(|v| {
                    v.trim()
                        .parse::<usize>()
                        .map_err(|_| CliError::Usage(format!("bad workers {v:?}")))
                })
                .transpose()?
                .unwrap_or(1),
        };
        if workers == 0 {
            return Err(CliError::Usage("workers must be at least 1".into()));
        }
        Ok(Settings {
            format,
            depth,
            effort,
            epsilons,
            store,
            fixed_clock,
            workers,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env_from(pairs: &[(&str, &str)]) -> impl Fn(&str) -> Option<String> {
        let map: HashMap<String, String> =
            pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        move |k: &str| map.get(k).cloned()
    }

    #[test]
    fn defaults() {
        let s = Settings::resolve(&FlagValues::default(), &env_from(&[])).unwrap();
        assert_eq!(s.format, Format::Table);
        assert_eq!(s.depth, DEFAULT_DEPTH);
        assert_eq!(s.effort, Some(FactorEffort::default()));
        assert!(s.epsilons.is_empty());
        assert_eq!(s.workers, 1);
        assert!(!s.fixed_clock);
    }

    #[test]
    fn precedence_flag_env_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("abcroots.conf");
        std::fs::write(
            &cfg,
            "# comment\ndepth = 7\nformat = ndjson\nepsilon = 0.5, 1\nfactor-effort = light\nworkers=3\n",
        )
        .unwrap();
        let flags = FlagValues {
            config: Some(cfg.clone()),
            ..Default::default()
        };

        let s = Settings::resolve(&flags, &env_from(&[])).unwrap();
        assert_eq!(s.depth, 7);
        assert_eq!(s.format, Format::Ndjson);
        assert_eq!(s.epsilons, vec![0.5, 1.0]);
        assert_eq!(s.effort, Some(FactorEffort::light()));
        assert_eq!(s.workers, 3);

        let env = env_from(&[("ABCROOTS_DEPTH", "9"), ("ABCROOTS_EPSILON", "0.1")]);
        let s = Settings::resolve(&flags, &env).unwrap();
        assert_eq!(s.depth, 9);
        assert_eq!(s.epsilons, vec![0.1]);
        assert_eq!(s.format, Format::Ndjson);

        let flags = FlagValues {
            depth: Some(11),
            epsilons: vec![0.25],
            ..flags
        };
        let s = Settings::resolve(&flags, &env).unwrap();
        assert_eq!(s.depth, 11);
        assert_eq!(s.epsilons, vec![0.25]);
    }

    #[test]
    fn config_path_from_env() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.conf");
        std::fs::write(&cfg, "store = /tmp/x.ndjson\nfixed_clock = true\n").unwrap();
        let env = env_from(&[("ABCROOTS_CONFIG", cfg.to_str().unwrap())]);
        let s = Settings::resolve(&FlagValues::default(), &env).unwrap();
        assert_eq!(s.store, PathBuf::from("/tmp/x.ndjson"));
        assert!(s.fixed_clock);
    }

    #[test]
    fn effort_parsing() {
        assert_eq!(parse_effort("none").unwrap(), None);
        assert_eq!(parse_effort("heavy").unwrap(), Some(FactorEffort::heavy()));
        let e = parse_effort("trial=1000, rho=5").unwrap().unwrap();
        assert_eq!(e.trial_bound, 1000);
        assert_eq!(e.rho_iterations, 5);
        assert_eq!(e.mr_rounds, FactorEffort::default().mr_rounds);
        assert!(parse_effort("trial=abc").is_err());
        assert!(parse_effort("speed=9").is_err());
        assert!(parse_effort("fast").is_err());
    }

    #[test]
    fn bad_values_are_usage_errors() {
        let env = env_from(&[("ABCROOTS_DEPTH", "deep")]);
        assert!(matches!(
            Settings::resolve(&FlagValues::default(), &env),
            Err(CliError::Usage(_))
        ));
        assert!(parse_config_text("novalue\n").is_err());
        assert!(parse_epsilons("0.1,-2").is_err());
        let flags = FlagValues {
            workers: Some(0),
            ..Default::default()
        };
        assert!(Settings::resolve(&flags, &env_from(&[])).is_err());
    }
}
