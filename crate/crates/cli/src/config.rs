//! `key = value` run configuration with per-command defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    GenData,
    Train,
    Eval,
    AnalyzeSvd,
    Heatflux,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::GenData => "gen-data",
            Self::Train => "train",
            Self::Eval => "eval",
            Self::AnalyzeSvd => "analyze-svd",
            Self::Heatflux => "heatflux",
        }
    }
}

/// Marks a key that has no default and must be supplied.
pub const REQUIRED: &str = "<required>";

const COMMON: &[(&str, &str)] = &[("seed", "0"), ("out", "run")];

const GEN_DATA: &[(&str, &str)] = &[
    ("generator", REQUIRED),
    // leblanc
    ("cases", "500"),
    ("train_cases", "400"),
    ("points", "512"),
    ("t_final", "1e-4"),
    ("p_min", "1e9"),
    ("p_max", "1e10"),
    // synth2d
    ("synth_cases", "50"),
    ("synth_train", "40"),
    ("nx", "24"),
    ("ny", "24"),
    ("steepness", "12"),
    ("jitter", "0"),
    // nozzle-geom
    ("height_convention", "half"),
    ("wall_points", "201"),
];

const MODEL: &[(&str, &str)] = &[
    ("variant", "fusion"),
    ("layers", "4"),
    ("width", "100"),
    ("latent", "100"),
    ("harmonics", "2"),
    ("rowdy_scale", "10"),
    ("condition_last_hidden", "false"),
];

const TRAIN: &[(&str, &str)] = &[
    ("train_data", REQUIRED),
    ("test_data", ""),
    ("resume", ""),
    ("loss", "mse-only"),
    ("lambda1", "0.1"),
    ("k_neighbors", "6"),
    ("pair_epsilon", "1e-12"),
    ("epochs", "20000"),
    ("batch_size", "8"),
    ("lr", "1e-3"),
    ("decay_steps", "2000"),
    ("decay_rate", "0.91"),
    ("checkpoint_every", "1000"),
    ("log_every", "1"),
    ("log_vars", ""),
    ("var_names", ""),
];

const EVAL: &[(&str, &str)] = &[
    ("checkpoint", REQUIRED),
    ("data", REQUIRED),
    ("var_names", ""),
];

const SVD: &[(&str, &str)] = &[
    ("checkpoint", REQUIRED),
    ("data", REQUIRED),
    ("sample", "0"),
];

const HEATFLUX: &[(&str, &str)] = &[
    ("source", "checkpoint"),
    ("checkpoint", ""),
    ("branch", ""),
    ("variable", "0"),
    ("boundary", REQUIRED),
    ("center_x", "0"),
    ("center_y", "0"),
    ("radius", "1"),
    ("segments", "64"),
    ("nodes_per_segment", "4"),
    ("kappa", "1"),
];

fn defaults(cmd: Command) -> Vec<(&'static str, &'static str)> {
    let specific: &[&[(&str, &str)]] = match cmd {
        Command::GenData => &[GEN_DATA],
        Command::Train => &[MODEL, TRAIN],
        Command::Eval => &[EVAL],
        Command::AnalyzeSvd => &[SVD],
        Command::Heatflux => &[HEATFLUX],
    };
    COMMON
        .iter()
        .chain(specific.iter().flat_map(|s| s.iter()))
        .copied()
        .collect()
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config_text(text: &str, origin: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!(
                "{origin}:{}: expected key = value, got {line:?}",
                no + 1
            ))
        })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(CliError::Config(format!("{origin}:{}: empty key", no + 1)));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Fully resolved settings of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Defaults, then `layers` in order (later wins). Unknown keys and
    /// missing required keys are errors.
    pub fn resolve(command: Command, layers: &[Vec<(String, String)>]) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, String> = defaults(command)
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        for layer in layers {
            for (k, v) in layer {
                match values.get_mut(k) {
                    Some(slot) => *slot = v.clone(),
                    None => {
                        return Err(CliError::Config(format!(
                            "unknown key {k:?} for {}",
                            command.name()
                        )));
                    }
                }
            }
        }
        if let Some((k, _)) = values.iter().find(|(_, v)| v.as_str() == REQUIRED) {
            return Err(CliError::Config(format!(
                "{} requires {k:?}",
                command.name()
            )));
        }
        Ok(Self { command, values })
    }

    pub fn str(&self, key: &str) -> &str {
        self.values
            .get(key)
            .map(String::as_str)
            .unwrap_or_else(|| panic!("no key {key}"))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let v = self.str(key);
        v.parse()
            .map_err(|e| CliError::Config(format!("{key} = {v:?}: {e}")))
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        let v = self.str(key);
        (!v.is_empty()).then(|| PathBuf::from(v))
    }

    /// Comma-separated list; empty value gives an empty list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, CliError>
    where
        T::Err: Display,
    {
        self.str(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|e| CliError::Config(format!("{key}: {s:?}: {e}")))
            })
            .collect()
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.str("out"))
    }

    /// The resolved configuration as config-file text, keys sorted.
    pub fn render(&self) -> String {
        let mut s = format!("# fdon {}\n", self.command.name());
        for (k, v) in &self.values {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    /// Writes [`RunConfig::render`] to `<out>/resolved.cfg`, creating `out`.
    pub fn echo(&self) -> Result<PathBuf, CliError> {
        let dir = self.out_dir();
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::Io(format!("i/o error on {}: {e}", dir.display())))?;
        let path = dir.join("resolved.cfg");
        std::fs::write(&path, self.render())
            .map_err(|e| CliError::Io(format!("i/o error on {}: {e}", path.display())))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kv(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn parses_comments_and_blanks() {
        let got = parse_config_text("# header\n\nepochs = 10 # inline\n  lr=2e-3\n", "t").unwrap();
        assert_eq!(got, kv(&[("epochs", "10"), ("lr", "2e-3")]));
        assert!(parse_config_text("nonsense", "t").is_err());
        assert!(parse_config_text("= 3", "t").is_err());
    }

    #[test]
    fn later_layers_win() {
        let c = RunConfig::resolve(
            Command::Train,
            &[
                kv(&[("train_data", "a.fdon"), ("epochs", "5")]),
                kv(&[("epochs", "7")]),
            ],
        )
        .unwrap();
        assert_eq!(c.get::<u64>("epochs").unwrap(), 7);
        assert_eq!(c.get::<usize>("width").unwrap(), 100);
        assert_eq!(c.path("test_data"), None);
        assert!(c.render().contains("epochs = 7\n"));
    }

    #[test]
    fn rejects_unknown_missing_and_malformed() {
        assert!(matches!(
            RunConfig::resolve(Command::Train, &[]),
            Err(CliError::Config(_))
        ));
        let typo = kv(&[("train_data", "a"), ("epoch", "5")]);
        assert!(matches!(
            RunConfig::resolve(Command::Train, &[typo]),
            Err(CliError::Config(_))
        ));
        let c = RunConfig::resolve(
            Command::Train,
            &[kv(&[("train_data", "a"), ("epochs", "ten")])],
        )
        .unwrap();
        assert!(matches!(c.get::<u64>("epochs"), Err(CliError::Config(_))));
    }

    #[test]
    fn lists() {
        let c = RunConfig::resolve(
            Command::Train,
            &[kv(&[("train_data", "a"), ("log_vars", "0, 2")])],
        )
        .unwrap();
        assert_eq!(c.list::<usize>("log_vars").unwrap(), vec![0, 2]);
        assert!(c.list::<String>("var_names").unwrap().is_empty());
    }
}
