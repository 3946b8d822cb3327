//! Run configuration: defaults, `key = value` files and flag overrides.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use disclosure_core::{LiabilitySchedule, ModelParams, SwitchRegime};

use crate::CliError;

/// Environment variable naming a default config file.
pub const CONFIG_ENV: &str = "DISCLOSURE_CONFIG";

/// Keys accepted in config files. Flags use the same names with `-` for `_`.
pub const KEYS: [&str; 16] = [
    "lambda",
    "sigma",
    "kappa",
    "beta",
    "schedule",
    "rho",
    "charge",
    "regime",
    "theta",
    "grid",
    "seed",
    "samples",
    "out",
    "format",
    "charge_step",
    "pair_step",
];

const DEFAULTS: [(&str, &str); 13] = [
    ("lambda", "3"),
    ("sigma", "3"),
    ("kappa", "0.7"),
    ("beta", "1"),
    ("schedule", "charge"),
    ("rho", "0.3"),
    ("charge", "0.2"),
    ("regime", "sparing-first"),
    ("grid", "401"),
    ("seed", "42"),
    ("samples", "100000"),
    ("format", "csv"),
    ("charge_step", "0.01"),
];

const DEFAULT_PAIR_STEP: &str = "0.1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Svg,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "svg" => Ok(Self::Svg),
            _ => Err("must be csv or svg".into()),
        }
    }
}

/// A fully validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub schedule: LiabilitySchedule,
    pub regime: SwitchRegime,
    pub theta: Option<f64>,
    pub grid: usize,
    pub seed: u64,
    pub samples: usize,
    pub out_path: Option<PathBuf>,
    pub format: Format,
    pub charge_step: f64,
    pub pair_step: f64,
}

impl RunConfig {
    /// `(key, value)` pairs describing the run, for CSV metadata.
    pub fn metadata(&self) -> Vec<(&'static str, String)> {
        let p = &self.params;
        let mut out = vec![
            ("lambda", crate::output::num(p.lambda())),
            ("sigma", crate::output::num(p.sigma())),
            ("kappa", crate::output::num(p.kappa())),
            ("beta", crate::output::num(p.beta())),
            ("schedule", self.schedule.to_string()),
            ("regime", self.regime.to_string()),
        ];
        if let Some(theta) = self.theta {
            out.push(("theta", crate::output::num(theta)));
        }
        out.extend([
            ("grid", self.grid.to_string()),
            ("seed", self.seed.to_string()),
            ("samples", self.samples.to_string()),
            ("charge_step", crate::output::num(self.charge_step)),
            ("pair_step", crate::output::num(self.pair_step)),
        ]);
        out
    }
}

/// Raw `key → value` settings before validation, in increasing precedence.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn defaults() -> Self {
        let mut values: BTreeMap<String, String> = DEFAULTS
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        values.insert("pair_step".into(), DEFAULT_PAIR_STEP.into());
        Self { values }
    }

    /// Overlays a `key = value` file. `#` starts a comment; blank lines are ignored.
    pub fn apply_file(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(CliError::Config {
                    origin: origin.into(),
                    line,
                    message: format!("expected `key = value`, found `{content}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(CliError::Config {
                    origin: origin.into(),
                    line,
                    message: format!("unknown key `{key}`"),
                });
            }
            if value.is_empty() {
                return Err(CliError::Config {
                    origin: origin.into(),
                    line,
                    message: format!("missing value for `{key}`"),
                });
            }
            self.values.insert(key.into(), value.into());
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.into(), value.into());
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse<T: FromStr>(&self, key: &'static str) -> Result<Option<T>, CliError> {
        self.get(key)
            .map(|v| {
                v.parse().map_err(|_| CliError::Invalid {
                    key,
                    message: format!("cannot parse `{v}`"),
                })
            })
            .transpose()
    }

    fn require<T: FromStr>(&self, key: &'static str) -> Result<T, CliError> {
        self.parse(key)?.ok_or(CliError::Invalid {
            key,
            message: "is required".into(),
        })
    }

    /// Validates every setting into a [`RunConfig`].
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let params = ModelParams::new(
            self.require("lambda")?,
            self.require("sigma")?,
            self.require("kappa")?,
            self.require("beta")?,
        )?;
        let schedule = match self.get("schedule").unwrap_or("charge") {
            "zero" => LiabilitySchedule::Zero,
            "constant" => LiabilitySchedule::Constant(self.require("rho")?),
            "charge" => LiabilitySchedule::Charge(self.require("charge")?),
            "selfconsistent" => LiabilitySchedule::SelfConsistent,
            other => {
                return Err(CliError::Invalid {
                    key: "schedule",
                    message: format!("`{other}` must be zero, constant, charge or selfconsistent"),
                })
            }
        };
        schedule.validate()?;
        let regime = self
            .get("regime")
            .unwrap_or("sparing-first")
            .parse()
            .map_err(|_| CliError::Invalid {
                key: "regime",
                message: "must be sparing-first or candid-first".into(),
            })?;
        let theta: Option<f64> = self.parse("theta")?;
        if let Some(t) = theta {
            if !(0.0..=1.0).contains(&t) {
                return Err(CliError::Invalid {
                    key: "theta",
                    message: "must lie in [0,1]".into(),
                });
            }
        }
        let grid: usize = self.require("grid")?;
        if grid < 2 {
            return Err(CliError::Invalid {
                key: "grid",
                message: "must be at least 2".into(),
            });
        }
        let samples: usize = self.require("samples")?;
        if samples < 1 {
            return Err(CliError::Invalid {
                key: "samples",
                message: "must be at least 1".into(),
            });
        }
        let format = self
            .get("format")
            .unwrap_or("csv")
            .parse()
            .map_err(|message| CliError::Invalid {
                key: "format",
                message,
            })?;
        let charge_step: f64 = self.require("charge_step")?;
        if !(charge_step > 0.0 && charge_step < 1.0) {
            return Err(CliError::Invalid {
                key: "charge_step",
                message: "must lie in (0,1)".into(),
            });
        }
        let pair_step: f64 = self.require("pair_step")?;
        if !(pair_step > 0.0 && pair_step < 1.0) {
            return Err(CliError::Invalid {
                key: "pair_step",
                message: "must lie in (0,1)".into(),
            });
        }
        Ok(RunConfig {
            params,
            schedule,
            regime,
            theta,
            grid,
            seed: self.require("seed")?,
            samples,
            out_path: self.get("out").map(PathBuf::from),
            format,
            charge_step,
            pair_step,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let cfg = Settings::defaults().resolve().unwrap();
        let p = cfg.params;
        assert_eq!(
            (p.lambda(), p.sigma(), p.kappa(), p.beta()),
            (3.0, 3.0, 0.7, 1.0)
        );
        assert_eq!(cfg.schedule, LiabilitySchedule::Charge(0.2));
        assert_eq!((cfg.grid, cfg.seed), (401, 42));
        assert_eq!(cfg.format, Format::Csv);
    }

    #[test]
    fn file_values_and_comments() {
        let mut s = Settings::defaults();
        s.apply_file("# comment\n\nlambda = 2 # trailing\nschedule=zero\n", "f")
            .unwrap();
        let cfg = s.resolve().unwrap();
        assert_eq!(cfg.params.lambda(), 2.0);
        assert_eq!(cfg.schedule, LiabilitySchedule::Zero);
    }

    #[test]
    fn unknown_key_names_line() {
        let mut s = Settings::defaults();
        let err = s
            .apply_file("lambda = 2\nvolatility = 3\n", "f")
            .unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("line 2") && msg.contains("volatility"),
            "{msg}"
        );
    }

    #[test]
    fn malformed_line_rejected() {
        let mut s = Settings::defaults();
        assert!(s.apply_file("lambda 2\n", "f").is_err());
        assert!(s.apply_file("lambda =\n", "f").is_err());
    }

    #[test]
    fn invariant_violations_name_the_key() {
        let mut s = Settings::defaults();
        s.apply_file("kappa = 1.5\n", "f").unwrap();
        let msg = s.resolve().unwrap_err().to_string();
        assert!(msg.contains("kappa must lie in (0,1)"), "{msg}");

        for (key, value) in [
            ("grid", "1"),
            ("samples", "0"),
            ("charge", "1.2"),
            ("format", "png"),
        ] {
            let mut s = Settings::defaults();
            s.set(key, value);
            let msg = s.resolve().unwrap_err().to_string();
            assert!(msg.contains(key), "{key}: {msg}");
        }
    }

    #[test]
    fn later_layers_win() {
        let mut s = Settings::defaults();
        s.apply_file("charge = 0.2\n", "f").unwrap();
        s.set("charge", "0.3");
        assert_eq!(
            s.resolve().unwrap().schedule,
            LiabilitySchedule::Charge(0.3)
        );
    }
}
