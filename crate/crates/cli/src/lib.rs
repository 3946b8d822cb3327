//! Command-line front-end for `disclosure-core`.
//!
//! Each subcommand renders its artifact fully in memory and then writes it to
//! `--out` or standard output.

pub mod config;
pub mod output;
pub mod svg;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use disclosure_core::equilibrium::TrendCurve;
use disclosure_core::selftest::{self, CheckReport};
use disclosure_core::stochastic::{lambda_grid, mills_ratio_bc, scienter_curve, SimConfig};
use disclosure_core::switching;
use disclosure_core::{Regime, ZoneReport};
use thiserror::Error;

pub use config::{Format, RunConfig, Settings, CONFIG_ENV};
use output::{num, opt, text_field, Csv};
use svg::{LineChart, Series};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}: line {line}: {message}")]
    Config {
        origin: String,
        line: usize,
        message: String,
    },
    #[error("{key} {message}")]
    Invalid { key: &'static str, message: String },
    #[error(transparent)]
    Model(#[from] disclosure_core::Error),
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Unsupported(String),
}

#[derive(Debug, Parser)]
#[command(
    name = "disclosure",
    version,
    about = "Dynamic voluntary disclosure under litigation risk"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Trend value γ_t on a grid, with the constant lower cutoff γ₁.
    Curve,
    /// Optimal switching time for the chosen regime.
    Switch,
    /// Charge zones: c̄, underline c, and the incremental loss and gain per charge.
    Zone,
    /// Scienter probability over the default λ grid.
    Scienter,
    /// Mills-ratio comparison over λ = k/8, k = 1..100.
    Mills,
    /// Run every acceptance check.
    Selftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Curve => "curve",
            Self::Switch => "switch",
            Self::Zone => "zone",
            Self::Scienter => "scienter",
            Self::Mills => "mills",
            Self::Selftest => "selftest",
        }
    }
}

/// Overrides for config keys. Unset flags leave the file or default value.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    #[arg(long, global = true, value_name = "X")]
    pub lambda: Option<String>,
    #[arg(long, global = true, value_name = "X")]
    pub sigma: Option<String>,
    #[arg(long, global = true, value_name = "X")]
    pub kappa: Option<String>,
    #[arg(long, global = true, value_name = "X")]
    pub beta: Option<String>,
    #[arg(long, global = true, value_parser = ["zero", "constant", "charge", "selfconsistent"])]
    pub schedule: Option<String>,
    #[arg(long, global = true, value_name = "X")]
    pub rho: Option<String>,
    #[arg(long, global = true, value_name = "C")]
    pub charge: Option<String>,
    #[arg(long, global = true, value_parser = ["sparing-first", "candid-first"])]
    pub regime: Option<String>,
    #[arg(long, global = true, value_name = "T")]
    pub theta: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    pub grid: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    pub samples: Option<String>,
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<String>,
    #[arg(long, global = true, value_parser = ["csv", "svg"])]
    pub format: Option<String>,
    #[arg(long = "charge-step", global = true, value_name = "X")]
    pub charge_step: Option<String>,
    #[arg(long = "pair-step", global = true, value_name = "X")]
    pub pair_step: Option<String>,
    /// Config file; overrides the path named by DISCLOSURE_CONFIG.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

impl Flags {
    fn overrides(&self) -> [(&'static str, &Option<String>); 16] {
        [
            ("lambda", &self.lambda),
            ("sigma", &self.sigma),
            ("kappa", &self.kappa),
            ("beta", &self.beta),
            ("schedule", &self.schedule),
            ("rho", &self.rho),
            ("charge", &self.charge),
            ("regime", &self.regime),
            ("theta", &self.theta),
            ("grid", &self.grid),
            ("seed", &self.seed),
            ("samples", &self.samples),
            ("out", &self.out),
            ("format", &self.format),
            ("charge_step", &self.charge_step),
            ("pair_step", &self.pair_step),
        ]
    }
}

/// Parses a config file and applies flag overrides on top of the defaults.
pub fn parse_config(file: Option<(&str, &str)>, flags: &Flags) -> Result<RunConfig, CliError> {
    let mut settings = Settings::defaults();
    if let Some((origin, text)) = file {
        settings.apply_file(text, origin)?;
    }
    for (key, value) in flags.overrides() {
        if let Some(value) = value {
            settings.set(key, value.as_str());
        }
    }
    settings.resolve()
}

/// Reads the config named by `--config`, falling back to `env_path`.
pub fn load_config(flags: &Flags, env_path: Option<&Path>) -> Result<RunConfig, CliError> {
    let Some(path) = flags.config.as_deref().or(env_path) else {
        return parse_config(None, flags);
    };
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(Some((&path.display().to_string(), &text)), flags)
}

/// Renders the artifact of a non-selftest command.
pub fn render(command: Command, cfg: &RunConfig) -> Result<String, CliError> {
    match command {
        Command::Curve => curve(cfg),
        Command::Switch => switch(cfg),
        Command::Zone => zone(cfg),
        Command::Scienter => scienter(cfg),
        Command::Mills => mills(cfg),
        Command::Selftest => Err(CliError::Unsupported(
            "selftest produces no artifact".into(),
        )),
    }
}

fn chart(title: &str, x_label: &str, y_label: &str, series: Vec<Series>) -> String {
    LineChart {
        title: title.into(),
        x_label: x_label.into(),
        y_label: y_label.into(),
        series,
    }
    .render()
}

fn series(name: &str, points: Vec<(f64, f64)>) -> Series {
    Series {
        name: name.into(),
        points,
    }
}

fn curve(cfg: &RunConfig) -> Result<String, CliError> {
    let regime = match cfg.theta {
        Some(theta) => Regime::switch(cfg.regime, theta),
        None => Regime::Sparing,
    };
    let curve = TrendCurve::sample(&cfg.params, &cfg.schedule, regime, cfg.grid)?;
    let cutoff = curve.gamma1();
    if cfg.format == Format::Svg {
        let ends = vec![(0.0, cutoff), (1.0, cutoff)];
        return Ok(chart(
            "Trend value",
            "t",
            "value",
            vec![
                series("gamma", curve.samples().to_vec()),
                series("lower cutoff", ends),
            ],
        ));
    }
    let mut csv = Csv::new("curve", &cfg.metadata());
    csv.row(&["t", "gamma", "lower_cutoff"]);
    for &(t, gamma) in curve.samples() {
        csv.row(&[num(t), num(gamma), num(cutoff)]);
    }
    Ok(csv.into_string())
}

fn switch(cfg: &RunConfig) -> Result<String, CliError> {
    if cfg.format == Format::Svg {
        return Err(CliError::Unsupported(
            "switch has no svg output; use --format csv".into(),
        ));
    }
    let sol = switching::theta(cfg.regime, &cfg.params, &cfg.schedule)?;
    let mut csv = Csv::new("switch", &cfg.metadata());
    csv.row(&["regime", "theta", "foc_residual", "exists", "corner"]);
    csv.row(&[
        sol.regime.to_string(),
        num(sol.theta),
        num(sol.foc_residual),
        sol.exists.to_string(),
        sol.corner.map(|c| c.to_string()).unwrap_or_default(),
    ]);
    Ok(csv.into_string())
}

fn zone(cfg: &RunConfig) -> Result<String, CliError> {
    let report = ZoneReport::build(&cfg.params, cfg.charge_step, cfg.pair_step)?;
    if cfg.format == Format::Svg {
        let pick = |f: fn(&disclosure_core::zone::ZoneRow) -> Option<f64>| {
            report
                .rows
                .iter()
                .filter_map(|r| f(r).map(|v| (r.c, v)))
                .collect()
        };
        return Ok(chart(
            "Incremental loss and gain",
            "charge c",
            "area",
            vec![
                series("A_L", pick(|r| r.a_loss)),
                series("A_G", pick(|r| r.a_gain)),
            ],
        ));
    }
    let mut csv = Csv::new("zone", &cfg.metadata());
    csv.comment("c_bar", &num(report.c_bar));
    csv.comment(
        "c_under",
        &report.c_under.map(num).unwrap_or_else(|| "none".into()),
    );
    csv.row(&["c", "theta", "a_loss", "a_gain", "label", "note"]);
    for r in &report.rows {
        csv.row(&[
            num(r.c),
            opt(r.theta),
            opt(r.a_loss),
            opt(r.a_gain),
            r.label.as_str().to_string(),
            text_field(r.note.as_deref().unwrap_or("")),
        ]);
    }
    Ok(csv.into_string())
}

fn scienter(cfg: &RunConfig) -> Result<String, CliError> {
    let sim = SimConfig::new(cfg.samples, cfg.seed, cfg.regime, cfg.params)?;
    let lambdas = lambda_grid(cfg.regime, &cfg.params);
    let points = scienter_curve(&sim, &lambdas)?;
    if cfg.format == Format::Svg {
        let mc = points.iter().map(|q| (q.lambda, q.mc.estimate)).collect();
        let closed = points.iter().map(|q| (q.lambda, q.closed)).collect();
        return Ok(chart(
            &format!("Scienter probability ({})", cfg.regime),
            "lambda",
            "probability",
            vec![series("Monte Carlo", mc), series("closed form", closed)],
        ));
    }
    let mut csv = Csv::new("scienter", &cfg.metadata());
    csv.row(&["lambda", "prob_mc", "stderr", "prob_closed"]);
    for q in &points {
        csv.row(&[
            num(q.lambda),
            num(q.mc.estimate),
            num(q.mc.stderr),
            num(q.closed),
        ]);
    }
    Ok(csv.into_string())
}

fn mills(cfg: &RunConfig) -> Result<String, CliError> {
    let points = (1..=100)
        .map(|k| {
            let lambda = k as f64 / 8.0;
            Ok((lambda, mills_ratio_bc(&cfg.params.with_lambda(lambda)?)))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    if cfg.format == Format::Svg {
        return Ok(chart(
            "Mills ratio",
            "lambda",
            "ratio",
            vec![series("ratio", points)],
        ));
    }
    let mut csv = Csv::new("mills", &cfg.metadata());
    csv.row(&["lambda", "ratio"]);
    for (lambda, ratio) in points {
        csv.row(&[num(lambda), num(ratio)]);
    }
    Ok(csv.into_string())
}

/// Writes `text` to `path`, removing any partial file on failure.
pub fn write_artifact(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| {
        let _ = fs::remove_file(path);
        CliError::Write {
            path: path.to_path_buf(),
            source,
        }
    })
}

/// Runs the library checks plus the in-process determinism check.
pub fn run_selftest(sink: &mut dyn Write) -> io::Result<bool> {
    let mut all = true;
    for (id, _) in selftest::checks() {
        let report = selftest::run(id).expect("listed check exists");
        writeln!(sink, "{}", report.line())?;
        all &= report.passed;
    }
    let report = determinism_check();
    writeln!(sink, "{}", report.line())?;
    Ok(all && report.passed)
}

fn determinism_check() -> CheckReport {
    let start = Instant::now();
    let mut settings = Settings::defaults();
    settings.set("lambda", "2");
    settings.set("sigma", "4");
    let outcome = settings
        .resolve()
        .and_then(|cfg| Ok((render(Command::Zone, &cfg)?, render(Command::Zone, &cfg)?)));
    let (passed, detail) = match outcome {
        Ok((a, b)) if a == b => (
            true,
            format!("two zone renders identical ({} bytes)", a.len()),
        ),
        Ok(_) => (false, "two zone renders differ".into()),
        Err(e) => (false, format!("error: {e}")),
    };
    CheckReport {
        id: 12,
        name: "CLI determinism",
        passed,
        detail,
        elapsed: start.elapsed(),
    }
}

/// Executes a parsed command line. Returns `false` when selftest fails.
pub fn execute(
    cli: &Cli,
    env_path: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<bool, CliError> {
    let cfg = load_config(&cli.flags, env_path)?;
    if cli.command == Command::Selftest {
        return run_selftest(stdout).map_err(|source| CliError::Write {
            path: PathBuf::from("<stdout>"),
            source,
        });
    }
    let text = render(cli.command, &cfg)?;
    match &cfg.out_path {
        Some(path) => write_artifact(path, &text)?,
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Write {
                path: PathBuf::from("<stdout>"),
                source,
            })?,
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(pairs: &[(&str, &str)]) -> RunConfig {
        let mut s = Settings::defaults();
        for (k, v) in pairs {
            s.set(k, *v);
        }
        s.resolve().unwrap()
    }

    fn data_rows(text: &str) -> Vec<Vec<String>> {
        text.lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| l.split(',').map(str::to_string).collect())
            .collect()
    }

    #[test]
    fn curve_without_liability_or_arrivals_is_flat() {
        let text = render(
            Command::Curve,
            &cfg(&[("schedule", "zero"), ("lambda", "0")]),
        )
        .unwrap();
        let rows = data_rows(&text);
        assert_eq!(rows.len(), 401);
        assert!(rows.iter().all(|r| r[1] == "1" && r[2] == "1"));
    }

    #[test]
    fn curve_header_and_metadata() {
        let text = render(Command::Curve, &cfg(&[("grid", "3")])).unwrap();
        assert!(text.starts_with("# command = curve\n# lambda = 3\n"));
        assert!(text.contains("\nt,gamma,lower_cutoff\n"));
        assert_eq!(data_rows(&text).len(), 3);
    }

    #[test]
    fn switch_is_single_row() {
        let text = render(Command::Switch, &cfg(&[])).unwrap();
        let rows = data_rows(&text);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0][0], "sparing-first");
        let theta: f64 = rows[0][1].parse().unwrap();
        assert!((0.0..=1.0).contains(&theta));
    }

    #[test]
    fn switch_rejects_svg() {
        let err = render(Command::Switch, &cfg(&[("format", "svg")])).unwrap_err();
        assert!(matches!(err, CliError::Unsupported(_)));
    }

    #[test]
    fn zone_reports_bounds_in_header() {
        let text = render(Command::Zone, &cfg(&[("lambda", "2"), ("sigma", "4")])).unwrap();
        assert!(text.contains("# c_bar = 0.449"));
        assert!(text.contains("# c_under = none"));
        assert!(text.contains("\nc,theta,a_loss,a_gain,label,note\n"));
        let rows = data_rows(&text);
        let at = rows.iter().find(|r| r[0] == "0.2").expect("row at c = 0.2");
        let theta: f64 = at[1].parse().unwrap();
        assert!((theta - 0.3132).abs() < 5e-4, "{theta}");
    }

    #[test]
    fn mills_has_one_hundred_rows() {
        let text = render(Command::Mills, &cfg(&[])).unwrap();
        let rows = data_rows(&text);
        assert_eq!(rows.len(), 100);
        assert_eq!(rows[0][0], "0.125");
        assert_eq!(rows[99][0], "12.5");
    }

    #[test]
    fn scienter_small_run() {
        let text = render(
            Command::Scienter,
            &cfg(&[("regime", "candid-first"), ("samples", "2000")]),
        )
        .unwrap();
        let rows = data_rows(&text);
        assert_eq!(rows.len(), 10);
        for r in rows {
            let mc: f64 = r[1].parse().unwrap();
            let closed: f64 = r[3].parse().unwrap();
            assert!((0.0..=1.0).contains(&mc) && (0.0..=1.0).contains(&closed));
        }
    }

    #[test]
    fn svg_outputs_are_charts() {
        for command in [Command::Curve, Command::Zone, Command::Mills] {
            let text = render(command, &cfg(&[("format", "svg")])).unwrap();
            assert!(
                text.starts_with("<svg") && text.contains("<polyline"),
                "{}",
                command.name()
            );
        }
    }

    #[test]
    fn selftest_is_not_an_artifact() {
        assert!(render(Command::Selftest, &cfg(&[])).is_err());
    }
}
