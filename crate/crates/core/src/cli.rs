//! Command-line front end.
//!
//! Every command is a pure function of the resolved [`CliConfig`] and
//! returns CSV text; the binary only writes it out.
//!
//! Settings come from flags, then an optional TOML file (`--config`), then
//! the built-in defaults of the GNSS monitoring scenario. The file accepts
//! the flag names with underscores, e.g.
//!
//! ```toml
//! sensor_range = "2..16"
//! zeta_deg = 15.0
//! snr0_db = -24.0
//! snr1_db = -18.0
//! alpha = 1e-9
//! bandwidth_hz = 2.046e6
//! runs = 200
//! seed = 1
//! moment_cache = "moments"
//! ```

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::analysis::analyze;
use crate::array_model::{db_to_amplitude, ScenarioConfig};
use crate::binary_model::MomentCache;
use crate::error::{Error, Result};
use crate::montecarlo::{
    run_experiment_with_cache, write_summary_csv, write_trajectory_csv, ExperimentReport, ExperimentSpec, Receiver,
    Truth,
};

pub const DEFAULT_TABLE_ALPHA: f64 = 1e-9;
pub const DEFAULT_SIM_ALPHA: f64 = 1e-3;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_HORIZON_MS: f64 = 1.4;
pub const DEFAULT_ONEBIT_SENSORS: usize = 16;
pub const DEFAULT_IDEAL_SENSORS: usize = 8;
pub const DEFAULT_SENSOR_RANGE: (usize, usize) = (2, 16);

#[derive(Debug, Parser)]
#[command(
    name = "onebit-sprt",
    version,
    about = "Sequential detection of a random source with a 1-bit quantized uniform linear array",
    long_about = "Analytic latency/efficiency tables and Monte-Carlo simulations of the \
                  approximate SPRT for sign-quantized array data.\n\n\
                  Defaults describe GNSS L1 interference monitoring: arrival angle 15 deg, \
                  SNR -24 dB (H0) vs -18 dB (H1), two-sided bandwidth 2.046 MHz sampled at \
                  f_s = B, alpha = 1e-9 for tables and 1e-3 for simulations, 200 runs. \
                  SNRs in dB are power ratios: gamma = 10^(dB/20)."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic average detection latency (ms) of 1-bit and ideal receivers vs. S.
    AsnTable(Settings),
    /// Analytic efficiency χ = ASN_ideal / ASN_1bit vs. S (independent of alpha).
    Efficiency(Settings),
    /// Monte-Carlo mean LLR trajectories: 1-bit S=16 and ideal S=8 under both hypotheses.
    Simulate(Settings),
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// TOML file with default values for any of these settings.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Single array size S.
    #[arg(long, conflicts_with = "sensor_range")]
    pub sensors: Option<usize>,
    /// Inclusive sweep of array sizes, "A..B" [default: 2..16].
    #[arg(long)]
    pub sensor_range: Option<String>,
    /// Arrival angle in degrees [default: 15].
    #[arg(long, allow_hyphen_values = true)]
    pub zeta_deg: Option<f64>,
    /// Source SNR under H0 in dB [default: -24].
    #[arg(long, allow_hyphen_values = true)]
    pub snr0_db: Option<f64>,
    /// Source SNR under H1 in dB [default: -18].
    #[arg(long, allow_hyphen_values = true)]
    pub snr1_db: Option<f64>,
    /// Common error bound alpha1 = alpha2 [default: 1e-9 tables, 1e-3 simulate].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Bound on P(decide H0 | H1); overrides --alpha.
    #[arg(long)]
    pub alpha1: Option<f64>,
    /// Bound on P(decide H1 | H0); overrides --alpha.
    #[arg(long)]
    pub alpha2: Option<f64>,
    /// Two-sided bandwidth in Hz, also the sampling rate [default: 2.046e6].
    #[arg(long)]
    pub bandwidth_hz: Option<f64>,
    /// Monte-Carlo runs per series [default: 200].
    #[arg(long)]
    pub runs: Option<u64>,
    /// Master RNG seed; run r uses seed + r [default: 1].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Hard cap on test length [default: 100 x analytic ASN].
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Trajectory window in ms [default: 1.4].
    #[arg(long)]
    pub horizon_ms: Option<f64>,
    /// Array size of the simulated 1-bit receiver [default: 16].
    #[arg(long)]
    pub onebit_sensors: Option<usize>,
    /// Array size of the simulated ideal receiver [default: 8].
    #[arg(long)]
    pub ideal_sensors: Option<usize>,
    /// Output file (tables) or directory (simulate). Tables go to stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory caching statistics moments between invocations.
    #[arg(long)]
    pub moment_cache: Option<PathBuf>,
}

impl Settings {
    /// Fills unset fields from `other`.
    fn or(self, other: Settings) -> Settings {
        let sweep_set = self.sensors.is_some() || self.sensor_range.is_some();
        Settings {
            config: self.config.or(other.config),
            sensors: if sweep_set { self.sensors } else { other.sensors },
            sensor_range: if sweep_set {
                self.sensor_range
            } else {
                other.sensor_range
            },
            zeta_deg: self.zeta_deg.or(other.zeta_deg),
            snr0_db: self.snr0_db.or(other.snr0_db),
            snr1_db: self.snr1_db.or(other.snr1_db),
            alpha: self.alpha.or(other.alpha),
            alpha1: self.alpha1.or(other.alpha1),
            alpha2: self.alpha2.or(other.alpha2),
            bandwidth_hz: self.bandwidth_hz.or(other.bandwidth_hz),
            runs: self.runs.or(other.runs),
            seed: self.seed.or(other.seed),
            max_steps: self.max_steps.or(other.max_steps),
            horizon_ms: self.horizon_ms.or(other.horizon_ms),
            onebit_sensors: self.onebit_sensors.or(other.onebit_sensors),
            ideal_sensors: self.ideal_sensors.or(other.ideal_sensors),
            out: self.out.or(other.out),
            moment_cache: self.moment_cache.or(other.moment_cache),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    AsnTable,
    Efficiency,
    Simulate,
}

/// Fully resolved settings.
#[derive(Clone, Debug, PartialEq)]
pub struct CliConfig {
    pub sensors: Vec<usize>,
    pub zeta_deg: f64,
    pub snr0_db: f64,
    pub snr1_db: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub bandwidth_hz: f64,
    pub runs: u64,
    pub seed: u64,
    pub max_steps: Option<u64>,
    pub horizon_ms: f64,
    pub onebit_sensors: usize,
    pub ideal_sensors: usize,
    pub out: Option<PathBuf>,
    pub moment_cache: Option<PathBuf>,
}

pub fn parse_sensor_range(s: &str) -> Result<(usize, usize)> {
    let bad = || {
        Error::Config(format!(
            "invalid sensor range {s:?}; expected \"A..B\" with 1 <= A <= B"
        ))
    };
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || a > b {
        return Err(bad());
    }
    Ok((a, b))
}

pub fn load_config_file(path: &Path) -> Result<Settings> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

impl CliConfig {
    pub fn resolve(flags: Settings, kind: CommandKind) -> Result<Self> {
        let file = match &flags.config {
            Some(p) => load_config_file(p)?,
            None => Settings::default(),
        };
        let s = flags.or(file);
        let sensors = match (s.sensors, &s.sensor_range) {
            (Some(n), _) => vec![n],
            (None, Some(r)) => {
                let (a, b) = parse_sensor_range(r)?;
                (a..=b).collect()
            }
            (None, None) => (DEFAULT_SENSOR_RANGE.0..=DEFAULT_SENSOR_RANGE.1).collect(),
        };
        let default_alpha = match kind {
            CommandKind::Simulate => DEFAULT_SIM_ALPHA,
            _ => DEFAULT_TABLE_ALPHA,
        };
        let alpha = s.alpha.unwrap_or(default_alpha);
        let cfg = CliConfig {
            sensors,
            zeta_deg: s.zeta_deg.unwrap_or(ScenarioConfig::DEFAULT_ZETA_DEG),
            snr0_db: s.snr0_db.unwrap_or(ScenarioConfig::DEFAULT_SNR0_DB),
            snr1_db: s.snr1_db.unwrap_or(ScenarioConfig::DEFAULT_SNR1_DB),
            alpha1: s.alpha1.unwrap_or(alpha),
            alpha2: s.alpha2.unwrap_or(alpha),
            bandwidth_hz: s.bandwidth_hz.unwrap_or(ScenarioConfig::DEFAULT_BANDWIDTH_HZ),
            runs: s.runs.unwrap_or(crate::montecarlo::DEFAULT_RUNS),
            seed: s.seed.unwrap_or(DEFAULT_SEED),
            max_steps: s.max_steps,
            horizon_ms: s.horizon_ms.unwrap_or(DEFAULT_HORIZON_MS),
            onebit_sensors: s.onebit_sensors.unwrap_or(DEFAULT_ONEBIT_SENSORS),
            ideal_sensors: s.ideal_sensors.unwrap_or(DEFAULT_IDEAL_SENSORS),
            out: s.out,
            moment_cache: s.moment_cache,
        };
        if cfg.sensors.contains(&0) || cfg.onebit_sensors == 0 || cfg.ideal_sensors == 0 {
            return Err(Error::ZeroSensors);
        }
        if !(cfg.horizon_ms > 0.0) {
            return Err(Error::NonPositive {
                what: "horizon",
                value: cfg.horizon_ms,
            });
        }
        if cfg.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        cfg.scenario(cfg.sensors[0]).validate()?;
        Ok(cfg)
    }

    pub fn scenario(&self, sensors: usize) -> ScenarioConfig {
        ScenarioConfig {
            sensors,
            zeta: self.zeta_deg.to_radians(),
            gamma0: db_to_amplitude(self.snr0_db),
            gamma1: db_to_amplitude(self.snr1_db),
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            bandwidth_hz: self.bandwidth_hz,
            seed: self.seed,
            max_steps: self.max_steps,
        }
    }

    fn cache(&self) -> Result<Option<MomentCache>> {
        self.moment_cache.as_ref().map(MomentCache::new).transpose()
    }

    /// Trajectory length in samples covering `horizon_ms`.
    pub fn horizon_steps(&self) -> u64 {
        (self.horizon_ms * 1e-3 * self.bandwidth_hz).ceil() as u64
    }
}

fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub const ASN_TABLE_HEADER: [&str; 5] = [
    "S",
    "latency_1bit_gamma0_ms",
    "latency_1bit_gamma1_ms",
    "latency_ideal_gamma0_ms",
    "latency_ideal_gamma1_ms",
];

pub const EFFICIENCY_HEADER: [&str; 3] = ["S", "chi_gamma0", "chi_gamma1"];

/// Rows `(S, Δ_1bit(γ0), Δ_1bit(γ1), Δ_ideal(γ0), Δ_ideal(γ1))` in ms.
pub fn cmd_asn_table(cfg: &CliConfig) -> Result<String> {
    let cache = cfg.cache()?;
    let mut rows = Vec::new();
    for &s in &cfg.sensors {
        let sc = cfg.scenario(s);
        let a = analyze(&sc, cache.as_ref())?;
        let (i0, i1) = a.ideal_latency(sc.bandwidth_hz);
        log::info!("asn-table: S = {s} done");
        rows.push(vec![
            s.to_string(),
            (a.report.latency0 * 1e3).to_string(),
            (a.report.latency1 * 1e3).to_string(),
            (i0 * 1e3).to_string(),
            (i1 * 1e3).to_string(),
        ]);
    }
    csv_string(&ASN_TABLE_HEADER, &rows)
}

/// Rows `(S, χ(γ0), χ(γ1))`.
pub fn cmd_efficiency(cfg: &CliConfig) -> Result<String> {
    let cache = cfg.cache()?;
    let mut rows = Vec::new();
    for &s in &cfg.sensors {
        let a = analyze(&cfg.scenario(s), cache.as_ref())?;
        log::info!("efficiency: S = {s} done");
        rows.push(vec![
            s.to_string(),
            a.report.efficiency0.to_string(),
            a.report.efficiency1.to_string(),
        ]);
    }
    csv_string(&EFFICIENCY_HEADER, &rows)
}

pub struct SimulationOutput {
    pub reports: Vec<ExperimentReport>,
    /// `(file name, CSV text)` per series.
    pub trajectories: Vec<(String, String)>,
    pub summary: String,
}

pub fn trajectory_file_name(r: &ExperimentReport) -> String {
    format!("trajectory_S{}_{}_{}.csv", r.sensors, r.receiver, r.truth)
}

/// Four series: 1-bit receiver with `onebit_sensors` and ideal receiver with
/// `ideal_sensors`, each under H0 and H1.
pub fn cmd_simulate(cfg: &CliConfig) -> Result<SimulationOutput> {
    let cache = cfg.cache()?;
    let mut reports = Vec::new();
    for (receiver, sensors) in [
        (Receiver::OneBit, cfg.onebit_sensors),
        (Receiver::Ideal, cfg.ideal_sensors),
    ] {
        for truth in [Truth::H0, Truth::H1] {
            let spec = ExperimentSpec {
                scenario: cfg.scenario(sensors),
                runs: cfg.runs,
                truth,
                receiver,
                horizon: Some(cfg.horizon_steps()),
            };
            let r = run_experiment_with_cache(&spec, cache.as_ref())?;
            log::info!(
                "simulate: S = {sensors} {receiver} {truth}: ASN {:.1} (analytic {:.1})",
                r.empirical_asn.mean,
                r.analytic_asn
            );
            reports.push(r);
        }
    }
    let mut trajectories = Vec::new();
    for r in &reports {
        let mut buf = Vec::new();
        write_trajectory_csv(r, &mut buf)?;
        trajectories.push((
            trajectory_file_name(r),
            String::from_utf8(buf).expect("csv output is utf-8"),
        ));
    }
    let mut buf = Vec::new();
    write_summary_csv(&reports, &mut buf)?;
    Ok(SimulationOutput {
        reports,
        trajectories,
        summary: String::from_utf8(buf).expect("csv output is utf-8"),
    })
}

pub const DEFAULT_SIM_DIR: &str = "simulation";

/// Executes a parsed command line, writing outputs to disk or stdout.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::AsnTable(s) => {
            let cfg = CliConfig::resolve(s, CommandKind::AsnTable)?;
            emit_table(&cmd_asn_table(&cfg)?, cfg.out.as_deref())
        }
        Command::Efficiency(s) => {
            let cfg = CliConfig::resolve(s, CommandKind::Efficiency)?;
            emit_table(&cmd_efficiency(&cfg)?, cfg.out.as_deref())
        }
        Command::Simulate(s) => {
            let cfg = CliConfig::resolve(s, CommandKind::Simulate)?;
            let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_SIM_DIR));
            let sim = cmd_simulate(&cfg)?;
            std::fs::create_dir_all(&out)?;
            for (name, text) in &sim.trajectories {
                std::fs::write(out.join(name), text)?;
            }
            std::fs::write(out.join("summary.csv"), &sim.summary)?;
            print!("{}", sim.summary);
            Ok(())
        }
    }
}

fn emit_table(csv: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sensor_range_parsing() {
        assert_eq!(parse_sensor_range("2..16").unwrap(), (2, 16));
        assert_eq!(parse_sensor_range("3..=5").unwrap(), (3, 5));
        assert!(parse_sensor_range("0..4").is_err());
        assert!(parse_sensor_range("5..4").is_err());
        assert!(parse_sensor_range("7").is_err());
    }

    #[test]
    fn defaults_per_command() {
        let t = CliConfig::resolve(Settings::default(), CommandKind::Efficiency).unwrap();
        assert_eq!(t.sensors, (2..=16).collect::<Vec<_>>());
        assert_eq!((t.alpha1, t.alpha2), (1e-9, 1e-9));
        let s = CliConfig::resolve(Settings::default(), CommandKind::Simulate).unwrap();
        assert_eq!(s.alpha1, 1e-3);
        assert_eq!(s.horizon_steps(), 2865);
        assert_eq!(s.scenario(4).zeta, 15f64.to_radians());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(
            &path,
            "sensor_range = \"3..5\"\nsnr1_db = -12.0\nalpha = 0.01\nseed = 9\n",
        )
        .unwrap();
        let flags = Settings {
            config: Some(path.clone()),
            seed: Some(4),
            alpha1: Some(0.02),
            ..Default::default()
        };
        let c = CliConfig::resolve(flags, CommandKind::AsnTable).unwrap();
        assert_eq!(c.sensors, vec![3, 4, 5]);
        assert_eq!(c.snr1_db, -12.0);
        assert_eq!((c.alpha1, c.alpha2), (0.02, 0.01));
        assert_eq!(c.seed, 4);
        let flags = Settings {
            config: Some(path),
            sensors: Some(7),
            ..Default::default()
        };
        assert_eq!(
            CliConfig::resolve(flags, CommandKind::AsnTable).unwrap().sensors,
            vec![7]
        );
        std::fs::write(dir.path().join("single.toml"), "sensors = 9\n").unwrap();
        let flags = Settings {
            config: Some(dir.path().join("single.toml")),
            sensor_range: Some("2..3".into()),
            ..Default::default()
        };
        assert_eq!(
            CliConfig::resolve(flags, CommandKind::AsnTable).unwrap().sensors,
            vec![2, 3]
        );
    }

    #[test]
    fn unknown_file_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, "sensorz = 3\n").unwrap();
        let flags = Settings {
            config: Some(path),
            ..Default::default()
        };
        assert!(matches!(
            CliConfig::resolve(flags, CommandKind::AsnTable),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn invalid_settings_rejected() {
        let bad_alpha = Settings {
            alpha: Some(0.7),
            ..Default::default()
        };
        assert!(CliConfig::resolve(bad_alpha, CommandKind::Efficiency).is_err());
        let bad_snr = Settings {
            snr0_db: Some(-10.0),
            snr1_db: Some(-20.0),
            ..Default::default()
        };
        assert!(CliConfig::resolve(bad_snr, CommandKind::Efficiency).is_err());
        let bad_range = Settings {
            sensor_range: Some("4..2".into()),
            ..Default::default()
        };
        assert!(CliConfig::resolve(bad_range, CommandKind::Efficiency).is_err());
    }

    #[test]
    fn tables_have_header_and_rows() {
        let flags = Settings {
            sensor_range: Some("2..4".into()),
            ..Default::default()
        };
        let cfg = CliConfig::resolve(flags, CommandKind::AsnTable).unwrap();
        let t = cmd_asn_table(&cfg).unwrap();
        let lines: Vec<_> = t.lines().collect();
        assert_eq!(lines[0], ASN_TABLE_HEADER.join(","));
        assert_eq!(lines.len(), 4);
        let e = cmd_efficiency(&cfg).unwrap();
        assert!(e.starts_with("S,chi_gamma0,chi_gamma1\n2,"));
    }

    #[test]
    fn cli_parses_negative_db() {
        let cli = Cli::try_parse_from(["onebit-sprt", "efficiency", "--snr0-db", "-30", "--sensors", "3"]).unwrap();
        match cli.command {
            Command::Efficiency(s) => {
                assert_eq!(s.snr0_db, Some(-30.0));
                assert_eq!(s.sensors, Some(3));
            }
            _ => panic!("wrong subcommand"),
        }
        assert!(
            Cli::try_parse_from(["onebit-sprt", "efficiency", "--sensors", "3", "--sensor-range", "2..4"]).is_err()
        );
    }
}
