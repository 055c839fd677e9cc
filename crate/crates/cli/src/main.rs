//! `thzsim` command-line front end.
//!
//! Every link, Monte Carlo and sweep parameter can come from a `--config`
//! file and/or a flag; flags win. Results go to `--out` (stdout by default)
//! in the chosen `--format`; validity warnings go to stderr. The exit status
//! is non-zero iff something failed.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use thzsim::atmosphere::absorption_coefficient;
use thzsim::channel::{db_to_linear, deterministic_gains, LinkConfig};
use thzsim::config::{parse_config, RunConfig};
use thzsim::experiments::{run_sweep, validity_check, Method, SweepRow, SweepSpec};
use thzsim::montecarlo::run_mc;
use thzsim::output::{fmt_f64, render, OutputFormat};
use thzsim::ser::{avg_ser_closed, avg_ser_quadrature, ser_params, QMode};

/// Environment variable capping the number of worker threads.
const THREADS_ENV: &str = "THZSIM_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "thzsim",
    version,
    about = "Terahertz line-of-sight link simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Options,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Molecular absorption coefficient over a frequency grid.
    Absorption,
    /// Gain breakdown (path loss, absorption, misalignment model) at one configuration.
    Channel,
    /// Closed-form and quadrature SER at one link over the SNR grid.
    Ser,
    /// One Monte Carlo run at `--snr-db`.
    Simulate,
    /// Full sweep over SNR, distance, jitter, scheme and method.
    Sweep,
    /// Report parameters outside the model's validity range.
    Validate,
}

#[derive(Args, Debug, Default)]
struct Options {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout if omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv, json or svg_plot.
    #[arg(long, global = true, default_value = "csv")]
    format: String,
    /// Extra `key=value` override; may be repeated.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    trials: Option<String>,
    /// symbol_level or semi_analytic.
    #[arg(long, global = true)]
    mode: Option<String>,
    #[arg(long, global = true)]
    chunk_size: Option<String>,
    #[arg(long, global = true)]
    confidence_level: Option<String>,

    /// Carrier frequency, Hz.
    #[arg(long, global = true)]
    frequency: Option<String>,
    /// Transmit antenna gain, dBi.
    #[arg(long, global = true)]
    gain_tx: Option<String>,
    /// Receive antenna gain, dBi.
    #[arg(long, global = true)]
    gain_rx: Option<String>,
    /// Link distance, m.
    #[arg(long, global = true)]
    distance: Option<String>,
    /// Receiver aperture radius, m.
    #[arg(long, global = true)]
    aperture_radius: Option<String>,
    /// Beam radius at the receiver, m.
    #[arg(long, global = true)]
    beam_waist: Option<String>,
    /// Pointing jitter (variance in m^2 or std dev in m).
    #[arg(long, global = true)]
    jitter: Option<String>,
    /// variance or std_dev.
    #[arg(long, global = true)]
    jitter_interpretation: Option<String>,
    /// Temperature, K.
    #[arg(long, global = true)]
    temperature: Option<String>,
    /// Pressure, Pa.
    #[arg(long, global = true)]
    pressure: Option<String>,
    /// Relative humidity, %.
    #[arg(long, global = true)]
    relative_humidity: Option<String>,

    /// bpsk or qpsk (single-point commands).
    #[arg(long, global = true)]
    scheme: Option<String>,
    /// Average SNR in dB (single-point commands).
    #[arg(long, global = true)]
    snr_db: Option<String>,
    #[arg(long, global = true)]
    snr_min: Option<String>,
    #[arg(long, global = true)]
    snr_max: Option<String>,
    #[arg(long, global = true)]
    snr_step: Option<String>,
    /// Comma-separated distances, m.
    #[arg(long, global = true)]
    distances: Option<String>,
    /// Comma-separated jitter values.
    #[arg(long, global = true)]
    jitters: Option<String>,
    /// Comma-separated schemes.
    #[arg(long, global = true)]
    schemes: Option<String>,
    /// Comma-separated methods: closed_form, quadrature_exact, mc_symbol, mc_semi.
    #[arg(long, global = true)]
    methods: Option<String>,

    /// Lowest absorption-table frequency, Hz.
    #[arg(long, global = true)]
    f_min: Option<String>,
    /// Highest absorption-table frequency, Hz.
    #[arg(long, global = true)]
    f_max: Option<String>,
    /// Absorption-table frequency step, Hz.
    #[arg(long, global = true)]
    step: Option<String>,
}

impl Options {
    fn overrides(&self) -> Result<Vec<(String, String)>, String> {
        let named = [
            ("seed", &self.seed),
            ("trials", &self.trials),
            ("mode", &self.mode),
            ("chunk_size", &self.chunk_size),
            ("confidence_level", &self.confidence_level),
            ("frequency", &self.frequency),
            ("gain_tx", &self.gain_tx),
            ("gain_rx", &self.gain_rx),
            ("distance", &self.distance),
            ("aperture_radius", &self.aperture_radius),
            ("beam_waist", &self.beam_waist),
            ("jitter", &self.jitter),
            ("jitter_interpretation", &self.jitter_interpretation),
            ("temperature", &self.temperature),
            ("pressure", &self.pressure),
            ("relative_humidity", &self.relative_humidity),
            ("scheme", &self.scheme),
            ("snr_db", &self.snr_db),
            ("snr_min", &self.snr_min),
            ("snr_max", &self.snr_max),
            ("snr_step", &self.snr_step),
            ("distances", &self.distances),
            ("jitters", &self.jitters),
            ("schemes", &self.schemes),
            ("methods", &self.methods),
            ("f_min", &self.f_min),
            ("f_max", &self.f_max),
            ("f_step", &self.step),
        ];
        let mut out = Vec::new();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        out.extend(
            named
                .into_iter()
                .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone()))),
        );
        Ok(out)
    }
}

/// Outcome of a subcommand: the rendered output plus whether any part failed.
struct Report {
    text: String,
    failed: bool,
}

fn warn(msg: impl std::fmt::Display) {
    eprintln!("warning: {msg}");
}

fn warn_validity(link: &LinkConfig) {
    for w in validity_check(link) {
        warn(w);
    }
}

/// Key/value output for single-point commands.
fn render_record(record: &[(&str, Value)], format: OutputFormat) -> Result<String, String> {
    match format {
        OutputFormat::Csv => {
            let mut s = String::from("key,value\n");
            for (k, v) in record {
                let v = match v {
                    Value::Number(n) => n
                        .as_f64()
                        .filter(|_| !n.is_u64() && !n.is_i64())
                        .map(fmt_f64)
                        .unwrap_or_else(|| n.to_string()),
                    Value::String(t) => t.clone(),
                    Value::Null => "NaN".to_string(),
                    other => other.to_string(),
                };
                s.push_str(&format!("{k},{v}\n"));
            }
            Ok(s)
        }
        OutputFormat::Json => {
            let map: serde_json::Map<String, Value> = record
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect();
            let mut s =
                serde_json::to_string_pretty(&Value::Object(map)).map_err(|e| e.to_string())?;
            s.push('\n');
            Ok(s)
        }
        OutputFormat::SvgPlot => {
            Err("svg_plot output is only available for `ser` and `sweep`".into())
        }
    }
}

fn cmd_absorption(cfg: &RunConfig, format: OutputFormat) -> Result<Report, String> {
    let conditions = cfg.link.conditions;
    let mut rows = Vec::new();
    let mut clamped = 0usize;
    for f in cfg.frequencies.points() {
        let b = absorption_coefficient(f, &conditions).map_err(|e| e.to_string())?;
        clamped += usize::from(b.clamped);
        rows.push(b);
    }
    if clamped > 0 {
        warn(format!(
            "{clamped} frequencies have a negative fitted coefficient; the effective coefficient is clamped to 0"
        ));
    }
    let text = match format {
        OutputFormat::Csv => {
            let mut s = String::from(
                "frequency_hz,g_term,y1_term,y2_term,coefficient,effective_coefficient,mixing_ratio,clamped\n",
            );
            for b in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    fmt_f64(b.frequency),
                    fmt_f64(b.g_term),
                    fmt_f64(b.y1_term),
                    fmt_f64(b.y2_term),
                    fmt_f64(b.coefficient),
                    fmt_f64(b.effective_coefficient()),
                    fmt_f64(b.mixing_ratio),
                    b.clamped
                ));
            }
            s
        }
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&rows).map_err(|e| e.to_string())?;
            s.push('\n');
            s
        }
        OutputFormat::SvgPlot => {
            return Err("svg_plot output is only available for `ser` and `sweep`".into())
        }
    };
    Ok(Report {
        text,
        failed: false,
    })
}

fn cmd_channel(cfg: &RunConfig, format: OutputFormat) -> Result<Report, String> {
    let link = &cfg.link;
    warn_validity(link);
    let absorption =
        absorption_coefficient(link.frequency, &link.conditions).map_err(|e| e.to_string())?;
    if absorption.clamped {
        warn("negative fitted absorption coefficient clamped to 0");
    }
    let gains = deterministic_gains(link).map_err(|e| e.to_string())?;
    let m = link.misalignment().map_err(|e| e.to_string())?;
    let record = [
        ("frequency_hz", json!(link.frequency)),
        ("distance_m", json!(link.distance)),
        (
            "absorption_coefficient",
            json!(absorption.effective_coefficient()),
        ),
        ("mixing_ratio", json!(absorption.mixing_ratio)),
        ("absorption_clamped", json!(absorption.clamped)),
        ("h_p", json!(gains.h_p)),
        ("h_a", json!(gains.h_a)),
        ("h_p_h_a", json!(gains.product)),
        ("sigma_r", json!(m.sigma_r)),
        ("u", json!(m.u)),
        ("w_eq", json!(m.w_eq)),
        ("a0", json!(m.a0)),
        ("gamma", json!(m.gamma)),
        ("mean_h_m", json!(m.mean_gain())),
    ];
    Ok(Report {
        text: render_record(&record, format)?,
        failed: false,
    })
}

fn report_rows(rows: &[SweepRow], format: OutputFormat) -> Result<Report, String> {
    let mut failed = false;
    for r in rows {
        if let Some(note) = &r.note {
            let what = format!(
                "{} {} d={} jitter={} snr={} dB: {note}",
                r.scheme, r.method, r.distance_m, r.jitter, r.snr_db
            );
            if r.is_error() {
                failed = true;
                eprintln!("error: {what}");
            } else {
                warn(what);
            }
        }
    }
    Ok(Report {
        text: render(rows, format).map_err(|e| e.to_string())?,
        failed,
    })
}

fn cmd_ser(cfg: &RunConfig, format: OutputFormat) -> Result<Report, String> {
    warn_validity(&cfg.link);
    let spec = SweepSpec {
        distances: vec![cfg.link.distance],
        jitter_values: vec![cfg.link.jitter_value],
        methods: vec![Method::ClosedForm, Method::QuadratureExact],
        ..cfg.sweep.clone()
    };
    let rows = run_sweep(&spec).map_err(|e| e.to_string())?;
    report_rows(&rows, format)
}

fn cmd_sweep(cfg: &RunConfig, format: OutputFormat) -> Result<Report, String> {
    for &d in &cfg.sweep.distances {
        for &j in &cfg.sweep.jitter_values {
            warn_validity(&LinkConfig {
                distance: d,
                jitter_value: j,
                ..cfg.link
            });
        }
    }
    let rows = run_sweep(&cfg.sweep).map_err(|e| e.to_string())?;
    report_rows(&rows, format)
}

fn cmd_simulate(cfg: &RunConfig, format: OutputFormat) -> Result<Report, String> {
    warn_validity(&cfg.link);
    let gains = deterministic_gains(&cfg.link).map_err(|e| e.to_string())?;
    let model = cfg.link.misalignment().map_err(|e| e.to_string())?;
    let avg_snr = db_to_linear(cfg.snr_db);
    let est = run_mc(&cfg.mc, cfg.scheme, avg_snr, &gains, &model).map_err(|e| e.to_string())?;
    if est.low_count_warning {
        warn("fewer than 10 symbol errors expected; the estimate is unreliable, raise --trials");
    }
    let params = ser_params(avg_snr, &gains, &model);
    let closed = avg_ser_closed(cfg.scheme, &params).map(|v| v.value);
    let exact =
        avg_ser_quadrature(cfg.scheme, avg_snr, &gains, &model, QMode::Exact).map(|v| v.value);
    let mut failed = false;
    let mut value_or_note = |r: thzsim::Result<f64>| match r {
        Ok(v) => json!(v),
        Err(e) => {
            eprintln!("error: {e}");
            failed = true;
            Value::Null
        }
    };
    let closed = value_or_note(closed);
    let exact = value_or_note(exact);
    let record = [
        ("scheme", json!(cfg.scheme.as_str())),
        ("mode", json!(est.mode.as_str())),
        ("snr_db", json!(cfg.snr_db)),
        ("seed", json!(est.seed)),
        ("num_trials", json!(est.num_trials)),
        ("num_errors", json!(est.num_errors)),
        ("ser", json!(est.ser)),
        ("half_width", json!(est.half_width)),
        ("confidence_level", json!(cfg.mc.confidence_level)),
        ("closed_form", closed),
        ("quadrature_exact", exact),
    ];
    Ok(Report {
        text: render_record(&record, format)?,
        failed,
    })
}

fn cmd_validate(cfg: &RunConfig, format: OutputFormat) -> Result<Report, String> {
    let warnings = validity_check(&cfg.link);
    for w in &warnings {
        warn(w);
    }
    let text = match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&warnings).map_err(|e| e.to_string())?;
            s.push('\n');
            s
        }
        OutputFormat::Csv => {
            let mut s = String::from("warning\n");
            for w in &warnings {
                s.push_str(&format!("\"{}\"\n", w.to_string().replace('"', "\"\"")));
            }
            s
        }
        OutputFormat::SvgPlot => {
            return Err("svg_plot output is only available for `ser` and `sweep`".into())
        }
    };
    Ok(Report {
        text,
        failed: false,
    })
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<bool, String> {
    configure_threads()?;
    let format: OutputFormat = cli.opts.format.parse()?;
    let overrides = cli.opts.overrides()?;
    let cfg = parse_config(cli.opts.config.as_deref(), &overrides).map_err(|e| e.to_string())?;

    let report = match cli.command {
        Command::Absorption => cmd_absorption(&cfg, format),
        Command::Channel => cmd_channel(&cfg, format),
        Command::Ser => cmd_ser(&cfg, format),
        Command::Simulate => cmd_simulate(&cfg, format),
        Command::Sweep => cmd_sweep(&cfg, format),
        Command::Validate => cmd_validate(&cfg, format),
    }?;

    match &cli.opts.out {
        Some(path) => std::fs::write(path, report.text.as_bytes())
            .map_err(|e| format!("{}: {e}", path.display()))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(report.text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| e.to_string())?;
        }
    }
    Ok(!report.failed)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
