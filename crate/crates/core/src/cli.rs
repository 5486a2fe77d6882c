//! Command-line surface. Every subcommand is a thin shell over one library
//! operation; results go to `--out` or standard output.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::canonical::{
    cumulants, mean_energy_scan, metropolis_chain, pooled_mean, reweight, CanonicalConfig,
    EnergySamples, DEFAULT_TARGET_ACCEPTANCE,
};
use crate::entanglement::{potential, purity, purity_profile};
use crate::error::{Error, Result};
use crate::mmes::{anneal, certify_state, AnnealSchedule, Direction, Spacing};
use crate::partition::Bipartition;
use crate::qstate::{set_max_qubits, PureState, BINARY_MAGIC, DEFAULT_MAX_QUBITS};
use crate::theory::{
    asymptotic_kappa2, balanced_mean, balanced_variance, gaussian_prediction, known_minimum,
    Histogram, DEFAULT_BINS,
};
use crate::State;

/// Environment variable that overrides the qubit cap.
pub const MAX_N_ENV: &str = "MMES_MAX_N";

#[derive(Parser, Debug)]
#[command(name = "mmes", version, about = "Multipartite entanglement: purities, canonical sampling and MMES search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw a Haar-random state
    HaarSample {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        io: Output,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Purity of one bipartition of a stored state
    Purity {
        #[arg(long = "in")]
        input: PathBuf,
        /// Qubit list (`0,2`) or mask (`0b101`, `0x5`, `mask:5`)
        #[arg(long)]
        partition: String,
        #[command(flatten)]
        io: Output,
    },
    /// Purities over all balanced bipartitions
    Profile {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        io: Output,
    },
    /// Potential of multipartite entanglement H
    Potential {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        io: Output,
    },
    /// Metropolis sampling of exp(-beta H)
    Canonical {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        io: Output,
    },
    /// Mean energy over a list of inverse temperatures
    BetaScan {
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        betas: Vec<f64>,
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        io: Output,
    },
    /// Reweight `step,E` samples from beta0 to beta
    Reweight {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        beta0: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        #[command(flatten)]
        io: Output,
    },
    /// Cumulants of `step,E` samples
    Cumulants {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        max_order: usize,
        #[command(flatten)]
        io: Output,
    },
    /// Anneal toward the minimum (MMES) or maximum of H
    Anneal {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 1.0)]
        beta_start: f64,
        #[arg(long, default_value_t = 1e5)]
        beta_end: f64,
        #[arg(long, default_value_t = 60)]
        levels: usize,
        #[arg(long, default_value_t = 2000)]
        sweeps: usize,
        #[arg(long, value_enum, default_value_t = DirectionArg::Min)]
        direction: DirectionArg,
        #[arg(long)]
        linear: bool,
        #[arg(long)]
        no_polish: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        io: Output,
    },
    /// Recompute and check the profile of a state or anneal report
    Certify {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        io: Output,
    },
    /// Closed-form typical-state predictions
    Theory {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        beta: f64,
        #[command(flatten)]
        io: Output,
    },
    /// Histogram of `step,E` samples as plot data
    Hist {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        #[command(flatten)]
        io: Output,
    },
}

#[derive(Args, Debug, Clone)]
pub struct Output {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug, Clone)]
pub struct ChainArgs {
    #[arg(long, default_value_t = 110_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 10_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 10)]
    pub thin: usize,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    #[arg(long, default_value_t = 0.05)]
    pub step_size: f64,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Binary,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionArg {
    Min,
    Max,
}

/// Parses `argv` (program name first), runs one subcommand and returns the
/// exit code.
pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    dispatch_to(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn dispatch_to<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match std::env::var(MAX_N_ENV) {
        Ok(v) => match v.parse() {
            Ok(cap) => set_max_qubits(cap),
            Err(_) => {
                let _ = writeln!(err, "error: {MAX_N_ENV} must be an integer, got {v:?}");
                return 2;
            }
        },
        Err(_) => set_max_qubits(DEFAULT_MAX_QUBITS),
    }
    match run(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn resolve_seed(seed: Option<u64>, err: &mut dyn Write) -> u64 {
    let seed = seed.unwrap_or_else(|| {
        let t = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .unwrap_or_default();
        t.as_nanos() as u64 ^ (std::process::id() as u64) << 32
    });
    let _ = writeln!(err, "seed = {seed}");
    seed
}

fn emit(io: &Output, bytes: &[u8], out: &mut dyn Write) -> Result<()> {
    match &io.out {
        Some(path) => std::fs::write(path, bytes)?,
        None => out.write_all(bytes)?,
    }
    Ok(())
}

fn emit_json<T: Serialize>(io: &Output, value: &T, out: &mut dyn Write) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(io, text.as_bytes(), out)
}

fn format_or(io: &Output, default: Format, allowed: &[Format]) -> Result<Format> {
    let f = io.format.unwrap_or(default);
    if !allowed.contains(&f) {
        return Err(Error::Domain(format!("format {f:?} not supported here")));
    }
    Ok(f)
}

/// Reads a state from a binary file, a JSON state, or a JSON anneal report.
pub fn read_state(path: &Path) -> Result<State> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(&BINARY_MAGIC) {
        return PureState::from_binary(&bytes);
    }
    let text = std::str::from_utf8(&bytes).map_err(|_| Error::Format("state file is not UTF-8".into()))?;
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("bad JSON: {e}")))?;
    match value.get("state") {
        Some(inner) => PureState::from_json(&inner.to_string()),
        None => PureState::from_json(text),
    }
}

/// Qubit list (`0,2,3`) or mask (`0b1101`, `0xd`, `mask:13`).
pub fn parse_partition(spec: &str, n: usize) -> Result<Bipartition> {
    let s = spec.trim();
    let mask = if let Some(bits) = s.strip_prefix("0b") {
        Some(u64::from_str_radix(bits, 2))
    } else if let Some(hex) = s.strip_prefix("0x") {
        Some(u64::from_str_radix(hex, 16))
    } else {
        s.strip_prefix("mask:").map(|dec| dec.parse::<u64>())
    };
    if let Some(mask) = mask {
        let mask = mask.map_err(|_| Error::Domain(format!("bad partition mask {spec:?}")))?;
        return Bipartition::new(n, mask);
    }
    let qubits = s
        .split(',')
        .map(|q| q.trim().parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::Domain(format!("bad qubit list {spec:?}")))?;
    Bipartition::from_qubits(n, &qubits)
}

fn chain_config(beta: f64, c: &ChainArgs, err: &mut dyn Write) -> Result<CanonicalConfig> {
    let config = CanonicalConfig {
        beta,
        steps: c.steps,
        burn_in: c.burn_in,
        thin: c.thin,
        step_size: c.step_size,
        adapt: Some(DEFAULT_TARGET_ACCEPTANCE),
        seed: resolve_seed(c.seed, err),
        chains: c.chains,
    };
    config.validate()?;
    Ok(config)
}

fn read_samples(path: &Path, beta0: f64) -> Result<EnergySamples> {
    EnergySamples::from_csv(&std::fs::read_to_string(path)?, beta0, 0)
}

fn run(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match command {
        Command::HaarSample { n, io, seed } => {
            let format = format_or(&io, Format::Json, &[Format::Json, Format::Binary])?;
            let seed = resolve_seed(seed, err);
            let state = State::haar_sample(n, seed)?;
            match format {
                Format::Binary => emit(&io, &state.to_binary(), out),
                _ => emit(&io, format!("{}\n", state.to_json()).as_bytes(), out),
            }
        }
        Command::Purity { input, partition, io } => {
            format_or(&io, Format::Json, &[Format::Json])?;
            let state = read_state(&input)?;
            let b = parse_partition(&partition, state.n())?;
            let p = purity(&state, &b)?;
            emit_json(&io, &json!({ "n": state.n(), "mask": b.mask(), "qubits": b.qubits(), "purity": p }), out)
        }
        Command::Profile { input, io } => {
            format_or(&io, Format::Json, &[Format::Json])?;
            let state = read_state(&input)?;
            emit_json(&io, &purity_profile(&state)?, out)
        }
        Command::Potential { input, io } => {
            format_or(&io, Format::Json, &[Format::Json])?;
            let state = read_state(&input)?;
            emit_json(&io, &json!({ "n": state.n(), "energy": potential(&state)? }), out)
        }
        Command::Canonical { n, beta, chain, io } => {
            let format = format_or(&io, Format::Json, &[Format::Json, Format::Csv])?;
            let config = chain_config(beta, &chain, err)?;
            let chains = metropolis_chain(n, &config)?;
            if chains.iter().any(|c| c.meta.low_acceptance) {
                let _ = writeln!(err, "warning: acceptance rate below 1% after adaptation");
            }
            let pooled = EnergySamples::concat(&chains)?;
            match format {
                Format::Csv => {
                    let mut text = String::from("step,E\n");
                    for c in &chains {
                        text.push_str(c.to_csv().split_once('\n').map_or("", |(_, rest)| rest));
                    }
                    emit(&io, text.as_bytes(), out)
                }
                _ => {
                    let (mean, se) = pooled_mean(&chains)?;
                    let summary = pooled.summary();
                    emit_json(
                        &io,
                        &json!({
                            "beta": beta,
                            "n": n,
                            "seed": config.seed,
                            "chains": config.chains,
                            "samples": pooled.len(),
                            "mean": mean,
                            "se": se,
                            "ess": summary.ess,
                            "acceptance": pooled.acceptance,
                            "low_acceptance": pooled.meta.low_acceptance,
                        }),
                        out,
                    )
                }
            }
        }
        Command::BetaScan { n, betas, chain, io } => {
            let format = format_or(&io, Format::Json, &[Format::Json, Format::Csv])?;
            let config = chain_config(0.0, &chain, err)?;
            let rows = mean_energy_scan(n, &betas, &config)?;
            match format {
                Format::Csv => {
                    let mut text = String::from("beta,mean,se\n");
                    for r in &rows {
                        text.push_str(&format!("{},{},{}\n", r.beta, r.mean, r.se));
                    }
                    emit(&io, text.as_bytes(), out)
                }
                _ => emit_json(&io, &rows, out),
            }
        }
        Command::Reweight { input, beta0, beta, bins, io } => {
            let format = format_or(&io, Format::Json, &[Format::Json, Format::Csv])?;
            let samples = read_samples(&input, beta0)?;
            let r = reweight(&samples, beta, bins)?;
            match format {
                Format::Csv => emit(&io, r.histogram.to_csv().as_bytes(), out),
                _ => emit_json(
                    &io,
                    &json!({ "beta0": r.beta0, "beta": r.beta, "mean": r.mean, "se": r.se, "ess": r.ess }),
                    out,
                ),
            }
        }
        Command::Cumulants { input, max_order, io } => {
            format_or(&io, Format::Json, &[Format::Json])?;
            let samples = read_samples(&input, 0.0)?;
            emit_json(&io, &cumulants(&samples.energies, max_order)?, out)
        }
        Command::Anneal {
            n,
            restarts,
            beta_start,
            beta_end,
            levels,
            sweeps,
            direction,
            linear,
            no_polish,
            seed,
            io,
        } => {
            let format = format_or(&io, Format::Json, &[Format::Json, Format::Binary])?;
            if format == Format::Binary && io.out.is_none() {
                return Err(Error::Domain("binary output needs --out".into()));
            }
            let schedule = AnnealSchedule {
                beta_start,
                beta_end,
                levels,
                sweeps_per_level: sweeps,
                spacing: if linear { Spacing::Linear } else { Spacing::Geometric },
                restarts,
                polish: !no_polish,
                seed: resolve_seed(seed, err),
                ..Default::default()
            };
            let direction = match direction {
                DirectionArg::Min => Direction::Minimize,
                DirectionArg::Max => Direction::Maximize,
            };
            let result = anneal(n, &schedule, direction)?;
            let report = certify_state(&result.state)?;
            let state: serde_json::Value = serde_json::from_str(&result.state.to_json())?;
            let doc = json!({
                "n": n,
                "direction": direction,
                "seed": schedule.seed,
                "schedule": schedule,
                "energy": result.energy,
                "gap": result.gap,
                "spread": report.spread,
                "gradient_norm": report.gradient_norm,
                "perfect": report.perfect,
                "restart": result.restart,
                "sweep": result.sweep,
                "masks": report.masks,
                "purities": report.purities,
                "state": state,
            });
            if format == Format::Binary {
                emit(&io, &result.state.to_binary(), out)?;
                let stdout_only = Output { out: None, format: None };
                return emit_json(&stdout_only, &doc, out);
            }
            emit_json(&io, &doc, out)
        }
        Command::Certify { input, io } => {
            format_or(&io, Format::Json, &[Format::Json])?;
            let state = read_state(&input)?;
            emit_json(&io, &certify_state(&state)?, out)
        }
        Command::Theory { n, beta, io } => {
            format_or(&io, Format::Json, &[Format::Json])?;
            if n < 2 {
                return Err(Error::Domain(format!("need at least 2 qubits, got {n}")));
            }
            let mu = balanced_mean(n)?;
            let sigma2 = balanced_variance(n)?;
            let kappa2 = asymptotic_kappa2(n)?;
            let model = gaussian_prediction(mu, kappa2, beta)?;
            emit_json(
                &io,
                &json!({
                    "n": n,
                    "n_a": n / 2,
                    "n_abar": n - n / 2,
                    "mu": mu,
                    "sigma2": sigma2,
                    "kappa2_asymptotic": kappa2,
                    "beta_star": model.beta_star(),
                    "beta": beta,
                    "predicted_mean": model.mean(),
                    "floor": 1.0 / (1u64 << (n / 2)) as f64,
                    "known_minimum": known_minimum(n),
                }),
                out,
            )
        }
        Command::Hist { input, bins, io } => {
            let format = format_or(&io, Format::Csv, &[Format::Json, Format::Csv])?;
            let samples = read_samples(&input, 0.0)?;
            let h = Histogram::from_samples(&samples.energies, bins)?.normalized();
            match format {
                Format::Json => emit_json(&io, &h.plot_data(), out),
                _ => emit(&io, h.to_csv().as_bytes(), out),
            }
        }
    }
}
