//! `eitpt`: dispersion scans, potential design, propagation and band spectra.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 physics precondition
//! failure. `EITPT_THREADS` caps the worker pool.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use eitpt::io::{self, PotentialHeader};
use eitpt::perturbation::{imk_scan, standard_grid, standard_variants};
use eitpt::potential::{design, phase_gauge, tune_pump, BalanceKnob, DesignReport, PotentialSpec};
use eitpt::presets::Preset;
use eitpt::propagate::{split_step, BeamState, PropagationLog};
use eitpt::spectrum::{bloch_bands, pt_threshold, standard_q_grid};
use eitpt::{EitError, Result};

#[derive(Parser)]
#[command(name = "eitpt", version, about = "PT-symmetric optical lattices in a pumped four-level EIT medium")]
struct Cli {
    /// TOML file overriding preset fields; may name the preset with `preset = "..."`
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Linear dispersion K over Δ3/γ3 ∈ [−6, 6] for the three control/pump variants
    DispersionScan {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated variant ids (0: no control, 1: control, 2: control and pump)
        #[arg(long)]
        variants: Option<String>,
    },
    /// Third-order coefficients, dimensionless potential and PT diagnostics
    DesignPotential {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Parameter tuned to zero the gain balance: kappa13, gamma31 or ea0
        #[arg(long)]
        balance_knob: Option<String>,
    },
    /// Split-step propagation in a potential file
    Propagate {
        #[arg(long)]
        potential: PathBuf,
        /// gaussian:width=W or plane:k=K
        #[arg(long)]
        input: String,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        ds: f64,
        #[arg(long)]
        out: PathBuf,
        /// Remove the constant part of the potential first
        #[arg(long)]
        gauge: bool,
        /// Comma-separated s values at which to dump the field
        #[arg(long, requires = "snapshot_dir")]
        snapshot_at: Option<String>,
        #[arg(long)]
        snapshot_dir: Option<PathBuf>,
    },
    /// Floquet-Bloch propagation constants
    Bands {
        #[arg(long)]
        potential: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 65)]
        plane_waves: usize,
        #[arg(long, default_value_t = 64)]
        q_points: usize,
    },
    /// PT-breaking threshold of the family with scaled imaginary sin 2ξ amplitude
    PtThreshold {
        #[arg(long)]
        potential: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        w_max: f64,
        #[arg(long, default_value_t = 0.05)]
        w_step: f64,
        #[arg(long, default_value_t = 33)]
        plane_waves: usize,
        #[arg(long, default_value_t = 16)]
        q_points: usize,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| {
        EitError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?))
}

fn load_config(path: Option<&Path>) -> Result<Option<toml::Table>> {
    let Some(path) = path else { return Ok(None) };
    let text = std::fs::read_to_string(path)?;
    text.parse::<toml::Table>()
        .map(Some)
        .map_err(|e| EitError::Parse(format!("{}: {e}", path.display())))
}

fn resolve_preset(name: Option<&str>, config: Option<&Path>) -> Result<Preset> {
    let mut doc = load_config(config)?;
    let from_config = match doc.as_mut().and_then(|d| d.remove("preset")) {
        Some(toml::Value::String(s)) => Some(s),
        Some(other) => return Err(EitError::Parse(format!("config key `preset` must be a string, got {other}"))),
        None => None,
    };
    let name = name
        .map(str::to_string)
        .or(from_config)
        .ok_or_else(|| EitError::InvalidArgument("no preset given (--preset or `preset` in the config)".into()))?;
    let preset = Preset::by_name(&name)?;
    match doc {
        Some(d) => preset.with_overrides(&d),
        None => Ok(preset),
    }
}

fn load_potential(path: &Path) -> Result<PotentialSpec> {
    io::read_potential(open(path)?).map(|(spec, _)| spec)
}

fn parse_input(spec: &str, potential: &PotentialSpec) -> Result<BeamState> {
    let bad = || EitError::InvalidArgument(format!("input {spec:?}: expected gaussian:width=W or plane:k=K"));
    let (kind, arg) = spec.split_once(':').ok_or_else(bad)?;
    let (key, value) = arg.split_once('=').ok_or_else(bad)?;
    let value: f64 = value.parse().map_err(|_| bad())?;
    match (kind, key) {
        ("gaussian", "width") => BeamState::gaussian(potential.grid, value),
        ("plane", "k") => BeamState::plane_wave(potential.grid, value),
        _ => Err(bad()),
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| EitError::InvalidArgument(format!("cannot read {t:?} as a number")))
        })
        .collect()
}

fn dispersion_scan(preset: &Preset, out: &Path, variants: Option<&str>) -> Result<()> {
    let all = standard_variants(&preset.atom);
    let chosen = match variants {
        None => all,
        Some(list) => {
            let mut chosen = Vec::new();
            for t in list.split(',') {
                let id: usize = t
                    .trim()
                    .parse()
                    .map_err(|_| EitError::InvalidArgument(format!("variant {t:?} is not an index")))?;
                let v = all
                    .iter()
                    .find(|v| v.id == id)
                    .ok_or_else(|| EitError::InvalidArgument(format!("unknown variant {id} (0, 1, 2)")))?;
                chosen.push(*v);
            }
            chosen
        }
    };
    let rows = imk_scan(&preset.detunings, &preset.atom, &standard_grid(), &chosen)?;
    let mut w = create(out)?;
    io::write_scan(&mut w, &rows)?;
    w.flush()?;
    println!("{}", json!({ "rows": rows.len(), "variants": chosen.iter().map(|v| v.id).collect::<Vec<_>>() }));
    Ok(())
}

fn header_for(report: &DesignReport) -> PotentialHeader {
    let mut h = PotentialHeader::for_spec(&report.spec);
    h.pt_residual = Some(report.pt_residual);
    h.gain_balance = Some(report.gain_balance);
    let c = &report.coeffs;
    h.extra.insert("polarizability_difference".into(), json!(report.preset.atom.polarizability[2] - report.preset.atom.polarizability[0]));
    h.extra.insert("x3_reading".into(), json!(c.x3_reading));
    h.extra.insert("alpha12_oracle_discrepancy".into(), json!(c.alpha12_discrepancy));
    h.extra.insert("alpha13_oracle_discrepancy".into(), json!(c.alpha13_discrepancy));
    h
}

fn design_potential(preset: &Preset, out: &Path, knob: Option<&str>) -> Result<()> {
    let knob = knob.map(BalanceKnob::parse).transpose()?;
    let base = design(preset)?;
    let (report, tuned) = match knob {
        None => (base.clone(), None),
        Some(k) => {
            let t = tune_pump(preset, k, None)?;
            let info = json!({ "knob": k.name(), "value": t.value, "iterations": t.iterations });
            (t.report, Some(info))
        }
    };
    let mut header = header_for(&report);
    header.extra.insert("gain_balance_before_tuning".into(), json!(base.gain_balance));
    if let Some(t) = &tuned {
        header.extra.insert("tuning".into(), t.clone());
    }
    let mut w = create(out)?;
    io::write_potential(&mut w, &report.spec, &header)?;
    w.flush()?;
    let c = report.coefficients();
    println!(
        "{}",
        json!({
            "g12": [c.g12.re, c.g12.im],
            "g13": [c.g13.re, c.g13.im],
            "K0": [c.k0.re, c.k0.im],
            "Ldiff_cm": report.spec.ldiff_cm,
            "pt_residual": report.pt_residual,
            "gain_balance": report.gain_balance,
            "tuning": tuned,
        })
    );
    Ok(())
}

struct PropagateArgs<'a> {
    potential: &'a Path,
    input: &'a str,
    steps: usize,
    ds: f64,
    out: &'a Path,
    gauge: bool,
    snapshot_at: Option<&'a str>,
    snapshot_dir: Option<&'a Path>,
}

fn propagate(a: PropagateArgs) -> Result<()> {
    if !(a.ds > 0.0) || !a.ds.is_finite() {
        return Err(EitError::InvalidArgument(format!("--ds must be positive, got {}", a.ds)));
    }
    if a.steps == 0 {
        return Err(EitError::InvalidArgument("--steps must be at least 1".into()));
    }
    let mut v = load_potential(a.potential)?;
    if a.gauge {
        v = phase_gauge(&v);
    }
    let mut state = parse_input(a.input, &v)?;
    let mut stops: Vec<usize> = match a.snapshot_at {
        Some(list) => parse_list(list)?
            .iter()
            .map(|s| {
                if !(*s >= 0.0) || *s > a.steps as f64 * a.ds * (1.0 + 1e-12) {
                    return Err(EitError::InvalidArgument(format!("snapshot s = {s} is outside the run")));
                }
                Ok((s / a.ds).round() as usize)
            })
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    stops.sort_unstable();
    stops.dedup();
    if let Some(dir) = a.snapshot_dir {
        std::fs::create_dir_all(dir)?;
    }
    let snapshot = |state: &BeamState, step: usize| -> Result<()> {
        let dir = a.snapshot_dir.expect("clap requires --snapshot-dir");
        let mut w = create(&dir.join(format!("snapshot_{step:08}.csv")))?;
        io::write_snapshot(&mut w, state)?;
        w.flush()?;
        Ok(())
    };

    let mut log = PropagationLog::default();
    let mut done = 0;
    for &stop in stops.iter().chain(std::iter::once(&a.steps)) {
        if stop > done {
            let (next, seg) = split_step(&state, &v, a.ds, stop - done)?;
            let skip = usize::from(!log.entries.is_empty());
            log.entries.extend(seg.entries.into_iter().skip(skip));
            state = next;
            done = stop;
        } else if log.entries.is_empty() {
            let (_, seg) = split_step(&state, &v, a.ds, 1)?;
            log.entries.push(seg.entries[0]);
        }
        if stops.contains(&stop) && a.snapshot_at.is_some() {
            snapshot(&state, stop)?;
        }
    }
    let mut w = create(a.out)?;
    io::write_trajectory(&mut w, &log)?;
    w.flush()?;
    println!(
        "{}",
        json!({
            "s": state.s,
            "power_drift": log.max_power_drift(),
            "quasi_power_drift": log.max_quasi_power_drift(),
        })
    );
    Ok(())
}

fn bands(potential: &Path, out: &Path, plane_waves: usize, q_points: usize) -> Result<()> {
    let v = load_potential(potential)?;
    if q_points == 0 {
        return Err(EitError::InvalidArgument("--q-points must be at least 1".into()));
    }
    let b = bloch_bands(&v, plane_waves, &standard_q_grid(q_points))?;
    let mut w = create(out)?;
    io::write_bands(&mut w, &b)?;
    w.flush()?;
    println!("{}", json!({ "max_abs_im_beta": b.max_imag(), "real_spectrum": b.is_real() }));
    Ok(())
}

fn threshold(potential: &Path, out: &Path, w_max: f64, w_step: f64, plane_waves: usize, q_points: usize) -> Result<()> {
    if !(w_step > 0.0) || !(w_max > 0.0) || q_points == 0 {
        return Err(EitError::InvalidArgument("--w-max, --w-step and --q-points must be positive".into()));
    }
    let v = load_potential(potential)?;
    let n = (w_max / w_step).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|k| k as f64 * w_step).collect();
    let r = pt_threshold(&v, &grid, plane_waves, &standard_q_grid(q_points))?;
    let mut w = create(out)?;
    io::write_threshold(&mut w, &r)?;
    w.flush()?;
    println!("{}", json!({ "w_c": r.w_c, "design_w": r.design_w }));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::DispersionScan { preset, out, variants } => {
            dispersion_scan(&resolve_preset(preset.as_deref(), config)?, &out, variants.as_deref())
        }
        Command::DesignPotential { preset, out, balance_knob } => {
            design_potential(&resolve_preset(preset.as_deref(), config)?, &out, balance_knob.as_deref())
        }
        Command::Propagate { potential, input, steps, ds, out, gauge, snapshot_at, snapshot_dir } => {
            propagate(PropagateArgs {
                potential: &potential,
                input: &input,
                steps,
                ds,
                out: &out,
                gauge,
                snapshot_at: snapshot_at.as_deref(),
                snapshot_dir: snapshot_dir.as_deref(),
            })
        }
        Command::Bands { potential, out, plane_waves, q_points } => bands(&potential, &out, plane_waves, q_points),
        Command::PtThreshold { potential, out, w_max, w_step, plane_waves, q_points } => {
            threshold(&potential, &out, w_max, w_step, plane_waves, q_points)
        }
    }
}

fn init_threads() -> Result<()> {
    let Ok(value) = std::env::var("EITPT_THREADS") else { return Ok(()) };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| EitError::InvalidArgument(format!("EITPT_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| EitError::InvalidArgument(e.to_string()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match init_threads().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_physics() { 3 } else { 2 })
        }
    }
}
