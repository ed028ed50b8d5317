use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cca_transfer::ideal_protocol::perfect_timing;
use cca_transfer::open_system::{average_outcome, run_protocol};
use cca_transfer::sweep::{
    find_threshold_n, run_sweep, write_csv, write_json, ParamSet, Preset, Provenance, RunRecord,
    SweepKind, SweepOptions, SweepSpec, ThresholdResult,
};
use cca_transfer::{BlochState, ModeBasis};

mod config;

use config::{OutputFormat, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "cca-transfer",
    version,
    about = "Atom-to-atom quantum state transfer through a coupled-cavity array"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Perfect-transfer interaction times for a sender/receiver pair.
    Schedule {
        #[arg(short = 'N', long = "cavities")]
        n: usize,
        #[arg(short = 's', long)]
        sender: usize,
        #[arg(short = 'r', long)]
        receiver: usize,
        /// Resonant mode; defaults to (N+1)/2 for odd N.
        #[arg(short = 'q', long)]
        mode: Option<usize>,
    },
    /// One dissipative protocol run, averaged over the Bloch sphere.
    Run {
        #[command(flatten)]
        opts: CommonOpts,
        /// Drop all decay channels.
        #[arg(long)]
        lossless: bool,
        /// Also report the fidelity for this input polar angle.
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        phi: f64,
    },
    /// Sweep over N, timing errors or delay.
    Sweep {
        #[command(flatten)]
        opts: CommonOpts,
        /// List the available presets and exit.
        #[arg(long)]
        list_presets: bool,
        /// Omit wall-clock timings so that repeated runs give identical files.
        #[arg(long)]
        no_timing: bool,
    },
    /// Largest odd N whose end-to-end fidelity reaches a threshold.
    Threshold {
        #[command(flatten)]
        opts: CommonOpts,
        /// Fidelity threshold (default 2/3, the classical limit).
        #[arg(long)]
        value: Option<f64>,
        #[arg(long)]
        n_min: Option<usize>,
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// List the named sweep presets.
    Presets,
}

#[derive(Args, Debug, Default)]
struct CommonOpts {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    dump_config: bool,
    #[arg(short = 'N', long = "cavities")]
    n: Option<usize>,
    #[arg(short = 's', long)]
    sender: Option<usize>,
    #[arg(short = 'r', long)]
    receiver: Option<usize>,
    #[arg(short = 'q', long)]
    mode: Option<usize>,
    /// Parameter set: current, projected or lossless.
    #[arg(long)]
    params: Option<ParamSet>,
    /// Cavity decay rate γ/g.
    #[arg(long)]
    gamma: Option<f64>,
    /// Atomic decay rate κ/g (both atoms).
    #[arg(long)]
    kappa: Option<f64>,
    /// Hopping ratio A/g.
    #[arg(long)]
    hop_ratio: Option<f64>,
    /// Mode decay scaling: paper (Nγ) or uniform (γ).
    #[arg(long)]
    scaling: Option<cca_transfer::ModeDecayScaling>,
    /// Delay between the steps, in units of 1/g.
    #[arg(long)]
    delay: Option<f64>,
    /// Relative error on the step-1 duration.
    #[arg(long, allow_hyphen_values = true)]
    dt1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    dt2: Option<f64>,
    /// Measure the sender after step 1 and keep the ground-state branch.
    #[arg(long)]
    measure: bool,
    #[arg(long)]
    preset: Option<Preset>,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<OutputFormat>,
}

impl CommonOpts {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                RunConfig::from_kv_str(&text)
                    .with_context(|| format!("in config {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        if let Some(v) = self.n {
            cfg.n_cavities = v;
        }
        if let Some(v) = self.sender {
            cfg.sender = v;
        }
        if let Some(v) = self.receiver {
            cfg.receiver = Some(v);
        }
        if let Some(v) = self.mode {
            cfg.resonant_mode = Some(v);
        }
        if let Some(v) = self.params {
            cfg.param_set = v;
        }
        if let Some(v) = self.gamma {
            cfg.gamma_over_g = Some(v);
        }
        if let Some(v) = self.kappa {
            cfg.kappa_s_over_g = Some(v);
            cfg.kappa_r_over_g = Some(v);
        }
        if let Some(v) = self.hop_ratio {
            cfg.hop_rate_over_g = v;
        }
        if let Some(v) = self.scaling {
            cfg.mode_decay_scaling = v;
        }
        if let Some(v) = self.delay {
            cfg.gt_delay = v;
        }
        if let Some(v) = self.dt1 {
            cfg.dt1_frac = v;
        }
        if let Some(v) = self.dt2 {
            cfg.dt2_frac = v;
        }
        if self.measure {
            cfg.measure_after_step1 = true;
        }
        if let Some(v) = self.preset {
            cfg.preset = Some(v);
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if let Some(v) = &self.out {
            cfg.out = Some(v.clone());
        }
        match self.format {
            Some(f) => cfg.format = f,
            None => {
                if let Some(out) = &cfg.out {
                    if out.extension().is_some_and(|e| e == "json") {
                        cfg.format = OutputFormat::Json;
                    }
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Four significant digits.
fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.3e}").parse().unwrap_or(x);
    let digits = 3 - rounded.abs().log10().floor() as i32;
    if digits >= 0 {
        format!("{:.*}", digits as usize, rounded)
    } else {
        format!("{x:.3e}")
    }
}

fn write_records(
    path: &Path,
    format: OutputFormat,
    provenance: &Provenance,
    records: &[RunRecord],
) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let out = BufWriter::new(file);
    match format {
        OutputFormat::Csv => write_csv(out, provenance, records)?,
        OutputFormat::Json => write_json(out, provenance, records)?,
    }
    Ok(())
}

fn emit(cfg: &RunConfig, provenance: &Provenance, records: &[RunRecord]) -> Result<bool> {
    match &cfg.out {
        Some(path) => {
            write_records(path, cfg.format, provenance, records)?;
            Ok(true)
        }
        None => {
            let stdout = io::stdout().lock();
            match cfg.format {
                OutputFormat::Csv => write_csv(stdout, provenance, records)?,
                OutputFormat::Json => write_json(stdout, provenance, records)?,
            }
            Ok(false)
        }
    }
}

fn cmd_schedule(n: usize, sender: usize, receiver: usize, mode: Option<usize>) -> Result<()> {
    let q = match mode {
        Some(q) => q,
        None if n % 2 == 1 => n.div_ceil(2),
        None => bail!("even N={n} needs an explicit resonant mode (-q)"),
    };
    let basis = ModeBasis::new(n)?;
    let timing = perfect_timing(&basis, sender, receiver, q)?;
    let (sym1, sym2) = timing.symbolic();
    let show = |v: f64, s: Option<String>| match s {
        Some(s) => format!("{s} = {v:.15}"),
        None => format!("{v:.15}"),
    };
    println!("N={n} q={q} {sender}->{receiver}");
    println!("S(s,q) = {:.15}", timing.sender_amplitude);
    println!("S(r,q) = {:.15}", timing.receiver_amplitude);
    println!("gt1 = {}", show(timing.gt1(), sym1));
    println!("gt2 = {}", show(timing.gt2(), sym2));
    Ok(())
}

fn cmd_run(opts: &CommonOpts, lossless: bool, theta: Option<f64>, phi: f64) -> Result<()> {
    let mut cfg = opts.resolve()?;
    if lossless {
        cfg.param_set = ParamSet::Lossless;
        cfg.gamma_over_g = None;
        cfg.kappa_s_over_g = None;
        cfg.kappa_r_over_g = None;
    }
    if opts.dump_config {
        print!("{}", cfg.to_kv_string());
        return Ok(());
    }
    let params = cfg.chain_params()?;
    let basis = ModeBasis::new(params.n_cavities)?;
    let ideal = perfect_timing(&basis, params.sender, params.receiver, params.resonant_mode)?;
    let schedule = cfg.apply_schedule_options(ideal.schedule())?;

    let start = Instant::now();
    let outcome = average_outcome(&params, &schedule)?;
    let wall = start.elapsed().as_secs_f64();
    let record = RunRecord::new(&params, &schedule, outcome, Some(wall));

    let mut spec = SweepSpec::new(SweepKind::TransferPairs, cfg.sweep_param_set()?);
    spec.pairs = vec![(params.n_cavities, params.sender, params.receiver)];
    let provenance = Provenance::for_spec(&spec, None);
    if let Some(path) = &cfg.out {
        write_records(path, cfg.format, &provenance, std::slice::from_ref(&record))?;
    }

    let mut line = format!(
        "N={} {}->{} q={} F_avg={} P_success={} wall={}s",
        params.n_cavities,
        params.sender,
        params.receiver,
        params.resonant_mode,
        sig4(outcome.avg_fidelity),
        sig4(outcome.success_probability),
        sig4(wall)
    );
    if let Some(theta) = theta {
        let state = BlochState::new(theta, phi)?;
        let run = run_protocol(&params, &schedule, &state)?;
        line.push_str(&format!(" F(theta={theta},phi={phi})={}", sig4(run.fidelity)));
    }
    println!("{line}");
    Ok(())
}

fn sweep_spec(cfg: &RunConfig, preset: Preset, opts: &CommonOpts) -> Result<SweepSpec> {
    let mut spec = preset.spec();
    if opts.params.is_some() || cfg.gamma_over_g.is_some() || cfg.kappa_s_over_g.is_some() {
        spec.param_set = cfg.sweep_param_set()?;
    }
    if let Some(n) = opts.n {
        match spec.kind {
            SweepKind::TransferPairs => spec.pairs.retain(|(pn, _, _)| *pn == n),
            _ => spec.n_range = vec![n],
        }
    }
    if opts.hop_ratio.is_some() {
        spec.hop_rate_over_g = cfg.hop_rate_over_g;
    }
    spec.mode_decay_scaling = cfg.mode_decay_scaling;
    spec.measure_after_step1 = cfg.measure_after_step1;
    spec.validate()?;
    Ok(spec)
}

fn cmd_sweep(opts: &CommonOpts, list: bool, no_timing: bool) -> Result<()> {
    if list {
        return cmd_presets();
    }
    let cfg = opts.resolve()?;
    if opts.dump_config {
        print!("{}", cfg.to_kv_string());
        return Ok(());
    }
    let Some(preset) = cfg.preset else {
        bail!("sweep needs --preset (see --list-presets)");
    };
    let spec = sweep_spec(&cfg, preset, opts)?;
    let sweep_opts = SweepOptions {
        workers: cfg.workers,
        record_timing: !no_timing,
    };
    let start = Instant::now();
    let records = run_sweep(&spec, &sweep_opts)?;
    let wall = start.elapsed().as_secs_f64();
    let provenance = Provenance::for_spec(&spec, Some(preset));
    let to_file = emit(&cfg, &provenance, &records)?;

    let (lo, hi) = records.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
        (lo.min(r.avg_fidelity), hi.max(r.avg_fidelity))
    });
    let p_mean = records.iter().map(|r| r.success_probability).sum::<f64>() / records.len() as f64;
    let summary = format!(
        "{}: {} points, F_avg in [{}, {}], P_success(mean)={}, wall={}s",
        preset.name(),
        records.len(),
        sig4(lo),
        sig4(hi),
        sig4(p_mean),
        sig4(wall)
    );
    if to_file {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

fn cmd_threshold(
    opts: &CommonOpts,
    value: Option<f64>,
    n_min: Option<usize>,
    n_max: Option<usize>,
) -> Result<()> {
    let mut cfg = opts.resolve()?;
    if let Some(v) = value {
        cfg.threshold_value = v;
    }
    if let Some(v) = n_min {
        cfg.n_min = v;
    }
    if let Some(v) = n_max {
        cfg.n_max = v;
    }
    cfg.validate()?;
    if opts.dump_config {
        print!("{}", cfg.to_kv_string());
        return Ok(());
    }
    let lo = cfg.n_min.max(3) | 1;
    let mut spec = SweepSpec::new(SweepKind::Threshold, cfg.sweep_param_set()?)
        .with_n_range((lo..=cfg.n_max).step_by(2));
    spec.threshold_value = cfg.threshold_value;
    spec.hop_rate_over_g = cfg.hop_rate_over_g;
    spec.mode_decay_scaling = cfg.mode_decay_scaling;
    spec.measure_after_step1 = cfg.measure_after_step1;
    let sweep_opts = SweepOptions {
        workers: cfg.workers,
        record_timing: true,
    };
    let start = Instant::now();
    let report = find_threshold_n(&spec, &sweep_opts)?;
    let wall = start.elapsed().as_secs_f64();
    if let Some(path) = &cfg.out {
        write_records(path, cfg.format, &Provenance::for_spec(&spec, None), &report.evaluations)?;
    }
    let verdict = match report.result {
        ThresholdResult::Found(n) => {
            let f = report
                .evaluations
                .iter()
                .find(|r| r.n_cavities == n)
                .map(|r| r.avg_fidelity)
                .unwrap_or(f64::NAN);
            format!("largest N = {n} (F_avg={})", sig4(f))
        }
        ThresholdResult::UnboundedWithinRange(n) => {
            format!("every N up to {n} reaches the threshold")
        }
        ThresholdResult::NotFound => "no N in range reaches the threshold".to_string(),
    };
    println!(
        "threshold {} [{}]: {verdict}; {} evaluations, wall={}s",
        sig4(cfg.threshold_value),
        spec.param_set.describe(),
        report.evaluations.len(),
        sig4(wall)
    );
    Ok(())
}

fn cmd_presets() -> Result<()> {
    let mut out = io::stdout().lock();
    for p in Preset::ALL {
        writeln!(out, "{:<16} {}", p.name(), p.description())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Schedule {
            n,
            sender,
            receiver,
            mode,
        } => cmd_schedule(*n, *sender, *receiver, *mode),
        Command::Run {
            opts,
            lossless,
            theta,
            phi,
        } => cmd_run(opts, *lossless, *theta, *phi),
        Command::Sweep {
            opts,
            list_presets,
            no_timing,
        } => cmd_sweep(opts, *list_presets, *no_timing),
        Command::Threshold {
            opts,
            value,
            n_min,
            n_max,
        } => cmd_threshold(opts, *value, *n_min, *n_max),
        Command::Presets => cmd_presets(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
