//! Flat `key = value` run configuration.
//!
//! Precedence is defaults, then the config file, then command-line flags.
//! Unknown keys are rejected.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use cca_transfer::sweep::{ParamSet, Preset, CLASSICAL_THRESHOLD};
use cca_transfer::{ChainParams, ModeDecayScaling, ProtocolSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => bail!("unknown format '{other}' (expected csv or json)"),
        }
    }
}

impl std::fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_cavities: usize,
    pub sender: usize,
    /// Defaults to N.
    pub receiver: Option<usize>,
    /// Defaults to (N+1)/2.
    pub resonant_mode: Option<usize>,
    pub hop_rate_over_g: f64,
    pub param_set: ParamSet,
    pub gamma_over_g: Option<f64>,
    pub kappa_s_over_g: Option<f64>,
    pub kappa_r_over_g: Option<f64>,
    pub mode_decay_scaling: ModeDecayScaling,
    pub gt_delay: f64,
    pub dt1_frac: f64,
    pub dt2_frac: f64,
    pub measure_after_step1: bool,
    pub preset: Option<Preset>,
    pub threshold_value: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_cavities: 3,
            sender: 1,
            receiver: None,
            resonant_mode: None,
            hop_rate_over_g: 100.0,
            param_set: ParamSet::Current,
            gamma_over_g: None,
            kappa_s_over_g: None,
            kappa_r_over_g: None,
            mode_decay_scaling: ModeDecayScaling::Paper,
            gt_delay: 0.0,
            dt1_frac: 0.0,
            dt2_frac: 0.0,
            measure_after_step1: false,
            preset: None,
            threshold_value: CLASSICAL_THRESHOLD,
            n_min: 3,
            n_max: 101,
            workers: 0,
            out: None,
            format: OutputFormat::Csv,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow!("invalid value '{value}' for {key}: {e}"))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n_cavities" => self.n_cavities = parse(key, value)?,
            "sender" => self.sender = parse(key, value)?,
            "receiver" => self.receiver = Some(parse(key, value)?),
            "resonant_mode" => self.resonant_mode = Some(parse(key, value)?),
            "hop_rate_over_g" => self.hop_rate_over_g = parse(key, value)?,
            "param_set" => self.param_set = parse(key, value)?,
            "gamma_over_g" => self.gamma_over_g = Some(parse(key, value)?),
            "kappa_s_over_g" => self.kappa_s_over_g = Some(parse(key, value)?),
            "kappa_r_over_g" => self.kappa_r_over_g = Some(parse(key, value)?),
            "mode_decay_scaling" => self.mode_decay_scaling = parse(key, value)?,
            "gt_delay" => self.gt_delay = parse(key, value)?,
            "dt1_frac" => self.dt1_frac = parse(key, value)?,
            "dt2_frac" => self.dt2_frac = parse(key, value)?,
            "measure_after_step1" => self.measure_after_step1 = parse(key, value)?,
            "preset" => self.preset = Some(parse(key, value)?),
            "threshold_value" => self.threshold_value = parse(key, value)?,
            "n_min" => self.n_min = parse(key, value)?,
            "n_max" => self.n_max = parse(key, value)?,
            "workers" => self.workers = parse(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "format" => self.format = parse(key, value)?,
            other => bail!("unknown config key '{other}'"),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn merge_str(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value, got '{raw}'", lineno + 1))?;
            self.set(key.trim(), value.trim())
                .with_context(|| format!("line {}", lineno + 1))?;
        }
        Ok(())
    }

    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.merge_str(text)?;
        Ok(cfg)
    }

    /// Serializes every field; `from_kv_str` reads it back unchanged.
    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("n_cavities", self.n_cavities.to_string());
        put("sender", self.sender.to_string());
        if let Some(r) = self.receiver {
            put("receiver", r.to_string());
        }
        if let Some(q) = self.resonant_mode {
            put("resonant_mode", q.to_string());
        }
        put("hop_rate_over_g", format!("{:?}", self.hop_rate_over_g));
        match self.param_set {
            ParamSet::Custom { .. } => {}
            p => put("param_set", p.to_string()),
        }
        if let Some(v) = self.gamma_over_g {
            put("gamma_over_g", format!("{v:?}"));
        }
        if let Some(v) = self.kappa_s_over_g {
            put("kappa_s_over_g", format!("{v:?}"));
        }
        if let Some(v) = self.kappa_r_over_g {
            put("kappa_r_over_g", format!("{v:?}"));
        }
        put("mode_decay_scaling", self.mode_decay_scaling.to_string());
        put("gt_delay", format!("{:?}", self.gt_delay));
        put("dt1_frac", format!("{:?}", self.dt1_frac));
        put("dt2_frac", format!("{:?}", self.dt2_frac));
        put("measure_after_step1", self.measure_after_step1.to_string());
        if let Some(p) = self.preset {
            put("preset", p.name().to_string());
        }
        put("threshold_value", format!("{:?}", self.threshold_value));
        put("n_min", self.n_min.to_string());
        put("n_max", self.n_max.to_string());
        put("workers", self.workers.to_string());
        if let Some(out) = &self.out {
            put("out", out.display().to_string());
        }
        put("format", self.format.to_string());
        s
    }

    /// (γ/g, κ_s/g, κ_r/g) after explicit overrides.
    pub fn rates(&self) -> (f64, f64, f64) {
        let (gamma, kappa) = self.param_set.rates();
        (
            self.gamma_over_g.unwrap_or(gamma),
            self.kappa_s_over_g.unwrap_or(kappa),
            self.kappa_r_over_g.unwrap_or(kappa),
        )
    }

    /// Effective parameter set for sweeps, folding overrides into a custom set.
    pub fn sweep_param_set(&self) -> Result<ParamSet> {
        let (gamma, ks, kr) = self.rates();
        if ks != kr {
            bail!("sweeps use kappa_s = kappa_r; got {ks} and {kr}");
        }
        if self.gamma_over_g.is_none() && self.kappa_s_over_g.is_none() {
            Ok(self.param_set)
        } else {
            Ok(ParamSet::Custom {
                gamma_over_g: gamma,
                kappa_over_g: ks,
            })
        }
    }

    pub fn chain_params(&self) -> Result<ChainParams> {
        let n = self.n_cavities;
        let q = match self.resonant_mode {
            Some(q) => q,
            None if n % 2 == 1 => n.div_ceil(2),
            None => bail!("even N={n} needs an explicit resonant mode (-q)"),
        };
        let (gamma, ks, kr) = self.rates();
        let mut params = ChainParams::lossless(n, self.sender, self.receiver.unwrap_or(n), q)
            .with_hop_rate(self.hop_rate_over_g);
        params.gamma_over_g = gamma;
        params.kappa_s_over_g = ks;
        params.kappa_r_over_g = kr;
        params.mode_decay_scaling = self.mode_decay_scaling;
        params.validate()?;
        Ok(params)
    }

    pub fn apply_schedule_options(&self, schedule: ProtocolSchedule) -> Result<ProtocolSchedule> {
        let sch = schedule
            .with_delay(self.gt_delay)
            .with_timing_errors(self.dt1_frac, self.dt2_frac)
            .with_measurement(self.measure_after_step1);
        sch.validate()?;
        Ok(sch)
    }

    /// Checks everything that does not depend on the subcommand.
    pub fn validate(&self) -> Result<()> {
        let (gamma, ks, kr) = self.rates();
        for (name, v) in [("gamma", gamma), ("kappa_s", ks), ("kappa_r", kr)] {
            if !(v >= 0.0 && v.is_finite()) {
                bail!("{name} must be a finite non-negative rate, got {v}");
            }
        }
        if !(self.hop_rate_over_g > 0.0) {
            bail!("hop ratio must be positive, got {}", self.hop_rate_over_g);
        }
        if !(self.threshold_value > 0.0 && self.threshold_value <= 1.0) {
            bail!("threshold must lie in (0, 1], got {}", self.threshold_value);
        }
        if self.n_min > self.n_max {
            bail!("n_min {} exceeds n_max {}", self.n_min, self.n_max);
        }
        if self.gt_delay < 0.0 {
            bail!("delay must be >= 0");
        }
        if self.dt1_frac.abs() >= 1.0 || self.dt2_frac.abs() >= 1.0 {
            bail!("timing errors must satisfy |dt| < 1");
        }
        Ok(())
    }
}
