//! Parameter sweeps over chain length, timing errors and inter-step delay,
//! plus the classical-threshold search.
//!
//! Points are evaluated on a rayon pool and collected in grid order, so the
//! output does not depend on the worker count.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ideal_protocol::{perfect_schedule, ProtocolSchedule};
use crate::mode_basis::ModeBasis;
use crate::open_system::{average_outcome, AverageOutcome};
use crate::params::{ChainParams, ModeDecayScaling};

pub const FORMAT_VERSION: u32 = 1;

/// Cavity and atomic decay rates (γ/g, κ/g) realizable with current
/// microtoroid + cesium setups.
pub const CURRENT_RATES: (f64, f64) = (0.004, 0.006);

/// Cooperativity g²/(γκ) of the projected microtoroid limit.
pub const PROJECTED_COOPERATIVITY: f64 = 1e7;

/// Projected-limit rates. Only their product is fixed by the cooperativity;
/// the cavity rate is taken one decade below the atomic one.
pub const PROJECTED_RATES: (f64, f64) = (1e-4, 1e-3);

pub const CLASSICAL_THRESHOLD: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamSet {
    Current,
    Projected,
    Lossless,
    Custom { gamma_over_g: f64, kappa_over_g: f64 },
}

impl ParamSet {
    /// (γ/g, κ/g) with κ_s = κ_r.
    pub fn rates(&self) -> (f64, f64) {
        match *self {
            ParamSet::Current => CURRENT_RATES,
            ParamSet::Projected => PROJECTED_RATES,
            ParamSet::Lossless => (0.0, 0.0),
            ParamSet::Custom {
                gamma_over_g,
                kappa_over_g,
            } => (gamma_over_g, kappa_over_g),
        }
    }

    pub fn describe(&self) -> String {
        let (g, k) = self.rates();
        match self {
            ParamSet::Projected => format!(
                "projected: gamma/g={g}, kappa/g={k} (cooperativity {PROJECTED_COOPERATIVITY:e}, split gamma:kappa = 1:10)"
            ),
            _ => format!("{self}: gamma/g={g}, kappa/g={k}"),
        }
    }
}

impl fmt::Display for ParamSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamSet::Current => f.write_str("current"),
            ParamSet::Projected => f.write_str("projected"),
            ParamSet::Lossless => f.write_str("lossless"),
            ParamSet::Custom { .. } => f.write_str("custom"),
        }
    }
}

impl FromStr for ParamSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "current" => Ok(ParamSet::Current),
            "projected" => Ok(ParamSet::Projected),
            "lossless" => Ok(ParamSet::Lossless),
            other => Err(Error::InvalidConfiguration(format!(
                "unknown parameter set '{other}' (expected current, projected or lossless)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// Explicit (N, s, r) transfers at their perfect schedules.
    TransferPairs,
    /// End-to-end transfer for each N.
    FidelityVsN,
    /// End-to-end transfer over a grid of (dt1, dt2) timing errors.
    TimingErrorSurface,
    /// End-to-end transfer versus the gap between the steps.
    DelayCurve,
    /// Largest N whose end-to-end fidelity reaches a threshold.
    Threshold,
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SweepKind::TransferPairs => "transfer-pairs",
            SweepKind::FidelityVsN => "fidelity-vs-n",
            SweepKind::TimingErrorSurface => "timing-error-surface",
            SweepKind::DelayCurve => "delay-curve",
            SweepKind::Threshold => "threshold",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub n_range: Vec<usize>,
    /// (N, s, r) triples for [`SweepKind::TransferPairs`].
    #[serde(default)]
    pub pairs: Vec<(usize, usize, usize)>,
    pub param_set: ParamSet,
    #[serde(default)]
    pub error_grid: Vec<f64>,
    #[serde(default)]
    pub delay_grid: Vec<f64>,
    #[serde(default)]
    pub threshold_value: f64,
    pub hop_rate_over_g: f64,
    #[serde(default)]
    pub mode_decay_scaling: ModeDecayScaling,
    #[serde(default)]
    pub measure_after_step1: bool,
}

impl SweepSpec {
    pub fn new(kind: SweepKind, param_set: ParamSet) -> Self {
        SweepSpec {
            kind,
            n_range: Vec::new(),
            pairs: Vec::new(),
            param_set,
            error_grid: Vec::new(),
            delay_grid: Vec::new(),
            threshold_value: CLASSICAL_THRESHOLD,
            hop_rate_over_g: 100.0,
            mode_decay_scaling: ModeDecayScaling::Paper,
            measure_after_step1: false,
        }
    }

    pub fn with_n_range(mut self, n_range: impl IntoIterator<Item = usize>) -> Self {
        self.n_range = n_range.into_iter().collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let sorted = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if self.kind == SweepKind::TransferPairs {
            if self.pairs.is_empty() {
                return Err(Error::InvalidConfiguration("no transfer pairs given".into()));
            }
        } else {
            if self.n_range.is_empty() {
                return Err(Error::InvalidConfiguration("empty N range".into()));
            }
            if let Some(n) = self.n_range.iter().find(|n| **n < 3 || **n % 2 == 0) {
                return Err(Error::InvalidConfiguration(format!(
                    "sweeps use odd N >= 3 with the zero-detuning middle mode, got N={n}"
                )));
            }
            if !self.n_range.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::InvalidConfiguration("N range must be sorted".into()));
            }
        }
        match self.kind {
            SweepKind::TimingErrorSurface => {
                if self.error_grid.is_empty() || !sorted(&self.error_grid) {
                    return Err(Error::InvalidConfiguration(
                        "timing-error grid must be nonempty and sorted".into(),
                    ));
                }
                if self.error_grid.iter().any(|e| e.abs() > 0.1 + 1e-12) {
                    return Err(Error::InvalidConfiguration(
                        "timing errors must stay within ±10%".into(),
                    ));
                }
            }
            SweepKind::DelayCurve => {
                if self.delay_grid.is_empty() || !sorted(&self.delay_grid) {
                    return Err(Error::InvalidConfiguration(
                        "delay grid must be nonempty and sorted".into(),
                    ));
                }
                if self.delay_grid[0] < 0.0 {
                    return Err(Error::InvalidConfiguration("delays must be >= 0".into()));
                }
            }
            SweepKind::Threshold => {
                if !(self.threshold_value > 0.0 && self.threshold_value <= 1.0) {
                    return Err(Error::InvalidConfiguration(format!(
                        "threshold must lie in (0, 1], got {}",
                        self.threshold_value
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn chain(&self, n: usize, sender: usize, receiver: usize) -> ChainParams {
        let (gamma, kappa) = self.param_set.rates();
        let mut params = ChainParams::lossless(n, sender, receiver, n.div_ceil(2))
            .with_hop_rate(self.hop_rate_over_g)
            .with_rates(gamma, kappa);
        params.mode_decay_scaling = self.mode_decay_scaling;
        params
    }

    /// Every (params, schedule) point of the sweep in output order.
    pub fn points(&self) -> Result<Vec<(ChainParams, ProtocolSchedule)>> {
        self.validate()?;
        let ideal = |params: &ChainParams| -> Result<ProtocolSchedule> {
            let basis = ModeBasis::new(params.n_cavities)?;
            Ok(perfect_schedule(&basis, params.sender, params.receiver, params.resonant_mode)?
                .with_measurement(self.measure_after_step1))
        };
        let mut out = Vec::new();
        match self.kind {
            SweepKind::TransferPairs => {
                for &(n, s, r) in &self.pairs {
                    let params = self.chain(n, s, r);
                    params.validate()?;
                    let sch = ideal(&params)?;
                    out.push((params, sch));
                }
            }
            SweepKind::FidelityVsN | SweepKind::Threshold => {
                for &n in &self.n_range {
                    let params = self.chain(n, 1, n);
                    let sch = ideal(&params)?;
                    out.push((params, sch));
                }
            }
            SweepKind::TimingErrorSurface => {
                for &n in &self.n_range {
                    let params = self.chain(n, 1, n);
                    let sch = ideal(&params)?;
                    for &d1 in &self.error_grid {
                        for &d2 in &self.error_grid {
                            out.push((params.clone(), sch.with_timing_errors(d1, d2)));
                        }
                    }
                }
            }
            SweepKind::DelayCurve => {
                for &n in &self.n_range {
                    let params = self.chain(n, 1, n);
                    let sch = ideal(&params)?;
                    for &d in &self.delay_grid {
                        out.push((params.clone(), sch.with_delay(d)));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// One evaluated sweep point. Column order in CSV follows field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub n_cavities: usize,
    pub sender: usize,
    pub receiver: usize,
    pub resonant_mode: usize,
    pub hop_rate_over_g: f64,
    pub detuning_over_g: f64,
    pub gamma_over_g: f64,
    pub kappa_s_over_g: f64,
    pub kappa_r_over_g: f64,
    pub mode_decay_scaling: ModeDecayScaling,
    pub gt1: f64,
    pub gt2: f64,
    pub gt_delay: f64,
    pub dt1_frac: f64,
    pub dt2_frac: f64,
    pub measure_after_step1: bool,
    pub avg_fidelity: f64,
    pub success_probability: f64,
    pub wall_time_s: Option<f64>,
}

pub const CSV_COLUMNS: [&str; 19] = [
    "n_cavities",
    "sender",
    "receiver",
    "resonant_mode",
    "hop_rate_over_g",
    "detuning_over_g",
    "gamma_over_g",
    "kappa_s_over_g",
    "kappa_r_over_g",
    "mode_decay_scaling",
    "gt1",
    "gt2",
    "gt_delay",
    "dt1_frac",
    "dt2_frac",
    "measure_after_step1",
    "avg_fidelity",
    "success_probability",
    "wall_time_s",
];

impl RunRecord {
    pub fn new(
        params: &ChainParams,
        schedule: &ProtocolSchedule,
        outcome: AverageOutcome,
        wall_time_s: Option<f64>,
    ) -> Self {
        RunRecord {
            n_cavities: params.n_cavities,
            sender: params.sender,
            receiver: params.receiver,
            resonant_mode: params.resonant_mode,
            hop_rate_over_g: params.hop_rate_over_g,
            detuning_over_g: params.detuning_over_g,
            gamma_over_g: params.gamma_over_g,
            kappa_s_over_g: params.kappa_s_over_g,
            kappa_r_over_g: params.kappa_r_over_g,
            mode_decay_scaling: params.mode_decay_scaling,
            gt1: schedule.gt1,
            gt2: schedule.gt2,
            gt_delay: schedule.gt_delay,
            dt1_frac: schedule.dt1_frac,
            dt2_frac: schedule.dt2_frac,
            measure_after_step1: schedule.measure_after_step1,
            avg_fidelity: outcome.avg_fidelity,
            success_probability: outcome.success_probability,
            wall_time_s,
        }
    }

    pub fn params(&self) -> ChainParams {
        ChainParams {
            n_cavities: self.n_cavities,
            hop_rate_over_g: self.hop_rate_over_g,
            detuning_over_g: self.detuning_over_g,
            gamma_over_g: self.gamma_over_g,
            kappa_s_over_g: self.kappa_s_over_g,
            kappa_r_over_g: self.kappa_r_over_g,
            sender: self.sender,
            receiver: self.receiver,
            resonant_mode: self.resonant_mode,
            mode_decay_scaling: self.mode_decay_scaling,
            regime_threshold: crate::params::DEFAULT_REGIME_THRESHOLD,
        }
    }

    pub fn schedule(&self) -> ProtocolSchedule {
        ProtocolSchedule {
            gt1: self.gt1,
            gt2: self.gt2,
            gt_delay: self.gt_delay,
            dt1_frac: self.dt1_frac,
            dt2_frac: self.dt2_frac,
            measure_after_step1: self.measure_after_step1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepOptions {
    /// Worker threads; 0 uses rayon's default.
    pub workers: usize,
    pub record_timing: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            workers: 0,
            record_timing: true,
        }
    }
}

pub fn evaluate_point(
    params: &ChainParams,
    schedule: &ProtocolSchedule,
    record_timing: bool,
) -> Result<RunRecord> {
    let start = Instant::now();
    let outcome = average_outcome(params, schedule)?;
    let wall = record_timing.then(|| start.elapsed().as_secs_f64());
    Ok(RunRecord::new(params, schedule, outcome, wall))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfiguration(format!("cannot start worker pool: {e}")))
}

fn evaluate_all(
    points: &[(ChainParams, ProtocolSchedule)],
    opts: &SweepOptions,
) -> Result<Vec<RunRecord>> {
    pool(opts.workers)?.install(|| {
        points
            .par_iter()
            .map(|(p, s)| evaluate_point(p, s, opts.record_timing))
            .collect()
    })
}

/// Evaluates every point of `spec` in grid order.
pub fn run_sweep(spec: &SweepSpec, opts: &SweepOptions) -> Result<Vec<RunRecord>> {
    evaluate_all(&spec.points()?, opts)
}

fn expect_kind(spec: &SweepSpec, kind: SweepKind) -> Result<()> {
    if spec.kind == kind {
        Ok(())
    } else {
        Err(Error::InvalidConfiguration(format!(
            "expected a {kind} sweep, got {}",
            spec.kind
        )))
    }
}

pub fn sweep_fidelity_vs_n(spec: &SweepSpec, opts: &SweepOptions) -> Result<Vec<RunRecord>> {
    expect_kind(spec, SweepKind::FidelityVsN)?;
    run_sweep(spec, opts)
}

pub fn sweep_timing_error(spec: &SweepSpec, opts: &SweepOptions) -> Result<Vec<RunRecord>> {
    expect_kind(spec, SweepKind::TimingErrorSurface)?;
    run_sweep(spec, opts)
}

pub fn sweep_delay(spec: &SweepSpec, opts: &SweepOptions) -> Result<Vec<RunRecord>> {
    expect_kind(spec, SweepKind::DelayCurve)?;
    run_sweep(spec, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdResult {
    /// Largest odd N in range whose fidelity reaches the threshold.
    Found(usize),
    /// Every N in range reaches the threshold; the value is the range end.
    UnboundedWithinRange(usize),
    NotFound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub result: ThresholdResult,
    /// Every evaluation performed, sorted by N.
    pub evaluations: Vec<RunRecord>,
}

/// Bisection for the largest odd N with end-to-end fidelity at or above the
/// threshold.
///
/// The fidelity is only monotone within each parity class of q = (N+1)/2,
/// so each class is searched separately and the larger answer wins.
pub fn find_threshold_n(spec: &SweepSpec, opts: &SweepOptions) -> Result<ThresholdReport> {
    expect_kind(spec, SweepKind::Threshold)?;
    spec.validate()?;
    let mut memo: BTreeMap<usize, RunRecord> = BTreeMap::new();
    let mut eval = |n: usize| -> Result<f64> {
        if let Some(rec) = memo.get(&n) {
            return Ok(rec.avg_fidelity);
        }
        let params = spec.chain(n, 1, n);
        let basis = ModeBasis::new(n)?;
        let sch = perfect_schedule(&basis, 1, n, params.resonant_mode)?
            .with_measurement(spec.measure_after_step1);
        let rec = pool(opts.workers)?.install(|| evaluate_point(&params, &sch, opts.record_timing))?;
        let f = rec.avg_fidelity;
        memo.insert(n, rec);
        Ok(f)
    };

    let threshold = spec.threshold_value;
    let mut best: Option<usize> = None;
    let mut all_pass = true;
    for class in 0..2 {
        let candidates: Vec<usize> = spec
            .n_range
            .iter()
            .copied()
            .filter(|n| (n.div_ceil(2)) % 2 == class)
            .collect();
        if candidates.is_empty() {
            continue;
        }
        // last index whose value reaches the threshold
        let (mut lo, mut hi) = (0usize, candidates.len());
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if eval(candidates[mid])? >= threshold {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        if lo < candidates.len() {
            all_pass = false;
        }
        if lo > 0 {
            let n = candidates[lo - 1];
            best = Some(best.map_or(n, |b| b.max(n)));
        }
    }
    let upper = *spec.n_range.last().expect("validated nonempty");
    let result = match best {
        None => ThresholdResult::NotFound,
        Some(_) if all_pass => ThresholdResult::UnboundedWithinRange(upper),
        Some(n) => ThresholdResult::Found(n),
    };
    Ok(ThresholdReport {
        result,
        evaluations: memo.into_values().collect(),
    })
}

/// Named sweeps with fixed grids and rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Table1,
    Table2,
    Fig2Current,
    Fig2Projected,
    Fig3,
    Fig4,
}

pub const TABLE_PAIRS: [(usize, usize, usize); 10] = [
    (3, 1, 3),
    (5, 1, 3),
    (5, 1, 5),
    (5, 3, 5),
    (7, 1, 3),
    (7, 1, 5),
    (7, 1, 7),
    (7, 3, 5),
    (7, 3, 7),
    (7, 5, 7),
];

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Table1,
        Preset::Table2,
        Preset::Fig2Current,
        Preset::Fig2Projected,
        Preset::Fig3,
        Preset::Fig4,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Table1 => "table1",
            Preset::Table2 => "table2",
            Preset::Fig2Current => "fig2-current",
            Preset::Fig2Projected => "fig2-projected",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Preset::Table1 => "perfect-transfer times gt1, gt2 for N=3,5,7 (lossless)",
            Preset::Table2 => "average fidelity for N=3,5,7 with gamma=0.004g, kappa=0.006g",
            Preset::Fig2Current => "end-to-end fidelity vs odd N, current rates",
            Preset::Fig2Projected => "end-to-end fidelity vs odd N, projected rates",
            Preset::Fig3 => "fidelity vs relative timing errors in both steps, N=5,7,9,11",
            Preset::Fig4 => "fidelity vs delay between the steps, N=5,7,9,11",
        }
    }

    pub fn spec(&self) -> SweepSpec {
        let odd = |lo: usize, hi: usize| (lo..=hi).step_by(2).collect::<Vec<_>>();
        match self {
            Preset::Table1 => SweepSpec {
                pairs: TABLE_PAIRS.to_vec(),
                ..SweepSpec::new(SweepKind::TransferPairs, ParamSet::Lossless)
            },
            Preset::Table2 => SweepSpec {
                pairs: TABLE_PAIRS.to_vec(),
                ..SweepSpec::new(SweepKind::TransferPairs, ParamSet::Current)
            },
            Preset::Fig2Current => {
                SweepSpec::new(SweepKind::FidelityVsN, ParamSet::Current).with_n_range(odd(3, 61))
            }
            Preset::Fig2Projected => SweepSpec::new(SweepKind::FidelityVsN, ParamSet::Projected)
                .with_n_range(odd(3, 221)),
            Preset::Fig3 => SweepSpec {
                error_grid: (-10..=10).map(|i| i as f64 / 100.0).collect(),
                ..SweepSpec::new(SweepKind::TimingErrorSurface, ParamSet::Current)
                    .with_n_range([5, 7, 9, 11])
            },
            Preset::Fig4 => SweepSpec {
                delay_grid: (0..=80).map(|i| i as f64 / 4.0).collect(),
                ..SweepSpec::new(SweepKind::DelayCurve, ParamSet::Current).with_n_range([5, 7, 9, 11])
            },
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                Error::InvalidConfiguration(format!(
                    "unknown preset '{s}' (available: {})",
                    names.join(", ")
                ))
            })
    }
}

/// Header metadata written ahead of the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub format_version: u32,
    pub kind: SweepKind,
    pub param_set: String,
    pub preset: Option<String>,
    pub columns: Vec<String>,
}

impl Provenance {
    pub fn for_spec(spec: &SweepSpec, preset: Option<Preset>) -> Self {
        Provenance {
            format_version: FORMAT_VERSION,
            kind: spec.kind,
            param_set: spec.param_set.describe(),
            preset: preset.map(|p| format!("{} ({})", p.name(), p.description())),
            columns: CSV_COLUMNS.iter().map(|c| c.to_string()).collect(),
        }
    }
}

/// CSV with `#`-prefixed provenance lines followed by a header row.
pub fn write_csv<W: Write>(mut out: W, provenance: &Provenance, records: &[RunRecord]) -> Result<()> {
    writeln!(out, "# format_version: {}", provenance.format_version)?;
    writeln!(out, "# kind: {}", provenance.kind)?;
    writeln!(out, "# param_set: {}", provenance.param_set)?;
    if let Some(preset) = &provenance.preset {
        writeln!(out, "# preset: {preset}")?;
    }
    writeln!(
        out,
        "# units: rates in units of g, times as dimensionless gt; dt fractions are relative"
    )?;
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(CSV_COLUMNS)?;
    }
    for rec in records {
        w.serialize(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: BufRead>(input: R) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(Error::InvalidConfiguration(format!(
            "unexpected CSV columns: {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDocument {
    pub provenance: Provenance,
    pub records: Vec<RunRecord>,
}

pub fn write_json<W: Write>(out: W, provenance: &Provenance, records: &[RunRecord]) -> Result<()> {
    let doc = SweepDocument {
        provenance: provenance.clone(),
        records: records.to_vec(),
    };
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)?;
    Ok(())
}

pub fn read_json<R: std::io::Read>(input: R) -> Result<SweepDocument> {
    Ok(serde_json::from_reader(input)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip_by_name() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
            p.spec().validate().unwrap();
        }
        assert!("fig5".parse::<Preset>().is_err());
    }

    #[test]
    fn spec_validation() {
        let spec = SweepSpec::new(SweepKind::FidelityVsN, ParamSet::Current).with_n_range([3, 4]);
        assert!(spec.validate().is_err());
        let spec = SweepSpec::new(SweepKind::FidelityVsN, ParamSet::Current).with_n_range([5, 3]);
        assert!(spec.validate().is_err());
        let spec = SweepSpec::new(SweepKind::DelayCurve, ParamSet::Current).with_n_range([5]);
        assert!(spec.validate().is_err());
        let mut spec = SweepSpec::new(SweepKind::TimingErrorSurface, ParamSet::Current).with_n_range([5]);
        spec.error_grid = vec![-0.2, 0.0];
        assert!(spec.validate().is_err());
        let mut spec = SweepSpec::new(SweepKind::Threshold, ParamSet::Current).with_n_range([5]);
        spec.threshold_value = 0.0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn timing_surface_point_count() {
        let spec = Preset::Fig3.spec();
        assert_eq!(spec.points().unwrap().len(), 4 * 21 * 21);
    }

    #[test]
    fn wrong_kind_rejected() {
        let spec = Preset::Fig4.spec();
        assert!(sweep_fidelity_vs_n(&spec, &SweepOptions::default()).is_err());
    }

    #[test]
    fn projected_rates_match_cooperativity() {
        let (g, k) = PROJECTED_RATES;
        assert!((1.0 / (g * k) - PROJECTED_COOPERATIVITY).abs() < 1e-3);
    }

    #[test]
    fn empty_csv_still_has_header() {
        let spec = Preset::Fig2Current.spec();
        let mut buf = Vec::new();
        write_csv(&mut buf, &Provenance::for_spec(&spec, None), &[]).unwrap();
        assert!(read_csv(buf.as_slice()).unwrap().is_empty());
    }
}
