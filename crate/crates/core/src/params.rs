//! Static physical configuration of the atom + coupled-cavity system.
//!
//! Every rate is stored in units of the atom-field coupling `g`; durations are
//! the dimensionless product `gt`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this hopping ratio the single-mode reduction is not trusted.
pub const DEFAULT_REGIME_THRESHOLD: f64 = 20.0;

/// How the leakage of the N individual cavities is mapped onto the resonant
/// normal mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeDecayScaling {
    /// Collective rate `N·γ` on `b_q`.
    #[default]
    Paper,
    /// Rate `γ`, as obtained by rotating N identical local channels.
    Uniform,
}

impl fmt::Display for ModeDecayScaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeDecayScaling::Paper => f.write_str("paper"),
            ModeDecayScaling::Uniform => f.write_str("uniform"),
        }
    }
}

impl FromStr for ModeDecayScaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(ModeDecayScaling::Paper),
            "uniform" => Ok(ModeDecayScaling::Uniform),
            other => Err(Error::InvalidConfiguration(format!(
                "unknown mode decay scaling '{other}' (expected paper or uniform)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub n_cavities: usize,
    /// A/g.
    pub hop_rate_over_g: f64,
    /// δ/g with δ = ω_c − ω_0.
    pub detuning_over_g: f64,
    /// Per-cavity field decay γ/g.
    pub gamma_over_g: f64,
    pub kappa_s_over_g: f64,
    pub kappa_r_over_g: f64,
    /// 1-based site of the sender atom.
    pub sender: usize,
    /// 1-based site of the receiver atom.
    pub receiver: usize,
    /// 1-based index of the normal mode kept resonant with the atoms.
    pub resonant_mode: usize,
    #[serde(default)]
    pub mode_decay_scaling: ModeDecayScaling,
    #[serde(default = "default_regime_threshold")]
    pub regime_threshold: f64,
}

fn default_regime_threshold() -> f64 {
    DEFAULT_REGIME_THRESHOLD
}

impl ChainParams {
    /// Lossless chain with the atoms resonant with mode `q`. The detuning is
    /// set to `−β_q` and the hopping ratio to 100.
    pub fn lossless(n_cavities: usize, sender: usize, receiver: usize, q: usize) -> Self {
        let mut params = ChainParams {
            n_cavities,
            hop_rate_over_g: 100.0,
            detuning_over_g: 0.0,
            gamma_over_g: 0.0,
            kappa_s_over_g: 0.0,
            kappa_r_over_g: 0.0,
            sender,
            receiver,
            resonant_mode: q,
            mode_decay_scaling: ModeDecayScaling::Paper,
            regime_threshold: DEFAULT_REGIME_THRESHOLD,
        };
        params.detuning_over_g = params.resonant_detuning();
        params
    }

    /// End-to-end transfer (s=1, r=N) on an odd chain through q=(N+1)/2.
    pub fn end_to_end(n_cavities: usize) -> Self {
        Self::lossless(n_cavities, 1, n_cavities, n_cavities.div_ceil(2))
    }

    pub fn with_rates(mut self, gamma_over_g: f64, kappa_over_g: f64) -> Self {
        self.gamma_over_g = gamma_over_g;
        self.kappa_s_over_g = kappa_over_g;
        self.kappa_r_over_g = kappa_over_g;
        self
    }

    pub fn with_hop_rate(mut self, hop_rate_over_g: f64) -> Self {
        self.hop_rate_over_g = hop_rate_over_g;
        self.detuning_over_g = self.resonant_detuning();
        self
    }

    /// `−β_q/g`, the detuning that puts mode q on resonance.
    pub fn resonant_detuning(&self) -> f64 {
        let n = self.n_cavities as f64;
        let angle = self.resonant_mode as f64 * std::f64::consts::PI / (n + 1.0);
        let beta = 2.0 * self.hop_rate_over_g * angle.cos();
        if beta.abs() < 1e-12 * self.hop_rate_over_g.max(1.0) {
            0.0
        } else {
            -beta
        }
    }

    /// Collapse rate on the resonant mode for the configured scaling.
    pub fn mode_decay_rate(&self) -> f64 {
        match self.mode_decay_scaling {
            ModeDecayScaling::Paper => self.n_cavities as f64 * self.gamma_over_g,
            ModeDecayScaling::Uniform => self.gamma_over_g,
        }
    }

    pub fn is_lossless(&self) -> bool {
        self.gamma_over_g == 0.0 && self.kappa_s_over_g == 0.0 && self.kappa_r_over_g == 0.0
    }

    /// Checks the structural invariants. A hopping ratio below the regime
    /// threshold only logs a warning.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_cavities;
        if n < 2 {
            return Err(Error::InvalidConfiguration(format!(
                "need at least 2 cavities, got N={n}"
            )));
        }
        for (name, value) in [
            ("sender", self.sender),
            ("receiver", self.receiver),
            ("resonant_mode", self.resonant_mode),
        ] {
            if value < 1 || value > n {
                return Err(Error::IndexOutOfRange {
                    name,
                    value,
                    max: n,
                });
            }
        }
        if self.sender == self.receiver {
            return Err(Error::InvalidConfiguration(format!(
                "sender and receiver must differ (both {})",
                self.sender
            )));
        }
        if !(self.hop_rate_over_g > 0.0) || !self.hop_rate_over_g.is_finite() {
            return Err(Error::InvalidConfiguration(format!(
                "hop_rate_over_g must be positive, got {}",
                self.hop_rate_over_g
            )));
        }
        if !self.detuning_over_g.is_finite() {
            return Err(Error::InvalidConfiguration("detuning must be finite".into()));
        }
        for (name, rate) in [
            ("gamma_over_g", self.gamma_over_g),
            ("kappa_s_over_g", self.kappa_s_over_g),
            ("kappa_r_over_g", self.kappa_r_over_g),
        ] {
            if !(rate >= 0.0) || !rate.is_finite() {
                return Err(Error::InvalidConfiguration(format!(
                    "{name} must be a finite non-negative rate, got {rate}"
                )));
            }
        }
        if self.hop_rate_over_g < self.regime_threshold {
            log::warn!(
                "A/g = {} is below the regime threshold {}; the single-mode reduction may be inaccurate",
                self.hop_rate_over_g,
                self.regime_threshold
            );
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_chain_middle_mode_needs_no_detuning() {
        for n in [3, 5, 7, 51, 199] {
            assert_eq!(ChainParams::end_to_end(n).detuning_over_g, 0.0);
        }
    }

    #[test]
    fn rejects_bad_sites() {
        let mut p = ChainParams::end_to_end(5);
        p.receiver = 6;
        assert!(matches!(p.validate(), Err(Error::IndexOutOfRange { .. })));
        p.receiver = 1;
        assert!(matches!(p.validate(), Err(Error::InvalidConfiguration(_))));
        let p = ChainParams::end_to_end(1);
        assert!(p.validate().is_err());
    }

    #[test]
    fn low_hop_ratio_is_only_a_warning() {
        let p = ChainParams::end_to_end(5).with_hop_rate(0.1);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn negative_rate_rejected() {
        let p = ChainParams::end_to_end(3).with_rates(-1e-3, 0.0);
        assert!(p.validate().is_err());
    }

    #[test]
    fn scaling_parses() {
        assert_eq!("paper".parse::<ModeDecayScaling>().unwrap(), ModeDecayScaling::Paper);
        assert_eq!("uniform".parse::<ModeDecayScaling>().unwrap(), ModeDecayScaling::Uniform);
        assert!("local".parse::<ModeDecayScaling>().is_err());
    }
}
