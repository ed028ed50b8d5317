//! Normal modes of the uniform hopping Hamiltonian with open ends.
//!
//! The localized field operators `a_n` and the delocalized modes `b_k` are
//! related by the real symmetric orthogonal matrix
//! `S(n,k) = sqrt(2/(N+1)) sin(nkπ/(N+1))`, and mode k sits at
//! `β_k = 2A cos(kπ/(N+1))` relative to the bare cavity frequency.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::params::ChainParams;

/// Amplitudes below this are returned as exact zeros.
pub const ZERO_SNAP: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct ModeBasis {
    n_cavities: usize,
    /// Entry (n-1, k-1) holds S(n,k).
    amplitudes: DMatrix<f64>,
    /// β_k / A for k = 1..=N.
    frequencies: Vec<f64>,
}

/// sin(mπ/(N+1)) with the argument reduced modulo 2π and exact zeros on the
/// nodes.
fn sin_fraction(m: usize, n_plus_one: usize) -> f64 {
    let period = 2 * n_plus_one;
    let m = m % period;
    if m % n_plus_one == 0 {
        return 0.0;
    }
    let value = (m as f64 * PI / n_plus_one as f64).sin();
    if value.abs() < ZERO_SNAP {
        0.0
    } else {
        value
    }
}

fn cos_fraction(k: usize, n_plus_one: usize) -> f64 {
    if 2 * k == n_plus_one {
        return 0.0;
    }
    (k as f64 * PI / n_plus_one as f64).cos()
}

impl ModeBasis {
    pub fn new(n_cavities: usize) -> Result<Self> {
        if n_cavities < 2 {
            return Err(Error::InvalidConfiguration(format!(
                "normal-mode basis needs N >= 2, got {n_cavities}"
            )));
        }
        let np1 = n_cavities + 1;
        let norm = (2.0 / np1 as f64).sqrt();
        let amplitudes = DMatrix::from_fn(n_cavities, n_cavities, |i, j| {
            let s = sin_fraction((i + 1) * (j + 1), np1);
            if s == 0.0 {
                0.0
            } else {
                norm * s
            }
        });
        let frequencies = (1..=n_cavities).map(|k| 2.0 * cos_fraction(k, np1)).collect();
        Ok(ModeBasis {
            n_cavities,
            amplitudes,
            frequencies,
        })
    }

    pub fn n_cavities(&self) -> usize {
        self.n_cavities
    }

    pub fn amplitudes(&self) -> &DMatrix<f64> {
        &self.amplitudes
    }

    /// β_k/A, k = 1..=N in order.
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    fn check(&self, name: &'static str, value: usize) -> Result<()> {
        if value == 0 || value > self.n_cavities {
            Err(Error::IndexOutOfRange {
                name,
                value,
                max: self.n_cavities,
            })
        } else {
            Ok(())
        }
    }

    /// S(site, mode), 1-based.
    pub fn amplitude(&self, site: usize, mode: usize) -> Result<f64> {
        self.check("site", site)?;
        self.check("mode", mode)?;
        Ok(self.amplitudes[(site - 1, mode - 1)])
    }

    /// β_k/A, 1-based.
    pub fn frequency(&self, mode: usize) -> Result<f64> {
        self.check("mode", mode)?;
        Ok(self.frequencies[mode - 1])
    }

    /// Localized amplitudes (per cavity) to normal-mode amplitudes.
    pub fn to_modes(&self, local: &DVector<f64>) -> DVector<f64> {
        // S is symmetric, so Sᵀ·x == S·x
        &self.amplitudes * local
    }

    /// Normal-mode amplitudes back to localized ones.
    pub fn to_sites(&self, modes: &DVector<f64>) -> DVector<f64> {
        &self.amplitudes * modes
    }
}

pub fn build_mode_basis(params: &ChainParams) -> Result<ModeBasis> {
    ModeBasis::new(params.n_cavities)
}

pub fn mode_amplitude(basis: &ModeBasis, site: usize, mode: usize) -> Result<f64> {
    basis.amplitude(site, mode)
}

/// Closed form of S(N, q) for odd N and q = (N+1)/2: `(−1)^(q−1)/√q`.
///
/// The value is cross-checked against the sine form.
pub fn end_site_parity_amplitude(n_cavities: usize) -> Result<f64> {
    if n_cavities < 3 || n_cavities % 2 == 0 {
        return Err(Error::InvalidConfiguration(format!(
            "end-site parity amplitude requires odd N >= 3, got {n_cavities}"
        )));
    }
    let q = (n_cavities + 1) / 2;
    let sign = if (q - 1) % 2 == 0 { 1.0 } else { -1.0 };
    let closed = sign / (q as f64).sqrt();
    let basis = ModeBasis::new(n_cavities)?;
    let direct = basis.amplitude(n_cavities, q)?;
    if (closed - direct).abs() > 1e-12 {
        return Err(Error::ContractViolation(format!(
            "S(N,q) mismatch for N={n_cavities}: closed form {closed} vs sine form {direct}"
        )));
    }
    Ok(closed)
}
