use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::airlink::ReceivedGrid;
use crate::code::Codeword;
use crate::{Error, Result};

/// Per-subcarrier energy detector over three symbols and all antennas.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub target_pf: f64,
    pub symbols_used: usize,
    pub noise_var: f64,
    pub n_antennas: usize,
    /// Threshold on the normalized energy statistic.
    pub threshold: f64,
}

impl DetectorConfig {
    pub fn new(target_pf: f64, noise_var: f64, n_antennas: usize) -> Result<Self> {
        if !(target_pf > 0.0 && target_pf < 1.0) {
            return Err(Error::InvalidParameter(format!("target_pf {target_pf} outside (0, 1)")));
        }
        if !(noise_var > 0.0) {
            return Err(Error::InvalidParameter("noise variance must be > 0".into()));
        }
        if n_antennas == 0 {
            return Err(Error::InvalidParameter("n_antennas must be >= 1".into()));
        }
        let symbols_used = 3;
        Ok(Self {
            target_pf,
            symbols_used,
            noise_var,
            n_antennas,
            threshold: detection_threshold(target_pf, symbols_used * n_antennas),
        })
    }
}

/// Upper `pf` quantile of `χ²_{2n} / (2n)`: the noise-only law of the
/// statistic averaged over `n` complex samples.
pub fn detection_threshold(target_pf: f64, samples: usize) -> f64 {
    let dof = 2.0 * samples as f64;
    let chi = ChiSquared::new(dof).expect("positive degrees of freedom");
    chi.inverse_cdf(1.0 - target_pf) / dof
}

/// Normalized energy `Σ_k Σ_i |y|² / (3·N_T·σ²)` at subcarrier `j`.
pub fn energy_statistic(grid: &ReceivedGrid, config: &DetectorConfig, j: usize) -> f64 {
    let total: f64 = (0..config.symbols_used).map(|k| grid.energy(k, j)).sum();
    total / (config.symbols_used as f64 * grid.n_antennas as f64 * config.noise_var)
}

/// Occupancy of each training subcarrier, as a word over `psi_b`.
pub fn detect_sap(grid: &ReceivedGrid, config: &DetectorConfig, psi_b: &[usize]) -> Result<Codeword> {
    if grid.symbols < config.symbols_used {
        return Err(Error::InvalidParameter(format!(
            "detection needs {} symbols, grid has {}",
            config.symbols_used, grid.symbols
        )));
    }
    if grid.n_antennas != config.n_antennas {
        return Err(Error::Dimension("detector calibrated for a different antenna count".into()));
    }
    Ok(Codeword::new(
        psi_b.iter().map(|&j| energy_statistic(grid, config, j) > config.threshold).collect(),
    ))
}
