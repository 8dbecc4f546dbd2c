//! Alice's side: SAP detection, codeword separation, identification, LMMSE
//! estimation on overlapped subcarriers and the `Δf` tie-break.

mod decide;
mod detect;
mod estimate;
mod separate;

pub use decide::{
    asymptotic_delta_f, delta_f, delta_f_tolerance, delta_f_with, enhance_identification, identify,
    kron_quadratic_form, Hypothesis, IdentificationOutcome, Status,
};
pub use detect::{detect_sap, detection_threshold, energy_statistic, DetectorConfig};
pub use estimate::{
    cir_nmse, fs_to_cir, lmmse_estimate, perfect_mmse_estimate, stack_observations, true_fs, EstimationResult,
};
pub use separate::{angle_distance, separate_codewords, SeparationConfig, SeparationResult, SubcarrierClass};

use std::sync::OnceLock;

use crate::airlink::ReceivedGrid;
use crate::channel::{
    dft_submatrix, one_ring_covariance, support_eigen, support_rank, uniform_pdp, CovarianceMatrix, OneRingParams,
};
use crate::code::{Codebook, Codeword};
use crate::protocol::{demap_codeword, PhaseAlphabet};
use crate::{CMatrix, Result, C64};

/// Everything the receiver produced for one frame.
#[derive(Debug, Clone)]
pub struct ReceiverReport {
    pub observed: Codeword,
    pub separation: SeparationResult,
    pub outcome: IdentificationOutcome,
    pub estimation: Option<EstimationResult>,
}

/// Per-link receiver state, built once and reused across frames.
#[derive(Debug, Clone)]
pub struct Receiver {
    pub book: Codebook,
    pub alphabet: PhaseAlphabet,
    pub psi_b: Vec<usize>,
    pub n_fft: usize,
    pub taps: usize,
    pub detector: DetectorConfig,
    pub separation: SeparationConfig,
    /// Legitimate pilot amplitude `√ρ_B`.
    pub bob_amplitude: f64,
    pub r1: CovarianceMatrix,
    bob_params: OneRingParams,
    rho1: usize,
    r1_bar: OnceLock<CMatrix>,
}

impl Receiver {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        book: Codebook,
        alphabet: PhaseAlphabet,
        psi_b: Vec<usize>,
        n_fft: usize,
        taps: usize,
        bob: &OneRingParams,
        noise_var: f64,
        target_pf: f64,
        phi_bar: f64,
    ) -> Result<Self> {
        let r1 = one_ring_covariance(bob)?;
        Self::with_covariance(book, alphabet, psi_b, n_fft, taps, bob, r1, noise_var, target_pf, phi_bar)
    }

    /// Like `new` with Bob's covariance supplied by the caller.
    #[allow(clippy::too_many_arguments)]
    pub fn with_covariance(
        book: Codebook,
        alphabet: PhaseAlphabet,
        psi_b: Vec<usize>,
        n_fft: usize,
        taps: usize,
        bob: &OneRingParams,
        r1: CovarianceMatrix,
        noise_var: f64,
        target_pf: f64,
        phi_bar: f64,
    ) -> Result<Self> {
        let detector = DetectorConfig::new(target_pf, noise_var, bob.n_antennas)?;
        let separation = SeparationConfig::new(phi_bar, alphabet.resolution);
        Ok(Self {
            book,
            alphabet,
            psi_b,
            n_fft,
            taps,
            detector,
            separation,
            bob_amplitude: 1.0,
            rho1: support_rank(bob).min(r1.dim()),
            bob_params: *bob,
            r1_bar: OnceLock::new(),
            r1,
        })
    }

    pub fn rho1(&self) -> usize {
        self.rho1
    }

    /// `R̄₁` from the dominant `ρ₁` eigenpairs, computed on first use.
    pub fn r1_bar(&self) -> &CMatrix {
        self.r1_bar.get_or_init(|| support_eigen(&self.r1, &self.bob_params).pseudo_inverse())
    }

    pub fn tolerance(&self) -> f64 {
        delta_f_tolerance(self.taps, self.rho1)
    }

    /// Two-symbol pilot of a stream with known step, amplitude and initial phase.
    fn pilot_pair(amplitude: f64, initial: f64, step: f64) -> [C64; 2] {
        [C64::from_polar(amplitude, initial), C64::from_polar(amplitude, initial + step)]
    }

    fn initial_phase(&self, word: &Option<Codeword>) -> f64 {
        word.as_ref()
            .and_then(|w| demap_codeword(w, &self.alphabet, &self.book))
            .map_or(0.0, |m| self.alphabet.phase(m))
    }

    /// Amplitude and step of the non-legitimate stream from its exclusive subcarriers.
    fn other_stream(&self, grid: &ReceivedGrid, sep: &SeparationResult) -> Option<(f64, f64)> {
        let idx = sep.indices_of(SubcarrierClass::OtherOnly);
        if idx.is_empty() {
            return None;
        }
        let sep_cfg = &self.separation;
        let nt = grid.n_antennas as f64;
        let mut inner = C64::new(0.0, 0.0);
        let mut power = 0.0;
        for &i in &idx {
            let j = self.psi_b[i];
            let (d, e0, e1) = separate::differential(grid, j, sep_cfg.k0, sep_cfg.k1);
            inner += d;
            power += 0.5 * (e0 + e1) - nt * grid.noise_var;
        }
        // Unit-trace PDP and unit-diagonal covariance give E‖h_j‖² = N_T.
        let rho = (power / (idx.len() as f64 * nt)).max(1e-12);
        Some((rho.sqrt(), inner.arg()))
    }

    pub fn process(&self, grid: &ReceivedGrid) -> Result<ReceiverReport> {
        let observed = detect_sap(grid, &self.detector, &self.psi_b)?;
        let separation = separate_codewords(grid, &observed, &self.psi_b, &self.separation, &self.book);
        let outcome = identify(&separation, &self.book);
        if outcome.status != Status::Ambiguous {
            return Ok(ReceiverReport { observed, separation, outcome, estimation: None });
        }

        let overlap: Vec<usize> = separation
            .indices_of(SubcarrierClass::Both)
            .into_iter()
            .map(|i| self.psi_b[i])
            .collect();
        let other = self.other_stream(grid, &separation);
        let (Some((amp_a, step_a)), false) = (other, overlap.is_empty()) else {
            let mut failed = outcome.clone();
            failed.status = Status::Error;
            return Ok(ReceiverReport { observed, separation, outcome: failed, estimation: None });
        };
        let x1 = Self::pilot_pair(self.bob_amplitude, self.initial_phase(&separation.word_bob), self.separation.phi_bar);
        let x2 = Self::pilot_pair(amp_a, self.initial_phase(&separation.word_other), step_a);

        let f = dft_submatrix(self.n_fft, self.taps, &overlap)?;
        let pdp = uniform_pdp(self.taps);
        let rf = f.fs_covariance(&pdp);
        let rf_bar = f.fs_eigen(&pdp).pseudo_inverse();
        let est = lmmse_estimate(grid, x1, x2, &overlap, &self.r1, &rf)?;
        let df = delta_f_with(&est, self.r1_bar(), &rf_bar);
        let outcome = enhance_identification(&outcome, df, self.tolerance());
        Ok(ReceiverReport { observed, separation, outcome, estimation: Some(est) })
    }
}
