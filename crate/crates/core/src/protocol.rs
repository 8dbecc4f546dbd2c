//! Randomized pilot phases, the phase-to-codeword mapping and subcarrier
//! activation patterns.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::code::{binomial, Codebook, Codeword};
use crate::{Error, Result, C64};

/// Default public phase increment between consecutive pilot symbols.
pub const DEFAULT_PHASE_STEP: f64 = FRAC_PI_2;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseAlphabet {
    pub resolution: usize,
    pub phases: Vec<f64>,
}

impl PhaseAlphabet {
    pub fn new(resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::InvalidParameter("phase resolution must be >= 1".into()));
        }
        let phases = (0..resolution).map(|m| TAU * m as f64 / resolution as f64).collect();
        Ok(Self { resolution, phases })
    }

    pub fn phase(&self, m: usize) -> f64 {
        self.phases[m % self.resolution]
    }

    /// Index of the alphabet phase closest to `phase` on the circle.
    pub fn nearest(&self, phase: f64) -> usize {
        let step = TAU / self.resolution as f64;
        (phase.rem_euclid(TAU) / step).round() as usize % self.resolution
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PilotSchedule {
    /// Alphabet index of the phase at the first symbol.
    pub initial_index: usize,
    pub initial_phase: f64,
    pub phase_step: f64,
    pub amplitude: f64,
    pub symbols: usize,
}

impl PilotSchedule {
    /// Phase at symbol `k`, reduced to `[0, 2π)`.
    pub fn phase(&self, k: usize) -> f64 {
        (self.initial_phase + k as f64 * self.phase_step).rem_euclid(TAU)
    }

    pub fn pilot(&self, k: usize) -> C64 {
        C64::from_polar(self.amplitude, self.initial_phase + k as f64 * self.phase_step)
    }

    pub fn pilots(&self) -> Vec<C64> {
        (0..self.symbols).map(|k| self.pilot(k)).collect()
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }
}

/// Uniform initial phase from `alphabet`, then fixed increments of `phase_step`.
pub fn build_schedule(alphabet: &PhaseAlphabet, rng_seed: u64, phase_step: f64, symbols: usize) -> Result<PilotSchedule> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    build_schedule_with(alphabet, &mut rng, phase_step, symbols)
}

pub fn build_schedule_with<R: Rng + ?Sized>(
    alphabet: &PhaseAlphabet,
    rng: &mut R,
    phase_step: f64,
    symbols: usize,
) -> Result<PilotSchedule> {
    let m = rng.random_range(0..alphabet.resolution);
    schedule_from_index(alphabet, m, phase_step, symbols)
}

pub fn schedule_from_index(alphabet: &PhaseAlphabet, m: usize, phase_step: f64, symbols: usize) -> Result<PilotSchedule> {
    if symbols < 2 {
        return Err(Error::InvalidParameter(format!("a schedule needs >= 2 symbols, got {symbols}")));
    }
    if m >= alphabet.resolution {
        return Err(Error::InvalidParameter(format!("phase index {m} outside alphabet")));
    }
    Ok(PilotSchedule {
        initial_index: m,
        initial_phase: alphabet.phase(m),
        phase_step,
        amplitude: 1.0,
        symbols,
    })
}

/// Smallest parity-valid `N_B >= s` whose code has at least `resolution` words.
pub fn min_feasible_length(resolution: usize, order: usize) -> usize {
    let need = BigUint::from(resolution);
    let mut n_b = order.max(1);
    loop {
        if (n_b + order) % 2 == 0 && binomial(n_b, (n_b + order) / 2) >= need {
            return n_b;
        }
        n_b += 1;
    }
}

fn check_alphabet_fits(alphabet: &PhaseAlphabet, book: &Codebook) -> Result<()> {
    if book.count() < &BigUint::from(alphabet.resolution) {
        return Err(Error::AlphabetTooLarge {
            resolution: alphabet.resolution,
            min_n_b: min_feasible_length(alphabet.resolution, book.order()),
        });
    }
    Ok(())
}

/// Codeword at rank `m`.
pub fn map_phase_to_codeword(m: usize, alphabet: &PhaseAlphabet, book: &Codebook) -> Result<Codeword> {
    check_alphabet_fits(alphabet, book)?;
    if m >= alphabet.resolution {
        return Err(Error::InvalidParameter(format!("phase index {m} outside alphabet")));
    }
    Ok(book.word_at(m).expect("rank checked against count"))
}

/// Inverse of `map_phase_to_codeword`; `None` when the word carries no phase.
pub fn demap_codeword(word: &Codeword, alphabet: &PhaseAlphabet, book: &Codebook) -> Option<usize> {
    let r = book.rank_of(word)?.to_usize()?;
    (r < alphabet.resolution).then_some(r)
}

/// Active training subcarriers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sap {
    pub active: Vec<usize>,
}

fn check_psi(len: usize, psi_b: &[usize]) -> Result<()> {
    if psi_b.len() != len {
        return Err(Error::Dimension(format!(
            "training index list has {} entries, codeword has {len}",
            psi_b.len()
        )));
    }
    Ok(())
}

pub fn codeword_to_sap(word: &Codeword, psi_b: &[usize]) -> Result<Sap> {
    check_psi(word.len(), psi_b)?;
    Ok(Sap { active: word.ones().into_iter().map(|i| psi_b[i]).collect() })
}

pub fn sap_to_codeword(sap: &Sap, psi_b: &[usize]) -> Result<Codeword> {
    let mut bits = vec![false; psi_b.len()];
    for j in &sap.active {
        let i = psi_b
            .iter()
            .position(|p| p == j)
            .ok_or_else(|| Error::InvalidParameter(format!("subcarrier {j} is not a training subcarrier")))?;
        bits[i] = true;
    }
    Ok(Codeword::new(bits))
}

/// `N_B` equally spaced subcarriers `⌊i·N/N_B⌋`.
pub fn training_subcarriers(n_fft: usize, n_b: usize) -> Result<Vec<usize>> {
    if n_b == 0 || n_b > n_fft {
        return Err(Error::InvalidParameter(format!("need 1 <= N_B <= N, got N_B = {n_b}, N = {n_fft}")));
    }
    Ok((0..n_b).map(|i| i * n_fft / n_b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::generate_codebook;

    #[test]
    fn first_phase_maps_to_first_word() {
        let book = generate_codebook(6, 2).unwrap();
        let alpha = PhaseAlphabet::new(8).unwrap();
        assert_eq!(map_phase_to_codeword(0, &alpha, &book).unwrap().to_string(), "111100");
        for m in 0..8 {
            let w = map_phase_to_codeword(m, &alpha, &book).unwrap();
            assert_eq!(demap_codeword(&w, &alpha, &book), Some(m));
        }
    }

    #[test]
    fn alphabet_too_large_names_min_length() {
        let book = generate_codebook(4, 2).unwrap();
        let alpha = PhaseAlphabet::new(8).unwrap();
        match map_phase_to_codeword(0, &alpha, &book) {
            Err(Error::AlphabetTooLarge { min_n_b, .. }) => assert_eq!(min_n_b, 6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn constant_phase_with_zero_step() {
        let alpha = PhaseAlphabet::new(4).unwrap();
        let s = build_schedule(&alpha, 3, 0.0, 5).unwrap();
        assert!((0..5).all(|k| s.phase(k) == s.phase(0)));
        assert!(build_schedule(&alpha, 3, 0.0, 1).is_err());
    }

    #[test]
    fn positional_sap() {
        let w = Codeword::parse("0111").unwrap();
        let sap = codeword_to_sap(&w, &[2, 5, 8, 11]).unwrap();
        assert_eq!(sap.active, vec![5, 8, 11]);
        assert_eq!(sap_to_codeword(&sap, &[2, 5, 8, 11]).unwrap(), w);
        let ones = Codeword::parse("1111").unwrap();
        assert_eq!(codeword_to_sap(&ones, &[2, 5, 8, 11]).unwrap().active, vec![2, 5, 8, 11]);
        assert!(codeword_to_sap(&w, &[2, 5, 8]).is_err());
    }

    #[test]
    fn equal_spacing() {
        assert_eq!(training_subcarriers(16, 4).unwrap(), vec![0, 4, 8, 12]);
        assert!(training_subcarriers(4, 5).is_err());
    }

    #[test]
    fn nearest_wraps() {
        let alpha = PhaseAlphabet::new(4).unwrap();
        assert_eq!(alpha.nearest(-0.1), 0);
        assert_eq!(alpha.nearest(TAU - 0.1), 0);
        assert_eq!(alpha.nearest(1.5), 1);
    }
}
