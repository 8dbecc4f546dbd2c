use std::f64::consts::{PI, TAU};

use crate::airlink::ReceivedGrid;
use crate::code::{Codebook, Codeword};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubcarrierClass {
    BobOnly,
    OtherOnly,
    Both,
    Idle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationConfig {
    /// Public phase step of the legitimate schedule.
    pub phi_bar: f64,
    /// Maximum distance of the differential phase from `phi_bar`.
    pub phase_tol: f64,
    /// Two-symbol coherence above which a subcarrier carries a single stream.
    pub coherence_min: f64,
    pub k0: usize,
    pub k1: usize,
}

impl SeparationConfig {
    pub const DEFAULT_COHERENCE_MIN: f64 = 0.9;

    /// `phase_tol = π / C_φ`.
    pub fn new(phi_bar: f64, resolution: usize) -> Self {
        Self {
            phi_bar,
            phase_tol: PI / resolution as f64,
            coherence_min: Self::DEFAULT_COHERENCE_MIN,
            k0: 0,
            k1: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationResult {
    pub observed: Codeword,
    /// `None` when the candidate does not have the code weight.
    pub word_bob: Option<Codeword>,
    pub word_other: Option<Codeword>,
    /// A second stream was seen on at least one subcarrier.
    pub other_present: bool,
    pub per_subcarrier_class: Vec<SubcarrierClass>,
}

impl SeparationResult {
    pub fn indices_of(&self, class: SubcarrierClass) -> Vec<usize> {
        self.per_subcarrier_class
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == class)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Wrapped distance between two angles, in `[0, π]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Inner product `Σ_i y_j^i[k1]·conj(y_j^i[k0])` and both symbol energies.
pub(crate) fn differential(grid: &ReceivedGrid, j: usize, k0: usize, k1: usize) -> (C64, f64, f64) {
    let y0 = grid.antennas(k0, j);
    let y1 = grid.antennas(k1, j);
    let inner = y1.iter().zip(y0).map(|(a, b)| a * b.conj()).sum();
    let e0 = y0.iter().map(|z| z.norm_sqr()).sum();
    let e1 = y1.iter().map(|z| z.norm_sqr()).sum();
    (inner, e0, e1)
}

/// Splits the observed superposition into the stream that advances by `phi_bar`
/// and everything else. Subcarriers where two streams mix go to both words.
pub fn separate_codewords(
    grid: &ReceivedGrid,
    observed: &Codeword,
    psi_b: &[usize],
    config: &SeparationConfig,
    book: &Codebook,
) -> SeparationResult {
    let noise_floor = grid.n_antennas as f64 * grid.noise_var;
    let classes: Vec<SubcarrierClass> = observed
        .bits()
        .iter()
        .zip(psi_b)
        .map(|(&active, &j)| {
            if !active {
                return SubcarrierClass::Idle;
            }
            let (inner, e0, e1) = differential(grid, j, config.k0, config.k1);
            let tiny = 1e-12 * noise_floor.max(f64::MIN_POSITIVE);
            let s0 = (e0 - noise_floor).max(tiny);
            let s1 = (e1 - noise_floor).max(tiny);
            let coherence = inner.norm() / (s0 * s1).sqrt();
            if coherence < config.coherence_min {
                SubcarrierClass::Both
            } else if angle_distance(inner.arg(), config.phi_bar) < config.phase_tol {
                SubcarrierClass::BobOnly
            } else {
                SubcarrierClass::OtherOnly
            }
        })
        .collect();

    let assemble = |keep: SubcarrierClass| {
        Codeword::new(classes.iter().map(|&c| c == keep || c == SubcarrierClass::Both).collect())
    };
    let bob = assemble(SubcarrierClass::BobOnly);
    let other = assemble(SubcarrierClass::OtherOnly);
    let other_present = other.weight() > 0;
    let resolve = |w: Codeword| (w.weight() == book.weight()).then_some(w);
    SeparationResult {
        observed: observed.clone(),
        word_bob: resolve(bob),
        word_other: resolve(other),
        other_present,
        per_subcarrier_class: classes,
    }
}
