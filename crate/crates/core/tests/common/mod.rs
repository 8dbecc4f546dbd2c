#![allow(dead_code)]

use iccsim::airlink::{BobSignal, LinkParams};
use iccsim::channel::{ChannelRealization, ChannelSampler, one_ring_covariance, OneRingParams};
use iccsim::code::generate_codebook;
use iccsim::protocol::{
    codeword_to_sap, map_phase_to_codeword, schedule_from_index, training_subcarriers, PhaseAlphabet,
    DEFAULT_PHASE_STEP,
};
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Binomial coefficient from an explicit Pascal triangle row.
pub fn binomial_big(n: usize, k: usize) -> BigUint {
    let mut row = vec![BigUint::from(1u8)];
    for _ in 0..n {
        let mut next = vec![BigUint::from(1u8); row.len() + 1];
        for i in 1..row.len() {
            next[i] = &row[i - 1] + &row[i];
        }
        row = next;
    }
    row.get(k).cloned().unwrap_or_default()
}

pub fn binomial_pascal(n: usize, k: usize) -> u64 {
    binomial_big(n, k).try_into().expect("fits in u64")
}

/// Bob's first codeword over `N_B = 9`, `L = 3` with a fresh channel draw.
pub fn bob_signal(n_fft: usize, nt: usize, noise_var: f64, seed: u64) -> (BobSignal, LinkParams, ChannelRealization) {
    let (n_b, taps) = (9, 3);
    let book = generate_codebook(n_b, taps).unwrap();
    let alphabet = PhaseAlphabet::new(4).unwrap();
    let psi_b = training_subcarriers(n_fft, n_b).unwrap();
    let word = map_phase_to_codeword(1, &alphabet, &book).unwrap();
    let sap = codeword_to_sap(&word, &psi_b).unwrap();
    let schedule = schedule_from_index(&alphabet, 1, DEFAULT_PHASE_STEP, 3).unwrap();
    let link = LinkParams {
        n_fft,
        psi_b,
        noise_var,
        alphabet,
        phase_step: DEFAULT_PHASE_STEP,
        weight: book.weight(),
        symbols: 3,
    };
    let p = OneRingParams::new(0.0, std::f64::consts::PI / 6.0, 0.5, nt).unwrap();
    let q = OneRingParams::new(0.6, std::f64::consts::PI / 6.0, 0.5, nt).unwrap();
    let sampler = ChannelSampler::new(&one_ring_covariance(&p).unwrap(), &one_ring_covariance(&q).unwrap(), taps).unwrap();
    let channels = sampler.sample(&mut ChaCha8Rng::seed_from_u64(seed));
    (BobSignal { word, sap, schedule }, link, channels)
}
