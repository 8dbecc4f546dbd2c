//! Frequency-domain received grids for Bob plus a configurable attacker.
//!
//! Samples are stored symbol-major, then subcarrier, then antenna:
//! `samples[(k·N + j)·N_T + i]`.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use num_complex::Complex32;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::{dft_submatrix, ChannelRealization};
use crate::code::{random_word, Codeword};
use crate::protocol::{codeword_to_sap, PhaseAlphabet, PilotSchedule, Sap};
use crate::{CMatrix, Error, Result, C64};

pub const GRID_MAGIC: &[u8; 8] = b"ICCGRID1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackMode {
    /// Pilot tone spoofing.
    Pts,
    /// Pilot tone nulling.
    Ptn,
    /// Wide-band pilot tone jamming.
    PtjWb,
    /// Partial-band pilot tone jamming.
    PtjPb,
    /// Silence cheating.
    Sc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SapStrategy {
    MimicBob,
    RandomCodebookWord,
    ArbitraryRandomPattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PilotStrategy {
    /// Transmit exactly Bob's pilot symbols.
    CopyBob,
    /// Random initial phase and step from the public alphabet, step different from Bob's.
    OwnSchedule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackerConfig {
    pub mode: AttackMode,
    /// Transmit power ρ_A.
    pub power: f64,
    /// Fraction of the training subcarriers jammed in partial-band mode.
    pub victim_fraction: f64,
    pub sap_strategy: SapStrategy,
    pub pilot_strategy: PilotStrategy,
    /// The attacker knows both channels (needed for nulling).
    pub genie: bool,
}

impl AttackerConfig {
    pub fn silent() -> Self {
        Self {
            mode: AttackMode::Sc,
            power: 0.0,
            victim_fraction: 0.0,
            sap_strategy: SapStrategy::MimicBob,
            pilot_strategy: PilotStrategy::CopyBob,
            genie: false,
        }
    }

    pub fn spoofing(power: f64, sap_strategy: SapStrategy, pilot_strategy: PilotStrategy) -> Self {
        Self { mode: AttackMode::Pts, power, sap_strategy, pilot_strategy, ..Self::silent() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == AttackMode::Ptn && !self.genie {
            return Err(Error::InvalidParameter("nulling needs genie channel knowledge".into()));
        }
        if self.mode == AttackMode::Sc && self.power != 0.0 {
            return Err(Error::InvalidParameter("silence cheating transmits zero power".into()));
        }
        if !(self.power >= 0.0) || !self.power.is_finite() {
            return Err(Error::InvalidParameter(format!("attacker power {} invalid", self.power)));
        }
        if !(0.0..=1.0).contains(&self.victim_fraction) {
            return Err(Error::InvalidParameter(format!(
                "victim fraction {} outside [0, 1]",
                self.victim_fraction
            )));
        }
        Ok(())
    }
}

/// Static link parameters shared by all trials.
#[derive(Debug, Clone)]
pub struct LinkParams {
    pub n_fft: usize,
    /// Training subcarriers Ψ_B.
    pub psi_b: Vec<usize>,
    pub noise_var: f64,
    pub alphabet: PhaseAlphabet,
    /// Public phase step φ̄ of the legitimate schedule.
    pub phase_step: f64,
    /// Codeword weight, used by the random-codeword attacker.
    pub weight: usize,
    pub symbols: usize,
}

#[derive(Debug, Clone)]
pub struct BobSignal {
    pub word: Codeword,
    pub sap: Sap,
    pub schedule: PilotSchedule,
}

/// Per-trial attacker decisions drawn once before transmission.
#[derive(Debug, Clone)]
pub struct AttackerPlan {
    /// Occupied training positions, as a word over Ψ_B.
    pub word: Option<Codeword>,
    pub schedule: Option<PilotSchedule>,
}

#[derive(Debug, Clone)]
pub struct GridTruth {
    pub channels: ChannelRealization,
    pub bob: BobSignal,
    pub ava_word: Option<Codeword>,
    pub ava_sap: Option<Sap>,
    pub ava_schedule: Option<PilotSchedule>,
    pub mode: AttackMode,
}

#[derive(Debug, Clone)]
pub struct ReceivedGrid {
    pub n_fft: usize,
    pub n_antennas: usize,
    pub symbols: usize,
    pub samples: Vec<C64>,
    pub noise_var: f64,
    pub truth: GridTruth,
}

impl ReceivedGrid {
    fn index(&self, k: usize, j: usize, i: usize) -> usize {
        (k * self.n_fft + j) * self.n_antennas + i
    }

    pub fn get(&self, k: usize, j: usize, i: usize) -> C64 {
        self.samples[self.index(k, j, i)]
    }

    /// All antennas at symbol `k`, subcarrier `j`.
    pub fn antennas(&self, k: usize, j: usize) -> &[C64] {
        let start = self.index(k, j, 0);
        &self.samples[start..start + self.n_antennas]
    }

    pub fn energy(&self, k: usize, j: usize) -> f64 {
        self.antennas(k, j).iter().map(|z| z.norm_sqr()).sum()
    }

    /// Little-endian complex64 dump with a 32-byte header.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(GRID_MAGIC)?;
        for d in [self.n_fft, self.n_antennas, self.symbols] {
            out.write_all(&(d as u64).to_le_bytes())?;
        }
        for z in &self.samples {
            out.write_all(&(z.re as f32).to_le_bytes())?;
            out.write_all(&(z.im as f32).to_le_bytes())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridDump {
    pub n_fft: usize,
    pub n_antennas: usize,
    pub symbols: usize,
    pub samples: Vec<Complex32>,
}

pub fn read_grid_dump<R: Read>(mut input: R) -> Result<GridDump> {
    let mut header = [0u8; 32];
    input.read_exact(&mut header)?;
    if &header[..8] != GRID_MAGIC {
        return Err(Error::InvalidParameter("not a grid dump (bad magic)".into()));
    }
    let dim = |i: usize| {
        let mut b = [0u8; 8];
        b.copy_from_slice(&header[8 + 8 * i..16 + 8 * i]);
        u64::from_le_bytes(b) as usize
    };
    let (n_fft, n_antennas, symbols) = (dim(0), dim(1), dim(2));
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    let expected = n_fft * n_antennas * symbols * 8;
    if body.len() != expected {
        return Err(Error::Dimension(format!("grid dump body has {} bytes, expected {expected}", body.len())));
    }
    let samples = body
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex32::new(re, im)
        })
        .collect();
    Ok(GridDump { n_fft, n_antennas, symbols, samples })
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

/// Frequency response of every antenna's CIR at subcarrier `j` (unnormalized DFT).
pub fn frequency_response(cirs: &CMatrix, n_fft: usize, j: usize) -> Vec<C64> {
    let taps: Vec<C64> = (0..cirs.ncols())
        .map(|l| C64::from_polar(1.0, -TAU * ((j * l) % n_fft) as f64 / n_fft as f64))
        .collect();
    (0..cirs.nrows())
        .map(|i| (0..cirs.ncols()).map(|l| cirs[(i, l)] * taps[l]).sum())
        .collect()
}

impl AttackerPlan {
    pub fn draw<R: Rng + ?Sized>(cfg: &AttackerConfig, bob: &BobSignal, link: &LinkParams, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let n_b = link.psi_b.len();
        let plan = match cfg.mode {
            AttackMode::Sc => Self { word: None, schedule: None },
            AttackMode::Ptn => Self { word: Some(bob.word.clone()), schedule: Some(bob.schedule.clone()) },
            AttackMode::PtjWb => Self { word: Some(Codeword::new(vec![true; n_b])), schedule: None },
            AttackMode::PtjPb => {
                let victims = (cfg.victim_fraction * n_b as f64).round() as usize;
                Self { word: Some(random_word(n_b, victims, rng)), schedule: None }
            }
            AttackMode::Pts => {
                let word = match cfg.sap_strategy {
                    SapStrategy::MimicBob => bob.word.clone(),
                    SapStrategy::RandomCodebookWord => random_word(n_b, link.weight, rng),
                    SapStrategy::ArbitraryRandomPattern => {
                        Codeword::new((0..n_b).map(|_| rng.random_bool(0.5)).collect())
                    }
                };
                let amplitude = cfg.power.sqrt();
                let schedule = match cfg.pilot_strategy {
                    PilotStrategy::CopyBob => bob.schedule.clone().with_amplitude(amplitude),
                    PilotStrategy::OwnSchedule => own_schedule(link, amplitude, rng)?,
                };
                Self { word: Some(word), schedule: Some(schedule) }
            }
        };
        Ok(plan)
    }

    /// Attacker's transmit vector over all `N` subcarriers at symbol `k`.
    pub fn vector<R: Rng + ?Sized>(
        &self,
        cfg: &AttackerConfig,
        bob: &BobSignal,
        channels: &ChannelRealization,
        link: &LinkParams,
        k: usize,
        rng: &mut R,
    ) -> Vec<C64> {
        let mut x = vec![C64::new(0.0, 0.0); link.n_fft];
        let Some(word) = &self.word else {
            return x;
        };
        let active = word.ones().into_iter().map(|i| link.psi_b[i]);
        match cfg.mode {
            AttackMode::Sc => {}
            AttackMode::Pts => {
                let pilot = self.schedule.as_ref().expect("spoofing plan has a schedule").pilot(k);
                for j in active {
                    x[j] = pilot;
                }
            }
            AttackMode::Ptn => {
                // Exact cancellation at antenna 0.
                let xb = bob.schedule.pilot(k);
                for j in active {
                    let hb = frequency_response(&channels.bob_cirs.rows(0, 1).into_owned(), link.n_fft, j)[0];
                    let ha = frequency_response(&channels.ava_cirs.rows(0, 1).into_owned(), link.n_fft, j)[0];
                    if ha.norm() > 0.0 {
                        x[j] = -hb * xb / ha;
                    }
                }
            }
            AttackMode::PtjWb | AttackMode::PtjPb => {
                let amplitude = cfg.power.sqrt();
                for j in active {
                    let m = rng.random_range(0..link.alphabet.resolution);
                    x[j] = C64::from_polar(amplitude, link.alphabet.phase(m));
                }
            }
        }
        x
    }
}

fn own_schedule<R: Rng + ?Sized>(link: &LinkParams, amplitude: f64, rng: &mut R) -> Result<PilotSchedule> {
    let alpha = &link.alphabet;
    let bob_step = link.phase_step.rem_euclid(TAU);
    let steps: Vec<f64> = alpha
        .phases
        .iter()
        .copied()
        .filter(|p| {
            let d = (p - bob_step).rem_euclid(TAU);
            d > 1e-9 && d < TAU - 1e-9
        })
        .collect();
    if steps.is_empty() {
        return Err(Error::InvalidParameter(
            "phase alphabet has no step different from the public step".into(),
        ));
    }
    let m = rng.random_range(0..alpha.resolution);
    let step = steps[rng.random_range(0..steps.len())];
    Ok(PilotSchedule {
        initial_index: m,
        initial_phase: alpha.phase(m),
        phase_step: step,
        amplitude,
        symbols: link.symbols,
    })
}

/// One attacker vector from a fresh plan seeded by `seed`.
pub fn attacker_vector(
    cfg: &AttackerConfig,
    bob: &BobSignal,
    channels: &ChannelRealization,
    link: &LinkParams,
    k: usize,
    seed: u64,
) -> Result<Vec<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plan = AttackerPlan::draw(cfg, bob, link, &mut rng)?;
    Ok(plan.vector(cfg, bob, channels, link, k, &mut rng))
}

pub fn transmit(
    bob: &BobSignal,
    attacker: &AttackerConfig,
    channels: &ChannelRealization,
    link: &LinkParams,
    seed: u64,
) -> Result<ReceivedGrid> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    transmit_with(bob, attacker, channels, link, &mut rng)
}

pub fn transmit_with<R: Rng + ?Sized>(
    bob: &BobSignal,
    attacker: &AttackerConfig,
    channels: &ChannelRealization,
    link: &LinkParams,
    rng: &mut R,
) -> Result<ReceivedGrid> {
    let nt = channels.bob_cirs.nrows();
    let n = link.n_fft;
    if channels.ava_cirs.nrows() != nt || channels.ava_cirs.ncols() != channels.bob_cirs.ncols() {
        return Err(Error::Dimension("bob and ava CIR shapes differ".into()));
    }
    if bob.word.len() != link.psi_b.len() || link.psi_b.iter().any(|&j| j >= n) {
        return Err(Error::Dimension("codeword, training set and FFT size disagree".into()));
    }
    if bob.schedule.symbols < link.symbols {
        return Err(Error::Dimension("bob's schedule is shorter than the frame".into()));
    }
    if !(link.noise_var > 0.0) {
        return Err(Error::InvalidParameter("noise variance must be > 0".into()));
    }
    let plan = AttackerPlan::draw(attacker, bob, link, rng)?;

    // Channel responses are only needed on the training subcarriers.
    let mut resp_b = vec![Vec::new(); n];
    let mut resp_a = vec![Vec::new(); n];
    for &j in &link.psi_b {
        resp_b[j] = frequency_response(&channels.bob_cirs, n, j);
        resp_a[j] = frequency_response(&channels.ava_cirs, n, j);
    }
    let bob_active: Vec<bool> = {
        let mut v = vec![false; n];
        for &j in &bob.sap.active {
            v[j] = true;
        }
        v
    };

    let mut samples = Vec::with_capacity(link.symbols * n * nt);
    for k in 0..link.symbols {
        let xa = plan.vector(attacker, bob, channels, link, k, rng);
        let xb = bob.schedule.pilot(k);
        for j in 0..n {
            let b = if bob_active[j] { xb } else { C64::new(0.0, 0.0) };
            let a = xa[j];
            for i in 0..nt {
                let mut y = complex_normal(rng, link.noise_var);
                if b != C64::new(0.0, 0.0) {
                    y += resp_b[j][i] * b;
                }
                if a != C64::new(0.0, 0.0) {
                    y += resp_a[j][i] * a;
                }
                samples.push(y);
            }
        }
    }

    let ava_sap = match &plan.word {
        Some(w) => Some(codeword_to_sap(w, &link.psi_b)?),
        None => None,
    };
    Ok(ReceivedGrid {
        n_fft: n,
        n_antennas: nt,
        symbols: link.symbols,
        samples,
        noise_var: link.noise_var,
        truth: GridTruth {
            channels: channels.clone(),
            bob: bob.clone(),
            ava_word: plan.word,
            ava_sap,
            ava_schedule: plan.schedule,
            mode: attacker.mode,
        },
    })
}

/// Least-squares CIR estimate per antenna (`N_T × L`) from the subcarriers `rows`,
/// combining the symbols with the assumed pilots.
pub fn ls_baseline_estimate(grid: &ReceivedGrid, assumed_pilot: &[C64], rows: &[usize], taps: usize) -> Result<CMatrix> {
    if rows.len() < taps {
        return Err(Error::Dimension(format!(
            "LS needs at least L = {taps} subcarriers, got {}",
            rows.len()
        )));
    }
    if assumed_pilot.len() > grid.symbols || assumed_pilot.is_empty() {
        return Err(Error::Dimension("pilot length exceeds the frame".into()));
    }
    let energy: f64 = assumed_pilot.iter().map(|x| x.norm_sqr()).sum();
    if energy <= 0.0 {
        return Err(Error::InvalidParameter("assumed pilot is zero".into()));
    }
    let f = dft_submatrix(grid.n_fft, taps, rows)?;
    let nt = grid.n_antennas;
    // y_fs[r, i] = Σ_k conj(x_k) y_k / Σ|x_k|².
    let y_fs = CMatrix::from_fn(rows.len(), nt, |r, i| {
        assumed_pilot
            .iter()
            .enumerate()
            .map(|(k, x)| x.conj() * grid.get(k, rows[r], i))
            .sum::<C64>()
            / energy
    });
    Ok((f.pinv() * y_fs).transpose())
}
