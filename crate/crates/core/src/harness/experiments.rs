use std::collections::BTreeSet;

use rand::Rng;

use super::config::{AoaModel, ExperimentConfig, ModeName, SapName, ScenarioSection};
use super::table::ResultTable;
use super::{map_trials, mean_stderr, rate_stderr, rate_upper_bound, trial_rng};
use crate::airlink::{ls_baseline_estimate, transmit_with, BobSignal, LinkParams};
use crate::channel::{
    covariance_sqrt, dft_submatrix, one_ring_covariance, support_eigen, uniform_pdp, ChannelSampler, CovarianceMatrix,
    OneRingParams,
};
use crate::code::{code_weight, dpd_adjust, generate_codebook, random_word, theoretical_iep, Codebook, Codeword};
use crate::protocol::{
    codeword_to_sap, map_phase_to_codeword, schedule_from_index, training_subcarriers, PhaseAlphabet,
};
use crate::receiver::{
    asymptotic_delta_f, cir_nmse, fs_to_cir, lmmse_estimate, perfect_mmse_estimate, Hypothesis, Receiver, Status,
};
use crate::{CMatrix, Error, Result};

/// Noise variance for unit pilot and unit per-element channel power.
fn noise_var(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Code, alphabet and training layout shared by every trial of a run.
struct Setup {
    book: Codebook,
    alphabet: PhaseAlphabet,
    link: LinkParams,
}

impl Setup {
    fn new(s: &ScenarioSection, snr_db: f64) -> Result<Self> {
        let book = generate_codebook(s.n_b, s.taps)?;
        let alphabet = PhaseAlphabet::new(s.phase_resolution)?;
        // Fails early when the alphabet does not fit the code.
        map_phase_to_codeword(0, &alphabet, &book)?;
        let link = LinkParams {
            n_fft: s.n_fft,
            psi_b: training_subcarriers(s.n_fft, s.n_b)?,
            noise_var: noise_var(snr_db),
            alphabet: alphabet.clone(),
            phase_step: s.phase_step,
            weight: book.weight(),
            symbols: s.symbols,
        };
        Ok(Self { book, alphabet, link })
    }

    fn with_snr(&self, snr_db: f64) -> LinkParams {
        LinkParams { noise_var: noise_var(snr_db), ..self.link.clone() }
    }

    fn bob_signal<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<BobSignal> {
        let m = rng.random_range(0..self.alphabet.resolution);
        let word = map_phase_to_codeword(m, &self.alphabet, &self.book)?;
        let sap = codeword_to_sap(&word, &self.link.psi_b)?;
        let schedule = schedule_from_index(&self.alphabet, m, self.link.phase_step, self.link.symbols)?;
        Ok(BobSignal { word, sap, schedule })
    }

    fn receiver(&self, s: &ScenarioSection, bob: &OneRingParams, r1: CovarianceMatrix, snr_db: f64) -> Result<Receiver> {
        Receiver::with_covariance(
            self.book.clone(),
            self.alphabet.clone(),
            self.link.psi_b.clone(),
            s.n_fft,
            s.taps,
            bob,
            r1,
            noise_var(snr_db),
            s.target_pf,
            s.phase_step,
        )
    }
}

fn ring(s: &ScenarioSection, theta: f64) -> Result<OneRingParams> {
    OneRingParams::new(theta, s.delta, s.spacing, s.n_antennas)
}

fn collect<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

#[derive(Debug, Clone, Copy)]
struct SweepTrial {
    delta_f: Option<f64>,
    iep_event: bool,
    ambiguous: bool,
}

/// `Δf` over every `(θ_bob, θ_ava)` pair of the grid: asymptotic value and sampled statistics.
pub fn run_deltaf_sweep(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    let s = &config.scenario;
    let trials = config.run.trials;
    let attacker = config.attacker_config();
    let grid = &s.theta_grid;
    let mut table = ResultTable::new(config, &["theta_bob", "theta_ava", "snr_db"]);

    let rings = grid.iter().map(|&t| ring(s, t)).collect::<Result<Vec<_>>>()?;
    let covs = rings.iter().map(one_ring_covariance).collect::<Result<Vec<_>>>()?;
    let sqrts = covs.iter().map(covariance_sqrt).collect::<Result<Vec<_>>>()?;
    let eigens: Vec<_> = covs.iter().zip(&rings).map(|(c, p)| support_eigen(c, p)).collect();

    let mut point = 0;
    for &snr in &s.snr_db {
        let setup = Setup::new(s, snr)?;
        for (i, &tb) in grid.iter().enumerate() {
            let receiver = setup.receiver(s, &rings[i], covs[i].clone(), snr)?;
            for (j, &ta) in grid.iter().enumerate() {
                let asym = asymptotic_delta_f(&eigens[i], &covs[j], s.taps);
                let sampler = ChannelSampler::from_sqrt(sqrts[i].clone(), sqrts[j].clone(), s.taps)?;
                let p = point;
                point += 1;
                log::info!("deltaf_sweep snr {snr} dB, cell ({i}, {j})");
                let out = collect(map_trials(trials, |t| {
                    let mut rng = trial_rng(config.run.seed, p, t);
                    let bob = setup.bob_signal(&mut rng)?;
                    let channels = sampler.sample(&mut rng);
                    let rx = transmit_with(&bob, &attacker, &channels, &setup.link, &mut rng)?;
                    let report = receiver.process(&rx)?;
                    Ok(SweepTrial {
                        delta_f: report.outcome.delta_f,
                        iep_event: report.outcome.iep_event,
                        ambiguous: report.estimation.is_some(),
                    })
                }))?;

                let coords = [tb, ta, snr];
                let n = trials as u64;
                let dfs: Vec<f64> = out.iter().filter_map(|o| o.delta_f).collect();
                let m = dfs.len() as u64;
                let (mean, se) = mean_stderr(&dfs);
                let sd = se * (dfs.len() as f64).sqrt();
                let agree = dfs.iter().filter(|d| d.signum() == asym.signum()).count() as u64;
                let iep = out.iter().filter(|o| o.iep_event).count() as u64;
                let amb = out.iter().filter(|o| o.ambiguous).count() as u64;

                table.push(&coords, "asymptotic_delta_f", asym, 0.0, 0);
                table.push(&coords, "rho1", receiver.rho1() as f64, 0.0, 0);
                table.push(&coords, "tolerance", receiver.tolerance(), 0.0, 0);
                table.push(&coords, "deltaf_mean", mean, se, m);
                table.push(&coords, "deltaf_sd", sd, f64::NAN, m);
                let (r, e) = rate_stderr(agree, m);
                table.push(&coords, "sign_agreement", r, e, m);
                let (r, e) = rate_stderr(iep, n);
                table.push(&coords, "iep_event_rate", r, e, n);
                let (r, e) = rate_stderr(amb, n);
                table.push(&coords, "ambiguous_rate", r, e, n);
            }
        }
    }
    Ok(table)
}

/// Analytic `P_I/K` over `(L, N_B)` plus a confusion-count Monte Carlo for short codes.
pub fn run_iep_curve(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    let w = &config.sweep;
    let k_len = w.k_interval;
    let trials = config.run.trials;
    let mut table = ResultTable::new(config, &["l", "n_b", "k"]);
    let mut point = 0;
    for &l in &w.taps_list {
        let mut skipped = 0;
        for n_b in w.n_b_min..=w.n_b_max {
            let Ok(weight) = code_weight(n_b, l) else {
                skipped += 1;
                continue;
            };
            let report = dpd_adjust(&theoretical_iep(n_b, l)?, k_len)?;
            let coords = [l as f64, n_b as f64, ((n_b - 1) / 2) as f64];
            table.push(&coords, "iep_analytic", report.p_i_dpd, 0.0, 0);
            if n_b > w.mc_max_n_b {
                continue;
            }
            let p = point;
            point += 1;
            let hits = map_trials(trials, |t| {
                let mut rng = trial_rng(config.run.seed, p, t);
                let bob = random_word(n_b, weight, &mut rng);
                let ava = Codeword::new((0..n_b).map(|_| rng.random_bool(0.5)).collect());
                let confused = ava.weight() == weight && ava != bob;
                let same_aoa = rng.random_range(0..k_len) == rng.random_range(0..k_len);
                let wrong_guess = rng.random_bool(0.5);
                confused && same_aoa && wrong_guess
            })
            .into_iter()
            .filter(|&h| h)
            .count() as u64;
            let (r, e) = rate_stderr(hits, trials as u64);
            table.push(&coords, "iep_mc", r, e, trials as u64);
        }
        if skipped > 0 {
            log::warn!("L = {l}: skipped {skipped} N_B values with odd N_B + L or N_B < L");
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy)]
struct NmseTrial {
    ls: f64,
    lmmse: f64,
    perfect: f64,
    fs_bob: f64,
    fs_ava: f64,
}

/// CIR NMSE of the LS baseline, the LMMSE pipeline and the perfect-MMSE benchmark under spoofing.
pub fn run_nmse_curve(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    if config.attacker.mode != ModeName::Pts {
        return Err(Error::Config("nmse_curve needs attacker mode pts".into()));
    }
    if config.attacker.sap_strategy == SapName::ArbitraryRandomPattern {
        return Err(Error::Config("nmse_curve needs a codebook SAP (mimic_bob or random_codebook_word)".into()));
    }
    let s = &config.scenario;
    let trials = config.run.trials;
    let attacker = config.attacker_config();
    let setup = Setup::new(s, s.snr_db[0])?;
    let pdp = uniform_pdp(s.taps);
    let mut table = ResultTable::new(config, &["n_antennas", "snr_db"]);

    let mut point = 0;
    for &nt in &config.sweep.n_antennas_list {
        let bob_ring = OneRingParams::new(s.theta_bob, s.delta, s.spacing, nt)?;
        let ava_ring = OneRingParams::new(s.theta_ava, s.delta, s.spacing, nt)?;
        let r1 = one_ring_covariance(&bob_ring)?;
        let r2 = one_ring_covariance(&ava_ring)?;
        let sampler = ChannelSampler::new(&r1, &r2, s.taps)?;
        for &snr in &s.snr_db {
            let link = setup.with_snr(snr);
            let p = point;
            point += 1;
            log::info!("nmse_curve N_T = {nt}, snr {snr} dB");
            let out = collect(map_trials(trials, |t| {
                let mut rng = trial_rng(config.run.seed, p, t);
                let bob = setup.bob_signal(&mut rng)?;
                let channels = sampler.sample(&mut rng);
                let grid = transmit_with(&bob, &attacker, &channels, &link, &mut rng)?;
                let truth = &grid.truth;
                let ava_active: BTreeSet<usize> =
                    truth.ava_sap.as_ref().map(|sap| sap.active.iter().copied().collect()).unwrap_or_default();
                let overlap: Vec<usize> = bob.sap.active.iter().copied().filter(|j| ava_active.contains(j)).collect();
                if overlap.len() < s.taps {
                    return Err(Error::Dimension(format!(
                        "overlap of {} subcarriers cannot resolve L = {} taps",
                        overlap.len(),
                        s.taps
                    )));
                }
                let ava_schedule = truth.ava_schedule.as_ref().expect("spoofing plan has a schedule");
                let x1 = [bob.schedule.pilot(0), bob.schedule.pilot(1)];
                let x2 = [ava_schedule.pilot(0), ava_schedule.pilot(1)];

                let f = dft_submatrix(s.n_fft, s.taps, &overlap)?;
                let f_pinv = f.pinv();
                let rf = f.fs_covariance(&pdp);
                let est = lmmse_estimate(&grid, x1, x2, &overlap, &r1, &rf)?;
                let tr_rf: f64 = rf.diagonal().iter().map(|z| z.re).sum();
                let t = r1.trace() * tr_rf / (nt * overlap.len()) as f64;
                let perfect = perfect_mmse_estimate(&grid, x1, x2, &overlap, t)?;
                let truth_b = &truth.channels.bob_cirs;
                let ls = ls_baseline_estimate(&grid, &[bob.schedule.pilot(0)], &bob.sap.active, s.taps)?;
                Ok(NmseTrial {
                    ls: cir_nmse(&ls, truth_b),
                    lmmse: cir_nmse(&fs_to_cir(&est.h_bob_fs, &f_pinv), truth_b),
                    perfect: cir_nmse(&fs_to_cir(&perfect.h_bob_fs, &f_pinv), truth_b),
                    fs_bob: est.nmse_bob,
                    fs_ava: est.nmse_ava,
                })
            }))?;

            let coords = [nt as f64, snr];
            let n = trials as u64;
            let mut emit = |name: &str, pick: fn(&NmseTrial) -> f64, db: bool| {
                let xs: Vec<f64> = out.iter().map(pick).collect();
                let (m, se) = mean_stderr(&xs);
                table.push(&coords, name, m, se, n);
                if db {
                    let se_db = 10.0 / std::f64::consts::LN_10 * se / m;
                    table.push(&coords, &format!("{name}_db"), 10.0 * m.log10(), se_db, n);
                }
            };
            emit("nmse_ls", |o| o.ls, true);
            emit("nmse_lmmse", |o| o.lmmse, true);
            emit("nmse_perfect", |o| o.perfect, true);
            emit("nmse_fs_bob", |o| o.fs_bob, false);
            emit("nmse_fs_ava", |o| o.fs_ava, false);
        }
    }
    Ok(table)
}

/// Covariance, its square root and a receiver for one mean AoA.
struct AoaState {
    sqrt: CMatrix,
    receiver: Receiver,
}

impl AoaState {
    fn new(setup: &Setup, s: &ScenarioSection, theta: f64, snr: f64) -> Result<Self> {
        let params = ring(s, theta)?;
        let cov = one_ring_covariance(&params)?;
        let sqrt = covariance_sqrt(&cov)?;
        let receiver = setup.receiver(s, &params, cov, snr)?;
        Ok(Self { sqrt, receiver })
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct PipelineTrial {
    iep_event: bool,
    misidentified: bool,
    ambiguous: bool,
    error: bool,
}

/// End-to-end identification error rate with mean AoAs drawn from the grid or the continuous range.
pub fn run_iep_montecarlo(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    let s = &config.scenario;
    let trials = config.run.trials;
    let attacker = config.attacker_config();
    let snr = s.snr_db[0];
    let setup = Setup::new(s, snr)?;
    let mut table = ResultTable::new(config, &["k", "n_b", "taps", "snr_db"]);

    let (k_len, states) = match s.aoa_model {
        AoaModel::Dpd => {
            let states = s.theta_grid.iter().map(|&t| AoaState::new(&setup, s, t, snr)).collect::<Result<Vec<_>>>()?;
            (s.theta_grid.len(), states)
        }
        AoaModel::Cpd => (0, Vec::new()),
    };
    let [lo, hi] = s.theta_range;

    let out = collect(map_trials(trials, |t| {
        let mut rng = trial_rng(config.run.seed, 0, t);
        let bob = setup.bob_signal(&mut rng)?;
        let owned;
        let (bob_state, ava_sqrt) = match s.aoa_model {
            AoaModel::Dpd => {
                let i = rng.random_range(0..k_len);
                let j = rng.random_range(0..k_len);
                (&states[i], states[j].sqrt.clone())
            }
            AoaModel::Cpd => {
                let tb = rng.random_range(lo..hi);
                let ta = rng.random_range(lo..hi);
                owned = AoaState::new(&setup, s, tb, snr)?;
                (&owned, covariance_sqrt(&one_ring_covariance(&ring(s, ta)?)?)?)
            }
        };
        let sampler = ChannelSampler::from_sqrt(bob_state.sqrt.clone(), ava_sqrt, s.taps)?;
        let channels = sampler.sample(&mut rng);
        let grid = transmit_with(&bob, &attacker, &channels, &setup.link, &mut rng)?;
        let report = bob_state.receiver.process(&grid)?;
        let outcome = &report.outcome;
        let sep = &report.separation;
        let chosen = match (outcome.status, outcome.chosen) {
            (_, Some(Hypothesis::H0)) => sep.word_bob.clone(),
            (_, Some(Hypothesis::H1)) => sep.word_other.clone(),
            (Status::Error, None) if outcome.iep_event => {
                if rng.random_bool(0.5) {
                    sep.word_bob.clone()
                } else {
                    sep.word_other.clone()
                }
            }
            _ => None,
        };
        Ok(PipelineTrial {
            iep_event: outcome.iep_event,
            misidentified: chosen.is_some_and(|w| w != bob.word),
            ambiguous: report.estimation.is_some(),
            error: outcome.status == Status::Error && !outcome.iep_event,
        })
    }))?;

    let n = trials as u64;
    let count = |f: fn(&PipelineTrial) -> bool| out.iter().filter(|o| f(o)).count() as u64;
    let coords = [k_len as f64, s.n_b as f64, s.taps as f64, snr];
    let iep = count(|o| o.iep_event);
    let (r, e) = rate_stderr(iep, n);
    table.push(&coords, "iep_event_rate", r, e, n);
    table.push(&coords, "iep_event_upper95", rate_upper_bound(iep, n, 0.95), 0.0, n);
    let (r, e) = rate_stderr(count(|o| o.misidentified), n);
    table.push(&coords, "misidentification_rate", r, e, n);
    let (r, e) = rate_stderr(count(|o| o.ambiguous), n);
    table.push(&coords, "ambiguous_rate", r, e, n);
    let (r, e) = rate_stderr(count(|o| o.error), n);
    table.push(&coords, "error_rate", r, e, n);
    let theory = match s.aoa_model {
        AoaModel::Dpd => dpd_adjust(&theoretical_iep(s.n_b, s.taps)?, k_len)?.p_i_dpd,
        AoaModel::Cpd => 0.0,
    };
    table.push(&coords, "theory", theory, 0.0, 0);
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Experiment;

    fn small(exp: Experiment) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default_for(exp);
        cfg.run.trials = 20;
        cfg.scenario.n_antennas = 16;
        cfg
    }

    #[test]
    fn sweep_has_every_cell() {
        let mut cfg = small(Experiment::DeltafSweep);
        cfg.scenario.theta_grid = vec![0.0, 0.5];
        let t = run_deltaf_sweep(&cfg).unwrap();
        assert_eq!(t.metric("asymptotic_delta_f").count(), 4);
        assert!(t.get(&[0.0, 0.5, 20.0], "asymptotic_delta_f").unwrap().value > 0.0);
    }

    #[test]
    fn iep_curve_skips_parity() {
        let mut cfg = small(Experiment::IepCurve);
        cfg.sweep.taps_list = vec![3];
        cfg.sweep.n_b_min = 3;
        cfg.sweep.n_b_max = 8;
        let t = run_iep_curve(&cfg).unwrap();
        let n_bs: Vec<f64> = t.metric("iep_analytic").map(|r| r.coords[1]).collect();
        assert_eq!(n_bs, [3.0, 5.0, 7.0]);
        assert_eq!(t.get(&[3.0, 3.0, 1.0], "iep_analytic").unwrap().value, 0.0);
    }

    #[test]
    fn nmse_rejects_other_modes() {
        let mut cfg = small(Experiment::NmseCurve);
        cfg.attacker.mode = ModeName::Sc;
        assert!(run_nmse_curve(&cfg).is_err());
    }

    #[test]
    fn silent_attacker_gives_no_iep() {
        let mut cfg = small(Experiment::IepMontecarlo);
        cfg.attacker.mode = ModeName::Sc;
        cfg.attacker.power = 0.0;
        let t = run_iep_montecarlo(&cfg).unwrap();
        assert_eq!(t.metric("iep_event_rate").next().unwrap().value, 0.0);
        assert_eq!(t.metric("misidentification_rate").next().unwrap().value, 0.0);
    }
}
