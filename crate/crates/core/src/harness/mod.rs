//! Seeded Monte Carlo experiments and their CSV results.

mod config;
mod experiments;
mod table;

pub use config::{
    default_theta_grid, AoaModel, AttackerSection, Experiment, ExperimentConfig, ModeName, PilotName, RunSection,
    SapName, ScenarioSection, SweepSection,
};
pub use experiments::{run_deltaf_sweep, run_iep_curve, run_iep_montecarlo, run_nmse_curve};
pub use table::{parse_config_echo, read_csv_records, ResultRow, ResultTable};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::Result;

/// Independent stream for trial `trial` of sweep point `point`.
pub fn trial_rng(seed: u64, point: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((point as u64) << 32) | trial as u64);
    rng
}

/// Runs `f` over trial indices, in parallel when available, returning results in index order.
pub(crate) fn map_trials<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Dispatches on the configured experiment. `threads = None` uses the default pool.
pub fn run_experiment(config: &ExperimentConfig, threads: Option<usize>) -> Result<ResultTable> {
    config.validate()?;
    let run = || match config.experiment() {
        Experiment::DeltafSweep => run_deltaf_sweep(config),
        Experiment::IepCurve => run_iep_curve(config),
        Experiment::NmseCurve => run_nmse_curve(config),
        Experiment::IepMontecarlo => run_iep_montecarlo(config),
    };
    match threads {
        #[cfg(feature = "parallel")]
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| crate::Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(run),
        _ => run(),
    }
}

/// Sample mean and its standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Binomial rate and its standard error.
pub fn rate_stderr(hits: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// One-sided Clopper-Pearson upper confidence bound on a binomial rate.
pub fn rate_upper_bound(hits: u64, n: u64, confidence: f64) -> f64 {
    if n == 0 || hits >= n {
        return 1.0;
    }
    let beta = Beta::new(hits as f64 + 1.0, (n - hits) as f64).expect("positive shape parameters");
    beta.inverse_cdf(confidence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_differ_and_repeat() {
        let a: u64 = trial_rng(7, 0, 0).random();
        let b: u64 = trial_rng(7, 0, 1).random();
        let c: u64 = trial_rng(7, 1, 0).random();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, trial_rng(7, 0, 0).random::<u64>());
    }

    #[test]
    fn zero_hit_upper_bound() {
        // 1 - 0.05^(1/n) for zero hits.
        let ub = rate_upper_bound(0, 10_000, 0.95);
        assert!((ub - (1.0 - 0.05f64.powf(1e-4))).abs() < 1e-8);
    }

    #[test]
    fn stats_basics() {
        let (m, se) = mean_stderr(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(rate_stderr(5, 10).0, 0.5);
    }
}
