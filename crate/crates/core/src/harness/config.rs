use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::airlink::{AttackMode, AttackerConfig, PilotStrategy, SapStrategy};
use crate::code::code_weight;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    DeltafSweep,
    IepCurve,
    NmseCurve,
    IepMontecarlo,
}

impl Experiment {
    pub const ALL: [Experiment; 4] =
        [Experiment::DeltafSweep, Experiment::IepCurve, Experiment::NmseCurve, Experiment::IepMontecarlo];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::DeltafSweep => "deltaf_sweep",
            Experiment::IepCurve => "iep_curve",
            Experiment::NmseCurve => "nmse_curve",
            Experiment::IepMontecarlo => "iep_montecarlo",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AoaModel {
    /// Mean AoAs drawn uniformly from `theta_grid`.
    Dpd,
    /// Mean AoAs drawn uniformly from `theta_range`.
    Cpd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub experiment: Experiment,
    pub seed: u64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub n_fft: usize,
    pub n_b: usize,
    pub n_antennas: usize,
    pub taps: usize,
    pub spacing: f64,
    pub delta: f64,
    pub theta_grid: Vec<f64>,
    pub theta_bob: f64,
    pub theta_ava: f64,
    pub aoa_model: AoaModel,
    pub theta_range: [f64; 2],
    pub snr_db: Vec<f64>,
    pub phase_resolution: usize,
    pub phase_step: f64,
    pub target_pf: f64,
    pub symbols: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Pts,
    Ptn,
    PtjWb,
    PtjPb,
    Sc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SapName {
    MimicBob,
    RandomCodebookWord,
    ArbitraryRandomPattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PilotName {
    CopyBob,
    OwnSchedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackerSection {
    pub mode: ModeName,
    pub power: f64,
    pub victim_fraction: f64,
    pub sap_strategy: SapName,
    pub pilot_strategy: PilotName,
    pub genie: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub taps_list: Vec<usize>,
    pub n_b_min: usize,
    pub n_b_max: usize,
    pub k_interval: usize,
    pub mc_max_n_b: usize,
    pub n_antennas_list: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub scenario: ScenarioSection,
    pub attacker: AttackerSection,
    pub sweep: SweepSection,
}

/// Symmetric five-point mean-AoA grid.
pub fn default_theta_grid() -> Vec<f64> {
    vec![-FRAC_PI_4, -PI / 7.0, 0.0, PI / 7.0, FRAC_PI_4]
}

impl ExperimentConfig {
    pub fn default_for(experiment: Experiment) -> Self {
        let mut cfg = Self {
            run: RunSection { experiment, seed: 1, trials: 1000 },
            scenario: ScenarioSection {
                n_fft: 64,
                n_b: 9,
                n_antennas: 100,
                taps: 3,
                spacing: 0.5,
                delta: PI / 10.0,
                theta_grid: default_theta_grid(),
                theta_bob: 0.0,
                theta_ava: PI / 5.0,
                aoa_model: AoaModel::Dpd,
                theta_range: [-FRAC_PI_4, FRAC_PI_4],
                snr_db: vec![20.0],
                phase_resolution: 4,
                phase_step: FRAC_PI_2,
                target_pf: 1e-3,
                symbols: 3,
            },
            attacker: AttackerSection {
                mode: ModeName::Pts,
                power: 1.0,
                victim_fraction: 0.5,
                sap_strategy: SapName::RandomCodebookWord,
                pilot_strategy: PilotName::OwnSchedule,
                genie: false,
            },
            sweep: SweepSection {
                taps_list: vec![7, 8, 9, 10, 11, 12, 13],
                n_b_min: 7,
                n_b_max: 201,
                k_interval: 20,
                mc_max_n_b: 20,
                n_antennas_list: vec![16, 64, 256],
            },
        };
        match experiment {
            Experiment::DeltafSweep => {}
            Experiment::IepCurve => cfg.run.trials = 100_000,
            Experiment::NmseCurve => {
                cfg.run.trials = 1000;
                cfg.scenario.n_fft = 512;
                cfg.scenario.n_b = 256;
                cfg.scenario.taps = 6;
                cfg.scenario.snr_db = vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0];
                cfg.scenario.phase_resolution = 8;
                cfg.attacker.sap_strategy = SapName::MimicBob;
            }
            Experiment::IepMontecarlo => {
                cfg.run.trials = 10_000;
                cfg.attacker.sap_strategy = SapName::ArbitraryRandomPattern;
            }
        }
        cfg
    }

    /// Parses `key = value` / `[section]` text over the experiment defaults.
    /// The experiment comes from `experiment` or, failing that, `run.experiment`.
    pub fn from_toml_str(text: &str, experiment: Option<Experiment>) -> Result<Self> {
        let user: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let from_file = user
            .get("run")
            .and_then(|r| r.get("experiment"))
            .and_then(|v| v.as_str())
            .map(Experiment::from_str)
            .transpose()?;
        if let (Some(a), Some(b)) = (experiment, from_file) {
            if a != b {
                return Err(Error::Config(format!("config is for {b}, requested {a}")));
            }
        }
        let experiment = experiment
            .or(from_file)
            .ok_or_else(|| Error::Config("no experiment given".into()))?;
        let mut base = toml::Table::try_from(Self::default_for(experiment))
            .map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut base, user)?;
        let cfg: Self = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn experiment(&self) -> Experiment {
        self.run.experiment
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.scenario;
        let fail = |m: String| Err(Error::Config(m));
        if self.run.trials == 0 {
            return fail("trials must be >= 1".into());
        }
        if self.run.seed > i64::MAX as u64 {
            return fail("seed must be below 2^63".into());
        }
        if s.n_b > s.n_fft {
            return fail(format!("N_B = {} exceeds N = {}", s.n_b, s.n_fft));
        }
        if s.n_antennas == 0 || s.taps == 0 || s.n_fft == 0 {
            return fail("N, N_T and L must be >= 1".into());
        }
        if s.symbols < 3 {
            return fail("need at least 3 symbols per frame".into());
        }
        if !(s.delta > 0.0) || !(s.spacing > 0.0) {
            return fail("angle spread and spacing must be > 0".into());
        }
        let in_sector = |t: &f64| t.abs() <= FRAC_PI_3 + 1e-12;
        if !s.theta_grid.iter().all(in_sector)
            || !in_sector(&s.theta_bob)
            || !in_sector(&s.theta_ava)
            || !s.theta_range.iter().all(in_sector)
            || s.theta_range[0] >= s.theta_range[1]
        {
            return fail("mean AoAs must lie in [-pi/3, pi/3] (and theta_range must be increasing)".into());
        }
        if s.theta_grid.is_empty() || s.snr_db.is_empty() {
            return fail("theta_grid and snr_db must be non-empty".into());
        }
        if !(s.target_pf > 0.0 && s.target_pf < 1.0) {
            return fail("target_pf must be in (0, 1)".into());
        }
        if s.phase_resolution == 0 {
            return fail("phase_resolution must be >= 1".into());
        }
        if self.run.experiment != Experiment::IepCurve {
            code_weight(s.n_b, s.taps).map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.run.experiment == Experiment::IepCurve {
            let w = &self.sweep;
            if w.taps_list.is_empty() || w.n_b_min > w.n_b_max || w.k_interval == 0 {
                return fail("iep sweep needs taps_list, n_b_min <= n_b_max and k_interval >= 1".into());
            }
        }
        if self.run.experiment == Experiment::NmseCurve && self.sweep.n_antennas_list.is_empty() {
            return fail("n_antennas_list must be non-empty".into());
        }
        self.attacker_config().validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn attacker_config(&self) -> AttackerConfig {
        let a = &self.attacker;
        AttackerConfig {
            mode: match a.mode {
                ModeName::Pts => AttackMode::Pts,
                ModeName::Ptn => AttackMode::Ptn,
                ModeName::PtjWb => AttackMode::PtjWb,
                ModeName::PtjPb => AttackMode::PtjPb,
                ModeName::Sc => AttackMode::Sc,
            },
            power: a.power,
            victim_fraction: a.victim_fraction,
            sap_strategy: match a.sap_strategy {
                SapName::MimicBob => SapStrategy::MimicBob,
                SapName::RandomCodebookWord => SapStrategy::RandomCodebookWord,
                SapName::ArbitraryRandomPattern => SapStrategy::ArbitraryRandomPattern,
            },
            pilot_strategy: match a.pilot_strategy {
                PilotName::CopyBob => PilotStrategy::CopyBob,
                PilotName::OwnSchedule => PilotStrategy::OwnSchedule,
            },
            genie: a.genie,
        }
    }
}

/// Overlays `user` onto `base`; keys absent from `base` are rejected.
fn merge(base: &mut toml::Table, user: toml::Table) -> Result<()> {
    for (key, value) in user {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(u)) => merge(b, u)?,
            (Some(slot), v) if !v.is_table() => *slot = coerce_like(slot, v),
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
    }
    Ok(())
}

/// Integers written where the default is a float are read as floats.
fn coerce_like(template: &toml::Value, v: toml::Value) -> toml::Value {
    use toml::Value;
    match (template, v) {
        (Value::Float(_), Value::Integer(i)) => Value::Float(i as f64),
        (Value::Array(t), Value::Array(items)) if t.first().is_some_and(Value::is_float) => {
            Value::Array(items.into_iter().map(|x| coerce_like(&t[0], x)).collect())
        }
        (_, v) => v,
    }
}
