use std::io::Write;

use super::config::ExperimentConfig;
use crate::{Error, Result};

const CONFIG_BEGIN: &str = "# config begin";
const CONFIG_END: &str = "# config end";

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub coords: Vec<f64>,
    pub metric: String,
    pub value: f64,
    pub stderr: f64,
    pub trials: u64,
}

/// Long-format results: sweep coordinates, metric, value, stderr, trials.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub coord_names: Vec<String>,
    pub rows: Vec<ResultRow>,
    pub config: ExperimentConfig,
}

impl ResultTable {
    pub fn new(config: &ExperimentConfig, coord_names: &[&str]) -> Self {
        Self {
            coord_names: coord_names.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            config: config.clone(),
        }
    }

    pub fn push(&mut self, coords: &[f64], metric: &str, value: f64, stderr: f64, trials: u64) {
        debug_assert_eq!(coords.len(), self.coord_names.len());
        self.rows.push(ResultRow { coords: coords.to_vec(), metric: metric.to_string(), value, stderr, trials });
    }

    /// First row with this metric whose coordinates match `coords` exactly.
    pub fn get(&self, coords: &[f64], metric: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.metric == metric && r.coords == coords)
    }

    pub fn metric(&self, metric: &str) -> impl Iterator<Item = &ResultRow> {
        let metric = metric.to_string();
        self.rows.iter().filter(move |r| r.metric == metric)
    }

    /// `#` metadata block, then a CSV header and rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# iccsim {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(out, "# experiment = {}", self.config.experiment())?;
        writeln!(out, "# seed = {}", self.config.run.seed)?;
        writeln!(out, "{CONFIG_BEGIN}")?;
        for line in self.config.to_toml_string()?.lines() {
            if line.is_empty() {
                writeln!(out, "#")?;
            } else {
                writeln!(out, "# {line}")?;
            }
        }
        writeln!(out, "{CONFIG_END}")?;

        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header: Vec<&str> = self.coord_names.iter().map(String::as_str).collect();
        header.extend(["metric", "value", "stderr", "trials"]);
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec: Vec<String> = r.coords.iter().map(|c| c.to_string()).collect();
            rec.push(r.metric.clone());
            rec.push(r.value.to_string());
            rec.push(r.stderr.to_string());
            rec.push(r.trials.to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Recovers the configuration echoed in a CSV metadata block.
pub fn parse_config_echo(csv_text: &str) -> Result<ExperimentConfig> {
    let mut inside = false;
    let mut toml_text = String::new();
    for line in csv_text.lines() {
        if line == CONFIG_BEGIN {
            inside = true;
        } else if line == CONFIG_END {
            return ExperimentConfig::from_toml_str(&toml_text, None);
        } else if inside {
            let body = line.strip_prefix('#').ok_or_else(|| Error::Config("unterminated config block".into()))?;
            toml_text.push_str(body.strip_prefix(' ').unwrap_or(body));
            toml_text.push('\n');
        }
    }
    Err(Error::Config("no config block found".into()))
}

/// Data rows of a CSV written by `write_csv`, header first, metadata skipped.
pub fn read_csv_records(csv_text: &str) -> Result<Vec<Vec<String>>> {
    let body: String = csv_text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(body.as_bytes());
    rdr.records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()).map_err(csv_err))
        .collect()
}
