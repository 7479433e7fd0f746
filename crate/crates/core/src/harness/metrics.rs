//! Append-only, self-describing metrics files. Learning metrics go to
//! `metrics.csv`, whose content is a pure function of config and seed; wall
//! time goes to the separate `timing.csv` so determinism checks can compare
//! metrics files byte for byte.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::HarnessError;
use crate::learner::Losses;

pub const METRICS_FILE: &str = "metrics.csv";
pub const TIMING_FILE: &str = "timing.csv";

pub struct MetricsWriter {
    metrics: BufWriter<File>,
    timing: BufWriter<File>,
    started: Instant,
}

impl MetricsWriter {
    pub fn create(
        dir: &Path,
        config_hash: u64,
        agent: usize,
        method: &str,
        env: &str,
    ) -> Result<Self, HarnessError> {
        std::fs::create_dir_all(dir)?;
        let mut metrics = BufWriter::new(File::create(dir.join(METRICS_FILE))?);
        writeln!(
            metrics,
            "# schema=metrics-v1 config={config_hash:016x} agent={agent} method={method} env={env}"
        )?;
        writeln!(
            metrics,
            "step,success_rate,critic1_loss,critic2_loss,actor_loss,alpha_loss,alpha"
        )?;
        let mut timing = BufWriter::new(File::create(dir.join(TIMING_FILE))?);
        writeln!(timing, "step,wall_seconds")?;
        Ok(MetricsWriter {
            metrics,
            timing,
            started: Instant::now(),
        })
    }

    pub fn record(&mut self, step: u64, success_rate: f64, losses: &Losses) -> Result<(), HarnessError> {
        writeln!(
            self.metrics,
            "{step},{success_rate},{},{},{},{},{}",
            losses.critic1, losses.critic2, losses.actor, losses.alpha, losses.alpha_value
        )?;
        self.metrics.flush()?;
        writeln!(self.timing, "{step},{}", self.started.elapsed().as_secs_f64())?;
        self.timing.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsRow {
    pub step: u64,
    pub success_rate: f64,
    pub critic1_loss: f64,
    pub critic2_loss: f64,
    pub actor_loss: f64,
    pub alpha_loss: f64,
    pub alpha: f64,
}

/// Parse a metrics file written by [`MetricsWriter`].
pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>, HarnessError> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.starts_with('#') || line.starts_with("step,") || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(HarnessError::Config(format!(
                "malformed metrics row in {}: {line:?}",
                path.display()
            )));
        }
        let f = |i: usize| -> Result<f64, HarnessError> {
            fields[i]
                .parse()
                .map_err(|e| HarnessError::Config(format!("bad number in {line:?}: {e}")))
        };
        rows.push(MetricsRow {
            step: fields[0]
                .parse()
                .map_err(|e| HarnessError::Config(format!("bad step in {line:?}: {e}")))?,
            success_rate: f(1)?,
            critic1_loss: f(2)?,
            critic2_loss: f(3)?,
            actor_loss: f(4)?,
            alpha_loss: f(5)?,
            alpha: f(6)?,
        });
    }
    Ok(rows)
}

/// Metrics files of every agent subdirectory of a run.
pub fn agent_metric_files(run_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut files = Vec::new();
    if run_dir.is_dir() {
        for entry in std::fs::read_dir(run_dir)? {
            let path = entry?.path();
            if path.is_dir()
                && path
                    .file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("agent_"))
            {
                let metrics = path.join(METRICS_FILE);
                if metrics.is_file() {
                    files.push(metrics);
                }
            }
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(HarnessError::MissingData(format!(
            "no agent metrics under {}",
            run_dir.display()
        )));
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn written_rows_read_back() {
        let dir = std::env::temp_dir().join(format!("l2e-metrics-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let mut w = MetricsWriter::create(&dir, 0xabcd, 0, "l2e", "maze").unwrap();
        let losses = Losses {
            critic1: 0.5,
            critic2: 0.25,
            actor: -1.5,
            alpha: 0.1,
            alpha_value: 0.9,
        };
        w.record(0, 0.0, &losses).unwrap();
        w.record(25_000, 0.4, &losses).unwrap();
        let rows = read_metrics(&dir.join(METRICS_FILE)).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].step, 25_000);
        assert_eq!(rows[1].success_rate, 0.4);
        assert_eq!(rows[0].critic2_loss, 0.25);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
