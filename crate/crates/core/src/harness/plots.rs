//! Plot-data emission: per-method success-rate-vs-steps series with
//! confidence bands, as plain tabular files plus a small rendering stub.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::metrics::{agent_metric_files, read_metrics};
use super::HarnessError;

/// Aggregate one run directory: per eval step, the mean success over agents
/// and the half-width of the confidence band (standard deviation of the
/// per-agent means divided by the square root of the agent count).
pub struct Series {
    pub label: String,
    /// (step, mean, band halfwidth, agents)
    pub points: Vec<(u64, f64, f64, usize)>,
}

pub fn aggregate_run(run_dir: &Path) -> Result<Series, HarnessError> {
    let config_text = std::fs::read_to_string(run_dir.join("config.resolved")).map_err(|_| {
        HarnessError::MissingData(format!("{} lacks config.resolved", run_dir.display()))
    })?;
    let cfg = ExperimentConfig::parse(&config_text)?;
    let files = agent_metric_files(run_dir)?;
    let mut by_step: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for file in &files {
        for row in read_metrics(file)? {
            by_step.entry(row.step).or_default().push(row.success_rate);
        }
    }
    if by_step.is_empty() {
        return Err(HarnessError::MissingData(format!(
            "no metric rows under {}",
            run_dir.display()
        )));
    }
    let points = by_step
        .into_iter()
        .map(|(step, rates)| {
            let n = rates.len();
            let mean = rates.iter().sum::<f64>() / n as f64;
            let band = if n > 1 {
                let var =
                    rates.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1) as f64;
                var.sqrt() / (n as f64).sqrt()
            } else {
                0.0
            };
            (step, mean, band, n)
        })
        .collect();
    Ok(Series {
        label: cfg.label(),
        points,
    })
}

const RENDER_STUB: &str = "\
#!/usr/bin/env python3
\"\"\"Render success-rate curves emitted next to this script.\"\"\"
import glob, os
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
for path in sorted(glob.glob(os.path.join(here, '*.tsv'))):
    steps, mean, lo, hi = [], [], [], []
    with open(path) as fh:
        next(fh)
        for line in fh:
            s, m, b, _ = line.split('\\t')
            steps.append(int(s)); mean.append(float(m))
            lo.append(float(m) - float(b)); hi.append(float(m) + float(b))
    label = os.path.splitext(os.path.basename(path))[0]
    plt.plot(steps, mean, label=label)
    plt.fill_between(steps, lo, hi, alpha=0.25)
plt.xlabel('environment steps'); plt.ylabel('success rate'); plt.legend()
plt.savefig(os.path.join(here, 'curves.png'), dpi=150)
print('wrote', os.path.join(here, 'curves.png'))
";

/// Aggregate each run directory into a tab-separated series file and drop a
/// rendering stub next to them. Returns the written paths.
pub fn emit_plots(run_dirs: &[PathBuf], out_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    if run_dirs.is_empty() {
        return Err(HarnessError::MissingData("no run directories given".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for run in run_dirs {
        let series = aggregate_run(run)?;
        let path = out_dir.join(format!("{}.tsv", series.label));
        let mut text = String::from("step\tmean_success\tband_halfwidth\tagents\n");
        for (step, mean, band, n) in &series.points {
            text.push_str(&format!("{step}\t{mean}\t{band}\t{n}\n"));
        }
        std::fs::write(&path, text)?;
        written.push(path);
    }
    let stub = out_dir.join("render_curves.py");
    std::fs::write(&stub, RENDER_STUB)?;
    written.push(stub);
    Ok(written)
}
