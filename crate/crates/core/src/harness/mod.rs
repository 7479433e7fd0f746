//! Experiment orchestration: seeded multi-agent training runs, the
//! evaluation protocol, metrics persistence, and plot-data emission.

pub mod config;
pub mod eval;
pub mod metrics;
pub mod plots;
pub mod train;

pub use config::{ExperimentConfig, HerCfg, MethodId, ReplayStrategyCfg};
pub use eval::EvalReport;
pub use metrics::{read_metrics, MetricsRow, MetricsWriter};
pub use plots::emit_plots;
pub use train::{train, train_single, AgentSummary, RunArtifacts};

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::baselines::InverseModel;
use crate::envs::EnvId;
use crate::learner::{LearnerError, SacLearner};
use crate::planmdp::PlanMdpError;
use crate::replay::ReplayError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    PlanMdp(#[from] PlanMdpError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("{0}")]
    MissingData(String),
    #[error("training halted: {0}")]
    Halted(String),
}

/// Deterministic stream splitter for deriving independent seeds.
pub(crate) fn mix64(a: u64, b: u64) -> u64 {
    let mut x = a ^ b.wrapping_mul(0x9e3779b97f4a7c15);
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58476d1ce4e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

const CKPT_MAGIC: &[u8; 8] = b"L2ECKPT1";

/// Task identity stored with every checkpoint so `eval` can rebuild the
/// environment without the original config file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckpointMeta {
    pub method: MethodId,
    pub env: EnvId,
    pub sigma: f64,
    pub plan_density: Option<usize>,
    pub steps: u64,
}

fn env_tag(env: EnvId) -> u8 {
    match env {
        EnvId::PushBasic => 0,
        EnvId::PushObstacle => 1,
        EnvId::Maze => 2,
    }
}

fn env_from_tag(t: u8) -> Option<EnvId> {
    match t {
        0 => Some(EnvId::PushBasic),
        1 => Some(EnvId::PushObstacle),
        2 => Some(EnvId::Maze),
        _ => None,
    }
}

fn write_meta(w: &mut impl Write, meta: &CheckpointMeta, kind: u8) -> io::Result<()> {
    w.write_all(CKPT_MAGIC)?;
    w.write_all(&[meta.method.tag(), env_tag(meta.env), kind])?;
    w.write_all(&meta.sigma.to_le_bytes())?;
    w.write_all(&(meta.plan_density.unwrap_or(0) as u64).to_le_bytes())?;
    w.write_all(&meta.steps.to_le_bytes())?;
    Ok(())
}

fn read_meta(r: &mut impl Read) -> Result<(CheckpointMeta, u8), HarnessError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CKPT_MAGIC {
        return Err(HarnessError::Config("not a checkpoint file".into()));
    }
    let mut tags = [0u8; 3];
    r.read_exact(&mut tags)?;
    let method = MethodId::from_tag(tags[0])
        .ok_or_else(|| HarnessError::Config(format!("bad method tag {}", tags[0])))?;
    let env = env_from_tag(tags[1])
        .ok_or_else(|| HarnessError::Config(format!("bad env tag {}", tags[1])))?;
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    let sigma = f64::from_le_bytes(buf);
    r.read_exact(&mut buf)?;
    let density = u64::from_le_bytes(buf);
    r.read_exact(&mut buf)?;
    let steps = u64::from_le_bytes(buf);
    Ok((
        CheckpointMeta {
            method,
            env,
            sigma,
            plan_density: if density == 0 { None } else { Some(density as usize) },
            steps,
        },
        tags[2],
    ))
}

pub fn save_learner_checkpoint(
    path: &Path,
    meta: &CheckpointMeta,
    learner: &SacLearner,
) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_meta(&mut w, meta, 0)?;
    learner.save(&mut w)?;
    Ok(())
}

pub fn save_im_checkpoint(
    path: &Path,
    meta: &CheckpointMeta,
    model: &InverseModel,
) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_meta(&mut w, meta, 1)?;
    model.save(&mut w).map_err(HarnessError::Io)?;
    Ok(())
}

/// Either kind of policy checkpoint.
pub enum LoadedPolicy {
    Learner(Box<SacLearner>),
    Inverse(Box<InverseModel>),
}

pub fn load_checkpoint(path: &Path) -> Result<(CheckpointMeta, LoadedPolicy), HarnessError> {
    let mut r = BufReader::new(File::open(path)?);
    let (meta, kind) = read_meta(&mut r)?;
    let policy = match kind {
        0 => LoadedPolicy::Learner(Box::new(SacLearner::load(&mut r)?)),
        1 => LoadedPolicy::Inverse(Box::new(
            InverseModel::load(&mut r).map_err(HarnessError::Io)?,
        )),
        k => return Err(HarnessError::Config(format!("bad checkpoint kind {k}"))),
    };
    Ok((meta, policy))
}
