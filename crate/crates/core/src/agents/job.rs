//! The non-deterministic job model.
//!
//! A job returns its true result with probability `p_a` and otherwise an
//! anomalous one. Result hashes carry a two-bit tag so that true, anomalous
//! and forged results never collide.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::rng::{bernoulli, mix, Stream};
use crate::ledger::types::{JobId, ResourceVector, ResultHash};

const TAG_MASK: u64 = 0b11;
const TAG_TRUE: u64 = 0b00;
const TAG_ANOMALOUS: u64 = 0b01;
const TAG_FORGED: u64 = 0b10;

fn tagged(raw: u64, tag: u64) -> ResultHash {
    ResultHash((raw & !TAG_MASK) | tag)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResultKind {
    Normal,
    Anomalous,
    Forged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSpec {
    pub job_id: JobId,
    pub p_a: f64,
    pub true_hash: ResultHash,
    pub anomaly_seed: u64,
    pub resource_profile: ResourceVector,
}

impl JobSpec {
    pub fn new(job_id: JobId, p_a: f64, seed: u64, resource_profile: ResourceVector) -> JobSpec {
        JobSpec {
            job_id,
            p_a,
            true_hash: tagged(mix(seed, job_id.0), TAG_TRUE),
            anomaly_seed: mix(seed ^ 0xa5a5_a5a5_a5a5_a5a5, job_id.0),
            resource_profile,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.p_a >= 1.0
    }

    pub fn classify(&self, hash: ResultHash) -> ResultKind {
        if hash == self.true_hash {
            return ResultKind::Normal;
        }
        match hash.0 & TAG_MASK {
            TAG_ANOMALOUS => ResultKind::Anomalous,
            _ => ResultKind::Forged,
        }
    }

    /// A forged hash, outside both the true result and the anomalous space.
    pub fn forge(&self, forge_seed: u64, rng: &mut Stream) -> ResultHash {
        tagged(mix(forge_seed ^ self.job_id.0, rng.next_u64()), TAG_FORGED)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Execution {
    pub hash: ResultHash,
    pub normal: bool,
    pub usage: ResourceVector,
}

pub fn execute_job(spec: &JobSpec, rng: &mut Stream) -> Execution {
    let normal = bernoulli(rng, spec.p_a);
    let hash = if normal {
        spec.true_hash
    } else {
        tagged(mix(spec.anomaly_seed, rng.next_u64()), TAG_ANOMALOUS)
    };
    Execution {
        hash,
        normal,
        usage: spec.resource_profile,
    }
}
