//! Actor identities and the per-role profiles the contract keeps about them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    JobCreator,
    ResourceProvider,
    Mediator,
    Solver,
    ContractSink,
}

impl Role {
    fn prefix(self) -> &'static str {
        match self {
            Role::JobCreator => "jc",
            Role::ResourceProvider => "rp",
            Role::Mediator => "med",
            Role::Solver => "solver",
            Role::ContractSink => "sink",
        }
    }
}

/// Opaque account identifier. Ordering is by role, then index, which is the
/// "lexicographic" order used when picking a mediator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AccountId {
    pub role: Role,
    pub index: u32,
}

impl AccountId {
    pub const SINK: AccountId = AccountId {
        role: Role::ContractSink,
        index: 0,
    };

    pub const fn new(role: Role, index: u32) -> Self {
        AccountId { role, index }
    }

    pub const fn job_creator(index: u32) -> Self {
        Self::new(Role::JobCreator, index)
    }

    pub const fn resource_provider(index: u32) -> Self {
        Self::new(Role::ResourceProvider, index)
    }

    pub const fn mediator(index: u32) -> Self {
        Self::new(Role::Mediator, index)
    }

    pub const fn solver(index: u32) -> Self {
        Self::new(Role::Solver, index)
    }
}

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.role == Role::ContractSink {
            f.write_str("sink")
        } else {
            write!(f, "{}-{}", self.role.prefix(), self.index)
        }
    }
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    #[default]
    Amd64,
    Armv7,
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Architecture::Amd64 => "amd64",
            Architecture::Armv7 => "armv7",
        })
    }
}

impl FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "amd64" => Ok(Architecture::Amd64),
            "armv7" => Ok(Architecture::Armv7),
            other => Err(format!("unknown architecture `{other}`")),
        }
    }
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct DirectoryId(pub u32);

impl fmt::Display for DirectoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "dir-{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct JobCreatorProfile {
    pub trusted_mediators: BTreeSet<AccountId>,
}

/// Default execution speed when a provider declares none.
pub const DEFAULT_TIME_PER_INSTRUCTION_US: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceProviderProfile {
    pub trusted_mediators: BTreeSet<AccountId>,
    pub trusted_directories: BTreeSet<DirectoryId>,
    pub arch: Architecture,
    /// Simulated microseconds per instruction.
    pub time_per_instruction_us: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MediatorProfile {
    pub arch: Architecture,
    pub trusted_directories: BTreeSet<DirectoryId>,
}

#[derive(Debug, Clone, Default)]
pub struct Registry {
    pub job_creators: BTreeMap<AccountId, JobCreatorProfile>,
    pub resource_providers: BTreeMap<AccountId, ResourceProviderProfile>,
    pub mediators: BTreeMap<AccountId, MediatorProfile>,
}

impl Registry {
    pub fn is_registered(&self, id: AccountId) -> bool {
        match id.role {
            Role::JobCreator => self.job_creators.contains_key(&id),
            Role::ResourceProvider => self.resource_providers.contains_key(&id),
            Role::Mediator => self.mediators.contains_key(&id),
            // Solvers are permissionless; the sink always exists.
            Role::Solver | Role::ContractSink => true,
        }
    }
}
