//! Match feasibility and the solver's pairing algorithms.
//!
//! A job offer and a resource offer can be paired when every capacity covers
//! the corresponding limit, both ask prices are within the creator's maximum
//! prices, architectures agree, the provider trusts the job's directory, a
//! mediator exists that both sides trust (with the provider's architecture and
//! trusting the same directory), and the provider can finish the instruction
//! limit before the completion deadline.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ledger::types::{JobOffer, Match, Millis, ResourceOffer};
use crate::registry::{AccountId, Registry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Violation {
    InstructionCapacity,
    RamCapacity,
    StorageCapacity,
    BandwidthCapacity,
    InstructionPrice,
    BandwidthPrice,
    Architecture,
    Directory,
    Mediator,
    Deadline,
    UnregisteredParty,
}

impl Violation {
    pub fn as_str(self) -> &'static str {
        match self {
            Violation::InstructionCapacity => "instruction_capacity",
            Violation::RamCapacity => "ram_capacity",
            Violation::StorageCapacity => "storage_capacity",
            Violation::BandwidthCapacity => "bandwidth_capacity",
            Violation::InstructionPrice => "instruction_price",
            Violation::BandwidthPrice => "bandwidth_price",
            Violation::Architecture => "architecture",
            Violation::Directory => "directory",
            Violation::Mediator => "mediator",
            Violation::Deadline => "deadline",
            Violation::UnregisteredParty => "unregistered_party",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of [`check_feasible`]. `feasible` holds exactly when `violations`
/// is empty, and then `chosen_mediator` is set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
    pub chosen_mediator: Option<AccountId>,
}

/// Mediators trusted by both sides that run the provider's architecture and
/// trust the job's directory.
pub fn eligible_mediators(
    jo: &JobOffer,
    ro: &ResourceOffer,
    registry: &Registry,
) -> BTreeSet<AccountId> {
    let (Some(jc), Some(rp)) = (
        registry.job_creators.get(&jo.job_creator),
        registry.resource_providers.get(&ro.provider),
    ) else {
        return BTreeSet::new();
    };
    jc.trusted_mediators
        .intersection(&rp.trusted_mediators)
        .filter(|m| {
            registry.mediators.get(m).is_some_and(|profile| {
                profile.arch == rp.arch && profile.trusted_directories.contains(&jo.directory)
            })
        })
        .copied()
        .collect()
}

/// Simulated milliseconds the provider needs for the job's instruction limit,
/// rounded up.
pub fn execution_time_ms(instruction_limit: u64, time_per_instruction_us: u64) -> Millis {
    let micros = instruction_limit as u128 * time_per_instruction_us as u128;
    micros.div_ceil(1000).min(u64::MAX as u128) as Millis
}

pub fn check_feasible(
    jo: &JobOffer,
    ro: &ResourceOffer,
    registry: &Registry,
    now: Millis,
) -> FeasibilityReport {
    let mut violations = Vec::new();
    let Some(rp) = registry.resource_providers.get(&ro.provider) else {
        return FeasibilityReport {
            feasible: false,
            violations: vec![Violation::UnregisteredParty],
            chosen_mediator: None,
        };
    };
    if !registry.job_creators.contains_key(&jo.job_creator) {
        violations.push(Violation::UnregisteredParty);
    }

    let (cap, lim) = (&ro.capacities, &jo.limits);
    if cap.instructions < lim.instructions {
        violations.push(Violation::InstructionCapacity);
    }
    if cap.ram < lim.ram {
        violations.push(Violation::RamCapacity);
    }
    if cap.storage < lim.storage {
        violations.push(Violation::StorageCapacity);
    }
    if cap.bandwidth < lim.bandwidth {
        violations.push(Violation::BandwidthCapacity);
    }
    if ro.instruction_price > jo.instruction_max_price {
        violations.push(Violation::InstructionPrice);
    }
    if ro.bandwidth_price > jo.bandwidth_max_price {
        violations.push(Violation::BandwidthPrice);
    }
    if jo.arch != rp.arch {
        violations.push(Violation::Architecture);
    }
    if !rp.trusted_directories.contains(&jo.directory) {
        violations.push(Violation::Directory);
    }
    let chosen = eligible_mediators(jo, ro, registry).into_iter().next();
    if chosen.is_none() {
        violations.push(Violation::Mediator);
    }
    let finish = now.saturating_add(execution_time_ms(
        lim.instructions,
        rp.time_per_instruction_us,
    ));
    if finish > jo.completion_deadline {
        violations.push(Violation::Deadline);
    }

    let feasible = violations.is_empty();
    FeasibilityReport {
        feasible,
        violations,
        chosen_mediator: if feasible { chosen } else { None },
    }
}

/// An open offer together with its arrival index on the ledger.
#[derive(Debug, Clone, Copy)]
pub struct Pending<'a, T> {
    pub arrival: u64,
    pub offer: &'a T,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    /// First feasible pair in arrival order.
    #[default]
    Greedy,
    /// Maximum-cardinality matching via augmenting paths.
    Maximum,
}

fn sorted_jobs<'a>(jobs: &[Pending<'a, JobOffer>]) -> Vec<Pending<'a, JobOffer>> {
    let mut v = jobs.to_vec();
    v.sort_by_key(|p| (p.arrival, p.offer.job_id));
    v
}

fn sorted_resources<'a>(ros: &[Pending<'a, ResourceOffer>]) -> Vec<Pending<'a, ResourceOffer>> {
    let mut v = ros.to_vec();
    v.sort_by_key(|p| (p.arrival, p.offer.offer_id));
    v
}

/// Feasible mediator for every (job, resource) index pair, in sorted order.
fn feasibility_table(
    jobs: &[Pending<'_, JobOffer>],
    ros: &[Pending<'_, ResourceOffer>],
    registry: &Registry,
    now: Millis,
) -> Vec<Vec<Option<AccountId>>> {
    jobs.iter()
        .map(|j| {
            ros.iter()
                .map(|r| check_feasible(j.offer, r.offer, registry, now).chosen_mediator)
                .collect()
        })
        .collect()
}

fn to_matches(
    pairs: impl IntoIterator<Item = (usize, usize)>,
    jobs: &[Pending<'_, JobOffer>],
    ros: &[Pending<'_, ResourceOffer>],
    table: &[Vec<Option<AccountId>>],
    now: Millis,
) -> Vec<Match> {
    pairs
        .into_iter()
        .map(|(j, r)| Match {
            job: jobs[j].offer.job_id,
            resource_offer: ros[r].offer.offer_id,
            mediator: table[j][r].expect("paired offers are feasible"),
            match_time: now,
        })
        .collect()
}

fn greedy_pairs(table: &[Vec<Option<AccountId>>], n_ros: usize) -> Vec<Option<usize>> {
    let mut ro_taken = vec![false; n_ros];
    table
        .iter()
        .map(|row| {
            let r = (0..n_ros).find(|&r| !ro_taken[r] && row[r].is_some())?;
            ro_taken[r] = true;
            Some(r)
        })
        .collect()
}

/// Pairs each job offer, in arrival order, with the earliest-arrived feasible
/// resource offer still free. The result is maximal: no feasible pair of
/// unmatched offers remains.
pub fn greedy_match(
    jobs: &[Pending<'_, JobOffer>],
    ros: &[Pending<'_, ResourceOffer>],
    registry: &Registry,
    now: Millis,
) -> Vec<Match> {
    let jobs = sorted_jobs(jobs);
    let ros = sorted_resources(ros);
    let table = feasibility_table(&jobs, &ros, registry, now);
    let pairs = greedy_pairs(&table, ros.len());
    to_matches(
        pairs
            .iter()
            .enumerate()
            .filter_map(|(j, r)| r.map(|r| (j, r))),
        &jobs,
        &ros,
        &table,
        now,
    )
}

fn augment(
    j: usize,
    table: &[Vec<Option<AccountId>>],
    ro_owner: &mut [Option<usize>],
    visited: &mut [bool],
) -> bool {
    for r in 0..ro_owner.len() {
        if table[j][r].is_none() || visited[r] {
            continue;
        }
        visited[r] = true;
        let free = match ro_owner[r] {
            None => true,
            Some(other) => augment(other, table, ro_owner, visited),
        };
        if free {
            ro_owner[r] = Some(j);
            return true;
        }
    }
    false
}

/// Maximum-cardinality matching. Starts from the greedy matching and grows it
/// along augmenting paths, scanning in arrival order so the output is
/// deterministic.
pub fn maximum_match(
    jobs: &[Pending<'_, JobOffer>],
    ros: &[Pending<'_, ResourceOffer>],
    registry: &Registry,
    now: Millis,
) -> Vec<Match> {
    let jobs = sorted_jobs(jobs);
    let ros = sorted_resources(ros);
    let table = feasibility_table(&jobs, &ros, registry, now);

    let mut ro_owner = vec![None; ros.len()];
    for (j, r) in greedy_pairs(&table, ros.len()).into_iter().enumerate() {
        if let Some(r) = r {
            ro_owner[r] = Some(j);
        }
    }
    let mut job_matched: Vec<bool> = vec![false; jobs.len()];
    for j in ro_owner.iter().flatten() {
        job_matched[*j] = true;
    }
    for (j, _) in job_matched.iter().enumerate().filter(|(_, m)| !**m) {
        let mut visited = vec![false; ros.len()];
        augment(j, &table, &mut ro_owner, &mut visited);
    }

    let mut pairs: Vec<(usize, usize)> = ro_owner
        .iter()
        .enumerate()
        .filter_map(|(r, j)| j.map(|j| (j, r)))
        .collect();
    pairs.sort_unstable();
    to_matches(pairs, &jobs, &ros, &table, now)
}

pub fn solve(
    mode: SolverMode,
    jobs: &[Pending<'_, JobOffer>],
    ros: &[Pending<'_, ResourceOffer>],
    registry: &Registry,
    now: Millis,
) -> Vec<Match> {
    match mode {
        SolverMode::Greedy => greedy_match(jobs, ros, registry, now),
        SolverMode::Maximum => maximum_match(jobs, ros, registry, now),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::types::{JobId, ResourceOfferId, ResourceVector};
    use crate::money::Money;
    use crate::registry::{
        Architecture, DirectoryId, JobCreatorProfile, MediatorProfile, ResourceProviderProfile,
    };

    fn registry() -> Registry {
        let mut reg = Registry::default();
        let dirs: BTreeSet<_> = [DirectoryId(0)].into();
        for m in 0..2 {
            reg.mediators.insert(
                AccountId::mediator(m),
                MediatorProfile {
                    arch: Architecture::Amd64,
                    trusted_directories: dirs.clone(),
                },
            );
        }
        reg.job_creators.insert(
            AccountId::job_creator(0),
            JobCreatorProfile {
                trusted_mediators: [AccountId::mediator(0), AccountId::mediator(1)].into(),
            },
        );
        for rp in 0..3 {
            reg.resource_providers.insert(
                AccountId::resource_provider(rp),
                ResourceProviderProfile {
                    trusted_mediators: [AccountId::mediator(1)].into(),
                    trusted_directories: dirs.clone(),
                    arch: Architecture::Amd64,
                    time_per_instruction_us: 1,
                },
            );
        }
        reg
    }

    fn job(id: u64, instructions: u64) -> JobOffer {
        JobOffer {
            job_id: JobId(id),
            job_creator: AccountId::job_creator(0),
            limits: ResourceVector::new(instructions, 10, 50, 50),
            instruction_max_price: Money(2),
            bandwidth_max_price: Money(2),
            completion_deadline: 1_000_000,
            match_incentive: Money(0),
            first_layer_hash: 0,
            directory: DirectoryId(0),
            job_hash: id,
            arch: Architecture::Amd64,
            deposit: Money(0),
        }
    }

    fn resource(id: u64, provider: u32, instructions: u64) -> ResourceOffer {
        ResourceOffer {
            offer_id: ResourceOfferId(id),
            provider: AccountId::resource_provider(provider),
            capacities: ResourceVector::new(instructions, 1000, 1000, 1000),
            instruction_price: Money(1),
            bandwidth_price: Money(1),
            match_incentive: Money(0),
            verification_count: 2,
            deposit: Money(0),
        }
    }

    #[test]
    fn slack_pair_is_feasible() {
        let reg = registry();
        let r = check_feasible(&job(0, 100), &resource(0, 0, 1000), &reg, 0);
        assert!(r.feasible);
        assert!(r.violations.is_empty());
        assert_eq!(r.chosen_mediator, Some(AccountId::mediator(1)));
    }

    #[test]
    fn price_above_max_is_reported() {
        let reg = registry();
        let mut ro = resource(0, 0, 1000);
        ro.instruction_price = Money(3);
        let r = check_feasible(&job(0, 100), &ro, &reg, 0);
        assert!(!r.feasible);
        assert_eq!(r.violations, vec![Violation::InstructionPrice]);
        assert_eq!(r.violations[0].as_str(), "instruction_price");
        assert_eq!(r.chosen_mediator, None);
    }

    #[test]
    fn capacity_below_limit_is_reported() {
        let reg = registry();
        let r = check_feasible(&job(0, 2000), &resource(0, 0, 1000), &reg, 0);
        assert_eq!(r.violations, vec![Violation::InstructionCapacity]);
    }

    #[test]
    fn empty_mediator_intersection() {
        let mut reg = registry();
        reg.resource_providers
            .get_mut(&AccountId::resource_provider(0))
            .unwrap()
            .trusted_mediators = [AccountId::mediator(7)].into();
        let r = check_feasible(&job(0, 100), &resource(0, 0, 1000), &reg, 0);
        assert_eq!(r.violations, vec![Violation::Mediator]);
    }

    #[test]
    fn mediator_must_trust_the_directory() {
        let mut reg = registry();
        reg.mediators
            .get_mut(&AccountId::mediator(1))
            .unwrap()
            .trusted_directories
            .clear();
        let r = check_feasible(&job(0, 100), &resource(0, 0, 1000), &reg, 0);
        assert_eq!(r.violations, vec![Violation::Mediator]);
    }

    #[test]
    fn deadline_condition() {
        let reg = registry();
        let mut jo = job(0, 100_000);
        let mut ro = resource(0, 0, 1_000_000);
        // 100_000 instructions at 1 us each is 100 ms.
        jo.completion_deadline = 1_100;
        assert!(check_feasible(&jo, &ro, &reg, 1_000).feasible);
        let r = check_feasible(&jo, &ro, &reg, 1_001);
        assert_eq!(r.violations, vec![Violation::Deadline]);
        ro.capacities.instructions = 10;
        assert_eq!(check_feasible(&jo, &ro, &reg, 0).violations.len(), 1);
    }

    #[test]
    fn singleton_and_tie_break() {
        let reg = registry();
        let (j0, j1, r0) = (job(0, 100), job(1, 100), resource(0, 0, 1000));
        let one = greedy_match(
            &[Pending {
                arrival: 0,
                offer: &j0,
            }],
            &[Pending {
                arrival: 0,
                offer: &r0,
            }],
            &reg,
            0,
        );
        assert_eq!(one.len(), 1);

        // Later arrival listed first; the earlier arrival must win.
        let m = greedy_match(
            &[
                Pending {
                    arrival: 5,
                    offer: &j0,
                },
                Pending {
                    arrival: 3,
                    offer: &j1,
                },
            ],
            &[Pending {
                arrival: 0,
                offer: &r0,
            }],
            &reg,
            0,
        );
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].job, JobId(1));
    }

    #[test]
    fn augmenting_path_beats_greedy() {
        let reg = registry();
        // JO1 fits both ROs; JO2 needs the big one, which greedy hands to JO1.
        let jo1 = job(1, 100);
        let jo2 = job(2, 500);
        let ro1 = resource(1, 0, 1000);
        let ro2 = resource(2, 1, 200);
        let jobs = [
            Pending {
                arrival: 0,
                offer: &jo1,
            },
            Pending {
                arrival: 1,
                offer: &jo2,
            },
        ];
        let ros = [
            Pending {
                arrival: 0,
                offer: &ro1,
            },
            Pending {
                arrival: 1,
                offer: &ro2,
            },
        ];
        assert_eq!(greedy_match(&jobs, &ros, &reg, 0).len(), 1);
        let max = maximum_match(&jobs, &ros, &reg, 0);
        assert_eq!(max.len(), 2);
        assert!(max
            .iter()
            .any(|m| m.job == JobId(2) && m.resource_offer == ResourceOfferId(1)));
    }
}
