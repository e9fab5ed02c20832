//! Single-round propose-and-vote commit over a fixed validator set.
//!
//! Proposers rotate round-robin by `(height + round) mod n`. A block commits
//! once it carries valid votes from a quorum of distinct validators. The
//! in-process [`ValidatorHarness`] plays every validator and lets tests
//! inject silent or equivocating behaviour.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::crypto::{Digest, PublicKey, SigningKey};
use crate::ledger::block::{vote_message, Block, ValidatorId, Vote};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidatorInfo {
    pub id: ValidatorId,
    pub public_key: PublicKey,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatorSet {
    validators: Vec<ValidatorInfo>,
}

/// Outcome of checking the votes attached to a block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteTally {
    pub valid: BTreeSet<ValidatorId>,
    pub rejected: Vec<ValidatorId>,
    pub quorum: usize,
}

impl VoteTally {
    pub fn committed(&self) -> bool {
        self.valid.len() >= self.quorum
    }
}

impl ValidatorSet {
    pub fn new(validators: Vec<ValidatorInfo>) -> Self {
        assert!(!validators.is_empty(), "validator set cannot be empty");
        ValidatorSet { validators }
    }

    pub fn validators(&self) -> &[ValidatorInfo] {
        &self.validators
    }

    pub fn n(&self) -> usize {
        self.validators.len()
    }

    /// Tolerated faults, `⌊(n−1)/3⌋`.
    pub fn f(&self) -> usize {
        (self.n() - 1) / 3
    }

    /// Smallest vote count `q` such that two quorums always share more than
    /// `f` validators (`2q − n > f`). Equals `2f+1` whenever `n = 3f+1`.
    pub fn quorum(&self) -> usize {
        (self.n() + self.f()) / 2 + 1
    }

    pub fn get(&self, id: &str) -> Option<&ValidatorInfo> {
        self.validators.iter().find(|v| v.id == id)
    }

    pub fn proposer_for(&self, height: u64, round: u64) -> &ValidatorInfo {
        let idx = (height.wrapping_add(round) % self.n() as u64) as usize;
        &self.validators[idx]
    }

    /// Counts distinct validators whose vote verifies against `block_hash`.
    pub fn tally(&self, block_hash: &Digest, votes: &[Vote]) -> VoteTally {
        let message = vote_message(block_hash);
        let mut valid = BTreeSet::new();
        let mut rejected = Vec::new();
        for vote in votes {
            let ok = self
                .get(&vote.validator)
                .is_some_and(|v| v.public_key.verify(&message, &vote.signature));
            if ok && valid.insert(vote.validator.clone()) {
                continue;
            }
            rejected.push(vote.validator.clone());
        }
        VoteTally {
            valid,
            rejected,
            quorum: self.quorum(),
        }
    }

    pub fn verify_commit(&self, block: &Block) -> VoteTally {
        self.tally(&block.hash(), &block.commit_votes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VotePolicy {
    #[default]
    Honest,
    /// Never proposes or votes.
    Silent,
    /// Votes for the proposal and also signs a conflicting block at the same
    /// height.
    Equivocating,
}

impl std::str::FromStr for VotePolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "honest" => Ok(VotePolicy::Honest),
            "silent" => Ok(VotePolicy::Silent),
            "equivocating" => Ok(VotePolicy::Equivocating),
            other => Err(format!("unknown vote policy {other:?}")),
        }
    }
}

#[derive(Debug)]
pub struct SimulatedValidator {
    pub info: ValidatorInfo,
    key: SigningKey,
    pub policy: VotePolicy,
}

impl SimulatedValidator {
    pub fn sign(&self, block_hash: &Digest) -> Vote {
        Vote {
            validator: self.info.id.clone(),
            signature: self.key.sign(&vote_message(block_hash)),
        }
    }
}

/// A vote cast by an equivocating validator for a block other than the
/// proposal.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictingVote {
    pub block: Block,
    pub vote: Vote,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommitResult {
    pub committed: bool,
    pub tally: VoteTally,
    pub votes: Vec<Vote>,
    pub conflicting: Vec<ConflictingVote>,
}

/// Every validator of the network, simulated in-process.
#[derive(Debug)]
pub struct ValidatorHarness {
    set: ValidatorSet,
    members: Vec<SimulatedValidator>,
}

pub fn validator_key(chain_id: &str, index: usize) -> SigningKey {
    SigningKey::derive(&format!("{chain_id}/validator/{index}"))
}

impl ValidatorHarness {
    /// `n` validators with keys derived from the chain id. `policies` shorter
    /// than `n` is padded with [`VotePolicy::Honest`].
    pub fn derived(chain_id: &str, n: usize, policies: &[VotePolicy]) -> Self {
        let members: Vec<_> = (0..n)
            .map(|i| {
                let key = validator_key(chain_id, i);
                SimulatedValidator {
                    info: ValidatorInfo {
                        id: format!("validator-{i}"),
                        public_key: key.public_key(),
                    },
                    key,
                    policy: policies.get(i).copied().unwrap_or_default(),
                }
            })
            .collect();
        let set = ValidatorSet::new(members.iter().map(|m| m.info.clone()).collect());
        ValidatorHarness { set, members }
    }

    pub fn set(&self) -> &ValidatorSet {
        &self.set
    }

    pub fn members(&self) -> &[SimulatedValidator] {
        &self.members
    }

    pub fn set_policy(&mut self, index: usize, policy: VotePolicy) {
        self.members[index].policy = policy;
    }

    /// Whether the scheduled proposer for this slot will actually propose.
    pub fn proposer_live(&self, height: u64, round: u64) -> Option<&ValidatorInfo> {
        let info = self.set.proposer_for(height, round);
        let member = self.members.iter().find(|m| m.info.id == info.id)?;
        (member.policy != VotePolicy::Silent).then_some(info)
    }

    /// Gathers votes on `block` from every validator according to its
    /// policy. Signing runs on one thread per validator and joins before the
    /// tally.
    pub fn collect_votes(&self, block: &Block) -> CommitResult {
        let hash = block.hash();
        let mut conflicting_block = block.clone();
        conflicting_block.timestamp = block.timestamp.wrapping_add(1);
        conflicting_block.transactions.clear();
        conflicting_block.tx_root = crate::ledger::block::tx_root(&[]);
        let conflicting_hash = conflicting_block.hash();

        let cast: Vec<(Option<Vote>, Option<Vote>)> = std::thread::scope(|scope| {
            let handles: Vec<_> = self
                .members
                .iter()
                .map(|m| {
                    scope.spawn(move || match m.policy {
                        VotePolicy::Honest => (Some(m.sign(&hash)), None),
                        VotePolicy::Silent => (None, None),
                        VotePolicy::Equivocating => (Some(m.sign(&hash)), Some(m.sign(&conflicting_hash))),
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("validator thread"))
                .collect()
        });

        let mut votes = Vec::new();
        let mut conflicting = Vec::new();
        for (vote, other) in cast {
            votes.extend(vote);
            if let Some(vote) = other {
                conflicting.push(ConflictingVote {
                    block: conflicting_block.clone(),
                    vote,
                });
            }
        }
        let tally = self.set.tally(&hash, &votes);
        CommitResult {
            committed: tally.committed(),
            tally,
            votes,
            conflicting,
        }
    }
}
