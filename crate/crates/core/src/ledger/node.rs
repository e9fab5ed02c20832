//! A validating node: transaction pool, block production and the
//! append-only chain file.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::clock::Clock;
use crate::crypto::{Address, Digest};
use crate::ledger::block::Block;
use crate::ledger::consensus::{ConflictingVote, ValidatorHarness, VoteTally};
use crate::ledger::genesis::GenesisConfig;
use crate::ledger::tx::SignedTransaction;
use crate::ledger::verify::{parse_chain, verify_bytes, Violation};
use crate::state::{ChainState, Inadmissible, Receipt, TxContext};

#[derive(Debug, thiserror::Error)]
pub enum SubmitError {
    #[error("sender {0} is not a registered account")]
    UnknownSender(Address),
    #[error("sender {0} is not active")]
    InactiveSender(Address),
    #[error("transaction does not verify: {0}")]
    BadSignature(String),
    #[error("nonce {got} already used, next is {expected}")]
    StaleNonce { expected: u64, got: u64 },
    #[error("nonce {got} skips ahead, next is {expected}")]
    NonceGap { expected: u64, got: u64 },
    #[error("transaction {0} already known")]
    DuplicateTx(Digest),
}

impl SubmitError {
    pub fn code(&self) -> &'static str {
        match self {
            SubmitError::UnknownSender(_) => "UnknownSender",
            SubmitError::InactiveSender(_) => "InactiveSender",
            SubmitError::BadSignature(_) => "BadSignature",
            SubmitError::StaleNonce { .. } => "StaleNonce",
            SubmitError::NonceGap { .. } => "NonceGap",
            SubmitError::DuplicateTx(_) => "DuplicateTx",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum NodeError {
    #[error("validator set does not match genesis")]
    ValidatorMismatch,
    #[error("no quorum after {rounds} rounds at height {height}")]
    NoQuorum { height: u64, rounds: u64 },
    #[error("stored chain fails verification: {0}")]
    StoreCorrupt(Violation),
    #[error("chain file: {0}")]
    Io(#[from] std::io::Error),
}

/// One round that did not commit.
#[derive(Debug, Clone, PartialEq)]
pub enum FailedRound {
    SilentProposer {
        round: u64,
        proposer: String,
    },
    NoQuorum {
        round: u64,
        proposer: String,
        tally: VoteTally,
    },
}

#[derive(Debug, Clone)]
pub struct MinedBlock {
    pub block: Block,
    pub receipts: Vec<Receipt>,
    pub round: u64,
    pub failed_rounds: Vec<FailedRound>,
    /// Votes equivocators cast for a competing block. They never count
    /// toward the committed block.
    pub conflicting: Vec<ConflictingVote>,
}

pub struct Node {
    genesis: GenesisConfig,
    harness: ValidatorHarness,
    clock: Arc<dyn Clock>,
    state: ChainState,
    blocks: Vec<Block>,
    pool: Vec<SignedTransaction>,
    chain_file: Option<PathBuf>,
}

impl std::fmt::Debug for Node {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Node")
            .field("height", &self.state.head_height)
            .field("pool", &self.pool.len())
            .finish_non_exhaustive()
    }
}

impl Node {
    /// A node that keeps its chain in memory only.
    pub fn in_memory(
        genesis: GenesisConfig,
        harness: ValidatorHarness,
        clock: Arc<dyn Clock>,
    ) -> Result<Node, NodeError> {
        check_validators(&genesis, &harness)?;
        let state = ChainState::genesis(&genesis);
        let blocks = vec![Block::genesis(&genesis)];
        Ok(Node {
            genesis,
            harness,
            clock,
            state,
            blocks,
            pool: Vec::new(),
            chain_file: None,
        })
    }

    /// Opens or creates the chain file at `path`. An existing file is fully
    /// verified and replayed before the node accepts work.
    pub fn open(
        genesis: GenesisConfig,
        harness: ValidatorHarness,
        clock: Arc<dyn Clock>,
        path: &Path,
    ) -> Result<Node, NodeError> {
        check_validators(&genesis, &harness)?;
        let (state, blocks) = if path.exists() {
            let bytes = fs::read(path)?;
            let state = verify_bytes(&genesis, &bytes).map_err(NodeError::StoreCorrupt)?;
            let text = std::str::from_utf8(&bytes).expect("verified as UTF-8");
            let blocks = parse_chain(text).map_err(NodeError::StoreCorrupt)?;
            (state, blocks)
        } else {
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir)?;
            }
            let block = Block::genesis(&genesis);
            let mut file = File::create(path)?;
            writeln!(file, "{}", block.to_line())?;
            file.sync_all()?;
            (ChainState::genesis(&genesis), vec![block])
        };
        Ok(Node {
            genesis,
            harness,
            clock,
            state,
            blocks,
            pool: Vec::new(),
            chain_file: Some(path.to_owned()),
        })
    }

    pub fn genesis(&self) -> &GenesisConfig {
        &self.genesis
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn height(&self) -> u64 {
        self.state.head_height
    }

    pub fn pool(&self) -> &[SignedTransaction] {
        &self.pool
    }

    pub fn harness(&self) -> &ValidatorHarness {
        &self.harness
    }

    pub fn harness_mut(&mut self) -> &mut ValidatorHarness {
        &mut self.harness
    }

    pub fn chain_file(&self) -> Option<&Path> {
        self.chain_file.as_deref()
    }

    /// Next nonce `sender` should sign, counting pooled transactions.
    pub fn next_nonce(&self, sender: &Address) -> u64 {
        self.state.nonce_of(sender) + self.pending_for(sender) + 1
    }

    fn pending_for(&self, sender: &Address) -> u64 {
        self.pool.iter().filter(|t| t.sender == *sender).count() as u64
    }

    /// Admits a transaction to the pool after signature, sender and nonce
    /// checks.
    pub fn submit(&mut self, tx: SignedTransaction) -> Result<Digest, SubmitError> {
        if self.state.receipts.contains_key(&tx.tx_id) || self.pool.iter().any(|t| t.tx_id == tx.tx_id) {
            return Err(SubmitError::DuplicateTx(tx.tx_id));
        }
        let expected = self.next_nonce(&tx.sender);
        match self.state.check_admissible(&tx, expected) {
            Ok(()) => {}
            Err(Inadmissible::UnknownSender(a)) => return Err(SubmitError::UnknownSender(a)),
            Err(Inadmissible::InactiveSender(a)) => return Err(SubmitError::InactiveSender(a)),
            Err(Inadmissible::BadSignature(e)) => return Err(SubmitError::BadSignature(e.to_string())),
            Err(Inadmissible::BadNonce { expected, got }) if got < expected => {
                return Err(SubmitError::StaleNonce { expected, got })
            }
            Err(Inadmissible::BadNonce { expected, got }) => return Err(SubmitError::NonceGap { expected, got }),
        }
        let id = tx.tx_id;
        self.pool.push(tx);
        Ok(id)
    }

    /// The pool in `(sender, nonce, timestamp)` order, keeping only
    /// transactions that are still admissible against the head state.
    fn candidate_transactions(&self) -> Vec<SignedTransaction> {
        let mut pool = self.pool.clone();
        pool.sort_by_key(|t| (t.sender, t.nonce, t.timestamp));
        let mut next: BTreeMap<Address, u64> = BTreeMap::new();
        pool.into_iter()
            .filter(|tx| {
                let expected = *next
                    .entry(tx.sender)
                    .or_insert_with(|| self.state.nonce_of(&tx.sender) + 1);
                let ok = self.state.check_admissible(tx, expected).is_ok();
                if ok {
                    next.insert(tx.sender, expected + 1);
                }
                ok
            })
            .collect()
    }

    /// Head state with every admissible pooled transaction applied, as the
    /// next block would apply them.
    pub fn speculative_state(&self) -> ChainState {
        let mut state = self.state.clone();
        let height = state.head_height + 1;
        for tx in self.candidate_transactions() {
            let ctx = TxContext {
                tx_id: tx.tx_id,
                sender: tx.sender,
                height,
                timestamp: tx.timestamp,
            };
            // Failures here become failed receipts at commit time.
            let _ = state.apply_command(&ctx, &tx.command);
        }
        state
    }

    /// Proposes, votes on and commits the next block with whatever the pool
    /// holds (possibly nothing). Rotates to the next round when the proposer
    /// is silent or the proposal misses quorum, for at most `n` rounds.
    pub fn mine(&mut self) -> Result<MinedBlock, NodeError> {
        let height = self.height() + 1;
        let transactions = self.candidate_transactions();
        let parent = self.blocks.last().expect("chain has genesis").clone();
        let rounds = self.harness.set().n() as u64;
        let mut failed_rounds = Vec::new();
        for round in 0..rounds {
            let proposer = self.harness.set().proposer_for(height, round).id.clone();
            if self.harness.proposer_live(height, round).is_none() {
                failed_rounds.push(FailedRound::SilentProposer { round, proposer });
                continue;
            }
            let timestamp = self.clock.now_millis().max(parent.timestamp);
            let mut block = Block::new(&parent, transactions.clone(), proposer.clone(), timestamp);
            let result = self.harness.collect_votes(&block);
            if !result.committed {
                failed_rounds.push(FailedRound::NoQuorum {
                    round,
                    proposer,
                    tally: result.tally,
                });
                continue;
            }
            block.commit_votes = result.votes;
            let mut next_state = self.state.clone();
            let receipts = next_state
                .apply_block(&block, self.harness.set())
                .expect("a freshly produced block applies");
            self.persist(&block)?;
            self.state = next_state;
            let included: std::collections::BTreeSet<Digest> = block.transactions.iter().map(|t| t.tx_id).collect();
            self.pool.retain(|t| !included.contains(&t.tx_id));
            self.prune_pool();
            self.blocks.push(block.clone());
            tracing::debug!(height, round, txs = block.transactions.len(), "block committed");
            return Ok(MinedBlock {
                block,
                receipts,
                round,
                failed_rounds,
                conflicting: result.conflicting,
            });
        }
        tracing::warn!(height, rounds, "no quorum");
        Err(NodeError::NoQuorum { height, rounds })
    }

    /// Drops pooled transactions whose nonce has been overtaken.
    fn prune_pool(&mut self) {
        let state = &self.state;
        self.pool
            .retain(|t| t.nonce > state.nonce_of(&t.sender) && state.accounts.is_active(&t.sender));
    }

    fn persist(&self, block: &Block) -> Result<(), NodeError> {
        if let Some(path) = &self.chain_file {
            let mut file = OpenOptions::new().append(true).open(path)?;
            writeln!(file, "{}", block.to_line())?;
            file.sync_data()?;
        }
        Ok(())
    }
}

fn check_validators(genesis: &GenesisConfig, harness: &ValidatorHarness) -> Result<(), NodeError> {
    if genesis.validators != harness.set().validators() {
        return Err(NodeError::ValidatorMismatch);
    }
    Ok(())
}
