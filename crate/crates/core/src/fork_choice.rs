//! The block-tree store and its well-formedness checks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::arith::Slot;
use crate::preset::Preset;
use crate::ssz::SszType;
use crate::transition::{state_transition_with, AcceptAllSignatures, SignatureVerifier, TransitionError};
use crate::types::{BeaconBlock, BeaconState, Checkpoint, Root};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForkChoiceError {
    #[error("store must start from a slot-0 state, got slot {0}")]
    NotGenesis(Slot),
    #[error("parent {0} is not in the store")]
    UnknownParent(Root),
    #[error("block {0} is already in the store")]
    DuplicateBlock(Root),
    #[error("root {0} is not in the store")]
    UnknownRoot(Root),
    #[error("parent links from {0} form a cycle")]
    Cycle(Root),
    #[error(transparent)]
    Transition(#[from] TransitionError),
}

impl ForkChoiceError {
    pub fn code(&self) -> String {
        match self {
            ForkChoiceError::NotGenesis(_) => "NotGenesis".into(),
            ForkChoiceError::UnknownParent(_) => "UnknownParent".into(),
            ForkChoiceError::DuplicateBlock(_) => "DuplicateBlock".into(),
            ForkChoiceError::UnknownRoot(_) => "UnknownRoot".into(),
            ForkChoiceError::Cycle(_) => "Cycle".into(),
            ForkChoiceError::Transition(e) => e.code(),
        }
    }
}

/// Root under which a block is stored: the root of its header.
pub fn block_root(block: &BeaconBlock, preset: &Preset) -> Root {
    block.header().tree_root(preset)
}

/// Block tree with the post-state of every accepted block.
///
/// Mutation goes through [`Store::on_block`], which validates fully before it
/// inserts anything, so a rejected block leaves the store as it was.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Store {
    blocks: BTreeMap<Root, BeaconBlock>,
    post_states: BTreeMap<Root, BeaconState>,
    genesis_root: Root,
    justified_checkpoint: Checkpoint,
    finalized_checkpoint: Checkpoint,
    preset: Preset,
}

impl Store {
    /// Anchors a store at `genesis`. The implicit genesis block carries the
    /// genesis state root, matching the header root later recorded in the
    /// state's block-root history.
    pub fn init(genesis: BeaconState, preset: Preset) -> Result<Store, ForkChoiceError> {
        if genesis.slot != 0 {
            return Err(ForkChoiceError::NotGenesis(genesis.slot));
        }
        let block = BeaconBlock {
            slot: 0,
            parent_root: Root::ZERO,
            state_root: genesis.tree_root(&preset),
            attestations: Vec::new(),
        };
        let genesis_root = block_root(&block, &preset);
        let anchor = Checkpoint { epoch: 0, root: genesis_root };
        Ok(Store {
            blocks: BTreeMap::from([(genesis_root, block)]),
            post_states: BTreeMap::from([(genesis_root, genesis)]),
            genesis_root,
            justified_checkpoint: anchor,
            finalized_checkpoint: anchor,
            preset,
        })
    }

    /// Assembles a store without any checks. Meant for loading snapshots and
    /// for exercising [`check_store_invariants`] on damaged trees.
    pub fn from_parts(
        blocks: BTreeMap<Root, BeaconBlock>,
        post_states: BTreeMap<Root, BeaconState>,
        genesis_root: Root,
        justified_checkpoint: Checkpoint,
        finalized_checkpoint: Checkpoint,
        preset: Preset,
    ) -> Store {
        Store { blocks, post_states, genesis_root, justified_checkpoint, finalized_checkpoint, preset }
    }

    pub fn blocks(&self) -> &BTreeMap<Root, BeaconBlock> {
        &self.blocks
    }

    pub fn post_states(&self) -> &BTreeMap<Root, BeaconState> {
        &self.post_states
    }

    pub fn genesis_root(&self) -> Root {
        self.genesis_root
    }

    pub fn genesis_state(&self) -> Option<&BeaconState> {
        self.post_states.get(&self.genesis_root)
    }

    pub fn justified_checkpoint(&self) -> Checkpoint {
        self.justified_checkpoint
    }

    pub fn finalized_checkpoint(&self) -> Checkpoint {
        self.finalized_checkpoint
    }

    pub fn preset(&self) -> &Preset {
        &self.preset
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn on_block(&mut self, block: BeaconBlock) -> Result<Root, ForkChoiceError> {
        self.on_block_with(block, &AcceptAllSignatures)
    }

    pub fn on_block_with(
        &mut self,
        block: BeaconBlock,
        signatures: &dyn SignatureVerifier,
    ) -> Result<Root, ForkChoiceError> {
        let parent = self
            .post_states
            .get(&block.parent_root)
            .ok_or(ForkChoiceError::UnknownParent(block.parent_root))?;
        let root = block_root(&block, &self.preset);
        if self.blocks.contains_key(&root) {
            return Err(ForkChoiceError::DuplicateBlock(root));
        }
        let post = state_transition_with(parent, &block, true, &self.preset, signatures)?;
        if post.current_justified_checkpoint.epoch > self.justified_checkpoint.epoch {
            self.justified_checkpoint = post.current_justified_checkpoint;
        }
        if post.finalized_checkpoint.epoch > self.finalized_checkpoint.epoch {
            self.finalized_checkpoint = post.finalized_checkpoint;
        }
        self.blocks.insert(root, block);
        self.post_states.insert(root, post);
        Ok(root)
    }

    /// Value-style variant of [`Store::on_block`].
    pub fn with_block(&self, block: BeaconBlock) -> Result<(Store, Root), ForkChoiceError> {
        let mut next = self.clone();
        let root = next.on_block(block)?;
        Ok((next, root))
    }

    /// `r`, its parent, and so on back to genesis.
    pub fn chain(&self, r: Root) -> Result<Vec<Root>, ForkChoiceError> {
        let mut out = vec![r];
        let mut cursor = r;
        loop {
            let block = self.blocks.get(&cursor).ok_or(ForkChoiceError::UnknownRoot(cursor))?;
            if cursor == self.genesis_root {
                return Ok(out);
            }
            if out.len() > self.blocks.len() {
                return Err(ForkChoiceError::Cycle(r));
            }
            cursor = block.parent_root;
            out.push(cursor);
        }
    }

    pub fn is_ancestor(&self, ancestor: Root, of: Root) -> bool {
        self.chain(of).map(|c| c.contains(&ancestor)).unwrap_or(false)
    }

    /// Highest-slot block descending from the justified root; ties go to the
    /// greater root bytes.
    pub fn get_head(&self) -> Root {
        let justified = self.justified_root();
        self.blocks
            .iter()
            .filter(|(r, _)| self.is_ancestor(justified, **r))
            .max_by(|(ra, a), (rb, b)| a.slot.cmp(&b.slot).then(ra.cmp(rb)))
            .map(|(r, _)| *r)
            .unwrap_or(self.genesis_root)
    }

    fn justified_root(&self) -> Root {
        let root = self.justified_checkpoint.root;
        if root.is_zero() {
            self.genesis_root
        } else {
            root
        }
    }

    /// Root of the epoch-boundary block for `epoch` on the chain ending at
    /// `tip`: the latest block at or before the epoch's first slot.
    pub fn boundary_root(&self, tip: Root, epoch: u64) -> Option<Root> {
        let start = epoch.checked_mul(self.preset.slots_per_epoch)?;
        self.chain(tip).ok()?.into_iter().find(|r| self.blocks.get(r).is_some_and(|b| b.slot <= start))
    }
}

/// Named check in an [`InvariantReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StoreInvariant {
    /// Every non-genesis block has its parent in the store.
    ParentPresent,
    /// Each block's slot is strictly above its parent's.
    SlotIncreasing,
    /// Each parent chain is finite and strictly ordered by slot.
    ChainOrdered,
    /// Each chain bottoms out at the slot-0 genesis block.
    ChainReachesGenesis,
}

impl StoreInvariant {
    pub const ALL: [StoreInvariant; 4] = [
        StoreInvariant::ParentPresent,
        StoreInvariant::SlotIncreasing,
        StoreInvariant::ChainOrdered,
        StoreInvariant::ChainReachesGenesis,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            StoreInvariant::ParentPresent => "parent_present",
            StoreInvariant::SlotIncreasing => "slot_increasing",
            StoreInvariant::ChainOrdered => "chain_ordered",
            StoreInvariant::ChainReachesGenesis => "chain_reaches_genesis",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantOutcome {
    pub invariant: StoreInvariant,
    /// First violation found, if any.
    pub witness: Option<String>,
}

impl InvariantOutcome {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantReport {
    pub outcomes: Vec<InvariantOutcome>,
}

impl InvariantReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(InvariantOutcome::passed)
    }

    pub fn outcome(&self, invariant: StoreInvariant) -> &InvariantOutcome {
        self.outcomes.iter().find(|o| o.invariant == invariant).expect("report covers every invariant")
    }
}

/// One `INVARIANT <id> PASS|FAIL <witness>` line per check.
impl fmt::Display for InvariantReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.outcomes {
            match &o.witness {
                None => writeln!(f, "INVARIANT {} PASS -", o.invariant.id())?,
                Some(w) => writeln!(f, "INVARIANT {} FAIL {}", o.invariant.id(), w)?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fate {
    Genesis,
    Dangling,
    Cycle,
}

fn join(roots: &[Root]) -> String {
    roots.iter().map(Root::to_string).collect::<Vec<_>>().join("->")
}

/// Classifies where the parent chain of every block ends. Each root is walked
/// once; later walks stop at the first root already classified.
fn chain_fates(store: &Store, mut note: impl FnMut(StoreInvariant, String)) {
    let mut fate: BTreeMap<Root, Fate> = BTreeMap::new();
    for &start in store.blocks.keys() {
        let mut path: Vec<Root> = Vec::new();
        let mut on_path = BTreeSet::new();
        let mut cursor = start;
        let end = loop {
            if let Some(&known) = fate.get(&cursor) {
                break known;
            }
            if !on_path.insert(cursor) {
                let from = path.iter().position(|r| *r == cursor).unwrap_or(0);
                let mut cycle = path[from..].to_vec();
                cycle.push(cursor);
                note(StoreInvariant::ChainOrdered, format!("cycle {}", join(&cycle)));
                note(StoreInvariant::ChainReachesGenesis, format!("chain from {start} loops at {cursor}"));
                break Fate::Cycle;
            }
            path.push(cursor);
            if cursor == store.genesis_root {
                break Fate::Genesis;
            }
            match store.blocks.get(&cursor) {
                Some(b) if store.blocks.contains_key(&b.parent_root) => cursor = b.parent_root,
                _ => {
                    note(StoreInvariant::ChainReachesGenesis, format!("chain {} stops short of genesis", join(&path)));
                    break Fate::Dangling;
                }
            }
        };
        for r in path {
            fate.insert(r, end);
        }
    }
}

/// Runs the four block-tree checks in time linear in the store size.
pub fn check_store_invariants(store: &Store) -> InvariantReport {
    let mut witnesses: BTreeMap<StoreInvariant, String> = BTreeMap::new();
    let mut note = |inv: StoreInvariant, w: String| {
        witnesses.entry(inv).or_insert(w);
    };

    match store.blocks.get(&store.genesis_root) {
        None => note(StoreInvariant::ChainReachesGenesis, format!("genesis {} missing", store.genesis_root)),
        Some(g) if g.slot != 0 => {
            note(StoreInvariant::ChainReachesGenesis, format!("genesis {} at slot {}", store.genesis_root, g.slot))
        }
        Some(_) => {}
    }
    if store.blocks.keys().ne(store.post_states.keys()) {
        let stray = store
            .blocks
            .keys()
            .find(|r| !store.post_states.contains_key(r))
            .or_else(|| store.post_states.keys().find(|r| !store.blocks.contains_key(r)))
            .copied()
            .unwrap_or(Root::ZERO);
        note(StoreInvariant::ParentPresent, format!("{stray} lacks a matching block or post-state"));
    }

    chain_fates(store, &mut note);

    for (root, block) in &store.blocks {
        if *root == store.genesis_root {
            continue;
        }
        match store.blocks.get(&block.parent_root) {
            None => note(StoreInvariant::ParentPresent, format!("{root} parent {} missing", block.parent_root)),
            Some(parent) if parent.slot >= block.slot => {
                let edge = format!("{root}@{} parent {}@{}", block.slot, block.parent_root, parent.slot);
                note(StoreInvariant::SlotIncreasing, edge.clone());
                note(StoreInvariant::ChainOrdered, format!("unordered edge {edge}"));
            }
            Some(_) => {}
        }
    }

    InvariantReport {
        outcomes: StoreInvariant::ALL
            .iter()
            .map(|&invariant| InvariantOutcome { invariant, witness: witnesses.remove(&invariant) })
            .collect(),
    }
}
