mod common;

use beacon_core::preset::Preset;
use beacon_core::sim::{replay, simulate, ChainFile, SimConfig, SplitMix64};
use beacon_core::ssz::SszType;
use beacon_core::transition::{
    forward_state_to_slot, functional_transition, genesis_with_validators, is_valid_block,
    is_valid_state_epoch_attestations, next_slot, process_block, process_epoch, process_slots,
    process_slots_traced, state_transition, update_block, TransitionError,
};
use beacon_core::types::{AttestationData, BeaconBlock, BeaconState, Checkpoint, PendingAttestation, Root};

use common::{random_valid_block, sample_states};

fn minimal() -> Preset {
    Preset::minimal()
}

/// Block at `slot` with no attestations and a correct state root.
fn empty_block(state: &BeaconState, slot: u64, p: &Preset) -> BeaconBlock {
    let forwarded = process_slots(state, slot, p).unwrap();
    let mut block = BeaconBlock {
        slot,
        parent_root: forwarded.latest_block_header.tree_root(p),
        state_root: Root::ZERO,
        attestations: vec![],
    };
    block.state_root = process_block(&forwarded, &block, p).unwrap().tree_root(p);
    block
}

#[test]
fn imperative_and_functional_agree_on_random_walks() {
    let p = minimal();
    let mut rng = SplitMix64::new(0xfeed);
    let mut compared = 0;
    for start in sample_states(&mut rng, 6, 3, &p) {
        let mut s = start;
        for _ in 0..8 {
            let b = random_valid_block(&mut rng, &s, &p);
            let imperative = state_transition(&s, &b, true, &p).unwrap();
            let functional = functional_transition(&s, &b, true, &p).unwrap();
            assert_eq!(imperative.to_ssz_bytes(&p), functional.to_ssz_bytes(&p));
            assert_eq!(imperative.slot, b.slot);
            compared += 1;
            s = imperative;
        }
    }
    assert_eq!(compared, 144);
}

#[test]
fn both_forms_reject_the_same_blocks() {
    let p = minimal();
    let mut rng = SplitMix64::new(7);
    for s in sample_states(&mut rng, 3, 4, &p) {
        let mut b = random_valid_block(&mut rng, &s, &p);
        b.state_root.0[rng.below(32) as usize] ^= 1 << rng.below(8);
        let a = state_transition(&s, &b, true, &p).unwrap_err();
        let f = functional_transition(&s, &b, true, &p).unwrap_err();
        assert_eq!(a, f);
        assert!(matches!(a, TransitionError::StateRootMismatch { .. }));
    }
}

#[test]
fn next_slot_examples() {
    let p = Preset::default();
    let g = genesis_with_validators(64, &p).unwrap();
    assert_eq!(next_slot(&g, &p).unwrap().slot, 1);

    let at31 = process_slots(&g, 31, &p).unwrap();
    let (_, trace) = process_slots_traced(&at31, 32, &p).unwrap();
    assert_eq!(trace.epoch_transitions, 1);
    // the epoch step decremented every balance, since nobody attested
    let at32 = next_slot(&at31, &p).unwrap();
    assert!(at32.balances.iter().all(|&b| b == p.effective_balance_per_validator - p.reward_unit));

    let mut stepped = g.clone();
    for _ in 0..32 {
        stepped = next_slot(&stepped, &p).unwrap();
    }
    assert_eq!(stepped, forward_state_to_slot(&g, 32, &p).unwrap());
}

#[test]
fn forward_state_examples() {
    let p = minimal();
    let g = genesis_with_validators(40, &p).unwrap();
    let s = process_slots(&g, 5, &p).unwrap();
    assert_eq!(forward_state_to_slot(&s, 5, &p).unwrap(), s);
    for k in 1..20 {
        assert_eq!(forward_state_to_slot(&s, 5 + k, &p).unwrap(), process_slots(&s, 5 + k, &p).unwrap());
    }
    assert_eq!(
        forward_state_to_slot(&s, 4, &p),
        Err(TransitionError::SlotNotAhead { current: 5, target: 4 })
    );
}

#[test]
fn update_block_examples() {
    let p = minimal();
    let g = genesis_with_validators(64, &p).unwrap();
    let s = process_slots(&g, 3, &p).unwrap();

    let empty = BeaconBlock {
        slot: 3,
        parent_root: s.latest_block_header.tree_root(&p),
        state_root: Root::ZERO,
        attestations: vec![],
    };
    let out = update_block(&s, &empty, &p).unwrap();
    assert_eq!(out.latest_block_header.slot, 3);
    assert_eq!(out.latest_block_header.state_root, Root::ZERO);
    assert_eq!(out.current_epoch_attestations, s.current_epoch_attestations);

    let committee = |slot| beacon_core::committees::get_beacon_committee(&s, slot, 0, &p).unwrap().members;
    let vote = |slot: u64| PendingAttestation {
        aggregation_bits: vec![true; committee(slot).len()],
        data: AttestationData {
            slot,
            index: 0,
            beacon_block_root: Root::ZERO,
            source: s.current_justified_checkpoint,
            target: Checkpoint { epoch: 0, root: s.block_root(0, &p).unwrap() },
        },
        inclusion_delay: 3 - slot,
    };
    let two = BeaconBlock { attestations: vec![vote(1), vote(2)], ..empty.clone() };
    let out = update_block(&s, &two, &p).unwrap();
    assert_eq!(out.current_epoch_attestations.len(), s.current_epoch_attestations.len() + 2);

    let wrong = BeaconBlock { slot: 4, ..empty };
    assert!(matches!(update_block(&s, &wrong, &p), Err(TransitionError::HeaderSlotMismatch { .. })));
}

#[test]
fn epoch_without_attestations_matches_straight_line_oracle() {
    let p = minimal();
    let mut g = genesis_with_validators(48, &p).unwrap();
    g.balances[3] = 5;
    g.balances[7] = 0;
    let s = process_slots(&g, p.slots_per_epoch * 2 - 1, &p).unwrap();
    let out = process_epoch(&s, &p).unwrap();

    let expected: Vec<u64> = s.balances.iter().map(|b| b.saturating_sub(p.reward_unit)).collect();
    assert_eq!(out.balances, expected);
    assert_eq!(out.current_justified_checkpoint, s.current_justified_checkpoint);
    assert_eq!(out.finalized_checkpoint, s.finalized_checkpoint);
    assert!(!out.justification_bits[0]);
    assert_eq!(out.slot, s.slot);
}

#[test]
fn justification_bits_shift_toward_older_epochs() {
    let p = minimal();
    let base = process_slots(&genesis_with_validators(40, &p).unwrap(), 4 * p.slots_per_epoch - 1, &p).unwrap();
    for pattern in 0u8..16 {
        let mut s = base.clone();
        for i in 0..4 {
            s.justification_bits[i] = pattern >> i & 1 == 1;
        }
        let out = process_epoch(&s, &p).unwrap();
        // bit i of the old window is bit i+1 of the new one; the oldest drops out
        let expected = [false, s.justification_bits[0], s.justification_bits[1], s.justification_bits[2]];
        assert_eq!(out.justification_bits, expected, "pattern {pattern:04b}");
    }
    // the "1001" pattern, written oldest bit first, becomes "0010"
    let mut s = base.clone();
    s.justification_bits = [true, false, false, true];
    assert_eq!(process_epoch(&s, &p).unwrap().justification_bits, [false, true, false, false]);
}

#[test]
fn full_participation_finalizes_after_three_boundaries() {
    let p = minimal();
    let out = simulate(&SimConfig::new(3, 64, 3).with_preset(p)).unwrap();
    let last = out.chain.blocks.last().unwrap();
    let tip = out.store.post_states().values().find(|s| s.slot == last.slot).unwrap();
    assert!(tip.finalized_checkpoint.epoch >= 1, "finalized {:?}", tip.finalized_checkpoint);
}

#[test]
fn process_slots_iterations_equal_slot_delta() {
    let p = minimal();
    let g = genesis_with_validators(33, &p).unwrap();
    let mut rng = SplitMix64::new(11);
    for _ in 0..40 {
        let from = rng.below(30);
        let to = from + 1 + rng.below(40);
        let s = process_slots(&g, from, &p).unwrap_or(g.clone());
        let (out, trace) = process_slots_traced(&s, to, &p).unwrap();
        assert_eq!(trace.iterations, to - s.slot);
        let boundaries = (s.slot..to).filter(|x| (x + 1) % p.slots_per_epoch == 0).count() as u64;
        assert_eq!(trace.epoch_transitions, boundaries);
        assert_eq!(out.slot, to);
    }
    let at5 = process_slots(&g, 5, &p).unwrap();
    assert_eq!(process_slots(&at5, 5, &p), Err(TransitionError::SlotNotAhead { current: 5, target: 5 }));
}

#[test]
fn reachable_states_keep_frame_and_monotonicity() {
    let p = minimal();
    let g = genesis_with_validators(70, &p).unwrap();
    assert!(is_valid_state_epoch_attestations(&g, &p));
    let mut rng = SplitMix64::new(5);
    let mut s = g;
    for _ in 0..60 {
        let b = random_valid_block(&mut rng, &s, &p);
        assert!(is_valid_block(&s, &b, &p));
        let next = state_transition(&s, &b, true, &p).unwrap();
        assert_eq!(next.validators.len(), next.balances.len());
        assert!(next.slot > s.slot);
        assert!(next.finalized_checkpoint.epoch >= s.finalized_checkpoint.epoch);
        assert!(next.current_justified_checkpoint.epoch >= s.current_justified_checkpoint.epoch);
        assert!(is_valid_state_epoch_attestations(&next, &p));
        // the header parent is the root of the forwarded header the block extends
        let forwarded = process_slots(&s, b.slot, &p).unwrap();
        assert_eq!(next.latest_block_header.parent_root, forwarded.latest_block_header.tree_root(&p));
        s = next;
    }
}

#[test]
fn stale_pool_entry_breaks_epoch_attestation_validity() {
    let p = minimal();
    let s = process_slots(&genesis_with_validators(40, &p).unwrap(), 3 * p.slots_per_epoch + 2, &p).unwrap();
    let mut bad = s.clone();
    bad.current_epoch_attestations.push(PendingAttestation {
        aggregation_bits: vec![true],
        data: AttestationData {
            slot: 1,
            index: 0,
            beacon_block_root: Root::ZERO,
            source: Checkpoint::default(),
            target: Checkpoint { epoch: 0, root: Root::ZERO },
        },
        inclusion_delay: 1,
    });
    assert!(is_valid_state_epoch_attestations(&s, &p));
    assert!(!is_valid_state_epoch_attestations(&bad, &p));
}

#[test]
fn is_valid_block_examples() {
    let p = minimal();
    let s = process_slots(&genesis_with_validators(40, &p).unwrap(), 4, &p).unwrap();
    let good = empty_block(&s, 6, &p);
    assert!(is_valid_block(&s, &good, &p));
    let stale = BeaconBlock { slot: 4, ..good.clone() };
    assert!(!is_valid_block(&s, &stale, &p));
    let mut wrong_root = good;
    wrong_root.state_root.0[0] ^= 0x80;
    assert!(!is_valid_block(&s, &wrong_root, &p));
}

#[test]
fn single_bit_corruption_is_always_rejected() {
    let p = minimal();
    let mut rng = SplitMix64::new(99);
    let states = sample_states(&mut rng, 3, 10, &p);
    for s in &states {
        let before = s.to_ssz_bytes(&p);
        let block = random_valid_block(&mut rng, s, &p);
        let mut bytes = block.to_ssz_bytes(&p);
        let bit = rng.below(bytes.len() as u64 * 8);
        bytes[(bit / 8) as usize] ^= 1 << (bit % 8);
        if let Ok(mutant) = BeaconBlock::from_ssz_bytes(&bytes, &p) {
            assert!(state_transition(s, &mutant, true, &p).is_err(), "bit {bit} slipped through");
        }
        assert_eq!(s.to_ssz_bytes(&p), before);
    }
}

#[test]
fn replay_examples() {
    let p = minimal();
    let out = simulate(&SimConfig::new(21, 40, 3).with_preset(p)).unwrap();
    let last = replay(&out.genesis, &out.chain, true, &p).unwrap();
    assert_eq!(last.slot, out.chain.blocks.last().unwrap().slot);
    assert_eq!(replay(&out.genesis, &ChainFile::default(), true, &p).unwrap(), out.genesis);

    let mut broken = out.chain.clone();
    broken.blocks[10].state_root = Root([9; 32]);
    let err = replay(&out.genesis, &broken, true, &p).unwrap_err();
    assert_eq!(err.index, 10);
    let prefix = ChainFile { blocks: broken.blocks[..10].to_vec() };
    assert!(replay(&out.genesis, &prefix, true, &p).is_ok());
}

#[test]
fn validate_flag_only_gates_the_root_check() {
    let p = minimal();
    let s = genesis_with_validators(40, &p).unwrap();
    let mut b = empty_block(&s, 1, &p);
    b.state_root = Root([1; 32]);
    assert!(state_transition(&s, &b, true, &p).is_err());
    let unchecked = state_transition(&s, &b, false, &p).unwrap();
    assert_eq!(unchecked.slot, 1);
    assert_eq!(unchecked.latest_block_header.state_root, Root::ZERO);
}
