use std::collections::BTreeSet;

use beacon_core::committees::{
    attesting_indices_in, check_committee_bounds, compute_committee, get_active_validator_indices,
    get_attesting_indices, get_beacon_committee, get_committee_count_per_slot, BoundsVerdict, CommitteeAssignment,
    CommitteeError, EpochCommittees,
};
use beacon_core::preset::Preset;
use beacon_core::sim::SplitMix64;
use beacon_core::transition::{genesis_state, genesis_with_validators};
use beacon_core::types::{AttestationData, Checkpoint, Root, Validator};

/// Every committee of epoch 0 for `v` active validators, cut directly from
/// the index range with the floor-slice rule.
fn brute_committees(v: u64, p: &Preset) -> Vec<Vec<u64>> {
    let per_slot = (v / p.slots_per_epoch / p.target_committee_size).max(1).min(p.max_committees_per_slot);
    let total = per_slot * p.slots_per_epoch;
    (0..total).map(|k| ((v * k / total)..(v * (k + 1) / total)).collect()).collect()
}

fn tiny(target_committee_size: u64) -> Preset {
    Preset {
        slots_per_epoch: 4,
        max_committees_per_slot: 2,
        target_committee_size,
        max_validators_per_committee: 3,
        slots_per_historical_root: 8,
        max_slot_advance: 8,
        ..Preset::default()
    }
}

#[test]
fn active_index_examples() {
    let p = Preset::default();
    let mut empty = genesis_with_validators(1, &p).unwrap();
    empty.validators.clear();
    empty.balances.clear();
    assert!(get_active_validator_indices(&empty, 0).is_empty());
    let s = genesis_with_validators(100, &p).unwrap();
    assert_eq!(get_active_validator_indices(&s, 5), (0..100).collect::<Vec<_>>());
    let mut exited = s.clone();
    exited.validators[17].exit_epoch = 2;
    let at3 = get_active_validator_indices(&exited, 3);
    let oracle: Vec<u64> = (0..100).filter(|&i| i != 17).collect();
    assert_eq!(at3, oracle);
    assert!(get_active_validator_indices(&exited, 1).contains(&17));
}

#[test]
fn count_and_slice_examples() {
    let p = Preset::default();
    assert_eq!(get_committee_count_per_slot(31, &p), 1);
    assert_eq!(get_committee_count_per_slot(4096, &p), 1);
    assert_eq!(get_committee_count_per_slot(4_194_304, &p), 64);

    let ten: Vec<u64> = (0..10).collect();
    assert_eq!(compute_committee(&ten, 2, 0).unwrap(), vec![0, 1, 2, 3, 4]);
    assert_eq!(compute_committee(&ten, 4, 3).unwrap(), vec![7, 8, 9]);
    assert_eq!(compute_committee(&ten, 1, 0).unwrap(), ten);
    assert!(compute_committee(&ten, 4, 4).is_err());
}

#[test]
fn committees_partition_the_active_set() {
    let p = Preset::default();
    for v in [33u64, 100, 4096, 100_000] {
        let state = genesis_with_validators(v, &p).unwrap();
        let committees = EpochCommittees::new(&state, 0, &p);
        let mut seen = BTreeSet::new();
        let mut sum = 0;
        for slot in 0..p.slots_per_epoch {
            for index in 0..committees.count_per_slot {
                let members = committees.committee(slot, index).unwrap().members;
                sum += members.len() as u64;
                for m in members {
                    assert!(seen.insert(m), "validator {m} sits in two committees at V={v}");
                }
            }
        }
        assert_eq!(sum, v);
        assert_eq!(seen, get_active_validator_indices(&state, 0).into_iter().collect());
        let brute: Vec<u64> = brute_committees(v, &p).into_iter().flatten().collect();
        assert_eq!(brute, (0..v).collect::<Vec<_>>());
    }
}

#[test]
fn attesting_index_examples() {
    let c = CommitteeAssignment { slot: 0, index: 0, members: vec![4, 7, 9] };
    assert!(attesting_indices_in(&c, &[false, false, false]).unwrap().is_empty());
    assert_eq!(attesting_indices_in(&c, &[true, true, true]).unwrap(), BTreeSet::from([4, 7, 9]));
    assert_eq!(attesting_indices_in(&c, &[true, false, true]).unwrap(), BTreeSet::from([4, 9]));
    assert!(matches!(attesting_indices_in(&c, &[true]), Err(CommitteeError::BitsLengthMismatch { .. })));
}

#[test]
fn attesting_indices_are_members_counted_by_popcount() {
    let p = Preset::minimal();
    let s = genesis_with_validators(200, &p).unwrap();
    let mut rng = SplitMix64::new(12);
    for _ in 0..200 {
        let slot = rng.below(p.slots_per_epoch);
        let index = rng.below(get_committee_count_per_slot(200, &p));
        let members = get_beacon_committee(&s, slot, index, &p).unwrap().members;
        let bits: Vec<bool> = (0..members.len()).map(|_| rng.chance(1, 2)).collect();
        let data = AttestationData {
            slot,
            index,
            beacon_block_root: Root::ZERO,
            source: Checkpoint::default(),
            target: Checkpoint::default(),
        };
        let got = get_attesting_indices(&s, &data, &bits, &p).unwrap();
        assert_eq!(got.len(), bits.iter().filter(|b| **b).count());
        assert!(got.iter().all(|i| members.contains(i)));
    }
}

#[test]
fn bounds_verdict_matches_brute_force_on_tiny_presets() {
    // with target 2 and cap 3, committees overflow before the count clamps
    for (target, law_holds) in [(1, true), (2, false)] {
        let p = tiny(target);
        p.validate().unwrap();
        for v in 0..=60u64 {
            let sizes: Vec<u64> = brute_committees(v, &p).iter().map(|c| c.len() as u64).collect();
            let bad = |s: &u64| *s == 0 || *s > p.max_validators_per_committee;
            let verdict = check_committee_bounds(v, &p);
            assert_eq!(verdict == BoundsVerdict::Safe, !sizes.iter().any(bad), "V={v}");
            if law_holds {
                assert_eq!(verdict == BoundsVerdict::Safe, (4..=24).contains(&v), "V={v}");
            }
            if let Some(w) = verdict.witness() {
                let k = w.slot * (sizes.len() as u64 / p.slots_per_epoch) + w.index;
                assert_eq!(sizes[k as usize], w.size);
                assert_eq!(sizes.iter().position(bad), Some(k as usize), "V={v}");
                assert_eq!(matches!(verdict, BoundsVerdict::AllViolate(_)), sizes.iter().all(bad), "V={v}");
            }
        }
    }
}

#[test]
fn threshold_law_on_the_default_preset() {
    let p = Preset::default();
    for v in [0u64, 1, 31, 32, 33, 1000, 4095, 4096, 65_537, 99_999, 100_000] {
        let sizes: Vec<usize> = brute_committees(v, &p).iter().map(Vec::len).collect();
        let safe = sizes.iter().all(|&s| (1..=2048).contains(&s));
        assert_eq!(check_committee_bounds(v, &p) == BoundsVerdict::Safe, safe, "V={v}");
        assert_eq!(safe, v >= 32);
    }
    assert_eq!(check_committee_bounds(4_194_304, &p).to_string(), "SAFE");
    assert_eq!(check_committee_bounds(4_196_352, &p).to_string(), "ALL_VIOLATE slot=0 index=0 size=2049");
    assert_eq!(check_committee_bounds(4_194_305, &p).to_string(), "EXISTS_VIOLATION slot=31 index=63 size=2049");
    assert_eq!(check_committee_bounds(4_195_000, &p).label(), "EXISTS_VIOLATION");
}

#[test]
fn oversized_and_empty_committees_are_errors() {
    let p = Preset::default();
    let big = EpochCommittees::from_active((0..4_196_352).collect(), 0, &p);
    assert!(matches!(
        big.committee(7, 3),
        Err(CommitteeError::OversizedCommittee { size: 2049, .. })
    ));
    let exact = EpochCommittees::from_active((0..4_194_304).collect(), 0, &p);
    assert_eq!(exact.committee(31, 63).unwrap().members.len(), 2048);
    let small = genesis_state((0..10).map(|i| Validator::genesis(i, 1)).collect(), &p).unwrap();
    assert!(matches!(get_beacon_committee(&small, 20, 0, &p), Err(CommitteeError::EmptyCommittee { .. })));
}
