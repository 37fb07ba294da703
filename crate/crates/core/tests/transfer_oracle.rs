mod common;

use common::*;
use structxfer::rng::seeded;
use structxfer::supergraph::{map_all, MapMode, SuperDegree};
use structxfer::transfer::{learn_weights, pair_weight, reweight_target, TransferParams};
use structxfer::walker::{generate_walk, WalkParams, WalkSet};

fn random_walks(source: &structxfer::Graph, seed: u64, count: usize, length: usize) -> WalkSet {
    let mut rng = seeded(seed);
    let params = WalkParams {
        walk_length: length,
        p: 0.5,
        q: 2.0,
        ..WalkParams::default()
    };
    let walks = (0..count)
        .map(|i| generate_walk(source, i % source.node_count(), &params, &mut rng).unwrap())
        .collect();
    WalkSet {
        walks,
        ..WalkSet::default()
    }
}

#[test]
fn hand_computed_pair_weight() {
    let (source, sg, _) = transfer_fixture();
    let walks = walk_set(&[&[0, 1, 2], &[3, 4]]);
    // eligible: (0,2) at distance 2 and (1,2) at distance 1
    let w = pair_weight(&source, &sg, &walks, 0, 1, 10).unwrap();
    assert!((w - 0.5f64.sqrt()).abs() < 1e-15);
    // (3,4) adjacent; nothing else between {2,3} and {4,5} co-occurs
    assert_eq!(pair_weight(&source, &sg, &walks, 1, 2, 10).unwrap(), 1.0);
    assert_eq!(pair_weight(&source, &sg, &walks, 0, 2, 10).unwrap(), 0.0);
}

#[test]
fn pair_weight_matches_enumeration() {
    let (source, sg, _) = transfer_fixture();
    for seed in 0..25 {
        let walks = random_walks(&source, seed, 1 + seed as usize % 7, 2 + seed as usize % 5);
        for cap in 1..=4 {
            for a in 0..3u32 {
                for b in 0..3u32 {
                    if a == b {
                        continue;
                    }
                    let got = pair_weight(&source, &sg, &walks, a as usize, b as usize, cap).unwrap();
                    let want = oracle_pair_weight(&source, &sg, &walks, a.min(b), a.max(b), cap);
                    assert_eq!(got, want, "seed {seed} cap {cap} pair ({a},{b})");
                }
            }
        }
    }
}

#[test]
fn reweight_matches_enumeration() {
    let (source, sg, target) = transfer_fixture();
    for mode in [MapMode::Exact, MapMode::Nearest] {
        for seed in 0..25 {
            let walks = random_walks(&source, seed, 6, 4);
            let params = TransferParams {
                map_mode: mode,
                distance_cap: 3,
                virtual_weight: 1.5,
                ..TransferParams::default()
            };
            let mapping = map_all(&target, &sg, mode, SuperDegree::Adjacent).unwrap();
            let tw = learn_weights(&source, &sg, &walks, &target, &mapping, &params).unwrap();
            let got = reweight_target(&target, &mapping, &tw);
            let want = oracle_reweight(&source, &sg, &walks, &target, &mapping, 3, 1.5);
            assert_eq!(got.edge_count(), want.len());
            for (v, x, w) in want {
                assert_eq!(got.edge_weight(v, x), Some(w), "{mode:?} seed {seed} edge ({v},{x})");
                assert_eq!(got.edge_weight(x, v), Some(w));
            }
        }
    }
}

#[test]
fn fixture_mapping_is_as_expected() {
    let (_, sg, target) = transfer_fixture();
    // super-degrees: {0,1}: 2 (to {2,3} and {4,5}), {2,3}: 2, {4,5}: 2
    let exact = map_all(&target, &sg, MapMode::Exact, SuperDegree::Adjacent).unwrap();
    assert_eq!(exact.get(1), &[0, 1, 2]);
    assert!(exact.get(0).is_empty());
    let nearest = map_all(&target, &sg, MapMode::Nearest, SuperDegree::Adjacent).unwrap();
    assert_eq!(nearest.get(0), &[0, 1, 2]);
}
