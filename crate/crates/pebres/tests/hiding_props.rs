use pebres::blob::{blob_price_exact, replay_blob, BlobLimits};
use pebres::dag::{members, size, LayeredDag, VSet};
use pebres::hiding::*;
use pebres::pebbling::{exact_price, BwConfig, Mode, Pebbling, SearchLimits};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn pi(h: usize) -> LayeredDag {
    LayeredDag::pyramid(h).unwrap()
}

fn subset_of(set: VSet, pick: u64) -> VSet {
    members(set).enumerate().filter(|(i, _)| pick >> i & 1 == 1).fold(0, |a, (_, v)| a | 1 << v)
}

proptest! {
    #[test]
    fn hiding_is_transitive(u in 0u64..1 << 15, pick in any::<u64>()) {
        let g = pi(4);
        let hu = hidden_vertices(&g, u);
        let v = subset_of(hu, pick);
        prop_assert_eq!(hidden_vertices(&g, v) & !hu, 0);
        prop_assert_eq!(hidden_vertices(&g, hu), hu);
    }

    #[test]
    fn tight_subset_is_the_unique_tight_core(u in 0u64..1 << 15) {
        let g = pi(4);
        let t = tight_subset(&g, u);
        prop_assert_eq!(t & !u, 0);
        prop_assert!(is_tight(&g, t));
        prop_assert_eq!(hidden_vertices(&g, t), hidden_vertices(&g, u));
        prop_assert_eq!(tight_subset(&g, t), t);
        if size(u) <= 8 {
            let hu = hidden_vertices(&g, u);
            for p in 0u64..1 << size(u) {
                let s = subset_of(u, p);
                if is_tight(&g, s) && hidden_vertices(&g, s) == hu {
                    prop_assert_eq!(s, t);
                }
            }
        }
    }

    #[test]
    fn pyramid_edge_shortcut_agrees(u in 0u64..1 << 10) {
        let g = pi(3);
        let t = tight_subset(&g, u);
        prop_assert_eq!(hiding_graph_with(&g, t, true).unwrap(), hiding_graph_with(&g, t, false).unwrap());
        for comp in hiding_graph(&g, t).unwrap().components {
            let c = comp.iter().fold(0u64, |a, &v| a | 1 << v);
            prop_assert_eq!(hidden_vertices(&g, t & c), c);
        }
    }

    #[test]
    fn preorder_implies_measure_order(u in 0u64..1 << 15, v in 0u64..1 << 15) {
        let g = pi(4);
        if measure_preorder(&g, u, v) {
            prop_assert!(measure(&g, u) <= measure(&g, v));
        }
    }
}

/// Sample 1000 pairs with U ≼_m V and Y ∩ V = ∅, and check
/// m(Y ∪ U) ≤ m(Y ∪ V).
#[test]
fn union_law_thousand_trials() {
    let g = pi(5);
    let n = g.len();
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let sparse = |rng: &mut rand::rngs::StdRng| (0..n).filter(|_| rng.gen_bool(0.2)).fold(0u64, |a, v| a | 1 << v);
    let mut trials = 0;
    while trials < 1000 {
        let (u, v) = (sparse(&mut rng), sparse(&mut rng));
        if !measure_preorder(&g, u, v) {
            continue;
        }
        let y = sparse(&mut rng) & !v;
        assert!(measure(&g, y | u) <= measure(&g, y | v), "U={u:#x} V={v:#x} Y={y:#x}");
        trials += 1;
    }
}

#[test]
fn klawe_induction_along_witnesses() {
    for h in 1..=3 {
        let g = pi(h);
        for mode in [Mode::Black, Mode::Bw] {
            let rep = exact_price(&g, mode, SearchLimits::with_budget(h + 3)).unwrap();
            let cfgs = Pebbling::from_moves(rep.witness).configs(&g).unwrap();
            let mut running = 0;
            for c in cfgs {
                running = running.max(c.cost());
                let p = potential(&g, Target::Bw(c), POTENTIAL_BUDGET);
                assert!(p.exact);
                assert!(p.potential <= 2 * running, "h={h} {mode:?}");
            }
        }
    }
}

#[test]
fn blob_potential_bounded_along_price_witnesses() {
    for h in 1..=2 {
        let g = pi(h);
        let rep = blob_price_exact(&g, BlobLimits::defaults(&g)).unwrap();
        let cfgs = replay_blob(&Default::default(), &rep.witness, &g).unwrap();
        let mut running = 0;
        for c in &cfgs {
            running = running.max(pebres::blob::blob_cost(c, &g));
            let p = potential(&g, Target::Blob(c), POTENTIAL_BUDGET);
            assert!(p.potential <= BLOB_POTENTIAL_FACTOR * running);
            let u: VSet = p.witness.iter().fold(0, |a, &v| a | 1 << v);
            assert!(blocks_config(&g, u, c));
        }
    }
}

#[test]
fn potentials_of_goal_configurations() {
    for h in 1..=4 {
        let g = pi(h);
        let c = BwConfig::new(1 << g.sink(), 0);
        assert_eq!(potential(&g, Target::Bw(c), POTENTIAL_BUDGET).potential, h + 2);
    }
}

#[test]
fn spreading_on_small_pyramids() {
    for h in 1..=3 {
        let r = spreading_check(&pi(h));
        assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.counterexample);
        assert!(r.sets_checked > 0);
    }
}
